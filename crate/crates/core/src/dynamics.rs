//! Time evolution of the driven composite system in the interaction picture
//! of the static dressed Hamiltonian, coherent and with dielectric T1 loss.

use std::io::Write;

use num_complex::Complex64 as C64;

use crate::circuits::{CompositeSystem, Method};
use crate::error::{Error, Result};
use crate::linalg::{CMat, ZERO};
use crate::ode::{self, OdeOptions};
use crate::pulses::PulseSchedule;
use crate::units::KB_OVER_HBAR;

/// Default tolerances for coherent and Lindblad runs.
pub const COHERENT_TOL: f64 = 1e-12;
pub const LINDBLAD_TOL: f64 = 1e-8;

/// Jump operators kept by default, fastest first.
pub const DEFAULT_JUMPS: usize = 200;

/// Entries below this fraction of an operator's largest entry are dropped.
const SPARSE_CUTOFF: f64 = 1e-13;

#[derive(Debug, Clone, Copy)]
struct Entry {
    k: usize,
    l: usize,
    v: C64,
}

fn sparsify(m: &CMat) -> Vec<Entry> {
    let max = m.iter().map(|z| z.norm()).fold(0.0, f64::max);
    let mut out = Vec::new();
    for l in 0..m.ncols() {
        for k in 0..m.nrows() {
            let v = m[(k, l)];
            if v.norm() > SPARSE_CUTOFF * max {
                out.push(Entry { k, l, v });
            }
        }
    }
    out
}

/// Pulse schedule bound to the modulation operators of a method.
#[derive(Debug, Clone)]
pub struct DriveBinding {
    pub method: Method,
    pub schedule: PulseSchedule,
    /// Λ-arm matrix elements dividing Ω̃_A and Ω̃_B.
    pub arm: [C64; 2],
}

impl DriveBinding {
    pub fn new(method: Method, schedule: PulseSchedule, system: &CompositeSystem) -> Result<Self> {
        let arm = system.arm_elements(method)?;
        for (j, a) in arm.iter().enumerate() {
            if a.norm() < 1e-14 {
                let name = if j == 0 { "ee,0 -> ge,1" } else { "gf,0 -> ge,1" };
                return Err(Error::ZeroMatrixElement(name.into()));
            }
        }
        Ok(Self { method, schedule, arm })
    }

    /// Physical envelopes g_j = Ω̃_j / M_j.
    pub fn couplings(&self, t: f64) -> [C64; 2] {
        let (a, b) = self.schedule.envelopes(t);
        [a / self.arm[0], b / self.arm[1]]
    }

    /// g_j e^{−i∫ω̃_mod,j} for both tones.
    pub fn rotating(&self, t: f64) -> [C64; 2] {
        let g = self.couplings(t);
        let ph = self.schedule.carrier_phase(t);
        [g[0] * C64::from_polar(1.0, -ph[0]), g[1] * C64::from_polar(1.0, -ph[1])]
    }

    /// Real modulation coefficients: ½(g e^{−iΦ} + c.c.) per tone (Method I);
    /// their sum is δω_C for Method II.
    pub fn coefficients(&self, t: f64) -> [f64; 2] {
        let r = self.rotating(t);
        [r[0].re, r[1].re]
    }

    pub fn delta_omega_c(&self, t: f64) -> f64 {
        let c = self.coefficients(t);
        c[0] + c[1]
    }
}

/// H_mod(t) in the dressed basis (Schrödinger picture).
pub fn modulation_hamiltonian(binding: &DriveBinding, system: &CompositeSystem, t: f64) -> CMat {
    let c = binding.coefficients(t);
    match binding.method {
        Method::I => &system.op_a * C64::new(c[0], 0.0) + &system.op_b * C64::new(c[1], 0.0),
        Method::II => &system.op_n * C64::new(c[0] + c[1], 0.0),
    }
}

/// Drive terms of the interaction-picture generator. Each tone j contributes
/// ½(g_j e^{−iΦ_j} + c.c.) O_j; with `rwa` only the co-rotating half of each
/// matrix element is kept.
#[derive(Debug, Clone)]
pub struct Generator {
    energies: Vec<f64>,
    tones: Vec<(usize, Vec<Entry>)>,
    carriers: [f64; 2],
    rwa: bool,
    binding: DriveBinding,
}

impl Generator {
    pub fn new(system: &CompositeSystem, binding: &DriveBinding) -> Self {
        let ops = system.modulation_ops(binding.method);
        Self {
            energies: system.energies.clone(),
            tones: vec![(0, sparsify(ops[0])), (1, sparsify(ops[1]))],
            carriers: binding.schedule.carriers,
            rwa: false,
            binding: binding.clone(),
        }
    }

    /// Generator on an explicit level set with explicit tone operators.
    pub fn custom(energies: Vec<f64>, ops: [&CMat; 2], binding: &DriveBinding, rwa: bool) -> Self {
        Self {
            energies,
            tones: vec![(0, sparsify(ops[0])), (1, sparsify(ops[1]))],
            carriers: binding.schedule.carriers,
            rwa,
            binding: binding.clone(),
        }
    }

    pub fn dim(&self) -> usize {
        self.energies.len()
    }

    pub fn breakpoints(&self) -> Vec<f64> {
        self.binding.schedule.breakpoints()
    }

    pub fn duration(&self) -> f64 {
        self.binding.schedule.duration()
    }

    /// Nonzero entries (k, l, H_I,kl) at time t, both triangles.
    fn entries(&self, t: f64, out: &mut Vec<(usize, usize, C64)>) {
        out.clear();
        let ph: Vec<C64> = self.energies.iter().map(|&e| C64::from_polar(1.0, e * t)).collect();
        let r = self.binding.rotating(t);
        for (j, ent) in &self.tones {
            let j = *j;
            if r[j] == ZERO {
                continue;
            }
            for e in ent {
                let frame = ph[e.k] * ph[e.l].conj();
                let coef = if self.rwa {
                    let up = self.energies[e.k] - self.energies[e.l];
                    if up * self.carriers[j] > 0.0 {
                        r[j] * 0.5
                    } else {
                        r[j].conj() * 0.5
                    }
                } else {
                    C64::new(r[j].re, 0.0)
                };
                out.push((e.k, e.l, coef * e.v * frame));
            }
        }
    }

    /// Dense H_I(t).
    pub fn hamiltonian(&self, t: f64) -> CMat {
        let n = self.dim();
        let mut h = CMat::zeros(n, n);
        let mut buf = Vec::new();
        self.entries(t, &mut buf);
        for (k, l, v) in buf {
            h[(k, l)] += v;
        }
        h
    }
}

fn check_tol(tol: f64) -> Result<()> {
    if !(1e-13..=1e-6).contains(&tol) {
        return Err(Error::Domain(format!("tolerance {tol:e} outside [1e-13, 1e-6]")));
    }
    Ok(())
}

fn pack(m: &CMat) -> Vec<C64> {
    m.as_slice().to_vec()
}

/// Propagates the columns of `psi0` (n × m) from t0 to each of `times`,
/// returning the interaction-picture states.
pub fn evolve_coherent_sampled(gen: &Generator, psi0: &CMat, t0: f64, times: &[f64], tol: f64) -> Result<Vec<CMat>> {
    check_tol(tol)?;
    let n = gen.dim();
    if psi0.nrows() != n {
        return Err(Error::Domain(format!("state dimension {} != {n}", psi0.nrows())));
    }
    let m = psi0.ncols();
    let mut y = pack(psi0);
    let mut buf = Vec::new();
    let mut rhs = |t: f64, y: &[C64], dy: &mut [C64]| {
        gen.entries(t, &mut buf);
        dy.iter_mut().for_each(|z| *z = ZERO);
        for &(k, l, v) in &buf {
            let v = v * C64::new(0.0, -1.0);
            for c in 0..m {
                dy[c * n + k] += v * y[c * n + l];
            }
        }
    };
    let opts = OdeOptions::with_tol(tol);
    let bps = gen.breakpoints();
    let mut solver = ode::Dop853::new(t0, &y, opts);
    let mut out = Vec::with_capacity(times.len());
    for &t in times {
        let now = solver.t();
        for &b in bps.iter().filter(|&&b| b > now && b < t) {
            solver.advance_to(&mut rhs, b)?;
            solver.invalidate_derivative();
        }
        solver.advance_to(&mut rhs, t)?;
        y.copy_from_slice(solver.state());
        out.push(CMat::from_column_slice(n, m, &y));
    }
    Ok(out)
}

/// Final interaction-picture states after the full pulse.
pub fn evolve_coherent(gen: &Generator, psi0: &CMat, tol: f64) -> Result<CMat> {
    let mut v = evolve_coherent_sampled(gen, psi0, 0.0, &[gen.duration()], tol)?;
    let out = v.pop().expect("one sample");
    let gram = out.adjoint() * &out;
    let dev = (gram - CMat::identity(psi0.ncols(), psi0.ncols()))
        .iter()
        .map(|z| z.norm())
        .fold(0.0, f64::max);
    let gram0 = psi0.adjoint() * psi0;
    let orthonormal = (gram0 - CMat::identity(psi0.ncols(), psi0.ncols())).iter().all(|z| z.norm() < 1e-12);
    if orthonormal && dev > (1e3 * tol).max(1e-9) {
        return Err(Error::Numerical(format!("propagator not unitary: Gram deviation {dev:.3e}")));
    }
    Ok(out)
}

/// One relaxation channel |k⟩ → |l⟩.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Jump {
    pub from: usize,
    pub to: usize,
    /// 1/ns
    pub rate: f64,
}

impl Jump {
    /// T1 in ns.
    pub fn t1(&self) -> f64 {
        1.0 / self.rate
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct DissipationModel {
    /// K
    pub temperature: f64,
    pub q_diel: f64,
    /// Sorted by decreasing rate.
    pub jumps: Vec<Jump>,
    pub warnings: Vec<String>,
}

impl DissipationModel {
    pub fn none() -> Self {
        Self { temperature: 0.0, q_diel: f64::INFINITY, jumps: Vec::new(), warnings: Vec::new() }
    }

    /// Keeps the `n` fastest channels.
    pub fn truncated(&self, n: usize) -> Self {
        let mut m = self.clone();
        m.jumps.truncate(n);
        m
    }

    pub fn rate(&self, from: usize, to: usize) -> f64 {
        self.jumps.iter().filter(|j| j.from == from && j.to == to).map(|j| j.rate).sum()
    }

    /// Shortest T1 among channels leaving any of `levels`, ns.
    pub fn t1_min(&self, levels: &[usize]) -> Option<f64> {
        self.jumps.iter().filter(|j| levels.contains(&j.from)).map(|j| j.t1()).reduce(f64::min)
    }
}

/// Dielectric-loss rates summed over the three capacitors:
/// κ_j |⟨l|n_j|k⟩|² sgn(ω) [coth(ω/2k_BT) + 1] / Q with ω = ε_k − ε_l.
pub fn t1_rates(system: &CompositeSystem, q_diel: f64, temperature: f64) -> Result<DissipationModel> {
    if !(q_diel > 0.0) || !(temperature >= 0.0) {
        return Err(Error::Domain(format!("Q_diel = {q_diel}, T = {temperature} K")));
    }
    let n = system.dim();
    let kt = KB_OVER_HBAR * temperature;
    let mut jumps = Vec::new();
    let mut warnings = Vec::new();
    for k in 0..n {
        for l in 0..n {
            if k == l {
                continue;
            }
            let w = system.energies[k] - system.energies[l];
            if w.abs() < 1e-12 {
                warnings.push(format!("degenerate pair {} / {} skipped", system.label(k), system.label(l)));
                continue;
            }
            let thermal = if kt == 0.0 {
                if w > 0.0 { 2.0 } else { 0.0 }
            } else {
                w.signum() * (1.0 / (w / (2.0 * kt)).tanh() + 1.0)
            };
            if thermal <= 0.0 {
                continue;
            }
            let mut m2 = 0.0;
            for (op, scale) in system.charge.iter().zip(system.charge_scale) {
                m2 += scale * op[(l, k)].norm_sqr();
            }
            let rate = m2 * thermal / q_diel;
            if rate > 0.0 {
                jumps.push(Jump { from: k, to: l, rate });
            }
        }
    }
    for w in &warnings {
        log::warn!("{w}");
    }
    jumps.sort_by(|a, b| b.rate.total_cmp(&a.rate).then(a.from.cmp(&b.from)).then(a.to.cmp(&b.to)));
    Ok(DissipationModel { temperature, q_diel, jumps, warnings })
}

/// Lindblad evolution of a batch of Hermitian inputs. The dissipator is
/// time-independent in the interaction picture because every jump operator
/// only picks up a phase.
pub fn evolve_lindblad_sampled(
    gen: &Generator,
    rho0: &[CMat],
    dissipation: &DissipationModel,
    t0: f64,
    times: &[f64],
    tol: f64,
) -> Result<Vec<Vec<CMat>>> {
    check_tol(tol)?;
    let n = gen.dim();
    let nn = n * n;
    let m = rho0.len();
    for r in rho0 {
        if r.nrows() != n || r.ncols() != n {
            return Err(Error::Domain("density matrix dimension mismatch".into()));
        }
        if crate::linalg::hermiticity_error(r) > 1e-10 {
            return Err(Error::Domain("input is not Hermitian".into()));
        }
    }
    let mut gamma_out = vec![0.0; n];
    for j in &dissipation.jumps {
        if j.from >= n || j.to >= n {
            return Err(Error::Domain("jump outside level set".into()));
        }
        gamma_out[j.from] += j.rate;
    }
    let jumps = dissipation.jumps.clone();
    let mut y: Vec<C64> = rho0.iter().flat_map(|r| r.as_slice().iter().copied()).collect();
    let traces0: Vec<C64> = rho0.iter().map(|r| r.trace()).collect();
    let mut buf = Vec::new();
    let mut a = vec![ZERO; nn];
    let mut rhs = |t: f64, y: &[C64], dy: &mut [C64]| {
        gen.entries(t, &mut buf);
        for c in 0..m {
            let rho = &y[c * nn..(c + 1) * nn];
            let d = &mut dy[c * nn..(c + 1) * nn];
            a.iter_mut().for_each(|z| *z = ZERO);
            // A = H ρ, column-major: A[row + col n].
            for &(k, l, v) in &buf {
                for col in 0..n {
                    a[k + col * n] += v * rho[l + col * n];
                }
            }
            for col in 0..n {
                for row in 0..n {
                    let comm = a[row + col * n] - a[col + row * n].conj();
                    d[row + col * n] = C64::new(comm.im, -comm.re)
                        - rho[row + col * n] * (0.5 * (gamma_out[row] + gamma_out[col]));
                }
            }
            for j in &jumps {
                d[j.to * (n + 1)] += rho[j.from * (n + 1)] * j.rate;
            }
        }
    };
    let opts = OdeOptions::with_tol(tol);
    let bps = gen.breakpoints();
    let mut solver = ode::Dop853::new(t0, &y, opts);
    let mut out = Vec::with_capacity(times.len());
    for &t in times {
        let now = solver.t();
        for &b in bps.iter().filter(|&&b| b > now && b < t) {
            solver.advance_to(&mut rhs, b)?;
            solver.invalidate_derivative();
        }
        solver.advance_to(&mut rhs, t)?;
        y.copy_from_slice(solver.state());
        let mut step = Vec::with_capacity(m);
        for c in 0..m {
            let r = CMat::from_column_slice(n, n, &y[c * nn..(c + 1) * nn]);
            let r = (&r + r.adjoint()) * C64::new(0.5, 0.0);
            let drift = (r.trace() - traces0[c]).norm();
            if drift > 100.0 * tol * traces0[c].norm().max(1.0) {
                return Err(Error::Numerical(format!("trace drift {drift:.3e} at t = {t} ns (input {c})")));
            }
            step.push(r);
        }
        out.push(step);
    }
    Ok(out)
}

pub fn evolve_lindblad(gen: &Generator, rho0: &[CMat], dissipation: &DissipationModel, tol: f64) -> Result<Vec<CMat>> {
    let mut v = evolve_lindblad_sampled(gen, rho0, dissipation, 0.0, &[gen.duration()], tol)?;
    Ok(v.pop().expect("one sample"))
}

/// The 16 Pauli-pair inputs embedded at the logical levels.
pub fn pauli_inputs(n: usize, logical: [usize; 4]) -> Vec<CMat> {
    crate::metrics::pauli_basis()
        .iter()
        .map(|p| {
            let mut m = CMat::zeros(n, n);
            for r in 0..4 {
                for c in 0..4 {
                    m[(logical[r], logical[c])] = p[(r, c)];
                }
            }
            m
        })
        .collect()
}

/// Population trajectory CSV: header t_ns followed by one column per label.
pub fn write_trajectory<W: Write>(w: W, labels: &[String], times: &[f64], populations: &[Vec<f64>]) -> Result<()> {
    let mut wr = csv::Writer::from_writer(w);
    let mut header = vec!["t_ns".to_string()];
    header.extend(labels.iter().cloned());
    wr.write_record(&header)?;
    for (t, p) in times.iter().zip(populations) {
        let mut row = vec![format!("{t:.6}")];
        row.extend(p.iter().map(|v| format!("{v:.12e}")));
        wr.write_record(&row)?;
    }
    wr.flush()?;
    Ok(())
}
