//! Gate scoring: state-averaged fidelity with single-qubit phase
//! optimization, ZZ-phase extraction, robustness statistics and scaling fits.

use std::f64::consts::PI;

use num_complex::Complex64 as C64;

use crate::error::{Error, Result};
use crate::linalg::{CMat, ONE, ZERO};

/// Wraps an angle to (−π, π].
pub fn wrap_angle(x: f64) -> f64 {
    let y = (x + PI).rem_euclid(2.0 * PI) - PI;
    if y <= -PI {
        y + 2.0 * PI
    } else {
        y
    }
}

fn pauli(k: usize) -> [[C64; 2]; 2] {
    let (o, z, i) = (ONE, ZERO, C64::new(0.0, 1.0));
    match k {
        0 => [[o, z], [z, o]],
        1 => [[z, o], [o, z]],
        2 => [[z, -i], [i, z]],
        _ => [[o, z], [z, -o]],
    }
}

/// σ^μ ⊗ σ^ν on |00⟩, |01⟩, |10⟩, |11⟩ (qubit A is the left factor).
pub fn pauli_pair(mu: usize, nu: usize) -> CMat {
    let (a, b) = (pauli(mu), pauli(nu));
    CMat::from_fn(4, 4, |r, c| a[r / 2][c / 2] * b[r % 2][c % 2])
}

/// The 16 Pauli pairs in the order μ·4 + ν; index 0 is the identity.
pub fn pauli_basis() -> Vec<CMat> {
    (0..16).map(|k| pauli_pair(k / 4, k % 4)).collect()
}

/// Qubit-subspace blocks of M(σ^μ⊗σ^ν ⊕ 0) for all 16 Pauli pairs, plus the
/// full-space traces of the outputs.
#[derive(Debug, Clone)]
pub struct QuantumMapSample {
    pub outputs: Vec<CMat>,
    pub traces: Vec<C64>,
}

impl QuantumMapSample {
    /// Map of a coherent evolution whose logical columns are `v` (n × 4,
    /// first four rows being the logical levels in order).
    pub fn from_columns(v: &CMat, logical_rows: [usize; 4]) -> Self {
        let w = CMat::from_fn(4, 4, |r, c| v[(logical_rows[r], c)]);
        let full_gram = v.adjoint() * v;
        let outputs = pauli_basis().iter().map(|p| &w * p * w.adjoint()).collect();
        let traces = pauli_basis().iter().map(|p| (p * &full_gram).trace()).collect();
        Self { outputs, traces }
    }

    pub fn from_unitary_block(w: &CMat) -> Self {
        Self::from_columns(w, [0, 1, 2, 3])
    }

    /// M(A) restricted to the qubit block for any 4×4 input A, by linearity.
    pub fn apply(&self, a: &CMat) -> CMat {
        let mut out = CMat::zeros(4, 4);
        for (p, m) in pauli_basis().iter().zip(&self.outputs) {
            let coeff = (p * a).trace() / 4.0;
            if coeff.norm() > 0.0 {
                out += m * coeff;
            }
        }
        out
    }

    /// Population lost from the qubit subspace for each logical input.
    pub fn leakage(&self) -> [f64; 4] {
        let mut out = [0.0; 4];
        for (k, o) in out.iter_mut().enumerate() {
            let mut a = CMat::zeros(4, 4);
            a[(k, k)] = ONE;
            *o = 1.0 - self.apply(&a).trace().re;
        }
        out
    }

    /// φ_k relative to φ_00 from the coherences M(|k⟩⟨00|).
    pub fn logical_phases(&self) -> [f64; 4] {
        let mut out = [0.0; 4];
        for (k, o) in out.iter_mut().enumerate().skip(1) {
            let mut a = CMat::zeros(4, 4);
            a[(k, 0)] = ONE;
            *o = self.apply(&a)[(k, 0)].arg();
        }
        out
    }

    pub fn phizz(&self) -> f64 {
        let p = self.logical_phases();
        wrap_angle(p[0] + p[3] - p[1] - p[2])
    }
}

/// Diagonal of U_1q U_G,q with U_1q = diag(1, e^{iφB}, e^{iφA}, e^{i(φA+φB)}).
pub fn target_diagonal(gamma0: f64, phi_a: f64, phi_b: f64) -> [C64; 4] {
    [
        ONE,
        C64::from_polar(1.0, phi_b),
        C64::from_polar(1.0, phi_a),
        C64::from_polar(1.0, phi_a + phi_b + gamma0),
    ]
}

/// Bilinear form of the fidelity in the target diagonal u:
/// F = c0 + Re Σ_{a≠b} u_a u_b* C_ab.
struct FidelityForm {
    c0: f64,
    c: CMat,
}

impl FidelityForm {
    fn new(map: &QuantumMapSample) -> Self {
        let mut c = CMat::zeros(4, 4);
        for (p, m) in pauli_basis().iter().zip(&map.outputs).skip(1) {
            for a in 0..4 {
                for b in 0..4 {
                    c[(a, b)] += p[(a, b)] * m[(b, a)] / 80.0;
                }
            }
        }
        let c0 = 0.25 + (0..4).map(|a| c[(a, a)].re).sum::<f64>();
        Self { c0, c }
    }

    fn eval(&self, u: &[C64; 4]) -> f64 {
        let mut s = 0.0;
        for a in 0..4 {
            for b in 0..4 {
                if a != b {
                    s += (u[a] * u[b].conj() * self.c[(a, b)]).re;
                }
            }
        }
        self.c0 + s
    }
}

/// Pauli-sum fidelity for fixed phases: 1/4 + 1/80 Σ_{P≠I} tr[U P U† M(P)].
pub fn fidelity_at(map: &QuantumMapSample, gamma0: f64, phi_a: f64, phi_b: f64) -> f64 {
    let u = target_diagonal(gamma0, phi_a, phi_b);
    let ud = CMat::from_diagonal(&nalgebra::DVector::from_column_slice(&u));
    let mut s = ZERO;
    for (p, m) in pauli_basis().iter().zip(&map.outputs).skip(1) {
        s += (&ud * p * ud.adjoint() * m).trace();
    }
    0.25 + s.re / 80.0
}

#[derive(Debug, Clone, PartialEq)]
pub struct GateReport {
    pub fidelity: f64,
    pub error: f64,
    pub phi_a: f64,
    pub phi_b: f64,
    pub phi_zz: f64,
    pub leakage: [f64; 4],
    /// (channel, error contribution) sorted by size.
    pub channels: Vec<(String, f64)>,
}

impl GateReport {
    pub fn mean_leakage(&self) -> f64 {
        self.leakage.iter().sum::<f64>() / 4.0
    }

    pub fn to_text(&self) -> String {
        let mut s = String::new();
        s.push_str(&format!("fidelity      {:.12}\n", self.fidelity));
        s.push_str(&format!("error         {:.6e}\n", self.error));
        s.push_str(&format!("phi_A         {:.9} rad\n", self.phi_a));
        s.push_str(&format!("phi_B         {:.9} rad\n", self.phi_b));
        s.push_str(&format!("phi_ZZ        {:.9} rad\n", self.phi_zz));
        for (k, name) in ["00", "01", "10", "11"].iter().enumerate() {
            s.push_str(&format!("leakage |{name}>  {:.6e}\n", self.leakage[k]));
        }
        for (c, v) in &self.channels {
            s.push_str(&format!("channel {c:<12} {v:.6e}\n"));
        }
        s
    }
}

/// Fidelity, optimized over φ_A and φ_B on a 64×64 grid followed by a
/// compass search down to 1e-10 rad when `phase_opt` is set.
pub fn average_gate_fidelity(map: &QuantumMapSample, gamma0: f64, phase_opt: bool) -> Result<GateReport> {
    let form = FidelityForm::new(map);
    let f = |a: f64, b: f64| form.eval(&target_diagonal(gamma0, a, b));
    let (mut pa, mut pb, mut best) = (0.0, 0.0, f(0.0, 0.0));
    if phase_opt {
        let n = 64;
        let h = 2.0 * PI / n as f64;
        for i in 0..n {
            for j in 0..n {
                let (a, b) = (i as f64 * h, j as f64 * h);
                let v = f(a, b);
                if v > best {
                    (pa, pb, best) = (a, b, v);
                }
            }
        }
        let mut step = h;
        while step > 1e-10 {
            let mut moved = false;
            for (da, db) in [(step, 0.0), (-step, 0.0), (0.0, step), (0.0, -step)] {
                let v = f(pa + da, pb + db);
                if v > best {
                    (pa, pb, best) = (pa + da, pb + db, v);
                    moved = true;
                }
            }
            if !moved {
                step *= 0.5;
            }
        }
    }
    if best > 1.0 + 1e-9 {
        return Err(Error::Numerical(format!("non-physical map: fidelity {best}")));
    }
    let leakage = map.leakage();
    let phi_zz = map.phizz();
    let fidelity = best.min(1.0);
    let error = 1.0 - fidelity;
    let lk = leakage.iter().sum::<f64>() / 4.0;
    let mut channels = vec![
        ("leakage".to_string(), lk),
        ("other".to_string(), (error - lk).max(0.0)),
    ];
    channels.sort_by(|a, b| b.1.total_cmp(&a.1));
    Ok(GateReport {
        fidelity,
        error,
        phi_a: wrap_angle(pa),
        phi_b: wrap_angle(pb),
        phi_zz,
        leakage,
        channels,
    })
}

/// φ_00 + φ_11 − φ_01 − φ_10 from the logical diagonal of a coherent gate.
pub fn extract_phizz(w: &CMat) -> Result<f64> {
    let mut ph = [0.0; 4];
    for (k, p) in ph.iter_mut().enumerate() {
        let z = w[(k, k)];
        if z.norm_sqr() <= 0.5 {
            return Err(Error::Numerical(format!(
                "logical state {k} returns with population {:.4}; phases undefined",
                z.norm_sqr()
            )));
        }
        *p = z.arg();
    }
    Ok(wrap_angle(ph[0] + ph[3] - ph[1] - ph[2]))
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct RobustnessSpec {
    pub eta0: f64,
    pub grid: usize,
}

impl RobustnessSpec {
    pub fn new(eta0: f64, grid: usize) -> Result<Self> {
        if !(eta0 > 0.0 && eta0 <= 0.5) {
            return Err(Error::Domain(format!("eta0 = {eta0} outside (0, 0.5]")));
        }
        if grid < 3 || grid.is_multiple_of(2) {
            return Err(Error::Domain(format!("grid size {grid} must be odd and at least 3")));
        }
        Ok(Self { eta0, grid })
    }

    pub fn etas(&self) -> Vec<f64> {
        let m = (self.grid - 1) / 2;
        (0..self.grid)
            .map(|i| self.eta0 * (i as f64 - m as f64) / m as f64)
            .collect()
    }
}

/// Step of the second difference used for ξ.
pub const XI_STEP: f64 = 1e-3;

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Sensitivity {
    pub xi: f64,
    /// Same estimate with half the step.
    pub xi_half: f64,
    /// Richardson extrapolation (4 ξ_{h/2} − ξ_h)/3.
    pub xi_extrapolated: f64,
}

/// ξ = d²ε/dη² at η = 0 by symmetric second differences.
pub fn differential_sensitivity<F>(error_at: F) -> Result<Sensitivity>
where
    F: Fn(f64) -> Result<f64> + Sync,
{
    let etas = [-XI_STEP, -0.5 * XI_STEP, 0.0, 0.5 * XI_STEP, XI_STEP];
    let e = crate::parallel::par_map(&etas, |&x| error_at(x));
    let e: Vec<f64> = e.into_iter().collect::<Result<_>>()?;
    let h = XI_STEP;
    let xi = (e[4] - 2.0 * e[2] + e[0]) / (h * h);
    let xi_half = (e[3] - 2.0 * e[2] + e[1]) / (0.25 * h * h);
    let s = Sensitivity { xi, xi_half, xi_extrapolated: (4.0 * xi_half - xi) / 3.0 };
    if (xi - xi_half).abs() > 0.05 * xi.abs().max(xi_half.abs()) + 1e-5 {
        return Err(Error::Numerical(format!(
            "second difference unstable at eta = 0: xi(h) = {xi:.6e}, xi(h/2) = {xi_half:.6e}"
        )));
    }
    Ok(s)
}

/// ⟨ε⟩ over a uniform η distribution, trapezoid rule on the spec grid.
pub fn averaged_error<F>(error_at: F, spec: &RobustnessSpec) -> Result<f64>
where
    F: Fn(f64) -> Result<f64> + Sync,
{
    let etas = spec.etas();
    let e: Vec<f64> = crate::parallel::par_map(&etas, |&x| error_at(x))
        .into_iter()
        .collect::<Result<_>>()?;
    let h = etas[1] - etas[0];
    let mut s = 0.0;
    for w in e.windows(2) {
        s += 0.5 * h * (w[0] + w[1]);
    }
    Ok(s / (2.0 * spec.eta0))
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum FitLaw {
    /// ε = c x^p, fitted in log-log space.
    Power,
    /// ε = c x + b.
    Linear,
}

#[derive(Debug, Clone, PartialEq)]
pub struct FitResult {
    pub law: FitLaw,
    /// Power-law exponent; 1 for linear fits.
    pub exponent: f64,
    /// c in either law.
    pub prefactor: f64,
    /// Linear intercept b (0 for power fits).
    pub intercept: f64,
    /// RMS residual in the fitted space.
    pub residual: f64,
    pub window: (f64, f64),
    pub points: usize,
}

fn least_squares(x: &[f64], y: &[f64]) -> (f64, f64, f64) {
    let n = x.len() as f64;
    let mx = x.iter().sum::<f64>() / n;
    let my = y.iter().sum::<f64>() / n;
    let sxx: f64 = x.iter().map(|v| (v - mx).powi(2)).sum();
    let sxy: f64 = x.iter().zip(y).map(|(a, b)| (a - mx) * (b - my)).sum();
    let slope = sxy / sxx;
    let icpt = my - slope * mx;
    let res = (x.iter().zip(y).map(|(a, b)| (b - icpt - slope * a).powi(2)).sum::<f64>() / n).sqrt();
    (slope, icpt, res)
}

pub fn fit_error_scaling(points: &[(f64, f64)], law: FitLaw) -> Result<FitResult> {
    if points.len() < 2 {
        return Err(Error::Numerical(format!("{} points cannot determine 2 parameters", points.len())));
    }
    if points.len() < 6 {
        log::warn!("scaling fit on only {} points", points.len());
    }
    let lo = points.iter().map(|p| p.0).fold(f64::INFINITY, f64::min);
    let hi = points.iter().map(|p| p.0).fold(f64::NEG_INFINITY, f64::max);
    match law {
        FitLaw::Power => {
            if points.iter().any(|p| p.0 <= 0.0 || p.1 <= 0.0) {
                return Err(Error::Numerical("power-law fit needs positive data".into()));
            }
            let x: Vec<f64> = points.iter().map(|p| p.0.ln()).collect();
            let y: Vec<f64> = points.iter().map(|p| p.1.ln()).collect();
            let (s, b, r) = least_squares(&x, &y);
            Ok(FitResult { law, exponent: s, prefactor: b.exp(), intercept: 0.0, residual: r, window: (lo, hi), points: points.len() })
        }
        FitLaw::Linear => {
            let x: Vec<f64> = points.iter().map(|p| p.0).collect();
            let y: Vec<f64> = points.iter().map(|p| p.1).collect();
            let (s, b, r) = least_squares(&x, &y);
            Ok(FitResult { law, exponent: 1.0, prefactor: s, intercept: b, residual: r, window: (lo, hi), points: points.len() })
        }
    }
}

/// Lower envelope of an oscillating curve: the interior local minima
/// (points not above either neighbour), sorted by x.
pub fn lower_envelope(points: &[(f64, f64)]) -> Vec<(f64, f64)> {
    let mut p = points.to_vec();
    p.sort_by(|a, b| a.0.total_cmp(&b.0));
    let mut out = Vec::new();
    for i in 1..p.len().saturating_sub(1) {
        if p[i].1 <= p[i - 1].1 && p[i].1 <= p[i + 1].1 {
            out.push(p[i]);
        }
    }
    out
}

pub const TRADEOFF_TIME_FACTOR: f64 = 7.96;
pub const TRADEOFF_ERROR_FACTOR: f64 = 1.35;

/// Closed-form optimum: (t_g, ε_min) = (7.96 (T1/χ⁴)^{1/5}, 1.35 (χT1)^{−4/5}).
pub fn optimal_tradeoff(chi: f64, t1_min: f64) -> Result<(f64, f64)> {
    if !(chi > 0.0 && t1_min > 0.0) {
        return Err(Error::Domain("chi and T1_min must be positive".into()));
    }
    Ok((
        TRADEOFF_TIME_FACTOR * (t1_min / chi.powi(4)).powf(0.2),
        TRADEOFF_ERROR_FACTOR * (chi * t1_min).powf(-0.8),
    ))
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Tradeoff {
    pub t_opt: f64,
    pub eps_min: f64,
    /// t_opt / (T1/χ⁴)^{1/5}
    pub time_factor: f64,
    /// ε_min (χT1)^{4/5}
    pub error_factor: f64,
}

/// Minimizes √(ε_leak² + ε_diss²) with ε_leak = c_leak (χ t)^−4 and
/// ε_diss = c_diss t/T1 by golden-section search in log t.
pub fn minimize_tradeoff(c_leak: f64, c_diss: f64, chi: f64, t1_min: f64) -> Result<Tradeoff> {
    if !(c_leak > 0.0 && c_diss > 0.0 && chi > 0.0 && t1_min > 0.0) {
        return Err(Error::Domain("trade-off inputs must be positive".into()));
    }
    let eps = |lt: f64| {
        let t = lt.exp();
        (c_leak * (chi * t).powi(-4)).hypot(c_diss * t / t1_min)
    };
    let scale = (t1_min / chi.powi(4)).powf(0.2);
    let (mut a, mut b) = ((scale * 1e-3).ln(), (scale * 1e3).ln());
    let gr = (5f64.sqrt() - 1.0) / 2.0;
    let mut c = b - gr * (b - a);
    let mut d = a + gr * (b - a);
    while b - a > 1e-12 {
        if eps(c) < eps(d) {
            b = d;
        } else {
            a = c;
        }
        c = b - gr * (b - a);
        d = a + gr * (b - a);
    }
    let lt = 0.5 * (a + b);
    let t_opt = lt.exp();
    let eps_min = eps(lt);
    Ok(Tradeoff {
        t_opt,
        eps_min,
        time_factor: t_opt / scale,
        error_factor: eps_min * (chi * t1_min).powf(0.8),
    })
}
