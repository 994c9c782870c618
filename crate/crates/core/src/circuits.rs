//! Fluxonium and coupler spectra, the statically coupled composite system and
//! its dressed-basis operators.

use std::collections::HashMap;
use std::fmt;

use nalgebra::DMatrix;
use num_complex::Complex64 as C64;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::linalg::{self, CMat, I};
use crate::pulses::ComputationalLevels;
use crate::units::{ghz, mhz, to_ghz, to_khz, TWO_PI};

/// Frequency drift allowed when doubling the fluxonium basis (1 kHz).
pub const FLUXONIUM_CONVERGENCE: f64 = TWO_PI * 1e-6;

/// Dressed-state labels require at least this squared overlap.
pub const LABEL_THRESHOLD: f64 = 0.5;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub enum Method {
    /// Modulated qubit-auxiliary couplings, fixed auxiliary mode.
    #[serde(rename = "I")]
    I,
    /// Static couplings, frequency-modulated auxiliary mode.
    #[serde(rename = "II")]
    II,
}

impl Method {
    /// Number of dressed levels kept for dynamics.
    pub fn default_levels(self) -> usize {
        match self {
            Method::I => 38,
            Method::II => 20,
        }
    }
}

/// Energies in rad/ns.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct FluxoniumSpec {
    pub e_c: f64,
    pub e_j: f64,
    pub e_l: f64,
    /// External flux in units of Φ0.
    pub phi_ext: f64,
    pub basis_size: usize,
}

impl FluxoniumSpec {
    /// Energies given in GHz·h.
    pub fn from_ghz(e_c: f64, e_j: f64, e_l: f64, phi_ext: f64) -> Self {
        Self { e_c: ghz(e_c), e_j: ghz(e_j), e_l: ghz(e_l), phi_ext, basis_size: 120 }
    }

    fn validate(&self) -> Result<()> {
        if !(self.e_c > 0.0 && self.e_j > 0.0 && self.e_l > 0.0) {
            return Err(Error::Domain("fluxonium energies must be positive".into()));
        }
        if self.basis_size < 60 {
            return Err(Error::Domain(format!(
                "fluxonium basis size {} below 60",
                self.basis_size
            )));
        }
        Ok(())
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct CouplerSpec {
    pub omega_c: f64,
    pub u: f64,
    pub levels: usize,
}

#[derive(Debug, Clone, Copy, PartialEq, Default)]
pub struct CouplingSpec {
    pub g_ac: f64,
    pub g_bc: f64,
    pub g_ab: f64,
}

#[derive(Debug, Clone)]
pub struct Fluxonium {
    /// Eigenenergies relative to the ground state, rad/ns.
    pub energies: Vec<f64>,
    /// Charge operator in the eigenbasis.
    pub n: CMat,
}

fn fluxonium_eig(spec: &FluxoniumSpec, size: usize, n_keep: usize) -> (Vec<f64>, DMatrix<f64>, DMatrix<f64>) {
    // Oscillator of the capacitive and inductive terms; cos built from the
    // exact spectral decomposition of the truncated a + a†.
    let mut x = DMatrix::<f64>::zeros(size, size);
    let mut lower = DMatrix::<f64>::zeros(size, size);
    for k in 1..size {
        let s = (k as f64).sqrt();
        x[(k - 1, k)] = s;
        x[(k, k - 1)] = s;
        lower[(k - 1, k)] = s;
    }
    let phi_zpf = (2.0 * spec.e_c / spec.e_l).powf(0.25);
    let omega_p = (8.0 * spec.e_c * spec.e_l).sqrt();
    let (lam, v) = linalg::eigh_real(&x);
    let cos_diag = DMatrix::from_diagonal(&nalgebra::DVector::from_iterator(
        size,
        lam.iter().map(|l| (phi_zpf * l + TWO_PI * spec.phi_ext).cos()),
    ));
    let cosm = &v * cos_diag * v.transpose();
    let mut h = cosm * (-spec.e_j);
    for k in 0..size {
        h[(k, k)] += omega_p * (k as f64 + 0.5);
    }
    let (e, u) = linalg::eigh_real(&h);
    let keep = u.columns(0, n_keep).into_owned();
    // n = i(a† − a)/(2 φ_zpf); store the real antisymmetric part (a† − a)/(2 φ_zpf).
    let nr = (lower.transpose() - &lower) / (2.0 * phi_zpf);
    let n_eig = keep.transpose() * nr * &keep;
    (e[..n_keep].to_vec(), keep, n_eig)
}

pub fn diagonalize_fluxonium(spec: &FluxoniumSpec, n_keep: usize) -> Result<Fluxonium> {
    spec.validate()?;
    if n_keep * 3 > spec.basis_size {
        return Err(Error::Domain(format!(
            "n_keep = {n_keep} exceeds basis_size/3 = {}",
            spec.basis_size / 3
        )));
    }
    let (e1, _, n) = fluxonium_eig(spec, spec.basis_size, n_keep);
    let (e2, _, _) = fluxonium_eig(spec, 2 * spec.basis_size, n_keep);
    for k in 0..n_keep {
        let d = ((e1[k] - e1[0]) - (e2[k] - e2[0])).abs();
        if d > FLUXONIUM_CONVERGENCE {
            return Err(Error::Numerical(format!(
                "fluxonium level {k} not converged: doubling the basis moves it by {:.3} kHz",
                to_khz(d)
            )));
        }
    }
    let energies = e1.iter().map(|e| e - e1[0]).collect();
    let n = n.map(|v| C64::new(0.0, v));
    Ok(Fluxonium { energies, n })
}

#[derive(Debug, Clone)]
pub struct Coupler {
    pub energies: Vec<f64>,
    /// Lowering operator.
    pub a: CMat,
}

pub fn coupler_hamiltonian(spec: &CouplerSpec) -> Result<Coupler> {
    if spec.levels < 3 {
        return Err(Error::Domain(format!("coupler needs at least 3 levels, got {}", spec.levels)));
    }
    if spec.u < 0.0 {
        return Err(Error::Domain("coupler nonlinearity must be non-negative".into()));
    }
    let energies = (0..spec.levels)
        .map(|n| {
            let n = n as f64;
            n * spec.omega_c - spec.u * n * (n - 1.0)
        })
        .collect();
    let mut a = CMat::zeros(spec.levels, spec.levels);
    for k in 1..spec.levels {
        a[(k - 1, k)] = C64::new((k as f64).sqrt(), 0.0);
    }
    Ok(Coupler { energies, a })
}

/// Bare product-state label |ab,c⟩.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub struct BareLabel {
    pub a: usize,
    pub b: usize,
    pub c: usize,
}

const QUBIT_LETTERS: &[u8] = b"gefhijklmnopqrstuvwxyz";

fn qubit_letter(k: usize) -> String {
    QUBIT_LETTERS
        .get(k)
        .map(|&c| (c as char).to_string())
        .unwrap_or_else(|| format!("[{k}]"))
}

impl fmt::Display for BareLabel {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{}{},{}", qubit_letter(self.a), qubit_letter(self.b), self.c)
    }
}

impl BareLabel {
    pub fn parse(s: &str) -> Option<Self> {
        let s = s.trim().trim_start_matches('|').trim_end_matches('>').trim_end_matches('⟩');
        let (q, c) = s.split_once(',')?;
        let mut chars = q.chars();
        let pa = chars.next()?;
        let pb = chars.next()?;
        if chars.next().is_some() {
            return None;
        }
        let idx = |ch: char| QUBIT_LETTERS.iter().position(|&x| x as char == ch);
        Some(Self { a: idx(pa)?, b: idx(pb)?, c: c.trim().parse().ok()? })
    }
}

/// Truncations used when building the composite Hilbert space.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct Truncation {
    pub qubit_a: usize,
    pub qubit_b: usize,
    pub coupler: usize,
    pub keep: usize,
}

impl Truncation {
    pub fn for_method(m: Method) -> Self {
        Self { qubit_a: 6, qubit_b: 6, coupler: 4, keep: m.default_levels() }
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct CircuitParams {
    pub qubit_a: FluxoniumSpec,
    pub qubit_b: FluxoniumSpec,
    pub coupler: CouplerSpec,
    pub couplings: CouplingSpec,
}

impl CircuitParams {
    /// Parameter set for the given modulation method.
    pub fn preset(m: Method) -> Self {
        match m {
            Method::I => Self {
                qubit_a: FluxoniumSpec::from_ghz(1.5, 5.5, 1.0, 0.5),
                qubit_b: FluxoniumSpec::from_ghz(1.2, 5.7, 1.0, 0.5),
                coupler: CouplerSpec { omega_c: ghz(7.5), u: 0.0, levels: 4 },
                couplings: CouplingSpec { g_ac: 0.0, g_bc: ghz(0.8), g_ab: 0.0 },
            },
            Method::II => Self {
                qubit_a: FluxoniumSpec::from_ghz(1.8, 4.5, 1.5, 0.5),
                qubit_b: FluxoniumSpec::from_ghz(1.1, 3.5, 1.0, 0.5),
                coupler: CouplerSpec { omega_c: ghz(1.11), u: mhz(5.0), levels: 4 },
                couplings: CouplingSpec { g_ac: ghz(0.63), g_bc: ghz(0.6), g_ab: ghz(0.04) },
            },
        }
    }
}

/// Dressed spectrum and operators of the statically coupled system.
#[derive(Debug, Clone)]
pub struct CompositeSystem {
    /// Dressed energies relative to the dressed ground state, rad/ns, ascending.
    pub energies: Vec<f64>,
    pub labels: Vec<Option<BareLabel>>,
    /// Largest squared overlap with a bare product state.
    pub overlaps: Vec<f64>,
    /// n_A(a† + a), n_B(a† + a) and a†a in the dressed basis.
    pub op_a: CMat,
    pub op_b: CMat,
    pub op_n: CMat,
    /// Capacitor charge operators n_A, n_B and i(a† − a) in the dressed basis.
    pub charge: [CMat; 3],
    /// Prefactors multiplying |⟨l|charge_j|k⟩|² in the dielectric-loss rate:
    /// 8E_C,A, 8E_C,B and ω_C/2.
    pub charge_scale: [f64; 3],
    pub diagnostics: Vec<String>,
    index: HashMap<BareLabel, usize>,
}

pub fn assemble_composite(params: &CircuitParams, trunc: Truncation) -> Result<CompositeSystem> {
    let fa = diagonalize_fluxonium(&params.qubit_a, trunc.qubit_a)?;
    let fb = diagonalize_fluxonium(&params.qubit_b, trunc.qubit_b)?;
    let cs = CouplerSpec { levels: trunc.coupler, ..params.coupler };
    let c = coupler_hamiltonian(&cs)?;
    let (na, nb, nc) = (trunc.qubit_a, trunc.qubit_b, trunc.coupler);
    let dim = na * nb * nc;
    if trunc.keep > dim || trunc.keep < 6 {
        return Err(Error::Domain(format!("cannot keep {} of {dim} levels", trunc.keep)));
    }
    let ia = linalg::identity(na);
    let ib = linalg::identity(nb);
    let ic = linalg::identity(nc);
    let x = &c.a + c.a.adjoint();
    let num = c.a.adjoint() * &c.a;
    let p = (c.a.adjoint() - &c.a) * I;

    let diag = |e: &[f64]| CMat::from_diagonal(&nalgebra::DVector::from_iterator(e.len(), e.iter().map(|&v| C64::new(v, 0.0))));
    let h0 = linalg::kron_all(&[&diag(&fa.energies), &ib, &ic])
        + linalg::kron_all(&[&ia, &diag(&fb.energies), &ic])
        + linalg::kron_all(&[&ia, &ib, &diag(&c.energies)]);
    let na_x = linalg::kron_all(&[&fa.n, &ib, &x]);
    let nb_x = linalg::kron_all(&[&ia, &fb.n, &x]);
    let na_nb = linalg::kron_all(&[&fa.n, &fb.n, &ic]);
    let cc = &params.couplings;
    let h = &h0
        + &na_x * C64::new(cc.g_ac, 0.0)
        + &nb_x * C64::new(cc.g_bc, 0.0)
        + &na_nb * C64::new(cc.g_ab, 0.0);
    let (vals, vecs) = linalg::eigh(&h);
    let keep = vecs.columns(0, trunc.keep).into_owned();

    let bare = |i: usize| BareLabel { a: i / (nb * nc), b: (i / nc) % nb, c: i % nc };
    let mut labels = Vec::with_capacity(trunc.keep);
    let mut overlaps = Vec::with_capacity(trunc.keep);
    let mut index = HashMap::new();
    let mut diagnostics = Vec::new();
    for k in 0..trunc.keep {
        let col = keep.column(k);
        let (imax, ov) = col
            .iter()
            .enumerate()
            .map(|(i, z)| (i, z.norm_sqr()))
            .fold((0, -1.0), |acc, x| if x.1 > acc.1 { x } else { acc });
        overlaps.push(ov);
        if ov > LABEL_THRESHOLD {
            let l = bare(imax);
            if let Some(&other) = index.get(&l) {
                return Err(Error::Label(format!(
                    "dressed states {other} and {k} both claim |{l}> (overlaps {:.4}, {:.4})",
                    overlaps[other], ov
                )));
            }
            index.insert(l, k);
            labels.push(Some(l));
        } else {
            let mut comps: Vec<(usize, f64)> = col.iter().map(|z| z.norm_sqr()).enumerate().collect();
            comps.sort_by(|a, b| b.1.total_cmp(&a.1));
            let table: Vec<String> = comps
                .iter()
                .take(3)
                .map(|(i, w)| format!("|{}> {:.3}", bare(*i), w))
                .collect();
            diagnostics.push(format!("dressed state {k} is hybridized: {}", table.join(", ")));
            labels.push(None);
        }
    }
    for d in &diagnostics {
        log::warn!("{d}");
    }
    let tr = |m: &CMat| linalg::transform(m, &keep);
    let e0 = vals[0];
    Ok(CompositeSystem {
        energies: vals[..trunc.keep].iter().map(|v| v - e0).collect(),
        labels,
        overlaps,
        op_a: tr(&na_x),
        op_b: tr(&nb_x),
        op_n: tr(&linalg::kron_all(&[&ia, &ib, &num])),
        charge: [
            tr(&linalg::kron_all(&[&fa.n, &ib, &ic])),
            tr(&linalg::kron_all(&[&ia, &fb.n, &ic])),
            tr(&linalg::kron_all(&[&ia, &ib, &p])),
        ],
        charge_scale: [8.0 * params.qubit_a.e_c, 8.0 * params.qubit_b.e_c, 0.5 * params.coupler.omega_c],
        diagnostics,
        index,
    })
}

/// One row of a transition table.
#[derive(Debug, Clone, PartialEq)]
pub struct Transition {
    pub from: String,
    pub to: String,
    /// ε_to − ε_from, rad/ns.
    pub omega: f64,
    pub op_a: f64,
    pub op_b: f64,
    pub op_n: f64,
}

impl CompositeSystem {
    pub fn dim(&self) -> usize {
        self.energies.len()
    }

    pub fn index_of(&self, label: &str) -> Result<usize> {
        let l = BareLabel::parse(label).ok_or_else(|| Error::MissingLabel(label.to_string()))?;
        self.index.get(&l).copied().ok_or_else(|| Error::MissingLabel(label.to_string()))
    }

    pub fn label(&self, k: usize) -> String {
        match self.labels[k] {
            Some(l) => l.to_string(),
            None => format!("?{k}"),
        }
    }

    pub fn label_strings(&self) -> Vec<String> {
        (0..self.dim()).map(|k| self.label(k)).collect()
    }

    pub fn energy(&self, label: &str) -> Result<f64> {
        Ok(self.energies[self.index_of(label)?])
    }

    pub fn computational(&self) -> Result<ComputationalLevels> {
        Ok(ComputationalLevels {
            gg0: self.index_of("gg,0")?,
            ge0: self.index_of("ge,0")?,
            eg0: self.index_of("eg,0")?,
            ee0: self.index_of("ee,0")?,
            ge1: self.index_of("ge,1")?,
            gf0: self.index_of("gf,0")?,
        })
    }

    pub fn transition(&self, from: &str, to: &str) -> Result<Transition> {
        let (k, l) = (self.index_of(from)?, self.index_of(to)?);
        Ok(Transition {
            from: from.to_string(),
            to: to.to_string(),
            omega: self.energies[l] - self.energies[k],
            op_a: self.op_a[(k, l)].norm(),
            op_b: self.op_b[(k, l)].norm(),
            op_n: self.op_n[(k, l)].norm(),
        })
    }

    /// Λ rows (left, right arm) followed by the two Λ_bad rows.
    pub fn transition_table(&self) -> Result<Vec<Transition>> {
        Ok(vec![
            self.transition("ee,0", "ge,1")?,
            self.transition("gf,0", "ge,1")?,
            self.transition("eg,0", "gg,1")?,
            self.transition("ge,0", "gg,1")?,
        ])
    }

    /// Signed carrier frequencies ε_ge1 − ε_ee0 and ε_ge1 − ε_gf0.
    pub fn carriers(&self) -> Result<[f64; 2]> {
        let ge1 = self.energy("ge,1")?;
        Ok([ge1 - self.energy("ee,0")?, ge1 - self.energy("gf,0")?])
    }

    /// Modulation operators bound to tones A and B for a method.
    pub fn modulation_ops(&self, m: Method) -> [&CMat; 2] {
        match m {
            Method::I => [&self.op_a, &self.op_b],
            Method::II => [&self.op_n, &self.op_n],
        }
    }

    /// Λ-arm matrix elements ⟨ge,1|O_A|ee,0⟩ and ⟨ge,1|O_B|gf,0⟩.
    pub fn arm_elements(&self, m: Method) -> Result<[C64; 2]> {
        let c = self.computational()?;
        let ops = self.modulation_ops(m);
        Ok([ops[0][(c.ge1, c.ee0)], ops[1][(c.ge1, c.gf0)]])
    }

    pub fn summary_energies_ghz(&self) -> Vec<f64> {
        self.energies.iter().map(|&e| to_ghz(e)).collect()
    }
}

/// χ = ½ ||ω_{ee0→ge1}| − |ω_{eg0→gg1}||, rad/ns.
pub fn dispersive_shift(sys: &CompositeSystem) -> Result<f64> {
    let good = sys.energy("ge,1")? - sys.energy("ee,0")?;
    let bad = sys.energy("gg,1")? - sys.energy("eg,0")?;
    Ok(0.5 * (good.abs() - bad.abs()).abs())
}

/// ε_ee0 + ε_gg0 − ε_ge0 − ε_eg0 in kHz.
pub fn zz_strength(sys: &CompositeSystem) -> Result<f64> {
    let zz = sys.energy("ee,0")? + sys.energy("gg,0")? - sys.energy("ge,0")? - sys.energy("eg,0")?;
    Ok(to_khz(zz))
}

/// Qubit frequency ω_01 in rad/ns of an isolated fluxonium.
pub fn qubit_frequency(spec: &FluxoniumSpec) -> Result<f64> {
    Ok(diagonalize_fluxonium(spec, 2)?.energies[1])
}
