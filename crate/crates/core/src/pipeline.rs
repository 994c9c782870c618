//! End-to-end gate runs: pulse synthesis, binding to a circuit, evolution
//! and scoring, plus the reduced-model sweeps used for scaling fits.

use std::f64::consts::PI;

use num_complex::Complex64 as C64;

use crate::circuits::{CompositeSystem, Method};
use crate::dynamics::{self, DissipationModel, DriveBinding, Generator};
use crate::error::{Error, Result};
use crate::lambda_model::{self, BadLambdaParams};
use crate::linalg::CMat;
use crate::metrics::{self, GateReport, QuantumMapSample};
use crate::pulses::{self, ChirpModel, Envelope, PulseParams, PulseSchedule, PulseShape};

#[derive(Debug, Clone, Copy, PartialEq)]
pub enum Amplitude {
    PowerOptimal,
    /// Ω0 in rad/ns.
    Explicit(f64),
}

impl Amplitude {
    pub fn omega0(self, t_g: f64) -> Result<f64> {
        match self {
            Amplitude::PowerOptimal => pulses::power_optimal_omega0(t_g),
            Amplitude::Explicit(o) => Ok(o),
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct DissipationSpec {
    pub q_diel: f64,
    /// K
    pub temperature: f64,
    pub jumps: usize,
}

impl Default for DissipationSpec {
    fn default() -> Self {
        Self { q_diel: 1e6, temperature: 0.0, jumps: dynamics::DEFAULT_JUMPS }
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct GateSpec {
    pub method: Method,
    pub t_g: f64,
    /// Target geometric phase.
    pub gamma0: f64,
    pub amplitude: Amplitude,
    pub shape: PulseShape,
    pub chirp: bool,
    pub zz_correction: bool,
    pub dissipation: Option<DissipationSpec>,
    /// Amplitude factor (1 + η) applied to both envelopes.
    pub scale: f64,
    /// Explicit γ0 used in the pulse; skips the correction pass.
    pub pulse_gamma0: Option<f64>,
    pub tol: f64,
    pub lindblad_tol: f64,
}

impl GateSpec {
    /// Power-optimal chirped SATD CZ with ZZ correction, coherent only.
    pub fn new(method: Method, t_g: f64) -> Self {
        Self {
            method,
            t_g,
            gamma0: PI,
            amplitude: Amplitude::PowerOptimal,
            shape: PulseShape::Satd,
            chirp: true,
            zz_correction: true,
            dissipation: None,
            scale: 1.0,
            pulse_gamma0: None,
            tol: dynamics::COHERENT_TOL,
            lindblad_tol: dynamics::LINDBLAD_TOL,
        }
    }
}

#[derive(Debug, Clone)]
pub struct GateRun {
    pub report: GateReport,
    /// γ0 actually used in the pulse.
    pub pulse_gamma0: f64,
    /// φ_ZZ of the uncorrected coherent run.
    pub raw_phizz: f64,
    pub schedule: PulseSchedule,
}

/// Schedule for a gate on a given system.
pub fn build_schedule(system: &CompositeSystem, spec: &GateSpec, gamma0: f64) -> Result<PulseSchedule> {
    let omega0 = spec.amplitude.omega0(spec.t_g)?;
    let params = PulseParams::new(spec.t_g, omega0, gamma0)?;
    let env = Envelope::new(params, spec.shape).scaled(spec.scale);
    let carriers = system.carriers()?;
    let sched = PulseSchedule::new(env, carriers);
    if spec.chirp {
        let model = ChirpModel::new(
            &system.energies,
            &system.label_strings(),
            system.modulation_ops(spec.method),
            system.computational()?,
            carriers,
            pulses::DEFAULT_RESONANCE_GUARD,
        )?;
        Ok(sched.with_chirp(&model))
    } else {
        Ok(sched)
    }
}

fn logical_columns(n: usize, logical: [usize; 4]) -> CMat {
    let mut psi = CMat::zeros(n, 4);
    for (c, &k) in logical.iter().enumerate() {
        psi[(k, c)] = C64::new(1.0, 0.0);
    }
    psi
}

fn coherent_map(system: &CompositeSystem, binding: &DriveBinding, tol: f64) -> Result<QuantumMapSample> {
    let logical = system.computational()?.logical();
    let gen = Generator::new(system, binding);
    let out = dynamics::evolve_coherent(&gen, &logical_columns(system.dim(), logical), tol)?;
    Ok(QuantumMapSample::from_columns(&out, logical))
}

fn lindblad_map(
    system: &CompositeSystem,
    binding: &DriveBinding,
    diss: &DissipationModel,
    tol: f64,
) -> Result<QuantumMapSample> {
    let logical = system.computational()?.logical();
    let gen = Generator::new(system, binding);
    lindblad_map_with(&gen, system.dim(), logical, diss, tol)
}

fn lindblad_map_with(
    gen: &Generator,
    n: usize,
    logical: [usize; 4],
    diss: &DissipationModel,
    tol: f64,
) -> Result<QuantumMapSample> {
    let inputs = dynamics::pauli_inputs(n, logical);
    let out = dynamics::evolve_lindblad(gen, &inputs, diss, tol)?;
    let outputs = out
        .iter()
        .map(|r| CMat::from_fn(4, 4, |a, b| r[(logical[a], logical[b])]))
        .collect();
    let traces = out.iter().map(|r| r.trace()).collect();
    Ok(QuantumMapSample { outputs, traces })
}

/// Full gate: one coherent run to measure φ_ZZ, a corrected re-run, then
/// scoring (with dissipation when requested).
pub fn run_gate(system: &CompositeSystem, spec: &GateSpec) -> Result<GateRun> {
    let mut gamma = spec.pulse_gamma0.unwrap_or(spec.gamma0);
    let schedule = build_schedule(system, spec, gamma)?;
    let binding = DriveBinding::new(spec.method, schedule, system)?;
    let first = coherent_map(system, &binding, spec.tol)?;
    let raw_phizz = first.phizz();
    let mut map = first;
    let mut binding = binding;
    if spec.zz_correction && spec.pulse_gamma0.is_none() {
        gamma -= metrics::wrap_angle(raw_phizz - spec.gamma0);
        let schedule = build_schedule(system, spec, gamma)?;
        binding = DriveBinding::new(spec.method, schedule, system)?;
        map = coherent_map(system, &binding, spec.tol)?;
    }
    if let Some(d) = &spec.dissipation {
        let model = dynamics::t1_rates(system, d.q_diel, d.temperature)?.truncated(d.jumps);
        map = lindblad_map(system, &binding, &model, spec.lindblad_tol)?;
    }
    let report = metrics::average_gate_fidelity(&map, spec.gamma0, true)?;
    Ok(GateRun { report, pulse_gamma0: gamma, raw_phizz, schedule: binding.schedule })
}

/// Error of the dissipative gate with the drive restricted to the two
/// resonant Λ arms in the rotating-wave approximation, so that the
/// coherent part is exact and only T1 loss remains.
pub fn dissipation_only_error(system: &CompositeSystem, method: Method, t_g: f64, diss: &DissipationSpec, tol: f64) -> Result<f64> {
    let comp = system.computational()?;
    let spec = GateSpec { chirp: false, ..GateSpec::new(method, t_g) };
    let schedule = build_schedule(system, &spec, spec.gamma0)?;
    let binding = DriveBinding::new(method, schedule, system)?;
    let n = system.dim();
    let ops = system.modulation_ops(method);
    let mut arm_a = CMat::zeros(n, n);
    let mut arm_b = CMat::zeros(n, n);
    arm_a[(comp.ge1, comp.ee0)] = ops[0][(comp.ge1, comp.ee0)];
    arm_a[(comp.ee0, comp.ge1)] = ops[0][(comp.ee0, comp.ge1)];
    arm_b[(comp.ge1, comp.gf0)] = ops[1][(comp.ge1, comp.gf0)];
    arm_b[(comp.gf0, comp.ge1)] = ops[1][(comp.gf0, comp.ge1)];
    let gen = Generator::custom(system.energies.clone(), [&arm_a, &arm_b], &binding, true);
    let model = dynamics::t1_rates(system, diss.q_diel, diss.temperature)?.truncated(diss.jumps);
    let map = lindblad_map_with(&gen, n, comp.logical(), &model, tol)?;
    Ok(metrics::average_gate_fidelity(&map, spec.gamma0, true)?.error)
}

/// Shortest T1 out of the six computational levels, ns.
pub fn t1_min(system: &CompositeSystem, diss: &DissipationSpec) -> Result<f64> {
    let model = dynamics::t1_rates(system, diss.q_diel, diss.temperature)?;
    model
        .t1_min(&system.computational()?.as_array())
        .ok_or_else(|| Error::Numerical("no relaxation channel out of the computational levels".into()))
}

/// Reduced Λ + Λ_bad model at power-optimal SATD: gate error and φ_ZZ for a
/// given χ t_g (χ in rad/ns).
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct BadLambdaPoint {
    pub chi_tg: f64,
    pub error: f64,
    pub corrected_error: f64,
    pub phizz: f64,
}

pub fn bad_lambda_point(chi: f64, t_g: f64, tol: f64) -> Result<BadLambdaPoint> {
    let env = Envelope::new(PulseParams::power_optimal(t_g, PI)?, PulseShape::Satd);
    let bad = BadLambdaParams::new(chi);
    let w = lambda_model::lambda_gate(&env, Some(&bad), tol)?;
    let phizz = metrics::extract_phizz(&w)?;
    let error = metrics::average_gate_fidelity(&QuantumMapSample::from_unitary_block(&w), PI, true)?.error;
    let (wc, _) = lambda_model::lambda_gate_zz_corrected(&env, Some(&bad), tol)?;
    let corrected_error = metrics::average_gate_fidelity(&QuantumMapSample::from_unitary_block(&wc), PI, true)?.error;
    Ok(BadLambdaPoint { chi_tg: chi * t_g, error, corrected_error, phizz })
}

/// Sweep at fixed χ over gate times chosen so that 2χt_g/2π spans [lo, hi].
pub fn bad_lambda_sweep(chi: f64, lo: f64, hi: f64, points: usize, tol: f64) -> Result<Vec<BadLambdaPoint>> {
    if points < 2 || !(lo > 0.0 && hi > lo) {
        return Err(Error::Domain("sweep needs at least two points on a positive interval".into()));
    }
    let tgs: Vec<f64> = (0..points)
        .map(|i| (lo + (hi - lo) * i as f64 / (points - 1) as f64) * PI / chi)
        .collect();
    crate::parallel::par_map(&tgs, |&tg| bad_lambda_point(chi, tg, tol))
        .into_iter()
        .collect()
}

/// Gate error of the RWA Λ model (SATD, amplitude scale 1 + η).
pub fn rwa_gate_error(t_g: f64, omega0: f64, eta: f64, tol: f64) -> Result<f64> {
    let env = Envelope::new(PulseParams::new(t_g, omega0, PI)?, PulseShape::Satd).scaled(1.0 + eta);
    let w = lambda_model::lambda_gate(&env, None, tol)?;
    Ok(metrics::average_gate_fidelity(&QuantumMapSample::from_unitary_block(&w), PI, true)?.error)
}

/// Phase-optimized error of the dynamical ZZ gate with Ω0 → Ω0(1 + η),
/// Ω0 t_g = π.
pub fn dynamical_gate_error(t_g: f64, eta: f64) -> Result<f64> {
    let w = lambda_model::dynamical_gate((1.0 + eta) * PI / t_g, t_g);
    Ok(metrics::average_gate_fidelity(&QuantumMapSample::from_unitary_block(&w), PI, true)?.error)
}

/// Full-model gate error with amplitude scale 1 + η, keeping the γ0 found at
/// η = 0 (no re-correction per η).
pub fn full_gate_error_factory<'a>(system: &'a CompositeSystem, spec: &GateSpec) -> Result<impl Fn(f64) -> Result<f64> + Sync + 'a> {
    let nominal = run_gate(system, spec)?;
    let gamma = nominal.pulse_gamma0;
    let base = *spec;
    Ok(move |eta: f64| {
        let s = GateSpec { scale: 1.0 + eta, pulse_gamma0: Some(gamma), ..base };
        Ok(run_gate(system, &s)?.report.error)
    })
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn bad_lambda_large_detuning_is_clean() {
        let p = bad_lambda_point(200.0, 40.0, 1e-12).unwrap();
        assert!(p.corrected_error < 1e-6, "{p:?}");
    }

    #[test]
    fn rwa_error_is_tiny() {
        let tg = 25.0;
        let e = rwa_gate_error(tg, pulses::power_optimal_omega0(tg).unwrap(), 0.0, 1e-12).unwrap();
        assert!(e < 1e-9, "{e}");
    }

    #[test]
    fn dynamical_error_at_zero_eta() {
        assert!(dynamical_gate_error(50.0, 0.0).unwrap() < 1e-12);
    }
}
