//! Declarative experiment configuration. Physical quantities are strings
//! with explicit units ("7.5 GHz", "45 ns", "20 mK", "1 pi").

use std::path::Path;

use serde::{Deserialize, Serialize};

use crate::circuits::{CircuitParams, CouplerSpec, CouplingSpec, FluxoniumSpec, Method, Truncation};
use crate::error::{Error, Result};
use crate::metrics::{FitLaw, RobustnessSpec};
use crate::pipeline::{Amplitude, DissipationSpec, GateSpec};
use crate::pulses::PulseShape;
use crate::units::{format_quantity, parse_quantity, Dimension};

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ExperimentConfig {
    pub method: Method,
    /// Omitted: the built-in parameter set of the method.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub circuit: Option<CircuitConfig>,
    #[serde(default)]
    pub pulse: PulseConfig,
    #[serde(default)]
    pub dissipation: DissipationConfig,
    #[serde(default)]
    pub numerics: NumericsConfig,
    #[serde(default)]
    pub robustness: RobustnessConfig,
    #[serde(default)]
    pub sweep: SweepConfig,
    #[serde(default)]
    pub output: OutputConfig,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct CircuitConfig {
    pub qubit_a: FluxoniumConfig,
    pub qubit_b: FluxoniumConfig,
    pub coupler: CouplerConfig,
    pub couplings: CouplingConfig,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct FluxoniumConfig {
    pub e_c: String,
    pub e_j: String,
    pub e_l: String,
    /// Units of Φ0.
    pub phi_ext: f64,
    #[serde(default = "default_basis")]
    pub basis_size: usize,
}

fn default_basis() -> usize {
    120
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct CouplerConfig {
    pub omega_c: String,
    pub u: String,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct CouplingConfig {
    pub g_ac: String,
    pub g_bc: String,
    pub g_ab: String,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct PulseConfig {
    pub t_g: Vec<String>,
    pub gamma0: String,
    /// "power_optimal" or a frequency.
    pub omega0: String,
    pub shape: PulseShape,
    pub chirp: bool,
    pub ramp: bool,
    pub zz_correction: bool,
}

impl Default for PulseConfig {
    fn default() -> Self {
        Self {
            t_g: vec!["45 ns".into()],
            gamma0: "1 pi".into(),
            omega0: "power_optimal".into(),
            shape: PulseShape::Satd,
            chirp: true,
            ramp: false,
            zz_correction: true,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct DissipationConfig {
    pub enabled: bool,
    pub q_diel: f64,
    pub temperature: String,
    pub jumps: usize,
}

impl Default for DissipationConfig {
    fn default() -> Self {
        Self { enabled: false, q_diel: 1e6, temperature: "0 K".into(), jumps: crate::dynamics::DEFAULT_JUMPS }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct NumericsConfig {
    pub tol: f64,
    pub lindblad_tol: f64,
    pub qubit_a_levels: usize,
    pub qubit_b_levels: usize,
    pub coupler_levels: usize,
    /// Omitted: 38 (method I) or 20 (method II).
    #[serde(skip_serializing_if = "Option::is_none")]
    pub keep: Option<usize>,
}

impl Default for NumericsConfig {
    fn default() -> Self {
        Self {
            tol: crate::dynamics::COHERENT_TOL,
            lindblad_tol: crate::dynamics::LINDBLAD_TOL,
            qubit_a_levels: 6,
            qubit_b_levels: 6,
            coupler_levels: 4,
            keep: None,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum RobustnessModel {
    /// Ideal Λ system.
    Rwa,
    /// Full circuit model of the configured method.
    Full,
    /// Dynamical ZZ gate with Ω0 t_g = π.
    Dynamical,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct RobustnessConfig {
    pub model: RobustnessModel,
    pub eta0: f64,
    pub grid: usize,
    /// Ω0 t_g / 2π values scanned for the Λ model.
    pub factors: Vec<f64>,
}

impl Default for RobustnessConfig {
    fn default() -> Self {
        Self { model: RobustnessModel::Rwa, eta0: 0.2, grid: 41, factors: vec![1.135, 2.0, 5.0] }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum SweepKind {
    /// Full-model gate over the t_g list.
    Gate,
    /// Reduced Λ + Λ_bad model over 2χt_g/2π.
    BadLambda,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum FitLawConfig {
    Power,
    Linear,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct SweepConfig {
    pub kind: SweepKind,
    /// χ of the reduced model.
    pub chi: String,
    /// Range of 2χ t_g / 2π.
    pub lo: f64,
    pub hi: f64,
    pub points: usize,
    pub law: FitLawConfig,
    /// Use the ZZ-corrected errors of the reduced model.
    pub corrected: bool,
}

impl Default for SweepConfig {
    fn default() -> Self {
        Self {
            kind: SweepKind::Gate,
            chi: "0.2 GHz".into(),
            lo: 10.0,
            hi: 60.0,
            points: 26,
            law: FitLawConfig::Power,
            corrected: true,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct OutputConfig {
    pub samples: usize,
}

impl Default for OutputConfig {
    fn default() -> Self {
        Self { samples: crate::pulses::DEFAULT_SAMPLES }
    }
}

/// 1-based line of the first `key = ...` assignment in the source.
fn line_of(src: &str, key: &str) -> Option<usize> {
    src.lines().position(|l| {
        let l = l.trim_start();
        l.strip_prefix(key).is_some_and(|r| r.trim_start().starts_with('='))
    })
    .map(|i| i + 1)
}

impl ExperimentConfig {
    pub fn from_toml(src: &str) -> Result<Self> {
        let cfg: Self = toml::from_str(src).map_err(|e| Error::Config(e.to_string().trim_end().to_string()))?;
        cfg.validate(src)?;
        Ok(cfg)
    }

    pub fn load(path: &Path) -> Result<Self> {
        let src = std::fs::read_to_string(path)
            .map_err(|e| Error::Config(format!("cannot read {}: {e}", path.display())))?;
        Self::from_toml(&src).map_err(|e| match e {
            Error::Config(m) => Error::Config(format!("{}: {m}", path.display())),
            other => other,
        })
    }

    pub fn to_toml(&self) -> Result<String> {
        toml::to_string(self).map_err(|e| Error::Config(e.to_string()))
    }

    /// Built-in parameter set of a method in config form.
    pub fn preset(method: Method) -> Self {
        let p = CircuitParams::preset(method);
        let f = |s: &FluxoniumSpec| FluxoniumConfig {
            e_c: format_quantity(s.e_c, Dimension::Frequency),
            e_j: format_quantity(s.e_j, Dimension::Frequency),
            e_l: format_quantity(s.e_l, Dimension::Frequency),
            phi_ext: s.phi_ext,
            basis_size: s.basis_size,
        };
        let fq = |v: f64| format_quantity(v, Dimension::Frequency);
        let pulse = match method {
            Method::I => PulseConfig::default(),
            Method::II => PulseConfig { t_g: vec!["130 ns".into()], ..PulseConfig::default() },
        };
        Self {
            method,
            circuit: Some(CircuitConfig {
                qubit_a: f(&p.qubit_a),
                qubit_b: f(&p.qubit_b),
                coupler: CouplerConfig { omega_c: fq(p.coupler.omega_c), u: fq(p.coupler.u) },
                couplings: CouplingConfig { g_ac: fq(p.couplings.g_ac), g_bc: fq(p.couplings.g_bc), g_ab: fq(p.couplings.g_ab) },
            }),
            pulse,
            dissipation: DissipationConfig::default(),
            numerics: NumericsConfig::default(),
            robustness: RobustnessConfig::default(),
            sweep: SweepConfig::default(),
            output: OutputConfig::default(),
        }
    }

    fn validate(&self, src: &str) -> Result<()> {
        let at = |key: &str, msg: String| match line_of(src, key) {
            Some(l) => Error::Config(format!("line {l}: {key}: {msg}")),
            None => Error::Config(format!("{key}: {msg}")),
        };
        let q = |key: &str, s: &str, d: Dimension| parse_quantity(s, d).map_err(|m| at(key, m));
        if let Some(c) = &self.circuit {
            for f in [&c.qubit_a, &c.qubit_b] {
                for (k, v) in [("e_c", &f.e_c), ("e_j", &f.e_j), ("e_l", &f.e_l)] {
                    if q(k, v, Dimension::Frequency)? <= 0.0 {
                        return Err(at(k, "must be positive".into()));
                    }
                }
            }
            q("omega_c", &c.coupler.omega_c, Dimension::Frequency)?;
            q("u", &c.coupler.u, Dimension::Frequency)?;
            q("g_ac", &c.couplings.g_ac, Dimension::Frequency)?;
            q("g_bc", &c.couplings.g_bc, Dimension::Frequency)?;
            q("g_ab", &c.couplings.g_ab, Dimension::Frequency)?;
        }
        if self.pulse.t_g.is_empty() {
            return Err(at("t_g", "gate-time list is empty".into()));
        }
        for t in &self.pulse.t_g {
            if q("t_g", t, Dimension::Time)? <= 0.0 {
                return Err(at("t_g", format!("gate time {t:?} must be positive")));
            }
        }
        q("gamma0", &self.pulse.gamma0, Dimension::Angle)?;
        if self.pulse.omega0 != "power_optimal" {
            q("omega0", &self.pulse.omega0, Dimension::Frequency)?;
        }
        q("temperature", &self.dissipation.temperature, Dimension::Temperature)?;
        q("chi", &self.sweep.chi, Dimension::Frequency)?;
        if !(self.dissipation.q_diel > 0.0) {
            return Err(at("q_diel", "must be positive".into()));
        }
        for (k, v) in [("tol", self.numerics.tol), ("lindblad_tol", self.numerics.lindblad_tol)] {
            if !(1e-13..=1e-6).contains(&v) {
                return Err(at(k, format!("{v:e} outside [1e-13, 1e-6]")));
            }
        }
        RobustnessSpec::new(self.robustness.eta0, self.robustness.grid).map_err(|e| at("eta0", e.to_string()))?;
        Ok(())
    }

    pub fn circuit_params(&self) -> Result<CircuitParams> {
        let Some(c) = &self.circuit else {
            return Ok(CircuitParams::preset(self.method));
        };
        let fr = |s: &str| parse_quantity(s, Dimension::Frequency).map_err(Error::Config);
        let flux = |f: &FluxoniumConfig| -> Result<FluxoniumSpec> {
            Ok(FluxoniumSpec { e_c: fr(&f.e_c)?, e_j: fr(&f.e_j)?, e_l: fr(&f.e_l)?, phi_ext: f.phi_ext, basis_size: f.basis_size })
        };
        Ok(CircuitParams {
            qubit_a: flux(&c.qubit_a)?,
            qubit_b: flux(&c.qubit_b)?,
            coupler: CouplerSpec { omega_c: fr(&c.coupler.omega_c)?, u: fr(&c.coupler.u)?, levels: self.numerics.coupler_levels },
            couplings: CouplingSpec { g_ac: fr(&c.couplings.g_ac)?, g_bc: fr(&c.couplings.g_bc)?, g_ab: fr(&c.couplings.g_ab)? },
        })
    }

    pub fn truncation(&self) -> Truncation {
        Truncation {
            qubit_a: self.numerics.qubit_a_levels,
            qubit_b: self.numerics.qubit_b_levels,
            coupler: self.numerics.coupler_levels,
            keep: self.numerics.keep.unwrap_or(self.method.default_levels()),
        }
    }

    pub fn gate_times(&self) -> Result<Vec<f64>> {
        self.pulse.t_g.iter().map(|t| parse_quantity(t, Dimension::Time).map_err(Error::Config)).collect()
    }

    pub fn amplitude(&self) -> Result<Amplitude> {
        if self.pulse.omega0 == "power_optimal" {
            Ok(Amplitude::PowerOptimal)
        } else {
            Ok(Amplitude::Explicit(parse_quantity(&self.pulse.omega0, Dimension::Frequency).map_err(Error::Config)?))
        }
    }

    pub fn dissipation_spec(&self) -> Result<DissipationSpec> {
        Ok(DissipationSpec {
            q_diel: self.dissipation.q_diel,
            temperature: parse_quantity(&self.dissipation.temperature, Dimension::Temperature).map_err(Error::Config)?,
            jumps: self.dissipation.jumps,
        })
    }

    pub fn gate_spec(&self, t_g: f64) -> Result<GateSpec> {
        Ok(GateSpec {
            method: self.method,
            t_g,
            gamma0: parse_quantity(&self.pulse.gamma0, Dimension::Angle).map_err(Error::Config)?,
            amplitude: self.amplitude()?,
            shape: if self.pulse.ramp { PulseShape::Ramped } else { self.pulse.shape },
            chirp: self.pulse.chirp,
            zz_correction: self.pulse.zz_correction,
            dissipation: if self.dissipation.enabled { Some(self.dissipation_spec()?) } else { None },
            scale: 1.0,
            pulse_gamma0: None,
            tol: self.numerics.tol,
            lindblad_tol: self.numerics.lindblad_tol,
        })
    }

    pub fn robustness_spec(&self) -> Result<RobustnessSpec> {
        RobustnessSpec::new(self.robustness.eta0, self.robustness.grid)
    }

    pub fn chi(&self) -> Result<f64> {
        parse_quantity(&self.sweep.chi, Dimension::Frequency).map_err(Error::Config)
    }

    pub fn fit_law(&self) -> FitLaw {
        match self.sweep.law {
            FitLawConfig::Power => FitLaw::Power,
            FitLawConfig::Linear => FitLaw::Linear,
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn minimal_config_uses_defaults() {
        let c = ExperimentConfig::from_toml("method = \"I\"\n").unwrap();
        assert_eq!(c.circuit_params().unwrap(), CircuitParams::preset(Method::I));
        assert_eq!(c.gate_times().unwrap(), vec![45.0]);
        assert_eq!(c.truncation().keep, 38);
        assert!(c.gate_spec(45.0).unwrap().dissipation.is_none());
    }

    #[test]
    fn presets_round_trip() {
        for m in [Method::I, Method::II] {
            let c = ExperimentConfig::preset(m);
            let s = c.to_toml().unwrap();
            let back = ExperimentConfig::from_toml(&s).unwrap();
            assert_eq!(back, c);
            assert_eq!(back.to_toml().unwrap(), s);
            let p = back.circuit_params().unwrap();
            let want = CircuitParams::preset(m);
            assert!((p.qubit_a.e_j - want.qubit_a.e_j).abs() < 1e-12);
            assert!((p.couplings.g_bc - want.couplings.g_bc).abs() < 1e-12);
        }
    }

    #[test]
    fn unit_errors_carry_line_numbers() {
        let src = "method = \"I\"\n\n[pulse]\nt_g = [\"45 ns\", \"30 GHz\"]\n";
        let e = ExperimentConfig::from_toml(src).unwrap_err();
        assert_eq!(e.exit_code(), 2);
        assert!(e.to_string().contains("line 4"), "{e}");
    }

    #[test]
    fn syntax_errors_carry_line_numbers() {
        let src = "method = \"I\"\n[pulse\n";
        let e = ExperimentConfig::from_toml(src).unwrap_err();
        assert!(e.to_string().contains("line 2"), "{e}");
    }

    #[test]
    fn rejects_unknown_keys_and_missing_units() {
        assert!(ExperimentConfig::from_toml("method = \"I\"\nbogus = 1\n").is_err());
        assert!(ExperimentConfig::from_toml("method = \"I\"\n[pulse]\ngamma0 = \"3.14\"\n").is_err());
        assert!(ExperimentConfig::from_toml("method = \"III\"\n").is_err());
        assert!(ExperimentConfig::from_toml("method = \"I\"\n[pulse]\nt_g = []\n").is_err());
    }
}
