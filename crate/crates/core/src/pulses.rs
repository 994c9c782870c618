//! Control waveforms: adiabatic and SATD envelopes, the power-optimal
//! amplitude, carrier chirps and ramped (smoothed) pulses.

use std::f64::consts::{FRAC_PI_2, PI};
use std::io::Write;

use num_complex::Complex64 as C64;

use crate::error::{Error, Result};
use crate::linalg::CMat;
use crate::quad;
use crate::units::{to_mhz, TWO_PI};

/// Default resonance guard for chirp sums, rad/ns (1 MHz).
pub const DEFAULT_RESONANCE_GUARD: f64 = TWO_PI * 1e-3;

/// Power-optimal amplitude in units of 2π/t_g.
pub const POWER_OPTIMAL_FACTOR: f64 = 1.135;

/// Default number of samples per gate for waveform export.
pub const DEFAULT_SAMPLES: usize = 1 << 14;

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct PulseParams {
    pub t_g: f64,
    pub omega0: f64,
    pub gamma0: f64,
    pub t_ramp: f64,
}

impl PulseParams {
    pub fn new(t_g: f64, omega0: f64, gamma0: f64) -> Result<Self> {
        Self::with_ramp(t_g, omega0, gamma0, 0.01 * t_g)
    }

    pub fn with_ramp(t_g: f64, omega0: f64, gamma0: f64, t_ramp: f64) -> Result<Self> {
        if !(t_g > 0.0 && t_g.is_finite()) {
            return Err(Error::Domain(format!("gate time must be positive, got {t_g}")));
        }
        if !(omega0 > 0.0 && omega0.is_finite()) {
            return Err(Error::Domain(format!("Omega0 must be positive, got {omega0}")));
        }
        if !(0.0..t_g / 4.0).contains(&t_ramp) {
            return Err(Error::Domain(format!(
                "ramp time {t_ramp} ns outside [0, t_g/4)"
            )));
        }
        Ok(Self { t_g, omega0, gamma0, t_ramp })
    }

    /// SATD pulse at the power-optimal amplitude.
    pub fn power_optimal(t_g: f64, gamma0: f64) -> Result<Self> {
        Self::new(t_g, power_optimal_omega0(t_g)?, gamma0)
    }
}

/// P(x) and its first two derivatives with respect to x.
pub fn poly_p(x: f64) -> (f64, f64, f64) {
    let y = 2.0 * x;
    let (y2, y3) = (y * y, y * y * y);
    let p = 6.0 * y3 * y2 - 15.0 * y2 * y2 + 10.0 * y3;
    let dp = 2.0 * (30.0 * y2 * y2 - 60.0 * y3 + 30.0 * y2);
    let ddp = 4.0 * (120.0 * y3 - 180.0 * y2 + 60.0 * y);
    (p, dp, ddp)
}

/// θ, θ̇, θ̈ of the double-STIRAP schedule. `t` is clamped to [0, t_g].
pub fn theta_derivs(t: f64, t_g: f64) -> (f64, f64, f64) {
    let x = (t / t_g).clamp(0.0, 1.0);
    if x <= 0.5 {
        let (p, dp, ddp) = poly_p(x);
        (FRAC_PI_2 * p, FRAC_PI_2 * dp / t_g, FRAC_PI_2 * ddp / (t_g * t_g))
    } else {
        let (p, dp, ddp) = poly_p(x - 0.5);
        (
            FRAC_PI_2 * (1.0 - p),
            -FRAC_PI_2 * dp / t_g,
            -FRAC_PI_2 * ddp / (t_g * t_g),
        )
    }
}

fn check_domain(t: f64, t_g: f64) -> Result<()> {
    if !(0.0..=t_g).contains(&t) {
        return Err(Error::Domain(format!("t = {t} ns outside [0, {t_g}] ns")));
    }
    Ok(())
}

pub fn theta_schedule(t: f64, t_g: f64) -> Result<f64> {
    check_domain(t, t_g)?;
    Ok(theta_derivs(t, t_g).0)
}

/// γ(t); exactly at t_g/2 the pre-jump value is used.
fn gamma(p: &PulseParams, t: f64) -> f64 {
    if t > 0.5 * p.t_g {
        p.gamma0
    } else {
        0.0
    }
}

fn adiabatic_unchecked(p: &PulseParams, t: f64) -> (C64, C64) {
    let (th, _, _) = theta_derivs(t, p.t_g);
    (
        C64::new(p.omega0 * th.sin(), 0.0),
        C64::from_polar(p.omega0 * th.cos(), gamma(p, t)),
    )
}

fn satd_unchecked(p: &PulseParams, t: f64) -> (C64, C64) {
    let (th, thd, thdd) = theta_derivs(t, p.t_g);
    let o = p.omega0;
    let k = 4.0 * thdd / (o * o + 4.0 * thd * thd);
    let (s, c) = th.sin_cos();
    (
        C64::new(o * (s + c * k), 0.0),
        C64::from_polar(o * (c - s * k), gamma(p, t)),
    )
}

pub fn adiabatic_envelopes(p: &PulseParams, t: f64) -> Result<(C64, C64)> {
    check_domain(t, p.t_g)?;
    Ok(adiabatic_unchecked(p, t))
}

pub fn satd_envelopes(p: &PulseParams, t: f64) -> Result<(C64, C64)> {
    check_domain(t, p.t_g)?;
    Ok(satd_unchecked(p, t))
}

pub fn satd_dressing_angle(p: &PulseParams, t: f64) -> Result<f64> {
    check_domain(t, p.t_g)?;
    let (_, thd, _) = theta_derivs(t, p.t_g);
    Ok((2.0 * thd / p.omega0).atan())
}

pub fn power_optimal_omega0(t_g: f64) -> Result<f64> {
    if !(t_g > 0.0) {
        return Err(Error::Domain(format!("gate time must be positive, got {t_g}")));
    }
    Ok(TWO_PI * POWER_OPTIMAL_FACTOR / t_g)
}

fn ramped_unchecked(p: &PulseParams, t: f64) -> (C64, C64) {
    let tr = p.t_ramp;
    let o = p.omega0;
    if tr > 0.0 && t < tr {
        (C64::new(0.0, 0.0), C64::new(o * poly_p(t / (2.0 * tr)).0, 0.0))
    } else if t <= tr + p.t_g {
        satd_unchecked(p, t - tr)
    } else {
        let x = ((t - tr - p.t_g) / (2.0 * tr)).min(0.5);
        // The phase factor keeps Ω_B continuous with the end of the SATD segment.
        (
            C64::new(0.0, 0.0),
            C64::from_polar(o * (1.0 - poly_p(x).0), p.gamma0),
        )
    }
}

pub fn ramped_schedule(p: &PulseParams, t: f64) -> Result<(C64, C64)> {
    check_domain(t, p.t_g + 2.0 * p.t_ramp)?;
    Ok(ramped_unchecked(p, t))
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, serde::Serialize, serde::Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum PulseShape {
    Adiabatic,
    Satd,
    Ramped,
}

/// Analytic envelope family with an overall amplitude scale (1 + η).
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Envelope {
    pub params: PulseParams,
    pub shape: PulseShape,
    pub scale: f64,
}

impl Envelope {
    pub fn new(params: PulseParams, shape: PulseShape) -> Self {
        Self { params, shape, scale: 1.0 }
    }

    pub fn scaled(mut self, scale: f64) -> Self {
        self.scale = scale;
        self
    }

    pub fn duration(&self) -> f64 {
        match self.shape {
            PulseShape::Ramped => self.params.t_g + 2.0 * self.params.t_ramp,
            _ => self.params.t_g,
        }
    }

    /// Interior points where the envelopes are not smooth.
    pub fn breakpoints(&self) -> Vec<f64> {
        let p = &self.params;
        match self.shape {
            PulseShape::Ramped if p.t_ramp > 0.0 => {
                vec![p.t_ramp, p.t_ramp + 0.5 * p.t_g, p.t_ramp + p.t_g]
            }
            PulseShape::Ramped => vec![0.5 * p.t_g],
            _ => vec![0.5 * p.t_g],
        }
    }

    /// Unscaled envelopes; zero outside the support.
    pub fn eval_unscaled(&self, t: f64) -> (C64, C64) {
        if !(0.0..=self.duration()).contains(&t) {
            return (C64::new(0.0, 0.0), C64::new(0.0, 0.0));
        }
        match self.shape {
            PulseShape::Adiabatic => adiabatic_unchecked(&self.params, t),
            PulseShape::Satd => satd_unchecked(&self.params, t),
            PulseShape::Ramped => ramped_unchecked(&self.params, t),
        }
    }

    pub fn eval(&self, t: f64) -> (C64, C64) {
        let (a, b) = self.eval_unscaled(t);
        (a * self.scale, b * self.scale)
    }

    fn segments(&self) -> Vec<(f64, f64)> {
        let mut pts = vec![0.0];
        pts.extend(self.breakpoints());
        pts.push(self.duration());
        pts.windows(2).map(|w| (w[0], w[1])).collect()
    }

    /// ∫ f(t) dt over the support, split at breakpoints.
    pub fn integrate<F: Fn(f64) -> f64>(&self, f: F, rtol: f64) -> f64 {
        self.segments()
            .into_iter()
            .map(|(a, b)| quad::integrate_adaptive(&f, a, b, rtol))
            .sum()
    }
}

/// √((1/t_g) ∫ (|g_A|² + |g_B|²) dt) with g_j = Ω̃_j / M_j.
pub fn rms_amplitude(env: &Envelope, m: [C64; 2]) -> Result<f64> {
    for (j, mj) in m.iter().enumerate() {
        if mj.norm() == 0.0 {
            let arm = if j == 0 { "|ee,0> <-> |ge,1>" } else { "|gf,0> <-> |ge,1>" };
            return Err(Error::ZeroMatrixElement(arm.to_string()));
        }
    }
    let (wa, wb) = (1.0 / m[0].norm_sqr(), 1.0 / m[1].norm_sqr());
    let total = env.integrate(
        |t| {
            let (a, b) = env.eval(t);
            a.norm_sqr() * wa + b.norm_sqr() * wb
        },
        1e-10,
    );
    Ok((total / env.params.t_g).sqrt())
}

/// Indices of the six computational levels inside a level list.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct ComputationalLevels {
    pub gg0: usize,
    pub ge0: usize,
    pub eg0: usize,
    pub ee0: usize,
    pub ge1: usize,
    pub gf0: usize,
}

impl ComputationalLevels {
    pub fn as_array(&self) -> [usize; 6] {
        [self.gg0, self.ge0, self.eg0, self.ee0, self.ge1, self.gf0]
    }

    pub fn logical(&self) -> [usize; 4] {
        [self.gg0, self.ge0, self.eg0, self.ee0]
    }
}

pub const COMPUTATIONAL_NAMES: [&str; 6] = ["gg,0", "ge,0", "eg,0", "ee,0", "ge,1", "gf,0"];

/// Second-order level shifts induced by the two modulation tones.
#[derive(Debug, Clone, PartialEq)]
pub struct ChirpModel {
    /// `shift[c][j]`: shift of computational level c per unit |g_j|².
    pub shift: [[f64; 2]; 6],
    /// Λ-arm matrix elements used to convert Ω̃_j into g_j.
    pub arm: [C64; 2],
    pub warnings: Vec<String>,
}

impl ChirpModel {
    /// Sums |⟨k|O_j|l⟩|²/(4Δ) over every retained level l with
    /// Δ = ε_k − ε_l ± ω_mod,j. Exact resonances are the driven transitions
    /// and are skipped; detunings below `guard` are skipped with a warning.
    pub fn new(
        energies: &[f64],
        labels: &[String],
        ops: [&CMat; 2],
        comp: ComputationalLevels,
        carriers: [f64; 2],
        guard: f64,
    ) -> Result<Self> {
        let arm = [ops[0][(comp.ge1, comp.ee0)], ops[1][(comp.ge1, comp.gf0)]];
        for (j, a) in arm.iter().enumerate() {
            if a.norm() < 1e-14 {
                let arm = if j == 0 { "ee,0 -> ge,1" } else { "gf,0 -> ge,1" };
                return Err(Error::ZeroMatrixElement(arm.into()));
            }
        }
        let mut shift = [[0.0; 2]; 6];
        let mut warnings = Vec::new();
        for (c, &k) in comp.as_array().iter().enumerate() {
            for j in 0..2 {
                let mut s = 0.0;
                for l in 0..energies.len() {
                    let m2 = ops[j][(k, l)].norm_sqr();
                    if m2 == 0.0 {
                        continue;
                    }
                    for sigma in [1.0, -1.0] {
                        let delta = energies[k] - energies[l] + sigma * carriers[j];
                        if delta.abs() < 1e-9 {
                            continue;
                        }
                        if delta.abs() < guard {
                            warnings.push(format!(
                                "near-resonant transition {} <-> {} with tone {} (detuning {:.4} MHz) excluded",
                                labels.get(k).map_or("?", |s| s.as_str()),
                                labels.get(l).map_or("?", |s| s.as_str()),
                                if j == 0 { 'A' } else { 'B' },
                                to_mhz(delta)
                            ));
                            continue;
                        }
                        s += m2 / (4.0 * delta);
                    }
                }
                shift[c][j] = s;
            }
        }
        for w in &warnings {
            log::warn!("{w}");
        }
        Ok(Self { shift, arm, warnings })
    }

    /// Level shifts of the six computational levels for physical amplitudes g.
    pub fn level_shifts(&self, g: [C64; 2]) -> [f64; 6] {
        let g2 = [g[0].norm_sqr(), g[1].norm_sqr()];
        let mut out = [0.0; 6];
        for c in 0..6 {
            out[c] = self.shift[c][0] * g2[0] + self.shift[c][1] * g2[1];
        }
        out
    }

    /// `coeff[i][j]`: δω_mod,i per unit |Ω̃_j|².
    pub fn coefficients(&self) -> [[f64; 2]; 2] {
        let mut c = [[0.0; 2]; 2];
        for j in 0..2 {
            let w = 1.0 / self.arm[j].norm_sqr();
            c[0][j] = (self.shift[4][j] - self.shift[3][j]) * w;
            c[1][j] = (self.shift[4][j] - self.shift[5][j]) * w;
        }
        c
    }

    /// (δω_mod,A, δω_mod,B) for effective envelopes Ω̃.
    pub fn chirps(&self, omega: (C64, C64)) -> (f64, f64) {
        let c = self.coefficients();
        let (a2, b2) = (omega.0.norm_sqr(), omega.1.norm_sqr());
        (c[0][0] * a2 + c[0][1] * b2, c[1][0] * a2 + c[1][1] * b2)
    }
}

/// Cumulative ∫|Ω̃_A|² and ∫|Ω̃_B|² on a uniform panel grid.
#[derive(Debug, Clone)]
struct PowerTable {
    h: f64,
    cum: Vec<[f64; 2]>,
}

impl PowerTable {
    fn new(env: &Envelope, panels: usize) -> Self {
        let dur = env.duration();
        let h = dur / panels as f64;
        let mut cum = Vec::with_capacity(panels + 1);
        let mut acc = [0.0, 0.0];
        cum.push(acc);
        for i in 0..panels {
            let (a, b) = (i as f64 * h, (i + 1) as f64 * h);
            acc[0] += quad::gl8(&|t| env.eval_unscaled(t).0.norm_sqr(), a, b);
            acc[1] += quad::gl8(&|t| env.eval_unscaled(t).1.norm_sqr(), a, b);
            cum.push(acc);
        }
        Self { h, cum }
    }

    fn at(&self, env: &Envelope, t: f64) -> [f64; 2] {
        let last = self.cum.len() - 1;
        let t = t.max(0.0);
        let i = ((t / self.h).floor() as usize).min(last);
        let t0 = i as f64 * self.h;
        let mut out = self.cum[i];
        if t > t0 && i < last {
            out[0] += quad::gl8(&|s| env.eval_unscaled(s).0.norm_sqr(), t0, t);
            out[1] += quad::gl8(&|s| env.eval_unscaled(s).1.norm_sqr(), t0, t);
        }
        out
    }
}

/// Complete two-tone drive: envelopes, carriers and optional chirp.
#[derive(Debug, Clone)]
pub struct PulseSchedule {
    pub envelope: Envelope,
    /// Unchirped modulation frequencies ω_mod,j (rad/ns, signed).
    pub carriers: [f64; 2],
    chirp: Option<([[f64; 2]; 2], PowerTable)>,
}

impl PulseSchedule {
    pub fn new(envelope: Envelope, carriers: [f64; 2]) -> Self {
        Self { envelope, carriers, chirp: None }
    }

    /// Chirp designed for the unscaled envelope; an amplitude scale applied
    /// later (pulse-amplitude uncertainty) does not change the chirp.
    pub fn with_chirp(mut self, model: &ChirpModel) -> Self {
        // Panels sized so that the GL-8 table is accurate far below 1e-12 rad.
        let panels = ((self.envelope.duration() * 8.0).ceil() as usize).max(256);
        self.chirp = Some((model.coefficients(), PowerTable::new(&self.envelope, panels)));
        self
    }

    pub fn without_chirp(mut self) -> Self {
        self.chirp = None;
        self
    }

    pub fn is_chirped(&self) -> bool {
        self.chirp.is_some()
    }

    pub fn duration(&self) -> f64 {
        self.envelope.duration()
    }

    pub fn breakpoints(&self) -> Vec<f64> {
        self.envelope.breakpoints()
    }

    pub fn envelopes(&self, t: f64) -> (C64, C64) {
        self.envelope.eval(t)
    }

    pub fn chirp(&self, t: f64) -> (f64, f64) {
        match &self.chirp {
            None => (0.0, 0.0),
            Some((c, _)) => {
                let (a, b) = self.envelope.eval_unscaled(t);
                let (a2, b2) = (a.norm_sqr(), b.norm_sqr());
                (c[0][0] * a2 + c[0][1] * b2, c[1][0] * a2 + c[1][1] * b2)
            }
        }
    }

    /// ∫_0^t ω̃_mod,j dt′ for both tones.
    pub fn carrier_phase(&self, t: f64) -> [f64; 2] {
        let mut ph = [self.carriers[0] * t, self.carriers[1] * t];
        if let Some((c, table)) = &self.chirp {
            let p = table.at(&self.envelope, t);
            ph[0] += c[0][0] * p[0] + c[0][1] * p[1];
            ph[1] += c[1][0] * p[0] + c[1][1] * p[1];
        }
        ph
    }

    /// Uniform samples (t, Ω̃_A, Ω̃_B, δω_A, δω_B) including both endpoints.
    pub fn sample(&self, n: usize) -> Vec<(f64, C64, C64, f64, f64)> {
        let n = n.max(2);
        let dur = self.duration();
        (0..n)
            .map(|i| {
                let t = dur * i as f64 / (n - 1) as f64;
                let (a, b) = self.envelopes(t);
                let (ca, cb) = self.chirp(t);
                (t, a, b, ca, cb)
            })
            .collect()
    }

    pub fn write_csv<W: Write>(&self, w: W, n: usize) -> Result<()> {
        let mut wr = csv::Writer::from_writer(w);
        wr.write_record(["t_ns", "reA", "imA", "reB", "imB", "chirpA_MHz", "chirpB_MHz"])?;
        for (t, a, b, ca, cb) in self.sample(n) {
            wr.write_record(&[
                format!("{t:.9}"),
                format!("{:.12e}", a.re),
                format!("{:.12e}", a.im),
                format!("{:.12e}", b.re),
                format!("{:.12e}", b.im),
                format!("{:.12e}", to_mhz(ca)),
                format!("{:.12e}", to_mhz(cb)),
            ])?;
        }
        wr.flush()?;
        Ok(())
    }
}

/// Golden-section minimization of the unit-weight rms amplitude over
/// Ω0 ∈ [lo, hi]·(2π/t_g); returns the argmin in units of 2π/t_g.
pub fn scan_power_optimum(t_g: f64, lo: f64, hi: f64) -> Result<f64> {
    let rms = |f: f64| -> Result<f64> {
        let p = PulseParams::new(t_g, f * TWO_PI / t_g, PI)?;
        rms_amplitude(&Envelope::new(p, PulseShape::Satd), [C64::new(1.0, 0.0); 2])
    };
    let gr = (5f64.sqrt() - 1.0) / 2.0;
    let (mut a, mut b) = (lo, hi);
    let mut c = b - gr * (b - a);
    let mut d = a + gr * (b - a);
    let (mut fc, mut fd) = (rms(c)?, rms(d)?);
    while b - a > 1e-7 {
        if fc < fd {
            b = d;
            d = c;
            fd = fc;
            c = b - gr * (b - a);
            fc = rms(c)?;
        } else {
            a = c;
            c = d;
            fc = fd;
            d = a + gr * (b - a);
            fd = rms(d)?;
        }
    }
    Ok(0.5 * (a + b))
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;

    fn params(tg: f64, f: f64) -> PulseParams {
        PulseParams::new(tg, f * TWO_PI / tg, PI).unwrap()
    }

    #[test]
    fn theta_examples() {
        let tg = 37.0;
        assert_eq!(theta_schedule(0.0, tg).unwrap(), 0.0);
        assert!((theta_schedule(tg / 2.0, tg).unwrap() - FRAC_PI_2).abs() < 1e-15);
        assert!((theta_schedule(tg / 4.0, tg).unwrap() - FRAC_PI_2 * 0.5).abs() < 1e-15);
        assert!(theta_schedule(tg * 1.01, tg).is_err());
        assert!(theta_schedule(-0.1, tg).is_err());
    }

    #[test]
    fn theta_derivatives_vanish_at_nodes() {
        let tg = 45.0;
        for t in [0.0, tg / 2.0, tg] {
            let (_, d1, d2) = theta_derivs(t, tg);
            assert!(d1.abs() < 1e-15 && d2.abs() < 1e-15, "t={t}: {d1} {d2}");
        }
    }

    #[test]
    fn adiabatic_examples() {
        let p = params(45.0, 1.135);
        let (a, b) = adiabatic_envelopes(&p, 0.0).unwrap();
        assert_eq!(a.norm(), 0.0);
        assert!((b - C64::new(p.omega0, 0.0)).norm() < 1e-15);
        let (a, b) = adiabatic_envelopes(&p, 22.5).unwrap();
        assert!((a.re - p.omega0).abs() < 1e-15 && b.norm() < 1e-15);
        let (_, b) = adiabatic_envelopes(&p, 22.5 + 1e-3).unwrap();
        assert!((b.arg() - PI).abs() < 1e-12 || (b.arg() + PI).abs() < 1e-12);
    }

    #[test]
    fn satd_examples() {
        let p = params(45.0, 1.135);
        for t in [0.0, 22.5, 45.0] {
            let s = satd_envelopes(&p, t).unwrap();
            let a = adiabatic_envelopes(&p, t).unwrap();
            assert!((s.0 - a.0).norm() < 1e-15 && (s.1 - a.1).norm() < 1e-15);
        }
    }

    #[test]
    fn satd_matches_finite_difference_second_derivative() {
        let tg = 45.0;
        let p = params(tg, 1.0);
        let t = tg / 8.0;
        let h = 1e-3;
        let th = |t: f64| theta_schedule(t, tg).unwrap();
        let thd = (th(t + h) - th(t - h)) / (2.0 * h);
        let thdd = (th(t + h) - 2.0 * th(t) + th(t - h)) / (h * h);
        let o = p.omega0;
        let k = 4.0 * thdd / (o * o + 4.0 * thd * thd);
        let fa = o * (th(t).sin() + th(t).cos() * k);
        let fb = o * (th(t).cos() - th(t).sin() * k);
        let (a, b) = satd_envelopes(&p, t).unwrap();
        assert!(((a.re - fa) / fa).abs() < 1e-8, "{} vs {}", a.re, fa);
        assert!(((b.re - fb) / fb).abs() < 1e-8, "{} vs {}", b.re, fb);
    }

    #[test]
    fn dressing_angle() {
        let p = params(45.0, 1.135);
        for t in [0.0, 22.5, 45.0] {
            assert!(satd_dressing_angle(&p, t).unwrap().abs() < 1e-15);
        }
        let big = PulseParams::new(45.0, 1e12, 0.0).unwrap();
        for i in 0..=20 {
            assert!(satd_dressing_angle(&big, 45.0 * i as f64 / 20.0).unwrap().abs() < 1e-10);
        }
    }

    #[test]
    fn power_optimal_values() {
        assert!((power_optimal_omega0(45.0).unwrap() / TWO_PI * 1e3 - 25.22).abs() < 0.01);
        assert!(
            (power_optimal_omega0(90.0).unwrap() - 0.5 * power_optimal_omega0(45.0).unwrap()).abs()
                < 1e-15
        );
        assert!(power_optimal_omega0(0.0).is_err());
    }

    #[test]
    fn power_optimum_matches_scan() {
        let f = scan_power_optimum(45.0, 0.5, 3.0).unwrap();
        assert!((f / POWER_OPTIMAL_FACTOR - 1.0).abs() < 0.01, "scan minimum {f}");
    }

    #[test]
    fn rms_examples() {
        let p = params(45.0, 1.7);
        let env = Envelope::new(p, PulseShape::Adiabatic);
        let r = rms_amplitude(&env, [C64::new(1.0, 0.0); 2]).unwrap();
        assert!((r / p.omega0 - 1.0).abs() < 1e-9);
        assert!(rms_amplitude(&env, [C64::new(0.0, 0.0), C64::new(1.0, 0.0)]).is_err());
    }

    #[test]
    fn ramped_examples() {
        let p = params(45.0, 1.135);
        let tr = p.t_ramp;
        let (a, b) = ramped_schedule(&p, 0.0).unwrap();
        assert!(a.norm() == 0.0 && b.norm() == 0.0);
        let (a, b) = ramped_schedule(&p, tr).unwrap();
        assert!(a.norm() < 1e-15 && (b.re - p.omega0).abs() < 1e-12);
        let (a, b) = ramped_schedule(&p, tr + 22.5).unwrap();
        assert!((a.re - p.omega0).abs() < 1e-12 && b.norm() < 1e-12);
        let (a, b) = ramped_schedule(&p, p.t_g + 2.0 * tr).unwrap();
        assert!(a.norm() < 1e-15 && b.norm() < 1e-12);
    }

    #[test]
    fn ramped_is_continuous() {
        let p = params(45.0, 1.135);
        let e = 1e-9;
        for tb in [p.t_ramp, p.t_ramp + p.t_g] {
            let (a0, b0) = ramped_schedule(&p, tb - e).unwrap();
            let (a1, b1) = ramped_schedule(&p, tb + e).unwrap();
            assert!((a0 - a1).norm() < 1e-6 && (b0 - b1).norm() < 1e-6, "jump at {tb}");
        }
    }

    #[test]
    fn phase_jump_only_at_midpoint() {
        let p = params(45.0, 2.0);
        let env = Envelope::new(p, PulseShape::Satd);
        assert_eq!(env.eval(22.5).1.im, 0.0);
        for i in 1..200 {
            let t = 45.0 * i as f64 / 200.0;
            let b = env.eval(t).1;
            let want = if t > 22.5 { PI } else { 0.0 };
            if b.norm() > 1e-9 {
                let d = (b.arg() - want).rem_euclid(PI);
                assert!(d < 1e-12 || (PI - d) < 1e-12);
            }
        }
    }

    fn toy_chirp_model() -> ChirpModel {
        // Levels: gg0, ge0, eg0, ee0, ge1, gf0, plus one leakage level.
        let e = [0.0, 2.0, 3.5, 5.5, 40.0, 20.0, 47.0];
        let labels: Vec<String> = (0..7).map(|i| format!("L{i}")).collect();
        let mut oa = CMat::zeros(7, 7);
        let mut ob = CMat::zeros(7, 7);
        let set = |m: &mut CMat, i: usize, j: usize, v: f64| {
            m[(i, j)] = C64::new(v, 0.0);
            m[(j, i)] = C64::new(v, 0.0);
        };
        set(&mut oa, 4, 3, 0.12);
        set(&mut oa, 6, 3, 0.05);
        set(&mut oa, 2, 6, 0.09);
        set(&mut ob, 4, 5, 0.55);
        set(&mut ob, 6, 5, 0.2);
        let comp = ComputationalLevels { gg0: 0, ge0: 1, eg0: 2, ee0: 3, ge1: 4, gf0: 5 };
        ChirpModel::new(&e, &labels, [&oa, &ob], comp, [34.5, 20.0], DEFAULT_RESONANCE_GUARD).unwrap()
    }

    #[test]
    fn chirp_zero_envelopes() {
        let m = toy_chirp_model();
        assert_eq!(m.chirps((C64::new(0.0, 0.0), C64::new(0.0, 0.0))), (0.0, 0.0));
    }

    #[test]
    fn chirp_resonant_pair_counter_rotating_only() {
        // Only the driven Λ elements: what remains is the counter-rotating term.
        let e = [0.0, 2.0, 3.5, 5.5, 40.0, 20.0];
        let labels: Vec<String> = (0..6).map(|i| format!("L{i}")).collect();
        let mut oa = CMat::zeros(6, 6);
        oa[(4, 3)] = C64::new(0.12, 0.0);
        oa[(3, 4)] = C64::new(0.12, 0.0);
        let mut ob = CMat::zeros(6, 6);
        ob[(4, 5)] = C64::new(0.5, 0.0);
        ob[(5, 4)] = C64::new(0.5, 0.0);
        let comp = ComputationalLevels { gg0: 0, ge0: 1, eg0: 2, ee0: 3, ge1: 4, gf0: 5 };
        let wa = 34.5;
        let m = ChirpModel::new(&e, &labels, [&oa, &ob], comp, [wa, 20.0], 1e-6).unwrap();
        let c = m.coefficients();
        // |g M|²/(4·2ω) on ge1 minus |g M|²/(4·(−2ω)) on ee0, per |Ω̃|² = |gM|².
        assert!((c[0][0] - 1.0 / (4.0 * wa)).abs() < 1e-15);
        assert!((c[1][1] - 1.0 / (4.0 * 20.0)).abs() < 1e-15);
        // Each tone also shifts ge1 through its own counter-rotating term.
        assert!((c[0][1] - 1.0 / (8.0 * 20.0)).abs() < 1e-15);
        assert!((c[1][0] - 1.0 / (8.0 * wa)).abs() < 1e-15);
    }

    #[test]
    fn chirp_guard_warns() {
        let e = [0.0, 2.0, 3.5, 5.5, 40.0, 20.0, 5.5 + 34.5 + 1e-4];
        let labels: Vec<String> = (0..7).map(|i| format!("L{i}")).collect();
        let mut oa = CMat::zeros(7, 7);
        for (i, j) in [(4, 3), (6, 3)] {
            oa[(i, j)] = C64::new(0.1, 0.0);
            oa[(j, i)] = C64::new(0.1, 0.0);
        }
        let mut ob = CMat::zeros(7, 7);
        ob[(4, 5)] = C64::new(0.5, 0.0);
        ob[(5, 4)] = C64::new(0.5, 0.0);
        let comp = ComputationalLevels { gg0: 0, ge0: 1, eg0: 2, ee0: 3, ge1: 4, gf0: 5 };
        let m = ChirpModel::new(&e, &labels, [&oa, &ob], comp, [34.5, 20.0], DEFAULT_RESONANCE_GUARD).unwrap();
        assert_eq!(m.warnings.len(), 1);
        assert!(m.warnings[0].contains("L3") && m.warnings[0].contains("L6"));
    }

    #[test]
    fn carrier_phase_integrates_chirp() {
        let m = toy_chirp_model();
        let env = Envelope::new(params(45.0, 1.135), PulseShape::Satd);
        let s = PulseSchedule::new(env, [34.5, 20.0]).with_chirp(&m);
        for t in [0.0f64, 3.3, 22.5, 30.01, 45.0] {
            let want_a = 34.5 * t + quad::integrate_adaptive(|u| s.chirp(u).0, 0.0, t.max(1e-300), 1e-13);
            let got = s.carrier_phase(t)[0];
            assert!((got - want_a).abs() < 1e-10, "t={t}: {got} vs {want_a}");
        }
    }

    proptest! {
        #[test]
        fn adiabatic_root_sum_square(t in 0.0f64..60.0, f in 0.3f64..5.0) {
            let p = params(60.0, f);
            let (a, b) = adiabatic_envelopes(&p, t).unwrap();
            prop_assert!(((a.norm_sqr() + b.norm_sqr()).sqrt() - p.omega0).abs() < 1e-12 * p.omega0);
        }

        #[test]
        fn chirp_scales_quadratically(t in 0.0f64..45.0, k in 0.1f64..4.0) {
            let m = toy_chirp_model();
            let p = params(45.0, 1.135);
            let (a, b) = satd_envelopes(&p, t).unwrap();
            let c1 = m.chirps((a, b));
            let c2 = m.chirps((a * k, b * k));
            prop_assert!((c2.0 - k * k * c1.0).abs() <= 1e-12 * c2.0.abs().max(1e-300));
            prop_assert!((c2.1 - k * k * c1.1).abs() <= 1e-12 * c2.1.abs().max(1e-300));
        }

        #[test]
        fn satd_power_continuous(t in 0.01f64..44.99) {
            let p = params(45.0, 1.135);
            let e = 1e-7;
            let pw = |t: f64| { let (a, b) = satd_envelopes(&p, t).unwrap(); a.norm_sqr() + b.norm_sqr() };
            prop_assert!((pw(t + e) - pw(t - e)).abs() < 1e-4 * p.omega0 * p.omega0);
        }
    }
}
