//! Explicit Dormand–Prince 8(5,3) integrator for complex-valued systems.
//!
//! States are flat `[Complex64]` slices; real and imaginary parts are
//! error-controlled as independent components. Output is produced by landing
//! steps exactly on the requested times, which also lets callers split the
//! integration at points where the right-hand side is not smooth.

#![allow(clippy::excessive_precision)]

use num_complex::Complex64 as C64;
use thiserror::Error;

#[derive(Debug, Error, Clone, PartialEq)]
pub enum OdeError {
    #[error("step size underflow at t = {t} ns (h = {h:e})")]
    StepSizeUnderflow { t: f64, h: f64 },
    #[error("maximum number of steps ({max_steps}) exceeded at t = {t} ns")]
    MaxSteps { t: f64, max_steps: usize },
    #[error("non-finite state encountered at t = {t} ns")]
    NonFinite { t: f64 },
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct OdeOptions {
    pub rtol: f64,
    pub atol: f64,
    /// Largest allowed step; `f64::INFINITY` means unbounded.
    pub h_max: f64,
    pub max_steps: usize,
}

impl OdeOptions {
    pub fn with_tol(tol: f64) -> Self {
        Self {
            rtol: tol,
            atol: tol,
            h_max: f64::INFINITY,
            max_steps: 50_000_000,
        }
    }
}

impl Default for OdeOptions {
    fn default() -> Self {
        Self::with_tol(1e-10)
    }
}

#[derive(Debug, Clone, Copy, Default, PartialEq, Eq)]
pub struct OdeStats {
    pub evals: usize,
    pub accepted: usize,
    pub rejected: usize,
}

/// Stepper holding the current time, state and step-size controller memory.
pub struct Dop853 {
    opts: OdeOptions,
    t: f64,
    y: Vec<C64>,
    h: f64,
    facold: f64,
    fsal_valid: bool,
    stats: OdeStats,
    k: [Vec<C64>; 10],
    ytmp: Vec<C64>,
    ynew: Vec<C64>,
}

const SAFE: f64 = 0.9;
const FAC1: f64 = 0.333;
const FAC2: f64 = 6.0;
const EXPO1: f64 = 1.0 / 8.0;

impl Dop853 {
    pub fn new(t0: f64, y0: &[C64], opts: OdeOptions) -> Self {
        let n = y0.len();
        let z = || vec![C64::new(0.0, 0.0); n];
        Self {
            opts,
            t: t0,
            y: y0.to_vec(),
            h: 0.0,
            facold: 1e-4,
            fsal_valid: false,
            stats: OdeStats::default(),
            k: [z(), z(), z(), z(), z(), z(), z(), z(), z(), z()],
            ytmp: z(),
            ynew: z(),
        }
    }

    pub fn t(&self) -> f64 {
        self.t
    }

    pub fn state(&self) -> &[C64] {
        &self.y
    }

    pub fn state_mut(&mut self) -> &mut [C64] {
        self.fsal_valid = false;
        &mut self.y
    }

    pub fn stats(&self) -> OdeStats {
        self.stats
    }

    /// Forget the cached derivative; call when crossing a point where the
    /// right-hand side jumps.
    pub fn invalidate_derivative(&mut self) {
        self.fsal_valid = false;
    }

    fn sk(&self, a: f64, b: f64) -> f64 {
        self.opts.atol + self.opts.rtol * a.abs().max(b.abs())
    }

    fn initial_step<F>(&mut self, f: &mut F, t_end: f64) -> f64
    where
        F: FnMut(f64, &[C64], &mut [C64]),
    {
        // Hairer's starting-step heuristic.
        let n = (2 * self.y.len()).max(1) as f64;
        let (mut dnf, mut dny) = (0.0, 0.0);
        for (y, k) in self.y.iter().zip(&self.k[0]) {
            let s_re = self.sk(y.re, y.re);
            let s_im = self.sk(y.im, y.im);
            dnf += (k.re / s_re).powi(2) + (k.im / s_im).powi(2);
            dny += (y.re / s_re).powi(2) + (y.im / s_im).powi(2);
        }
        let span = (t_end - self.t).abs();
        let mut h = if dnf <= 1e-10 || dny <= 1e-10 {
            1e-6
        } else {
            (dny / dnf).sqrt() * 0.01
        };
        h = h.min(self.opts.h_max).min(span);
        for i in 0..self.y.len() {
            self.ytmp[i] = self.y[i] + self.k[0][i] * h;
        }
        f(self.t + h, &self.ytmp, &mut self.k[1]);
        self.stats.evals += 1;
        let mut der2 = 0.0;
        for i in 0..self.y.len() {
            let d = (self.k[1][i] - self.k[0][i]) / h;
            let y = self.y[i];
            der2 += (d.re / self.sk(y.re, y.re)).powi(2) + (d.im / self.sk(y.im, y.im)).powi(2);
        }
        let der2 = (der2 / n).sqrt();
        let der12 = der2.max((dnf / n).sqrt());
        let h1 = if der12 <= 1e-15 {
            (h * 1e-3).max(1e-6)
        } else {
            (0.01 / der12).powf(EXPO1)
        };
        (100.0 * h).min(h1).min(self.opts.h_max).min(span)
    }

    /// Advance exactly to `t_end` (must not precede the current time).
    pub fn advance_to<F>(&mut self, f: &mut F, t_end: f64) -> Result<(), OdeError>
    where
        F: FnMut(f64, &[C64], &mut [C64]),
    {
        if t_end <= self.t {
            return Ok(());
        }
        let n = self.y.len();
        if !self.fsal_valid {
            f(self.t, &self.y, &mut self.k[0]);
            self.stats.evals += 1;
            self.fsal_valid = true;
        }
        if self.h <= 0.0 {
            self.h = self.initial_step(f, t_end);
        }
        let nn = (2 * n).max(1) as f64;
        let mut last_rejected = false;
        loop {
            if self.stats.accepted + self.stats.rejected >= self.opts.max_steps {
                return Err(OdeError::MaxSteps {
                    t: self.t,
                    max_steps: self.opts.max_steps,
                });
            }
            let remaining = t_end - self.t;
            let mut h = self.h.min(self.opts.h_max);
            let mut last = false;
            if h >= remaining * (1.0 - 1e-12) {
                h = remaining;
                last = true;
            }
            if h.abs() <= 1e-14 * self.t.abs().max(1.0) {
                return Err(OdeError::StepSizeUnderflow { t: self.t, h });
            }

            let err = self.trial_step(f, h);
            let err = {
                let (e1, e2) = err;
                let mut deno = e1 + 0.01 * e2;
                if deno <= 0.0 {
                    deno = 1.0;
                }
                h.abs() * e1 * (1.0 / (deno * nn)).sqrt()
            };
            if !err.is_finite() {
                // Shrink hard and retry; a genuinely divergent system ends in underflow.
                self.h = h * 0.1;
                self.stats.rejected += 1;
                last_rejected = true;
                if self.h <= 1e-14 * self.t.abs().max(1.0) {
                    return Err(OdeError::NonFinite { t: self.t });
                }
                continue;
            }
            let fac11 = err.powf(EXPO1);
            let fac = (1.0 / FAC2).max((1.0 / FAC1).min(fac11 / SAFE));
            let mut h_new = h / fac;
            if err <= 1.0 {
                self.facold = err.max(1e-4);
                self.stats.accepted += 1;
                // FSAL: derivative at the new point.
                std::mem::swap(&mut self.y, &mut self.ynew);
                f(self.t + h, &self.y, &mut self.k[0]);
                self.stats.evals += 1;
                self.t = if last { t_end } else { self.t + h };
                if last_rejected {
                    h_new = h_new.min(h);
                }
                last_rejected = false;
                // Do not let the final short hop collapse the controller's step.
                if !last || h_new > self.h {
                    self.h = h_new;
                }
                if last {
                    return Ok(());
                }
            } else {
                self.h = h / (1.0 / FAC1).min(fac11 / SAFE);
                self.stats.rejected += 1;
                last_rejected = true;
            }
        }
    }

    /// Runs the twelve stages; leaves the 8th-order solution in `ynew` and
    /// returns the (5th, 3rd) order error sums.
    fn trial_step<F>(&mut self, f: &mut F, h: f64) -> (f64, f64)
    where
        F: FnMut(f64, &[C64], &mut [C64]),
    {
        let n = self.y.len();
        let t = self.t;
        let y = &self.y;
        let ytmp = &mut self.ytmp;
        let [k1, k2, k3, k4, k5, k6, k7, k8, k9, k10] = &mut self.k;

        macro_rules! stage {
            ($out:expr, $c:expr, $( ($a:expr, $k:expr) ),+ ) => {{
                for i in 0..n {
                    let mut acc = C64::new(0.0, 0.0);
                    $( acc += $k[i] * $a; )+
                    ytmp[i] = y[i] + acc * h;
                }
                f(t + $c * h, ytmp, $out);
            }};
        }

        stage!(k2, C2, (A21, k1));
        stage!(k3, C3, (A31, k1), (A32, k2));
        stage!(k4, C4, (A41, k1), (A43, k3));
        stage!(k5, C5, (A51, k1), (A53, k3), (A54, k4));
        stage!(k6, C6, (A61, k1), (A64, k4), (A65, k5));
        stage!(k7, C7, (A71, k1), (A74, k4), (A75, k5), (A76, k6));
        stage!(k8, C8, (A81, k1), (A84, k4), (A85, k5), (A86, k6), (A87, k7));
        stage!(k9, C9, (A91, k1), (A94, k4), (A95, k5), (A96, k6), (A97, k7), (A98, k8));
        stage!(
            k10,
            C10,
            (A101, k1),
            (A104, k4),
            (A105, k5),
            (A106, k6),
            (A107, k7),
            (A108, k8),
            (A109, k9)
        );
        // k2 is reused for stage 11 and k3 for stage 12.
        stage!(
            k2,
            C11,
            (A111, k1),
            (A114, k4),
            (A115, k5),
            (A116, k6),
            (A117, k7),
            (A118, k8),
            (A119, k9),
            (A1110, k10)
        );
        stage!(
            k3,
            1.0,
            (A121, k1),
            (A124, k4),
            (A125, k5),
            (A126, k6),
            (A127, k7),
            (A128, k8),
            (A129, k9),
            (A1210, k10),
            (A1211, k2)
        );
        self.stats.evals += 11;

        let (atol, rtol) = (self.opts.atol, self.opts.rtol);
        let (mut err, mut err2) = (0.0, 0.0);
        for i in 0..n {
            let incr = k1[i] * B1
                + k6[i] * B6
                + k7[i] * B7
                + k8[i] * B8
                + k9[i] * B9
                + k10[i] * B10
                + k2[i] * B11
                + k3[i] * B12;
            let yn = y[i] + incr * h;
            self.ynew[i] = yn;
            let sk_re = atol + rtol * y[i].re.abs().max(yn.re.abs());
            let sk_im = atol + rtol * y[i].im.abs().max(yn.im.abs());
            let e2 = incr - k1[i] * BHH1 - k9[i] * BHH2 - k3[i] * BHH3;
            err2 += (e2.re / sk_re).powi(2) + (e2.im / sk_im).powi(2);
            let e1 = k1[i] * ER1
                + k6[i] * ER6
                + k7[i] * ER7
                + k8[i] * ER8
                + k9[i] * ER9
                + k10[i] * ER10
                + k2[i] * ER11
                + k3[i] * ER12;
            err += (e1.re / sk_re).powi(2) + (e1.im / sk_im).powi(2);
        }
        (err, err2)
    }
}

/// Integrate `y` from `t0` to `t1` in place, restarting the derivative at
/// every breakpoint strictly inside the interval.
pub fn integrate<F>(
    mut f: F,
    t0: f64,
    t1: f64,
    breakpoints: &[f64],
    y: &mut [C64],
    opts: OdeOptions,
) -> Result<OdeStats, OdeError>
where
    F: FnMut(f64, &[C64], &mut [C64]),
{
    let mut stepper = Dop853::new(t0, y, opts);
    let mut bps: Vec<f64> = breakpoints
        .iter()
        .copied()
        .filter(|&b| b > t0 && b < t1)
        .collect();
    bps.sort_by(f64::total_cmp);
    for b in bps {
        stepper.advance_to(&mut f, b)?;
        stepper.invalidate_derivative();
    }
    stepper.advance_to(&mut f, t1)?;
    y.copy_from_slice(stepper.state());
    Ok(stepper.stats())
}

const C2: f64 = 0.526001519587677318785587544488E-01;
const C3: f64 = 0.789002279381515978178381316732E-01;
const C4: f64 = 0.118350341907227396726757197510E+00;
const C5: f64 = 0.281649658092772603273242802490E+00;
const C6: f64 = 0.333333333333333333333333333333E+00;
const C7: f64 = 0.25E+00;
const C8: f64 = 0.307692307692307692307692307692E+00;
const C9: f64 = 0.651282051282051282051282051282E+00;
const C10: f64 = 0.6E+00;
const C11: f64 = 0.857142857142857142857142857142E+00;

const A21: f64 = 5.26001519587677318785587544488E-2;
const A31: f64 = 1.97250569845378994544595329183E-2;
const A32: f64 = 5.91751709536136983633785987549E-2;
const A41: f64 = 2.95875854768068491816892993775E-2;
const A43: f64 = 8.87627564304205475450678981324E-2;
const A51: f64 = 2.41365134159266685502369798665E-1;
const A53: f64 = -8.84549479328286085344864962717E-1;
const A54: f64 = 9.24834003261792003115737966543E-1;
const A61: f64 = 3.7037037037037037037037037037E-2;
const A64: f64 = 1.70828608729473871279604482173E-1;
const A65: f64 = 1.25467687566822425016691814123E-1;
const A71: f64 = 3.7109375E-2;
const A74: f64 = 1.70252211019544039314978060272E-1;
const A75: f64 = 6.02165389804559606850219397283E-2;
const A76: f64 = -1.7578125E-2;
const A81: f64 = 3.70920001185047927108779319836E-2;
const A84: f64 = 1.70383925712239993810214054705E-1;
const A85: f64 = 1.07262030446373284651809199168E-1;
const A86: f64 = -1.53194377486244017527936158236E-2;
const A87: f64 = 8.27378916381402288758473766002E-3;
const A91: f64 = 6.24110958716075717114429577812E-1;
const A94: f64 = -3.36089262944694129406857109825E0;
const A95: f64 = -8.68219346841726006818189891453E-1;
const A96: f64 = 2.75920996994467083049415600797E1;
const A97: f64 = 2.01540675504778934086186788979E1;
const A98: f64 = -4.34898841810699588477366255144E1;
const A101: f64 = 4.77662536438264365890433908527E-1;
const A104: f64 = -2.48811461997166764192642586468E0;
const A105: f64 = -5.90290826836842996371446475743E-1;
const A106: f64 = 2.12300514481811942347288949897E1;
const A107: f64 = 1.52792336328824235832596922938E1;
const A108: f64 = -3.32882109689848629194453265587E1;
const A109: f64 = -2.03312017085086261358222928593E-2;
const A111: f64 = -9.3714243008598732571704021658E-1;
const A114: f64 = 5.18637242884406370830023853209E0;
const A115: f64 = 1.09143734899672957818500254654E0;
const A116: f64 = -8.14978701074692612513997267357E0;
const A117: f64 = -1.85200656599969598641566180701E1;
const A118: f64 = 2.27394870993505042818970056734E1;
const A119: f64 = 2.49360555267965238987089396762E0;
const A1110: f64 = -3.0467644718982195003823669022E0;
const A121: f64 = 2.27331014751653820792359768449E0;
const A124: f64 = -1.05344954667372501984066689879E1;
const A125: f64 = -2.00087205822486249909675718444E0;
const A126: f64 = -1.79589318631187989172765950534E1;
const A127: f64 = 2.79488845294199600508499808837E1;
const A128: f64 = -2.85899827713502369474065508674E0;
const A129: f64 = -8.87285693353062954433549289258E0;
const A1210: f64 = 1.23605671757943030647266201528E1;
const A1211: f64 = 6.43392746015763530355970484046E-1;

const B1: f64 = 5.42937341165687622380535766363E-2;
const B6: f64 = 4.45031289275240888144113950566E0;
const B7: f64 = 1.89151789931450038304281599044E0;
const B8: f64 = -5.8012039600105847814672114227E0;
const B9: f64 = 3.1116436695781989440891606237E-1;
const B10: f64 = -1.52160949662516078556178806805E-1;
const B11: f64 = 2.01365400804030348374776537501E-1;
const B12: f64 = 4.47106157277725905176885569043E-2;

const BHH1: f64 = 0.244094488188976377952755905512E+00;
const BHH2: f64 = 0.733846688281611857341361741547E+00;
const BHH3: f64 = 0.220588235294117647058823529412E-01;

const ER1: f64 = 0.1312004499419488073250102996E-01;
const ER6: f64 = -0.1225156446376204440720569753E+01;
const ER7: f64 = -0.4957589496572501915214079952E+00;
const ER8: f64 = 0.1664377182454986536961530415E+01;
const ER9: f64 = -0.3503288487499736816886487290E+00;
const ER10: f64 = 0.3341791187130174790297318841E+00;
const ER11: f64 = 0.8192320648511571246570742613E-01;
const ER12: f64 = -0.2235530786388629525884427845E-01;
