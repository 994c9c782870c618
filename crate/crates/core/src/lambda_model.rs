//! Reduced models: the RWA Λ system, its Λ_bad extension and the dynamical
//! ZZ comparison gate. Logical ordering is |00⟩, |01⟩, |10⟩, |11⟩.

use num_complex::Complex64 as C64;

use crate::error::Result;
use crate::linalg::{CMat, ZERO};
use crate::ode::{self, OdeOptions};
use crate::pulses::Envelope;

/// Index of |11⟩ ≡ |q⟩, |a1⟩ and |a2⟩ in the three-level Λ basis.
pub const Q: usize = 0;
pub const A1: usize = 1;
pub const A2: usize = 2;
/// Extra levels of the Λ_bad extension: |10⟩ ≡ |eg,0⟩ and |gg,1⟩.
pub const TEN: usize = 3;
pub const GG1: usize = 4;

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum LambdaLabel {
    Q,
    A1,
    A2,
    Ten,
    Gg1,
    Zero,
    One,
}

impl LambdaLabel {
    pub fn name(self) -> &'static str {
        match self {
            LambdaLabel::Q => "11",
            LambdaLabel::A1 => "a1",
            LambdaLabel::A2 => "a2",
            LambdaLabel::Ten => "10",
            LambdaLabel::Gg1 => "gg,1",
            LambdaLabel::Zero => "00",
            LambdaLabel::One => "01",
        }
    }
}

/// Basis ordering for the Λ (first three) and Λ_bad (first five) models.
pub const BASIS: [LambdaLabel; 7] = [
    LambdaLabel::Q,
    LambdaLabel::A1,
    LambdaLabel::A2,
    LambdaLabel::Ten,
    LambdaLabel::Gg1,
    LambdaLabel::Zero,
    LambdaLabel::One,
];

pub fn basis_index(label: LambdaLabel) -> usize {
    BASIS.iter().position(|&l| l == label).unwrap()
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct BadLambdaParams {
    /// Dispersive half-detuning χ, rad/ns.
    pub chi: f64,
    /// Spurious-to-good left-arm matrix element ratio.
    pub ratio: f64,
}

impl BadLambdaParams {
    pub fn new(chi: f64) -> Self {
        Self { chi, ratio: 1.0 }
    }
}

pub fn rwa_hamiltonian(omega: (C64, C64)) -> CMat {
    let mut h = CMat::zeros(3, 3);
    fill_lambda(&mut h, omega);
    h
}

fn fill_lambda(h: &mut CMat, (a, b): (C64, C64)) {
    h[(A1, Q)] = a * 0.5;
    h[(Q, A1)] = a.conj() * 0.5;
    h[(A1, A2)] = b * 0.5;
    h[(A2, A1)] = b.conj() * 0.5;
}

/// Null vector of `rwa_hamiltonian` for Ω_A = Ω0 sinθ, Ω_B = Ω0 cosθ e^{iγ}:
/// cosθ|q⟩ − e^{−iγ} sinθ|a2⟩.
pub fn dark_state(theta: f64, gamma: f64) -> [C64; 3] {
    [
        C64::new(theta.cos(), 0.0),
        ZERO,
        -C64::from_polar(theta.sin(), -gamma),
    ]
}

pub fn bad_lambda_hamiltonian(omega: (C64, C64), bad: &BadLambdaParams) -> CMat {
    let mut h = CMat::zeros(5, 5);
    fill_lambda(&mut h, omega);
    let d = omega.0 * (0.5 * bad.ratio);
    h[(GG1, TEN)] = d;
    h[(TEN, GG1)] = d.conj();
    h[(GG1, GG1)] = C64::new(2.0 * bad.chi, 0.0);
    h
}

/// (Ω0/4) σz⊗σz, diagonal in |00⟩, |01⟩, |10⟩, |11⟩.
pub fn dynamical_zz_hamiltonian(omega0: f64) -> CMat {
    let q = 0.25 * omega0;
    CMat::from_diagonal(&nalgebra::DVector::from_vec(vec![
        C64::new(q, 0.0),
        C64::new(-q, 0.0),
        C64::new(-q, 0.0),
        C64::new(q, 0.0),
    ]))
}

/// Logical 4×4 propagator of the dynamical gate, exp(−i H t_g).
pub fn dynamical_gate(omega0: f64, t_g: f64) -> CMat {
    let h = dynamical_zz_hamiltonian(omega0);
    CMat::from_diagonal(&h.diagonal().map(|e| C64::from_polar(1.0, -e.re * t_g)))
}

/// Propagates the columns of `psi` (dim × m) under `i dψ/dt = H(t) ψ`.
pub fn propagate_dense<F>(
    h: F,
    psi: &CMat,
    t0: f64,
    t1: f64,
    breakpoints: &[f64],
    tol: f64,
) -> Result<CMat>
where
    F: Fn(f64) -> CMat,
{
    let (n, m) = psi.shape();
    let mut y: Vec<C64> = psi.iter().copied().collect();
    ode::integrate(
        |t, y: &[C64], dy: &mut [C64]| {
            let hm = h(t);
            let ym = nalgebra::DMatrixView::from_slice(y, n, m);
            let out = hm * ym * C64::new(0.0, -1.0);
            dy.copy_from_slice(out.as_slice());
        },
        t0,
        t1,
        breakpoints,
        &mut y,
        OdeOptions::with_tol(tol),
    )?;
    Ok(CMat::from_vec(n, m, y))
}

/// 3×3 propagator of the RWA Λ system over the envelope support.
pub fn lambda_propagator(env: &Envelope, tol: f64) -> Result<CMat> {
    propagate_dense(
        |t| rwa_hamiltonian(env.eval(t)),
        &CMat::identity(3, 3),
        0.0,
        env.duration(),
        &env.breakpoints(),
        tol,
    )
}

/// Logical 4×4 block of the gate generated by the Λ model, optionally with
/// the Λ_bad spurious drive. |00⟩ and |01⟩ are spectators.
pub fn lambda_gate(env: &Envelope, bad: Option<&BadLambdaParams>, tol: f64) -> Result<CMat> {
    let mut w = CMat::zeros(4, 4);
    w[(0, 0)] = C64::new(1.0, 0.0);
    w[(1, 1)] = C64::new(1.0, 0.0);
    match bad {
        None => {
            let u = lambda_propagator(env, tol)?;
            w[(2, 2)] = C64::new(1.0, 0.0);
            w[(3, 3)] = u[(Q, Q)];
        }
        Some(b) => {
            let mut psi = CMat::zeros(5, 2);
            psi[(Q, 0)] = C64::new(1.0, 0.0);
            psi[(TEN, 1)] = C64::new(1.0, 0.0);
            let out = propagate_dense(
                |t| bad_lambda_hamiltonian(env.eval(t), b),
                &psi,
                0.0,
                env.duration(),
                &env.breakpoints(),
                tol,
            )?;
            w[(3, 3)] = out[(Q, 0)];
            w[(2, 3)] = out[(TEN, 0)];
            w[(3, 2)] = out[(Q, 1)];
            w[(2, 2)] = out[(TEN, 1)];
        }
    }
    Ok(w)
}

/// Gate after one ZZ-phase correction pass: the deviation φ_ZZ − γ0 measured
/// with the nominal pulse is subtracted from γ0 and the gate is re-run.
/// Returns the corrected gate and the γ0 used.
pub fn lambda_gate_zz_corrected(
    env: &Envelope,
    bad: Option<&BadLambdaParams>,
    tol: f64,
) -> Result<(CMat, f64)> {
    let w = lambda_gate(env, bad, tol)?;
    let phi = crate::metrics::extract_phizz(&w)?;
    let g0 = env.params.gamma0;
    let dev = crate::metrics::wrap_angle(phi - g0);
    let mut env2 = *env;
    env2.params.gamma0 = g0 - dev;
    Ok((lambda_gate(&env2, bad, tol)?, env2.params.gamma0))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::linalg::eigh;
    use crate::pulses::{PulseParams, PulseShape};
    use crate::units::TWO_PI;
    use std::f64::consts::PI;

    fn env(f: f64, tg: f64, shape: PulseShape) -> Envelope {
        Envelope::new(PulseParams::new(tg, f * TWO_PI / tg, PI).unwrap(), shape)
    }

    #[test]
    fn rwa_eigenvalues() {
        let o = 1.3;
        let (v, _) = eigh(&rwa_hamiltonian((C64::new(o, 0.0), ZERO)));
        assert!((v[0] + o / 2.0).abs() < 1e-14 && v[1].abs() < 1e-14 && (v[2] - o / 2.0).abs() < 1e-14);
        let e = env(2.0, 40.0, PulseShape::Adiabatic);
        for i in 0..=10 {
            let (v, _) = eigh(&rwa_hamiltonian(e.eval(4.0 * i as f64)));
            let o = e.params.omega0;
            assert!((v[0] + o / 2.0).abs() < 1e-13 && v[1].abs() < 1e-13 && (v[2] - o / 2.0).abs() < 1e-13);
        }
        assert_eq!(rwa_hamiltonian((ZERO, ZERO)), CMat::zeros(3, 3));
    }

    #[test]
    fn dark_state_is_null_vector() {
        for i in 0..20 {
            let th = 0.17 * i as f64;
            let g = 0.31 * i as f64;
            let o = 2.0;
            let h = rwa_hamiltonian((C64::new(o * th.sin(), 0.0), C64::from_polar(o * th.cos(), g)));
            let d = dark_state(th, g);
            let dv = nalgebra::DVector::from_column_slice(&d);
            assert!((&h * &dv).norm() < 1e-14);
            assert!((dv.norm() - 1.0).abs() < 1e-15);
        }
        let d = dark_state(0.0, 0.0);
        assert_eq!(d[0], C64::new(1.0, 0.0));
        let d = dark_state(PI / 2.0, 0.0);
        assert!((d[2] + C64::new(1.0, 0.0)).norm() < 1e-15);
    }

    #[test]
    fn bad_lambda_structure() {
        let b = BadLambdaParams::new(3.0);
        let h = bad_lambda_hamiltonian((ZERO, C64::new(1.0, 0.0)), &b);
        assert_eq!(h[(GG1, TEN)], ZERO);
        assert_eq!(h[(GG1, GG1)].re, 6.0);
        assert_eq!(crate::linalg::hermiticity_error(&h), 0.0);
    }

    #[test]
    fn bad_lambda_infinite_detuning_blocks_leakage() {
        let e = env(1.135, 45.0, PulseShape::Satd);
        let w = lambda_gate(&e, Some(&BadLambdaParams::new(1e5)), 1e-10).unwrap();
        assert!(w[(2, 2)].norm() > 1.0 - 1e-6);
    }

    #[test]
    fn dynamical_gate_examples() {
        let w = dynamical_gate(0.0, 10.0);
        assert!(crate::linalg::max_abs_diff(&w, &CMat::identity(4, 4)) < 1e-15);
        let tg = 20.0;
        let w = dynamical_gate(PI / tg, tg);
        let phi = crate::metrics::extract_phizz(&w).unwrap();
        assert!((crate::metrics::wrap_angle(phi + PI)).abs() < 1e-12);
    }

    #[test]
    fn rabi_closed_form() {
        // Constant Ω_A on the left arm: full transfer |q⟩ → |a1⟩ at Ω t = π.
        let o = 0.7;
        let out = propagate_dense(
            |_| rwa_hamiltonian((C64::new(o, 0.0), ZERO)),
            &CMat::identity(3, 3),
            0.0,
            PI / o,
            &[],
            1e-12,
        )
        .unwrap();
        assert!((out[(A1, Q)].norm() - 1.0).abs() < 1e-10);
    }

    #[test]
    fn satd_is_exact() {
        for f in [1.135, 2.0, 5.0] {
            let e = env(f, 30.0, PulseShape::Satd);
            let u = lambda_propagator(&e, 1e-12).unwrap();
            let z = u[(Q, Q)] * C64::from_polar(1.0, -PI);
            assert!((z - C64::new(1.0, 0.0)).norm() < 1e-9, "f={f}: {z}");
        }
    }

    #[test]
    fn geometric_phase_sign() {
        let mut e = env(2.0, 30.0, PulseShape::Satd);
        e.params.gamma0 = PI / 2.0;
        let u = lambda_propagator(&e, 1e-12).unwrap();
        assert!((u[(Q, Q)] - C64::new(0.0, 1.0)).norm() < 1e-9);
    }

    #[test]
    fn adiabatic_limit() {
        let mut prev = f64::INFINITY;
        for f in [10.0, 25.0, 50.0] {
            let e = env(f, 30.0, PulseShape::Adiabatic);
            let u = lambda_propagator(&e, 1e-11).unwrap();
            let err = (u[(Q, Q)] * C64::from_polar(1.0, -PI) - C64::new(1.0, 0.0)).norm();
            assert!(err < prev * 1.5);
            prev = err;
        }
        assert!(prev < 1e-3, "error at 50 cycles: {prev}");
    }
}
