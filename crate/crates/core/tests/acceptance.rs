//! End-to-end acceptance checks. Each criterion prints one PASS/FAIL line on
//! stderr (uncaptured) and the test fails if any criterion fails.
//!
//! The full dissipative gate-time curve of method I lives in the ignored
//! `slow_dissipative_curve` test; run it with `--include-ignored`.

use std::f64::consts::PI;
use std::io::Write;
use std::time::Instant;

use stirap_gate::circuits::{self, CircuitParams, CompositeSystem, Method, Truncation};
use stirap_gate::dynamics;
use stirap_gate::metrics::{self, FitLaw, RobustnessSpec};
use stirap_gate::pipeline::{self, DissipationSpec, GateSpec};
use stirap_gate::units::{to_ghz, TWO_PI};

struct Outcome {
    id: usize,
    pass: bool,
    detail: String,
}

fn report(o: &Outcome) {
    let mut e = std::io::stderr().lock();
    let _ = writeln!(e, "criterion {}: {} {}", o.id, if o.pass { "PASS" } else { "FAIL" }, o.detail);
}

fn system(m: Method) -> CompositeSystem {
    circuits::assemble_composite(&CircuitParams::preset(m), Truncation::for_method(m)).unwrap()
}

fn within(v: f64, target: f64, rel: f64) -> bool {
    (v / target - 1.0).abs() <= rel
}

fn criterion_1() -> Outcome {
    let mut worst = 0.0f64;
    let mut slowest = 0.0f64;
    for tg in [20.0, 45.0, 100.0] {
        for k in [1.135, 2.0, 5.0] {
            let t0 = Instant::now();
            let e = pipeline::rwa_gate_error(tg, k * TWO_PI / tg, 0.0, 1e-12).unwrap();
            slowest = slowest.max(t0.elapsed().as_secs_f64());
            worst = worst.max(e);
        }
    }
    Outcome { id: 1, pass: worst < 1e-9 && slowest < 1.0, detail: format!("max error {worst:.2e}, slowest point {slowest:.3} s") }
}

/// (χt_g, uncorrected, corrected) over 2χt_g/2π ∈ [10, 60].
fn bad_lambda_points() -> Vec<(f64, f64, f64)> {
    let chi = TWO_PI * 0.2;
    pipeline::bad_lambda_sweep(chi, 10.0, 60.0, 26, 1e-12)
        .unwrap()
        .into_iter()
        .map(|p| (p.chi_tg, p.error, p.corrected_error))
        .collect()
}

fn criterion_2(pts: &[(f64, f64, f64)]) -> Outcome {
    let raw: Vec<_> = pts.iter().map(|p| (p.0, p.1)).collect();
    let cor: Vec<_> = pts.iter().map(|p| (p.0, p.2)).collect();
    let fr = metrics::fit_error_scaling(&raw, FitLaw::Power).unwrap();
    let fc = metrics::fit_error_scaling(&cor, FitLaw::Power).unwrap();
    let exp_ok = (fr.exponent + 2.0).abs() <= 0.3 && (fc.exponent + 4.0).abs() <= 0.3;
    let pre = |c: f64, t: f64| c / t <= 2.0 && t / c <= 2.0;
    let pre_ok = pre(fr.prefactor, 0.05) && pre(fc.prefactor, 0.26);
    Outcome {
        id: 2,
        pass: exp_ok && pre_ok,
        detail: format!(
            "uncorrected {:.3e}(χt_g)^{:.3}, corrected {:.3e}(χt_g)^{:.3}; exponents {}, prefactors {}",
            fr.prefactor,
            fr.exponent,
            fc.prefactor,
            fc.exponent,
            if exp_ok { "ok" } else { "off" },
            if pre_ok { "ok" } else { "off vs 0.05/0.26" }
        ),
    }
}

fn criterion_3() -> Outcome {
    let f = |m: Method| {
        let p = CircuitParams::preset(m);
        (
            to_ghz(circuits::qubit_frequency(&p.qubit_a).unwrap()),
            to_ghz(circuits::qubit_frequency(&p.qubit_b).unwrap()),
        )
    };
    let (a1, b1) = f(Method::I);
    let (a2, b2) = f(Method::II);
    let checks = [(a1, 0.606), (b1, 0.354), (a2, 1.79), (b2, 0.86)];
    let pass = checks.iter().all(|(v, t)| (v - t).abs() <= 1e-3);
    Outcome {
        id: 3,
        pass,
        detail: format!("I: {a1:.5}/{b1:.5} GHz, II: {a2:.5}/{b2:.5} GHz (targets 0.606/0.354, 1.79/0.86 ± 1 MHz)"),
    }
}

fn criterion_4(s1: &CompositeSystem, s2: &CompositeSystem) -> Outcome {
    // (from, to, GHz, element) with the element read from op_a, op_b or op_n.
    let t1 = [("ee,0", "ge,1", 6.94, 0.12, 'a'), ("gf,0", "ge,1", 2.86, 0.55, 'b'), ("eg,0", "gg,1", 6.54, 0.09, 'a'), ("ge,0", "gg,1", 6.80, 0.04, 'b')];
    let t2 = [("ee,0", "ge,1", -0.84, 0.194, 'n'), ("gf,0", "ge,1", -2.43, 0.111, 'n'), ("eg,0", "gg,1", -0.71, 0.181, 'n'), ("ge,0", "gg,1", 0.31, 0.366, 'n')];
    let mut bad = Vec::new();
    for (sys, rows, name) in [(s1, &t1, "I"), (s2, &t2, "II")] {
        for &(from, to, f, m, op) in rows.iter() {
            let t = sys.transition(from, to).unwrap();
            let el = match op {
                'a' => t.op_a,
                'b' => t.op_b,
                _ => t.op_n,
            };
            if (to_ghz(t.omega) - f).abs() > 0.010 || (el - m).abs() > 0.01 {
                bad.push(format!("{name} {from}->{to}: {:.4} GHz, {el:.4}", to_ghz(t.omega)));
            }
        }
    }
    let x1 = to_ghz(2.0 * circuits::dispersive_shift(s1).unwrap());
    let x2 = to_ghz(2.0 * circuits::dispersive_shift(s2).unwrap());
    if (x1 - 0.40).abs() > 0.02 {
        bad.push(format!("I 2χ {x1:.4}"));
    }
    if (x2 - 0.13).abs() > 0.02 {
        bad.push(format!("II 2χ {x2:.4}"));
    }
    Outcome {
        id: 4,
        pass: bad.is_empty(),
        detail: if bad.is_empty() { format!("8 transitions match, 2χ/2π = {x1:.4} / {x2:.4} GHz") } else { bad.join("; ") },
    }
}

fn criterion_5(s1: &CompositeSystem, s2: &CompositeSystem) -> Outcome {
    let mut detail = Vec::new();
    let mut pass = true;
    for (sys, want, name) in [(s1, &[21.51, 24.73][..], "I"), (s2, &[39.55, 92.67, 99.38, 103.61, 103.98][..], "II")] {
        let comp = sys.computational().unwrap().as_array();
        let model = dynamics::t1_rates(sys, 1e6, 0.0).unwrap();
        let mut t1: Vec<f64> = model.jumps.iter().filter(|j| comp.contains(&j.from)).map(|j| j.t1() * 1e-3).collect();
        t1.sort_by(f64::total_cmp);
        for (got, w) in t1.iter().zip(want) {
            pass &= within(*got, *w, 0.02);
        }
        detail.push(format!("{name}: {}", t1.iter().take(want.len()).map(|v| format!("{v:.2}")).collect::<Vec<_>>().join(", ")));
    }
    Outcome { id: 5, pass, detail: format!("{} μs", detail.join("; ")) }
}

fn criterion_6(s1: &CompositeSystem) -> Outcome {
    let chi = circuits::dispersive_shift(s1).unwrap();
    let mut lo = f64::INFINITY;
    let mut hi = 0.0f64;
    for i in 0..9 {
        let tg = 30.0 + 5.0 * i as f64;
        let e = pipeline::run_gate(s1, &GateSpec::new(Method::I, tg)).unwrap().report.error;
        let r = e / (0.26 * (chi * tg).powi(-4));
        lo = lo.min(r);
        hi = hi.max(r);
    }
    let coherent_ok = lo >= 1.0 / 3.0 && hi <= 3.0;
    // Scan the dissipative window until one point meets the bound.
    let mut best = (f64::INFINITY, 0.0);
    for tg in [45.0, 50.0, 55.0, 60.0] {
        let spec = GateSpec { dissipation: Some(DissipationSpec::default()), ..GateSpec::new(Method::I, tg) };
        let e = pipeline::run_gate(s1, &spec).unwrap().report.error;
        if e < best.0 {
            best = (e, tg);
        }
        if e <= 1e-3 {
            break;
        }
    }
    let diss_ok = best.0 <= 1e-3;
    Outcome {
        id: 6,
        pass: coherent_ok && diss_ok,
        detail: format!(
            "coherent/0.26(χt_g)^-4 in [{lo:.3e}, {hi:.3e}] over 30-70 ns ({}); dissipative {:.3e} at {} ns ({})",
            if coherent_ok { "ok" } else { "outside factor 3" },
            best.0,
            best.1,
            if diss_ok { "ok" } else { "above 1e-3" }
        ),
    }
}

fn criterion_7(s2: &CompositeSystem) -> Outcome {
    let spec = GateSpec { dissipation: Some(DissipationSpec::default()), ..GateSpec::new(Method::II, 130.0) };
    let e = pipeline::run_gate(s2, &spec).unwrap().report.error;
    let zz = circuits::zz_strength(s2).unwrap();
    Outcome {
        id: 7,
        pass: e <= 2e-3 && within(zz, 6.57, 0.5),
        detail: format!("error {e:.3e} at 130 ns, ZZ {zz:.3} kHz"),
    }
}

fn criterion_8(s1: &CompositeSystem) -> Outcome {
    let tg = 45.0;
    let dyn_err = |eta: f64| pipeline::dynamical_gate_error(tg, eta);
    let xi_dyn = metrics::differential_sensitivity(dyn_err).unwrap().xi;
    let avg_dyn = metrics::averaged_error(dyn_err, &RobustnessSpec::new(0.2, 101).unwrap()).unwrap();
    let oracle_ok = within(xi_dyn, PI * PI / 10.0, 0.01) && within(avg_dyn, PI * PI * 0.04 / 60.0, 0.01);
    let mut satd = Vec::new();
    for k in [2.0, 3.0, 5.0] {
        let om = k * TWO_PI / tg;
        satd.push(metrics::differential_sensitivity(|eta| pipeline::rwa_gate_error(tg, om, eta, 1e-12)).unwrap().xi);
    }
    let order_ok = satd.iter().all(|&x| x < xi_dyn);
    let full = pipeline::full_gate_error_factory(s1, &GateSpec::new(Method::I, tg)).unwrap();
    let xi_full = metrics::differential_sensitivity(full).unwrap().xi;
    let full_ok = within(xi_full, 0.802, 0.25);
    Outcome {
        id: 8,
        pass: oracle_ok && order_ok && full_ok,
        detail: format!(
            "dynamical ξ {xi_dyn:.5} <ε> {avg_dyn:.4e}; SATD ξ at Ω0t_g/2π = 2,3,5: {:.4}, {:.4}, {:.4}; full-model ξ(45 ns) {xi_full:.4}",
            satd[0], satd[1], satd[2]
        ),
    }
}

fn criterion_9(s1: &CompositeSystem, pts: &[(f64, f64, f64)]) -> Outcome {
    // Leakage prefactor at the fixed exponent −4 (geometric mean).
    let c_leak = (pts.iter().map(|p| (p.2 * p.0.powi(4)).ln()).sum::<f64>() / pts.len() as f64).exp();
    let diss = DissipationSpec::default();
    let t1 = pipeline::t1_min(s1, &diss).unwrap();
    let diss_pts: Vec<(f64, f64)> = (0..9)
        .map(|i| {
            let tg = 40.0 + 20.0 * i as f64;
            (tg / t1, pipeline::dissipation_only_error(s1, Method::I, tg, &diss, 1e-8).unwrap())
        })
        .collect();
    let c_diss = metrics::fit_error_scaling(&diss_pts, FitLaw::Linear).unwrap().prefactor;
    let chi = circuits::dispersive_shift(s1).unwrap();
    let t = metrics::minimize_tradeoff(c_leak, c_diss, chi, t1).unwrap();
    Outcome {
        id: 9,
        pass: within(t.time_factor, 7.96, 0.15) && within(t.error_factor, 1.35, 0.15),
        detail: format!(
            "c_leak {c_leak:.4e}, c_diss {c_diss:.4}, T1_min {:.2} μs → t_g factor {:.3}, c_min {:.3} (t_opt {:.1} ns, ε_min {:.2e})",
            t1 * 1e-3,
            t.time_factor,
            t.error_factor,
            t.t_opt,
            t.eps_min
        ),
    }
}

#[test]
fn acceptance() {
    let s1 = system(Method::I);
    let s2 = system(Method::II);
    let lam = bad_lambda_points();
    let outcomes = vec![
        criterion_1(),
        criterion_2(&lam),
        criterion_3(),
        criterion_4(&s1, &s2),
        criterion_5(&s1, &s2),
        criterion_6(&s1),
        criterion_7(&s2),
        criterion_8(&s1),
        criterion_9(&s1, &lam),
    ];
    for o in &outcomes {
        report(o);
    }
    let failed: Vec<usize> = outcomes.iter().filter(|o| !o.pass).map(|o| o.id).collect();
    assert!(failed.is_empty(), "failing criteria: {failed:?}");
}

#[test]
#[ignore = "slow: dissipative method I gate over 30-70 ns"]
fn slow_dissipative_curve() {
    let s1 = system(Method::I);
    let mut e = std::io::stderr().lock();
    let mut best = f64::INFINITY;
    for i in 0..9 {
        let tg = 30.0 + 5.0 * i as f64;
        let spec = GateSpec { dissipation: Some(DissipationSpec::default()), ..GateSpec::new(Method::I, tg) };
        let err = pipeline::run_gate(&s1, &spec).unwrap().report.error;
        if (45.0..=60.0).contains(&tg) {
            best = best.min(err);
        }
        let _ = writeln!(e, "dissipative t_g {tg} ns error {err:.4e}");
    }
    assert!(best <= 1e-3, "minimum over 45-60 ns is {best:.3e}");
}
