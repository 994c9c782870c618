use stirap_gate::circuits::{self, CircuitParams, CouplingSpec, Method, Truncation};
use stirap_gate::units::{to_ghz, to_mhz};

const ROWS: [(&str, &str); 4] = [("ee,0", "ge,1"), ("gf,0", "ge,1"), ("eg,0", "gg,1"), ("ge,0", "gg,1")];

fn freqs(p: &CircuitParams, t: Truncation) -> Vec<f64> {
    let s = circuits::assemble_composite(p, t).unwrap();
    ROWS.iter().map(|(a, b)| s.transition(a, b).unwrap().omega).collect()
}

#[test]
fn larger_truncation_keeps_transition_table() {
    for m in [Method::I, Method::II] {
        let p = CircuitParams::preset(m);
        let base = Truncation::for_method(m);
        let big = Truncation { qubit_a: base.qubit_a + 1, qubit_b: base.qubit_b + 1, coupler: base.coupler + 1, keep: base.keep };
        let f0 = freqs(&p, base);
        let f1 = freqs(&p, big);
        for ((a, b), r) in f0.iter().zip(&f1).zip(ROWS) {
            // Table resolution is 10 MHz.
            assert!(to_mhz((a - b).abs()) < 10.0, "{m:?} {r:?}: {} vs {} GHz", to_ghz(*a), to_ghz(*b));
        }
        let s0 = circuits::assemble_composite(&p, base).unwrap();
        let s1 = circuits::assemble_composite(&p, big).unwrap();
        let d = circuits::dispersive_shift(&s0).unwrap() - circuits::dispersive_shift(&s1).unwrap();
        assert!(to_mhz(d.abs()) < 5.0, "{m:?}: χ moved by {} MHz", to_mhz(d));
    }
}

#[test]
fn labels_survive_small_perturbations() {
    for m in [Method::I, Method::II] {
        let base = CircuitParams::preset(m);
        let f0 = freqs(&base, Truncation::for_method(m));
        for scale in [0.99, 1.01] {
            let mut p = base;
            p.qubit_a.e_j *= scale;
            p.qubit_b.e_j *= scale;
            let s = circuits::assemble_composite(&p, Truncation::for_method(m)).unwrap();
            s.computational().unwrap();
            let f1: Vec<f64> = ROWS.iter().map(|(a, b)| s.transition(a, b).unwrap().omega).collect();
            for (a, b) in f0.iter().zip(&f1) {
                assert!(to_mhz((a - b).abs()) < 150.0, "{m:?} x{scale}: {} -> {} GHz", to_ghz(*a), to_ghz(*b));
            }
        }
    }
}

#[test]
fn zero_coupling_gives_bare_energies() {
    let mut p = CircuitParams::preset(Method::I);
    p.couplings = CouplingSpec::default();
    let s = circuits::assemble_composite(&p, Truncation::for_method(Method::I)).unwrap();
    let a = circuits::diagonalize_fluxonium(&p.qubit_a, 6).unwrap().energies;
    let b = circuits::diagonalize_fluxonium(&p.qubit_b, 6).unwrap().energies;
    let wc = p.coupler.omega_c;
    for (label, want) in [
        ("gg,0", 0.0),
        ("ee,0", a[1] + b[1]),
        ("gf,0", b[2]),
        ("ge,1", b[1] + wc),
        ("eg,1", a[1] + wc),
    ] {
        let e = s.energy(label).unwrap();
        assert!((e - want).abs() < 1e-9, "{label}: {e} vs {want}");
        assert!(s.overlaps[s.index_of(label).unwrap()] > 1.0 - 1e-12);
    }
    assert!(circuits::zz_strength(&s).unwrap().abs() < 1e-6);
}
