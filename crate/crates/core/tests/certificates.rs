use std::f64::consts::E;

use kmwave::certificates::family::{BaseProfile, ScaledFamily};
use kmwave::certificates::{check_hypotheses_family, check_hypotheses_grid, HypothesisReport};
use kmwave::Field64;

fn passes(r: &HypothesisReport, name: &str) -> bool {
    r.condition(name).unwrap().pass
}

fn family(g: f64, width: f64, amplitude: f64) -> HypothesisReport {
    let f = ScaledFamily::new(BaseProfile::NegXGaussian, amplitude, width).unwrap();
    check_hypotheses_family(&f, 0.015, g, 8).unwrap()
}

#[test]
fn grid_example_fails_c5() {
    let u0 = Field64::from_fn(20.0, 1024, |x| -200.0 * x * (-x * x).exp()).unwrap();
    let r = check_hypotheses_grid(&u0, 0.1, 1.0, 8).unwrap();
    let c5 = r.condition("c5").unwrap();
    let lhs = 0.01 * 0.9_f64.powi(4) * 200.0_f64.powf(0.75);
    assert!((c5.lhs - lhs).abs() < 1e-9 * lhs);
    assert!((c5.rhs - 28.0 * (3.0 + E * E + E)).abs() < 1e-9);
    assert!(!c5.pass);
}

#[test]
fn d8_margin_of_literal_family() {
    // ε² |m₀|^{1/4} with |m₀| = g λ = 1e13 · 1e4 falls short of 9e/4
    let r = family(1e4, 1e9, 1e26);
    let d8 = r.condition("d8").unwrap();
    assert!((d8.lhs - 0.015_f64.powi(2) * 1e17_f64.powf(0.25)).abs() < 1e-9);
    assert!(d8.lhs < 2.25 * E);
}

#[test]
fn larger_scale_family_passes() {
    let r = family(1e5, 1e11, 5e31);
    for c in ["a1", "c5", "d8", "b3"] {
        assert!(passes(&r, c), "{c}");
    }
}

#[test]
#[ignore = "fails as stated; see README"]
fn literal_family_passes() {
    let r = family(1e4, 1e9, 1e26);
    for c in ["a1", "c5", "d8", "b3"] {
        assert!(passes(&r, c), "{c}");
    }
}
