use kmwave::certificates::family::{BaseProfile, ScaledFamily};
use kmwave::certificates::blowup_bracket;
use kmwave::characteristics::{classify_slopes, Membership};
use kmwave::*;
use num_complex::Complex;
use proptest::prelude::*;
use std::f64::consts::PI;

const N: usize = 64;

fn band_limited(coeffs: &[(f64, f64)], band: usize) -> Field64 {
    let mut s = Spectrum64::zeros(PI, N).unwrap();
    s.set_coeff(0, Complex::new(coeffs[0].0, 0.0));
    for j in 1..=band {
        let c = Complex::new(coeffs[j].0, coeffs[j].1);
        s.set_coeff(j as i64, c);
        s.set_coeff(-(j as i64), c.conj());
    }
    Grid64::new(PI, N).unwrap().inverse(&s).unwrap()
}

fn coeffs() -> impl Strategy<Value = Vec<(f64, f64)>> {
    prop::collection::vec((-1.0..1.0f64, -1.0..1.0f64), N / 2)
}

fn close(a: &Field64, b: &Field64, tol: f64) -> bool {
    a.values().iter().zip(b.values()).all(|(x, y)| (x - y).abs() <= tol)
}

proptest! {
    #[test]
    fn transform_round_trip(v in prop::collection::vec(-10.0..10.0f64, N)) {
        let g = Grid64::new(PI, N).unwrap();
        let u = Field64::new(PI, v).unwrap();
        let back = g.inverse(&g.transform(&u).unwrap()).unwrap();
        prop_assert!(close(&u, &back, 1e-12));
    }

    #[test]
    fn derivatives_compose(c in coeffs()) {
        let g = Grid64::new(PI, N).unwrap();
        let u = band_limited(&c, N / 2 - 1);
        let twice = g.derivative(&g.derivative(&u, 1).unwrap(), 1).unwrap();
        let direct = g.derivative(&u, 2).unwrap();
        prop_assert!(close(&twice, &direct, 1e-9 * (1.0 + direct.sup_norm())));
        let three = g.derivative(&twice, 1).unwrap();
        prop_assert!(close(&three, &g.derivative(&u, 3).unwrap(), 1e-8 * (1.0 + three.sup_norm())));
    }

    #[test]
    fn sobolev_norms_increase_with_order(c in coeffs()) {
        let g = Grid64::new(PI, N).unwrap();
        let u = band_limited(&c, N / 3);
        let norms: Vec<f64> = (0..=3).map(|s| g.sobolev_norm(&u, s).unwrap()).collect();
        prop_assert!(norms.windows(2).all(|w| w[1] >= w[0]));
        prop_assert!((norms[0] - u.l2_norm()).abs() <= 1e-10 * (1.0 + norms[0]));
    }

    #[test]
    fn dealias_is_idempotent(v in prop::collection::vec(-1.0..1.0f64, N)) {
        let g = Grid64::new(PI, N).unwrap();
        let s = g.transform(&Field64::new(PI, v).unwrap()).unwrap();
        let once = s.dealias();
        let twice = once.dealias();
        prop_assert_eq!(twice.coefficients(), once.coefficients());
    }

    #[test]
    fn lambda_half_is_self_adjoint_and_hilbert_part_skew(a in coeffs(), b in coeffs()) {
        let g = Grid64::new(PI, N).unwrap();
        let (f, h) = (band_limited(&a, N / 2 - 1), band_limited(&b, N / 2 - 1));
        let lam = MultiplierOp::lambda_half(&g);
        let hl = MultiplierOp::hilbert_lambda_half(&g, Sign::Plus);
        let scale = 1.0 + f.l2_norm() * h.l2_norm() * 10.0;
        let l1 = lam.apply(&g, &f).unwrap().inner(&h).unwrap();
        let l2 = f.inner(&lam.apply(&g, &h).unwrap()).unwrap();
        prop_assert!((l1 - l2).abs() <= 1e-11 * scale);
        let h1 = hl.apply(&g, &f).unwrap().inner(&h).unwrap();
        let h2 = f.inner(&hl.apply(&g, &h).unwrap()).unwrap();
        prop_assert!((h1 + h2).abs() <= 1e-11 * scale);
        prop_assert!(f.inner(&lam.apply(&g, &f).unwrap()).unwrap() >= -1e-11 * scale);
    }

    #[test]
    fn bracket_widens_with_epsilon(m0 in -1e4..-1e-2f64, e1 in 1e-4..0.5f64, de in 1e-4..0.4f64) {
        let (a, b) = (blowup_bracket(m0, e1).unwrap(), blowup_bracket(m0, e1 + de).unwrap());
        prop_assert!(b.t_lower < a.t_lower && b.t_upper > a.t_upper);
        prop_assert!(a.contains(-1.0 / m0));
    }

    #[test]
    fn rescaled_family_follows_scaling_laws(amp in 1.0..1e3f64, width in 1.0..1e3f64, k in 1.0..50.0f64, n in 0u32..12) {
        for p in [BaseProfile::Gaussian, BaseProfile::NegXGaussian] {
            let f = ScaledFamily::new(p, amp, width).unwrap();
            let r = f.rescaled(k).unwrap();
            let expect = f.sup_norm_ln(n) + (2.0 - n as f64) * k.ln();
            prop_assert!((r.sup_norm_ln(n) - expect).abs() <= 1e-12 * (1.0 + expect.abs()));
            prop_assert!((r.min_slope() - k * f.min_slope()).abs() <= 1e-12 * k * f.min_slope().abs());
        }
    }

    #[test]
    fn sigma_sets_grow_with_gamma(v in prop::collection::vec(-10.0..0.0f64, 1..40), g1 in 0.01..0.5f64, dg in 0.0..0.4f64) {
        let m = v.iter().cloned().fold(f64::INFINITY, f64::min);
        let a = classify_slopes(&v, g1, m, 0.0).unwrap();
        let b = classify_slopes(&v, g1 + dg, m, 0.0).unwrap();
        for (x, y) in a.membership.iter().zip(&b.membership) {
            if *x == Membership::In {
                prop_assert_eq!(*y, Membership::In);
            }
        }
    }
}
