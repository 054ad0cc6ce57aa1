use std::f64::consts::PI;

use proptest::prelude::*;

use weakamp::{
    displacement_even, displacement_gaussian, displacement_linear, invert_k, max_displacement,
    postselection_probability, BeamProfile, Geometry,
};

fn setup(sigma: f64, tophat: bool) -> (Geometry, BeamProfile) {
    let g = Geometry::new(640e-6, sigma, 0.296).unwrap();
    let p = if tophat {
        BeamProfile::tophat_for(&g).unwrap()
    } else {
        BeamProfile::gaussian_for(&g).unwrap()
    };
    (g, p)
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(64))]

    #[test]
    fn displacement_is_odd_in_phi_and_k(
        phi in 0.001f64..3.1,
        u in 1e-4f64..2.0,
        tophat in any::<bool>(),
    ) {
        let (g, p) = setup(500e-6, tophat);
        let k = u / p.rms();
        let x = displacement_even(&p, &g, phi, k).unwrap();
        prop_assert_eq!(displacement_even(&p, &g, -phi, k).unwrap(), -x);
        let xk = displacement_even(&p, &g, phi, -k).unwrap();
        prop_assert!((xk + x).abs() <= 1e-14 * x.abs());
    }

    #[test]
    fn displacement_is_bounded(
        phi in 0.001f64..3.1,
        u in 1e-3f64..3.0,
        sigma in 1e-4f64..2e-3,
    ) {
        let (g, p) = setup(sigma, false);
        let k = u / g.mirror_radius();
        let x = displacement_even(&p, &g, phi, k).unwrap();
        let max = max_displacement(&p, &g, k).unwrap();
        prop_assert!(x.abs() <= max * (1.0 + 1e-12));
        prop_assert!(max < sigma);
        // all-order value never exceeds the first-order prediction
        prop_assert!(x.abs() <= displacement_linear(&g, phi, k).unwrap().abs() * (1.0 + 1e-12));
    }

    #[test]
    fn probability_is_bounded_and_follows_contrast(
        phi in 0.0f64..3.0,
        dphi in 1e-3f64..0.1,
        u in 0.0f64..3.0,
        tophat in any::<bool>(),
    ) {
        let (_, p) = setup(500e-6, tophat);
        let k = u / p.rms();
        let a = postselection_probability(&p, phi, k).unwrap();
        let b = postselection_probability(&p, (phi + dphi).min(PI), k).unwrap();
        prop_assert!((0.0..=1.0).contains(&a));
        // dP/dphi = sin(phi) <cos 2kx> / 2
        let c = weakamp::trig_moments(&p, k, 0).unwrap().cos2k;
        prop_assert!((b - a) * c >= -1e-15, "a {} b {} c {}", a, b, c);
    }

    #[test]
    fn maximum_decreases_with_k(u in 1e-3f64..3.0, factor in 1.01f64..3.0) {
        let (g, p) = setup(500e-6, false);
        let a_m = g.mirror_radius();
        let lo = max_displacement(&p, &g, u / a_m).unwrap();
        let hi = max_displacement(&p, &g, factor * u / a_m).unwrap();
        prop_assert!(hi < lo);
    }

    #[test]
    fn linear_limit(phi in 0.05f64..3.0) {
        // relative deviation from first order shrinks like k^2
        // (here k a_m << phi, so the expansion holds)
        let (g, p) = setup(500e-6, false);
        let dev = |k: f64| {
            let x = displacement_even(&p, &g, phi, k).unwrap();
            (x / displacement_linear(&g, phi, k).unwrap() - 1.0).abs()
        };
        let (d1, d2) = (dev(2.0), dev(1.0));
        prop_assert!((d1 / d2 - 4.0).abs() < 0.05, "ratio {}", d1 / d2);
    }

    #[test]
    fn inversion_round_trip(phi in 0.01f64..3.0, frac in 0.01f64..0.95, tophat in any::<bool>()) {
        let (g, p) = setup(500e-6, tophat);
        let peak = weakamp::amplifier::branch_peak(&p, &g, phi).unwrap();
        let k = frac * peak.k;
        let x = displacement_even(&p, &g, phi, k).unwrap();
        let back = invert_k(&p, &g, phi, x).unwrap();
        prop_assert!((back - k).abs() <= 1e-6 * k, "{} vs {}", back, k);
        let back_neg = invert_k(&p, &g, phi, -x).unwrap();
        prop_assert!((back_neg + k).abs() <= 1e-6 * k);
    }

    #[test]
    fn gaussian_closed_form_agrees(phi in 0.001f64..3.1, u in 0.0f64..3.0, sigma in 1e-4f64..2e-3) {
        let (g, p) = setup(sigma, false);
        let k = u / g.mirror_radius();
        let a = displacement_gaussian(&g, phi, k).unwrap();
        let b = displacement_even(&p, &g, phi, k).unwrap();
        prop_assert!((a - b).abs() <= 1e-12 * a.abs().max(1e-300));
    }
}
