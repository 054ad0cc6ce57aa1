//! Moment formulas against the grid oracle outside the even/Sagnac case:
//! skewed tabulated beams and arbitrary pre/post selections (Re A_w != 0).

use std::f64::consts::PI;

use num_complex::Complex64;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use weakamp::moments::postselection_probability_general;
use weakamp::oracle::{simulate_batch, OracleCase};
use weakamp::{
    moment_full, sagnac_states, simulate, weak_value, BeamProfile, Error, Execution, Geometry,
    SelectionPair,
};

fn geometry() -> Geometry {
    Geometry::new(640e-6, 500e-6, 0.296).unwrap()
}

fn skewed(a_m: f64, tilt: f64) -> BeamProfile {
    let half = 3.0 * a_m;
    let n = 121;
    let x: Vec<f64> = (0..n)
        .map(|i| half * (2.0 * i as f64 / (n - 1) as f64 - 1.0))
        .collect();
    let d = x
        .iter()
        .map(|v| {
            let z = v / half;
            (1.0 - z * z).powi(2) * (1.0 + tilt * z)
        })
        .collect();
    BeamProfile::tabulated(x, d).unwrap()
}

fn random_state(rng: &mut ChaCha8Rng) -> [Complex64; 2] {
    let theta = rng.gen_range(0.0..PI);
    let (p0, p1) = (rng.gen_range(-PI..PI), rng.gen_range(-PI..PI));
    [
        Complex64::from_polar((0.5 * theta).cos(), p0),
        Complex64::from_polar((0.5 * theta).sin(), p1),
    ]
}

fn rel(a: f64, b: f64) -> f64 {
    (a - b).abs() / b.abs()
}

#[test]
fn skewed_profile_is_not_even() {
    let p = skewed(600e-6, 0.5);
    assert!(!p.is_even());
    assert!(rel(p.mirrored().density(-1e-4), p.density(1e-4)) < 1e-12);
    assert!(matches!(
        weakamp::displacement_even(&p, &geometry(), 0.3, 20.8),
        Err(Error::EvennessViolation)
    ));
}

#[test]
fn general_selections_match_oracle() {
    let g = geometry();
    let a_m = g.mirror_radius();
    let profiles = [
        BeamProfile::gaussian_for(&g).unwrap(),
        BeamProfile::tophat_for(&g).unwrap(),
        skewed(a_m, 0.5),
        skewed(a_m, -0.8),
    ];
    let mut rng = ChaCha8Rng::seed_from_u64(11);
    let mut cases = Vec::new();
    while cases.len() < 40 {
        let pair = SelectionPair::new(random_state(&mut rng), random_state(&mut rng)).unwrap();
        if pair.overlap().norm_sqr() < 1e-3 {
            continue;
        }
        let profile = profiles[cases.len() % profiles.len()].clone();
        let u = 10f64.powf(rng.gen_range(-3.0..0.3));
        let k = u / profile.rms() * if rng.gen_bool(0.5) { 1.0 } else { -1.0 };
        cases.push(OracleCase {
            profile,
            pair,
            geometry: g,
            k,
        });
    }
    let mut saw_real_part = false;
    for (case, record) in cases.iter().zip(simulate_batch(&cases, Execution::Parallel)) {
        let record = record.unwrap();
        let w = weak_value(&case.pair).unwrap();
        saw_real_part |= w.value().re.abs() > 0.1;
        let x1 = moment_full(&case.profile, &g, w.value(), case.k, 1).unwrap();
        let x2 = moment_full(&case.profile, &g, w.value(), case.k, 2).unwrap();
        let p = postselection_probability_general(&case.profile, w.overlap(), w.value(), case.k).unwrap();
        assert!(rel(x1, record.x_avg) < 1e-6, "x: {x1:e} vs {:e}", record.x_avg);
        assert!(rel(x2, record.x2_avg) < 1e-6, "x2: {x2:e} vs {:e}", record.x2_avg);
        assert!(rel(p, record.p_post) < 1e-8, "p: {p:e} vs {:e}", record.p_post);
    }
    assert!(saw_real_part);
}

#[test]
fn skewed_sagnac_displacement_matches_oracle() {
    let g = geometry();
    let p = skewed(g.mirror_radius(), 0.6);
    for (phi, k) in [(0.05, 20.8), (7.2f64.to_radians(), 20.8), (1.0, -300.0), (2.8, 900.0)] {
        let pair = sagnac_states(phi).unwrap();
        let w = weak_value(&pair).unwrap();
        let x = moment_full(&p, &g, w.value(), k, 1).unwrap();
        let o = simulate(&p, &pair, &g, k).unwrap();
        assert!(rel(x, o.x_avg) < 1e-6, "phi {phi}, k {k}: {x:e} vs {:e}", o.x_avg);
        let pp = weakamp::postselection_probability(&p, phi, k).unwrap();
        assert!(rel(pp, o.p_post) < 1e-8);
    }
}

#[test]
fn mirrored_profile_flips_odd_moment() {
    // x -> -x together with k -> -k leaves the setup unchanged
    let g = geometry();
    let p = skewed(g.mirror_radius(), 0.4);
    let w = weak_value(&sagnac_states(0.4).unwrap()).unwrap();
    let a = moment_full(&p, &g, w.value(), 50.0, 1).unwrap();
    let b = moment_full(&p.mirrored(), &g, w.value(), -50.0, 1).unwrap();
    assert!(rel(-b, a) < 1e-10, "{a:e} vs {b:e}");
}

#[test]
fn second_moment_without_kick_is_rms_squared() {
    let g = geometry();
    let p = BeamProfile::gaussian_for(&g).unwrap();
    let w = weak_value(&sagnac_states(1.0).unwrap()).unwrap();
    let x2 = moment_full(&p, &g, w.value(), 0.0, 2).unwrap();
    assert!(rel(x2, g.sigma() * g.sigma()) < 1e-12);
}
