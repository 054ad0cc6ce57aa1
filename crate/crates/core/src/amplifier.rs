//! Linear-theory reference, amplification factor, optimal phase and the
//! displacement-to-coupling inversion.

use std::f64::consts::{PI, TAU};

use crate::error::{Error, Result};
use crate::model::{AmplifierResult, BeamProfile, Geometry, Regime};
use crate::moments::{
    displacement_even, moment_full, postselection_probability, trig_moments, DENOMINATOR_FLOOR,
};
use crate::numerics::{brent_root, golden_section_max};
use crate::transition::{sagnac_states, weak_value};

pub const DEFAULT_DEVIATION_THRESHOLD: f64 = 0.01;

/// Maximum disagreement between the analytic optimum and its golden-section
/// polish, in radians. A value-only search cannot localize a quadratic peak
/// better than about `sqrt(eps)` times its width, which is ~1.5e-8 rad for
/// optima near 1 rad.
pub const PHASE_POLISH_TOLERANCE: f64 = 1e-7;

/// Residual accepted by [`invert_k`], in meters.
pub const INVERSION_RESIDUAL: f64 = 1e-12;

// log-spaced k scan used to locate the end of the monotone branch
const SCAN_POINTS_PER_DECADE: usize = 64;
const SCAN_UPPER_KA: f64 = 50.0;

/// Inputs for the amplification factor `|<x>| / delta`, `delta = k l_md / k0`.
///
/// `k0` is the laser wavenumber `2 pi / lambda`, in inverse meters.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct AmplificationConfig {
    l_md: f64,
    k0: f64,
    deviation_threshold: f64,
}

impl AmplificationConfig {
    pub fn new(l_md: f64, k0: f64, deviation_threshold: f64) -> Result<Self> {
        if !(l_md.is_finite() && l_md > 0.0) {
            return Err(Error::InvalidInput(format!("l_md must be positive, got {l_md}")));
        }
        if !(k0.is_finite() && k0 > 0.0) {
            return Err(Error::InvalidInput(format!("k0 must be positive, got {k0}")));
        }
        if !(deviation_threshold > 0.0 && deviation_threshold < 1.0) {
            return Err(Error::InvalidInput(format!(
                "deviation threshold must lie in (0, 1), got {deviation_threshold}"
            )));
        }
        Ok(Self {
            l_md,
            k0,
            deviation_threshold,
        })
    }

    /// Config with the laser given by its vacuum wavelength.
    pub fn from_wavelength(l_md: f64, wavelength: f64) -> Result<Self> {
        Self::new(l_md, TAU / wavelength, DEFAULT_DEVIATION_THRESHOLD)
    }

    pub fn l_md(&self) -> f64 {
        self.l_md
    }

    pub fn k0(&self) -> f64 {
        self.k0
    }

    pub fn deviation_threshold(&self) -> f64 {
        self.deviation_threshold
    }

    /// Displacement the tilt would cause without the interferometer.
    pub fn bare_displacement(&self, k: f64) -> f64 {
        k * self.l_md / self.k0
    }
}

fn is_zero_mod_tau(phi: f64) -> bool {
    let reduced = phi - TAU * (phi / TAU).round();
    reduced.abs() <= 4.0 * f64::EPSILON * phi.abs().max(1.0)
}

/// First-order prediction `2 k sigma a_m cot(phi/2)`.
pub fn displacement_linear(geometry: &Geometry, phi: f64, k: f64) -> Result<f64> {
    if !phi.is_finite() || !k.is_finite() {
        return Err(Error::InvalidInput("phi and k must be finite".into()));
    }
    if is_zero_mod_tau(phi) {
        return Err(Error::LinearDivergence);
    }
    let (s, c) = (0.5 * phi).sin_cos();
    Ok(2.0 * k * geometry.sigma() * geometry.mirror_radius() * c / s)
}

pub fn amplification_factor(x_avg: f64, k: f64, config: &AmplificationConfig) -> Result<f64> {
    if k == 0.0 {
        return Err(Error::UndefinedAmplification);
    }
    Ok(x_avg.abs() / config.bare_displacement(k).abs())
}

/// `sin(phi) / (1 - cos(phi) <cos 2kx>)` with the denominator in versine form.
fn phase_response(phi: f64, versine: f64) -> f64 {
    let half = (0.5 * phi).sin();
    phi.sin() / (2.0 * half * half + phi.cos() * versine)
}

fn nondegenerate_versine(profile: &BeamProfile, k: f64) -> Result<f64> {
    if !profile.is_even() {
        return Err(Error::EvennessViolation);
    }
    if k == 0.0 || !k.is_finite() {
        return Err(Error::DegenerateOptimum { cos2k: 1.0 });
    }
    let versine = trig_moments(profile, k, 0)?.versine;
    if versine <= 0.0 {
        return Err(Error::DegenerateOptimum {
            cos2k: 1.0 - versine,
        });
    }
    Ok(versine)
}

/// Phase maximizing `|<x>|` at fixed `k`: `cos(phi*) = <cos 2kx>`.
///
/// The analytic optimum is cross-checked by a golden-section search within
/// ±10% of it.
pub fn optimal_phase(profile: &BeamProfile, k: f64) -> Result<f64> {
    let versine = nondegenerate_versine(profile, k)?;
    // 1 - cos(phi*) = versine
    let phi_star = 2.0 * (0.5 * versine).sqrt().min(1.0).asin();
    let lo = 0.9 * phi_star;
    let hi = (1.1 * phi_star).min(PI);
    let (polished, _) = golden_section_max(|phi| phase_response(phi, versine), lo, hi, 1e-12 * phi_star);
    let gap = (polished - phi_star).abs();
    if gap > PHASE_POLISH_TOLERANCE && hi > phi_star {
        return Err(Error::NumericalFailure {
            what: "optimal phase polish",
            error_estimate: gap,
        });
    }
    Ok(phi_star)
}

/// `|<x>|_max = (sigma/a_m) <x sin 2kx> / sqrt(1 - <cos 2kx>^2)`.
pub fn max_displacement(profile: &BeamProfile, geometry: &Geometry, k: f64) -> Result<f64> {
    let versine = nondegenerate_versine(profile, k)?;
    let x_sin = trig_moments(profile, k, 1)?.sin2k;
    // 1 - C^2 = versine (2 - versine)
    let spread = versine * (2.0 - versine);
    if spread <= 0.0 {
        return Err(Error::DegenerateOptimum {
            cos2k: 1.0 - versine,
        });
    }
    Ok(geometry.sigma() / geometry.mirror_radius() * x_sin.abs() / spread.sqrt())
}

/// End of the monotone-increasing branch of `<x>(k)` at fixed `phi`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct BranchPeak {
    pub k: f64,
    pub displacement: f64,
}

/// Scans `<x>(k)` on a log grid for the first sign change of its slope and
/// refines the turning point by golden-section search.
pub fn branch_peak(profile: &BeamProfile, geometry: &Geometry, phi: f64) -> Result<BranchPeak> {
    let rms = profile.rms();
    let u_lo = 1e-4 * phi.abs().min(1.0);
    let decades = (SCAN_UPPER_KA / u_lo).log10();
    let steps = (decades * SCAN_POINTS_PER_DECADE as f64).ceil() as usize;
    let ratio = (SCAN_UPPER_KA / u_lo).powf(1.0 / steps as f64);
    let forward = |k: f64| displacement_even(profile, geometry, phi, k);

    let mut ks = vec![0.0];
    let mut xs = vec![0.0];
    let mut k = u_lo / rms;
    for _ in 0..=steps {
        let x = forward(k)?;
        if x < *xs.last().unwrap() {
            let lo = ks[ks.len().saturating_sub(2)];
            let (k_peak, _) = golden_section_max(
                |k| forward(k).unwrap_or(f64::NEG_INFINITY),
                lo,
                k,
                1e-13 * k,
            );
            let displacement = forward(k_peak)?;
            return Ok(BranchPeak { k: k_peak, displacement });
        }
        ks.push(k);
        xs.push(x);
        k *= ratio;
    }
    Ok(BranchPeak {
        k: *ks.last().unwrap(),
        displacement: *xs.last().unwrap(),
    })
}

/// Recovers the coupling `k` on the monotone small-k branch from a measured
/// displacement at phase `phi`.
pub fn invert_k(profile: &BeamProfile, geometry: &Geometry, phi: f64, x_measured: f64) -> Result<f64> {
    if !profile.is_even() {
        return Err(Error::EvennessViolation);
    }
    if !(phi > 0.0 && phi < PI) {
        return Err(Error::InvalidInput(format!("phi must lie in (0, pi), got {phi}")));
    }
    if !x_measured.is_finite() {
        return Err(Error::InvalidInput(format!("x_measured must be finite, got {x_measured}")));
    }
    if x_measured == 0.0 {
        return Ok(0.0);
    }
    let target = x_measured.abs();
    let peak = branch_peak(profile, geometry, phi)?;
    if target > peak.displacement {
        return Err(Error::NotInvertible {
            requested: x_measured,
            maximum: peak.displacement,
        });
    }
    let residual = |k: f64| displacement_even(profile, geometry, phi, k).map(|x| x - target);
    let k = brent_root(
        |k| residual(k).unwrap_or(f64::NAN),
        0.0,
        peak.k,
        1e-15 * peak.k,
        200,
    )?;
    let miss = residual(k)?.abs();
    if miss > INVERSION_RESIDUAL {
        return Err(Error::NumericalFailure {
            what: "coupling inversion",
            error_estimate: miss,
        });
    }
    // <x> is odd in k
    Ok(k.copysign(x_measured))
}

/// Full read-out at one operating point of the Sagnac amplifier.
pub fn evaluate(
    profile: &BeamProfile,
    geometry: &Geometry,
    phi: f64,
    k: f64,
    amplification: Option<&AmplificationConfig>,
) -> Result<AmplifierResult> {
    let x_avg = if profile.is_even() {
        displacement_even(profile, geometry, phi, k)?
    } else {
        let w = weak_value(&sagnac_states(phi)?)?;
        moment_full(profile, geometry, w.value(), k, 1)?
    };
    let x_avg_linear = displacement_linear(geometry, phi, k)?;
    let p_post = postselection_probability(profile, phi, k)?;
    if p_post <= 0.5 * DENOMINATOR_FLOOR {
        return Err(Error::VanishingPostSelection { denominator: 2.0 * p_post });
    }
    let threshold = amplification
        .map(|c| c.deviation_threshold())
        .unwrap_or(DEFAULT_DEVIATION_THRESHOLD);
    let amp_factor = match amplification {
        Some(c) if k != 0.0 => Some((
            amplification_factor(x_avg_linear, k, c)?,
            amplification_factor(x_avg, k, c)?,
        )),
        _ => None,
    };
    Ok(AmplifierResult {
        x_avg,
        x_avg_linear,
        amp_factor,
        p_post,
        regime: Regime::classify(x_avg, x_avg_linear, threshold),
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::moments::displacement_gaussian;
    use approx::assert_relative_eq;
    use std::f64::consts::FRAC_PI_2;

    fn reference() -> (BeamProfile, Geometry) {
        let g = Geometry::new(640e-6, 500e-6, 0.296).unwrap();
        (BeamProfile::gaussian_for(&g).unwrap(), g)
    }

    #[test]
    fn linear_examples() {
        let (_, g) = reference();
        let k = 20.8;
        let base = 2.0 * k * g.sigma() * g.mirror_radius();
        assert_relative_eq!(displacement_linear(&g, FRAC_PI_2, k).unwrap(), base, max_relative = 1e-15);
        let lin = displacement_linear(&g, 7.2f64.to_radians(), k).unwrap();
        assert!((lin - 1.979e-4).abs() < 5e-8, "{lin:e}");
        assert_eq!(displacement_linear(&g, 0.4, 0.0).unwrap(), 0.0);
        assert_eq!(displacement_linear(&g, 0.0, k), Err(Error::LinearDivergence));
        assert_eq!(displacement_linear(&g, TAU, k), Err(Error::LinearDivergence));
        assert!(displacement_linear(&g, 1e-6, k).unwrap() > 1.0);
    }

    #[test]
    fn amplification_examples() {
        let cfg = AmplificationConfig::new(1.0, TAU / 633e-9, 0.01).unwrap();
        let k = 20.8;
        let delta = cfg.bare_displacement(k);
        assert_relative_eq!(amplification_factor(delta, k, &cfg).unwrap(), 1.0, max_relative = 1e-15);
        let a = amplification_factor(1.904e-4, k, &cfg).unwrap();
        assert!((a - 90.9).abs() < 0.1, "{a}");
        assert_relative_eq!(
            amplification_factor(2.0 * 1.904e-4, k, &cfg).unwrap(),
            2.0 * a,
            max_relative = 1e-15
        );
        assert_eq!(amplification_factor(1e-4, 0.0, &cfg), Err(Error::UndefinedAmplification));
        assert!(AmplificationConfig::new(0.0, 1.0, 0.01).is_err());
        assert!(AmplificationConfig::new(1.0, 1.0, 1.0).is_err());
    }

    #[test]
    fn optimal_phase_gaussian() {
        let (p, g) = reference();
        let u = 20.8 * g.mirror_radius();
        let phi = optimal_phase(&p, 20.8).unwrap();
        assert_relative_eq!(phi, (-2.0 * u * u).exp().acos(), max_relative = 1e-9);
        assert!((phi - 0.024900).abs() < 2e-6);
        assert!((phi.to_degrees() - 1.4266).abs() < 1e-3);

        let big = optimal_phase(&p, 3.0 / g.mirror_radius()).unwrap();
        assert!((big - FRAC_PI_2).abs() < 1e-7);
        assert!(matches!(optimal_phase(&p, 0.0), Err(Error::DegenerateOptimum { .. })));
    }

    #[test]
    fn optimal_phase_polish_holds_for_tophat() {
        let p = BeamProfile::tophat(8e-4).unwrap();
        for k in [5.0, 400.0, 2000.0, 5000.0] {
            optimal_phase(&p, k).unwrap();
        }
    }

    #[test]
    fn max_displacement_examples() {
        let (p, g) = reference();
        let k = 20.8;
        let m = max_displacement(&p, &g, k).unwrap();
        assert!((m - 4.9992e-4).abs() < 1e-8, "{m:e}");
        assert!(m < g.sigma());
        let phi = optimal_phase(&p, k).unwrap();
        assert_relative_eq!(m, displacement_even(&p, &g, phi, k).unwrap(), max_relative = 1e-9);

        let k1 = 1.0 / g.mirror_radius();
        let m1 = max_displacement(&p, &g, k1).unwrap();
        assert_relative_eq!(m1, 2.0 * g.sigma() / (4f64.exp() - 1.0).sqrt(), max_relative = 1e-13);
        assert!((m1 / g.sigma() - 0.27318).abs() < 1e-5);

        let tiny = max_displacement(&p, &g, 1e-3).unwrap();
        assert_relative_eq!(tiny, g.sigma(), max_relative = 1e-12);
    }

    #[test]
    fn inversion_round_trip_and_limits() {
        let (p, g) = reference();
        let phi = 7.2f64.to_radians();
        let x = displacement_gaussian(&g, phi, 20.8).unwrap();
        let k = invert_k(&p, &g, phi, x).unwrap();
        assert_relative_eq!(k, 20.8, max_relative = 1e-9);
        assert_eq!(invert_k(&p, &g, phi, 0.0).unwrap(), 0.0);
        assert_relative_eq!(invert_k(&p, &g, phi, -x).unwrap(), -20.8, max_relative = 1e-9);

        let peak = branch_peak(&p, &g, phi).unwrap();
        assert!(matches!(
            invert_k(&p, &g, phi, 1.1 * peak.displacement),
            Err(Error::NotInvertible { .. })
        ));
        assert!(invert_k(&p, &g, 0.0, x).is_err());
    }

    #[test]
    fn branch_peak_is_a_turning_point() {
        let (p, g) = reference();
        let phi = 0.3;
        let peak = branch_peak(&p, &g, phi).unwrap();
        let f = |k| displacement_even(&p, &g, phi, k).unwrap();
        assert!(f(0.99 * peak.k) < peak.displacement);
        assert!(f(1.01 * peak.k) < peak.displacement);
    }

    #[test]
    fn evaluate_operating_point() {
        let (p, g) = reference();
        let cfg = AmplificationConfig::from_wavelength(1.0, 633e-9).unwrap();
        let r = evaluate(&p, &g, 7.2f64.to_radians(), 20.8, Some(&cfg)).unwrap();
        assert_eq!(r.regime.label(), "nonlinear_required");
        assert!(r.x_avg < r.x_avg_linear);
        let (lin, non) = r.amp_factor.unwrap();
        assert!(non < lin);
        let r0 = evaluate(&p, &g, 0.5, 0.0, Some(&cfg)).unwrap();
        assert_eq!((r0.x_avg, r0.x_avg_linear, r0.amp_factor), (0.0, 0.0, None));
        assert_eq!(r0.regime.label(), "linear_ok");
    }
}
