//! Trigonometric moments of the beam profile and the all-order post-selected
//! meter moments built from them.
//!
//! Every formula here is written in terms of the versine moment
//! `<x^n (1 - cos 2kx)>` rather than `<x^n cos 2kx>`. Near the dark port the
//! two large coefficients `alpha_+` and `alpha_-` nearly cancel, and the
//! versine form avoids that cancellation.

use std::f64::consts::PI;

use crate::error::{Error, Result};
use crate::model::{scale_to_detector, BeamProfile, ComplexAmp, Geometry, ProfileKind};
use crate::numerics::{integrate, panels_between, QuadTolerance};

/// Highest supported moment order.
pub const MAX_ORDER: u32 = 4;

/// Absolute floor on the normalized post-selection denominator.
pub const DENOMINATOR_FLOOR: f64 = 1e-14;

const QUAD_REL_TOL: f64 = 1e-10;
const QUAD_ABS_TOL: f64 = 1e-12;
const QUAD_EXTRA_INTERVALS: usize = 4000;

/// `<x^n>`, `<x^n cos 2kx>`, `<x^n sin 2kx>` over the initial profile, plus
/// the versine moment `<x^n (1 - cos 2kx)>`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct TrigMoments {
    pub order: u32,
    pub k: f64,
    pub plain: f64,
    pub cos2k: f64,
    pub sin2k: f64,
    pub versine: f64,
}

fn check_order(n: u32) -> Result<()> {
    if n > MAX_ORDER {
        return Err(Error::InvalidInput(format!(
            "moment order {n} exceeds the supported maximum {MAX_ORDER}"
        )));
    }
    Ok(())
}

fn gaussian_moments(rms: f64, k: f64, n: u32) -> TrigMoments {
    let s = rms * rms;
    let t = 2.0 * k;
    let st2 = s * t * t;
    let damping = (-0.5 * st2).exp();
    // 1 - exp(-2 (k a)^2) without cancellation
    let one_minus = -(-0.5 * st2).exp_m1();
    let (plain, cos2k, sin2k, versine) = match n {
        0 => (1.0, damping, 0.0, one_minus),
        1 => (0.0, 0.0, s * t * damping, 0.0),
        2 => (s, s * (1.0 - st2) * damping, 0.0, s * one_minus + s * st2 * damping),
        3 => (0.0, 0.0, s * s * t * (3.0 - st2) * damping, 0.0),
        4 => {
            let poly = s * s * (st2 * st2 - 6.0 * st2);
            (
                3.0 * s * s,
                (poly + 3.0 * s * s) * damping,
                0.0,
                3.0 * s * s * one_minus - poly * damping,
            )
        }
        _ => unreachable!("order checked by caller"),
    };
    TrigMoments {
        order: n,
        k,
        plain,
        cos2k,
        sin2k,
        versine,
    }
}

/// Moments by adaptive quadrature, regardless of profile kind.
pub fn quadrature_moments(profile: &BeamProfile, k: f64, n: u32) -> Result<TrigMoments> {
    check_order(n)?;
    if !k.is_finite() {
        return Err(Error::InvalidInput(format!("k must be finite, got {k}")));
    }
    let half_period = if k == 0.0 { f64::INFINITY } else { PI / (2.0 * k.abs()) };
    let panels = panels_between(&profile.breakpoints(), half_period);
    let scale = profile.rms();
    let tol = QuadTolerance {
        abs: QUAD_ABS_TOL * scale.powi(n as i32),
        rel: QUAD_REL_TOL,
        max_intervals: panels.len() + QUAD_EXTRA_INTERVALS,
    };
    let weight = |x: f64| x.powi(n as i32) * profile.density(x);

    let even = profile.is_even();
    let odd_order = n % 2 == 1;
    let plain = if even && odd_order {
        0.0
    } else {
        integrate(weight, &panels, tol)?.value
    };
    let versine = if even && odd_order {
        0.0
    } else {
        integrate(|x| weight(x) * 2.0 * (k * x).sin().powi(2), &panels, tol)?.value
    };
    let sin2k = if even && !odd_order {
        0.0
    } else {
        integrate(|x| weight(x) * (2.0 * k * x).sin(), &panels, tol)?.value
    };
    Ok(TrigMoments {
        order: n,
        k,
        plain,
        cos2k: plain - versine,
        sin2k,
        versine,
    })
}

/// Trigonometric moments of order `n` at wavenumber `k`. Gaussian profiles use
/// closed forms; everything else is integrated adaptively with panels no
/// wider than half a period of `cos 2kx`.
pub fn trig_moments(profile: &BeamProfile, k: f64, n: u32) -> Result<TrigMoments> {
    check_order(n)?;
    if !k.is_finite() {
        return Err(Error::InvalidInput(format!("k must be finite, got {k}")));
    }
    match profile.kind() {
        ProfileKind::Gaussian { rms } => Ok(gaussian_moments(*rms, k, n)),
        _ => quadrature_moments(profile, k, n),
    }
}

/// All-order post-selected moment `<x^n>` at the detector for an arbitrary
/// complex weak value `a_w` of the path operator.
pub fn moment_full(
    profile: &BeamProfile,
    geometry: &Geometry,
    a_w: ComplexAmp,
    k: f64,
    n: u32,
) -> Result<f64> {
    check_order(n)?;
    if !(a_w.re.is_finite() && a_w.im.is_finite()) {
        return Err(Error::InvalidInput(format!("weak value must be finite, got {a_w}")));
    }
    let alpha_minus = 0.5 * (1.0 - a_w.norm_sqr());
    let m0 = trig_moments(profile, k, 0)?;
    // alpha_+ + alpha_- = 1
    let denominator = 1.0 - alpha_minus * m0.versine + a_w.im * m0.sin2k;
    if denominator <= DENOMINATOR_FLOOR {
        return Err(Error::VanishingPostSelection { denominator });
    }
    if n == 0 {
        return Ok(1.0);
    }
    let mn = trig_moments(profile, k, n)?;
    let numerator = mn.plain - alpha_minus * mn.versine + a_w.im * mn.sin2k;
    scale_to_detector(numerator / denominator, geometry, n)
}

fn check_phase_and_k(phi: f64, k: f64) -> Result<()> {
    if !phi.is_finite() || !k.is_finite() {
        return Err(Error::InvalidInput(format!(
            "phi and k must be finite, got phi = {phi}, k = {k}"
        )));
    }
    Ok(())
}

/// Displacement `<x>` for the Sagnac selection and an even profile:
/// `(sigma/a_m) sin(phi) <x sin 2kx> / (1 - cos(phi) <cos 2kx>)`.
pub fn displacement_even(profile: &BeamProfile, geometry: &Geometry, phi: f64, k: f64) -> Result<f64> {
    check_phase_and_k(phi, k)?;
    if !profile.is_even() {
        return Err(Error::EvennessViolation);
    }
    let versine = trig_moments(profile, k, 0)?.versine;
    let x_sin = trig_moments(profile, k, 1)?.sin2k;
    let half = (0.5 * phi).sin();
    let denominator = 2.0 * half * half + phi.cos() * versine;
    if denominator <= DENOMINATOR_FLOOR {
        return Err(Error::VanishingPostSelection { denominator });
    }
    scale_to_detector(phi.sin() * x_sin / denominator, geometry, 1)
}

/// Closed form of [`displacement_even`] for a Gaussian beam of radius `a_m`:
/// `2 k a_m sigma sin(phi) / (exp(2 (k a_m)^2) - cos(phi))`.
pub fn displacement_gaussian(geometry: &Geometry, phi: f64, k: f64) -> Result<f64> {
    check_phase_and_k(phi, k)?;
    let u = k * geometry.mirror_radius();
    let half = (0.5 * phi).sin();
    let denominator = (2.0 * u * u).exp_m1() + 2.0 * half * half;
    let normalized = denominator * (-2.0 * u * u).exp();
    if normalized <= DENOMINATOR_FLOOR {
        return Err(Error::VanishingPostSelection {
            denominator: normalized,
        });
    }
    Ok(2.0 * u * geometry.sigma() * phi.sin() / denominator)
}

/// Probability that a photon exits the dark port of the Sagnac setup,
/// `sin^2(phi/2) + (cos(phi) <1 - cos 2kx> + sin(phi) <sin 2kx>) / 2`. For
/// even profiles this is `(1 - cos(phi) <cos 2kx>) / 2`.
pub fn postselection_probability(profile: &BeamProfile, phi: f64, k: f64) -> Result<f64> {
    check_phase_and_k(phi, k)?;
    let m0 = trig_moments(profile, k, 0)?;
    let half = (0.5 * phi).sin();
    let p = half * half + 0.5 * (phi.cos() * m0.versine + phi.sin() * m0.sin2k);
    Ok(p.clamp(0.0, 1.0))
}

/// Post-selection probability for an arbitrary selection with overlap
/// `<f|i>` and weak value `a_w`: `|<f|i>|^2 (alpha_+ + alpha_- <cos 2kx> + Im A_w <sin 2kx>)`.
pub fn postselection_probability_general(
    profile: &BeamProfile,
    overlap: ComplexAmp,
    a_w: ComplexAmp,
    k: f64,
) -> Result<f64> {
    let m0 = trig_moments(profile, k, 0)?;
    let alpha_minus = 0.5 * (1.0 - a_w.norm_sqr());
    let p = overlap.norm_sqr() * (1.0 - alpha_minus * m0.versine + a_w.im * m0.sin2k);
    Ok(p.clamp(0.0, 1.0))
}
