//! Domain types shared by every layer: amplitudes, selection pairs, beam
//! geometry and transverse beam profiles.
//!
//! All lengths are SI meters and all angles radians.

use num_complex::Complex64;

use crate::error::{Error, Result};

/// Complex probability amplitude.
pub type ComplexAmp = Complex64;

/// Relative tolerance (against peak density) used to decide profile evenness.
pub const EVENNESS_TOLERANCE: f64 = 1e-12;

const UNIT_NORM_TOLERANCE: f64 = 1e-12;
const GAMMA_CONSISTENCY_TOLERANCE: f64 = 1e-12;

/// Gaussian profiles are integrated over this many RMS widths on each side.
pub(crate) const GAUSSIAN_TRUNCATION: f64 = 10.0;

fn ensure_finite(what: &str, v: f64) -> Result<()> {
    if v.is_finite() {
        Ok(())
    } else {
        Err(Error::InvalidInput(format!("{what} must be finite, got {v}")))
    }
}

pub(crate) fn ensure_finite_amp(what: &str, z: ComplexAmp) -> Result<()> {
    if z.re.is_finite() && z.im.is_finite() {
        Ok(())
    } else {
        Err(Error::InvalidInput(format!("{what} must be finite, got {z}")))
    }
}

/// A normalized two-level state over the path basis (clockwise, anticlockwise).
pub type PathState = [ComplexAmp; 2];

/// Pre- and post-selected which-path states.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct SelectionPair {
    pre: PathState,
    post: PathState,
}

impl SelectionPair {
    /// Builds a pair, rejecting non-finite or non-normalized vectors.
    pub fn new(pre: PathState, post: PathState) -> Result<Self> {
        for (name, v) in [("pre", &pre), ("post", &post)] {
            for z in v {
                ensure_finite_amp(name, *z)?;
            }
            let norm = v[0].norm_sqr() + v[1].norm_sqr();
            if (norm.sqrt() - 1.0).abs() > UNIT_NORM_TOLERANCE {
                return Err(Error::InvalidInput(format!(
                    "{name} state has norm {} (expected 1)",
                    norm.sqrt()
                )));
            }
        }
        Ok(Self { pre, post })
    }

    pub fn pre(&self) -> &PathState {
        &self.pre
    }

    pub fn post(&self) -> &PathState {
        &self.post
    }

    /// ⟨post|pre⟩.
    pub fn overlap(&self) -> ComplexAmp {
        self.post[0].conj() * self.pre[0] + self.post[1].conj() * self.pre[1]
    }
}

/// Beam radii and splitting ratio of the imaging setup.
///
/// `a` is the RMS radius at the lens, `sigma` the RMS radius at the detector
/// and `gamma = l_lm / (l_lm + l_md)`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Geometry {
    a: f64,
    sigma: f64,
    gamma: f64,
    l_lm: Option<f64>,
    l_md: Option<f64>,
}

impl Geometry {
    pub fn new(a: f64, sigma: f64, gamma: f64) -> Result<Self> {
        Self::with_paths(a, sigma, gamma, None, None)
    }

    /// Full constructor. When both path lengths are present they must
    /// reproduce `gamma`.
    pub fn with_paths(
        a: f64,
        sigma: f64,
        gamma: f64,
        l_lm: Option<f64>,
        l_md: Option<f64>,
    ) -> Result<Self> {
        ensure_finite("a", a)?;
        ensure_finite("sigma", sigma)?;
        ensure_finite("gamma", gamma)?;
        if a <= 0.0 {
            return Err(Error::InvalidInput(format!("a must be positive, got {a}")));
        }
        if sigma <= 0.0 {
            return Err(Error::InvalidInput(format!(
                "sigma must be positive, got {sigma}"
            )));
        }
        if !(0.0..=1.0).contains(&gamma) {
            return Err(Error::InvalidInput(format!("gamma out of [0,1]: {gamma}")));
        }
        for (name, l) in [("l_lm", l_lm), ("l_md", l_md)] {
            if let Some(l) = l {
                ensure_finite(name, l)?;
                if l < 0.0 {
                    return Err(Error::InvalidInput(format!("{name} must be >= 0, got {l}")));
                }
            }
        }
        if let (Some(lm), Some(md)) = (l_lm, l_md) {
            let total = lm + md;
            if total <= 0.0 {
                return Err(Error::InvalidInput("l_lm + l_md must be positive".into()));
            }
            let implied = lm / total;
            if (implied - gamma).abs() > GAMMA_CONSISTENCY_TOLERANCE {
                return Err(Error::InvalidInput(format!(
                    "gamma {gamma} inconsistent with l_lm/(l_lm+l_md) = {implied}"
                )));
            }
        }
        let g = Self {
            a,
            sigma,
            gamma,
            l_lm,
            l_md,
        };
        let a_m = g.mirror_radius();
        if a_m <= 0.0 {
            return Err(Error::DegenerateGeometry(a_m));
        }
        Ok(g)
    }

    /// Geometry with `gamma` derived from the two path lengths.
    pub fn from_path_lengths(a: f64, sigma: f64, l_lm: f64, l_md: f64) -> Result<Self> {
        ensure_finite("l_lm", l_lm)?;
        ensure_finite("l_md", l_md)?;
        let total = l_lm + l_md;
        if l_lm < 0.0 || l_md < 0.0 || total <= 0.0 {
            return Err(Error::InvalidInput(
                "path lengths must be nonnegative with a positive sum".into(),
            ));
        }
        Self::with_paths(a, sigma, l_lm / total, Some(l_lm), Some(l_md))
    }

    pub fn a(&self) -> f64 {
        self.a
    }

    pub fn sigma(&self) -> f64 {
        self.sigma
    }

    pub fn gamma(&self) -> f64 {
        self.gamma
    }

    pub fn l_lm(&self) -> Option<f64> {
        self.l_lm
    }

    pub fn l_md(&self) -> Option<f64> {
        self.l_md
    }

    /// Same setup with a different detector-plane radius.
    pub fn with_sigma(&self, sigma: f64) -> Result<Self> {
        Self::with_paths(self.a, sigma, self.gamma, self.l_lm, self.l_md)
    }

    /// Beam radius at the tilted mirror, `(1 - gamma) a + gamma sigma`.
    pub fn mirror_radius(&self) -> f64 {
        (1.0 - self.gamma) * self.a + self.gamma * self.sigma
    }
}

/// Free-function form of [`Geometry::mirror_radius`].
pub fn mirror_radius(geometry: &Geometry) -> f64 {
    geometry.mirror_radius()
}

/// Maps an n-th moment of the mirror coordinate to the detector plane,
/// multiplying by `(sigma / a_m)^n`.
pub fn scale_to_detector(x_m_moment: f64, geometry: &Geometry, n: u32) -> Result<f64> {
    if n == 0 {
        return Err(Error::InvalidInput("moment order must be >= 1".into()));
    }
    let a_m = geometry.mirror_radius();
    if a_m <= 0.0 || !a_m.is_finite() {
        return Err(Error::DegenerateGeometry(a_m));
    }
    Ok(x_m_moment * (geometry.sigma() / a_m).powi(n as i32))
}

/// Piecewise-linear density on a strictly increasing grid, zero outside.
#[derive(Debug, Clone, PartialEq)]
pub struct Tabulated {
    x: Vec<f64>,
    density: Vec<f64>,
}

impl Tabulated {
    pub fn x(&self) -> &[f64] {
        &self.x
    }

    pub fn density(&self) -> &[f64] {
        &self.density
    }

    fn eval(&self, x: f64) -> f64 {
        let n = self.x.len();
        if x < self.x[0] || x > self.x[n - 1] {
            return 0.0;
        }
        let j = self.x.partition_point(|&xi| xi <= x);
        if j == 0 {
            return self.density[0];
        }
        if j >= n {
            return self.density[n - 1];
        }
        let (x0, x1) = (self.x[j - 1], self.x[j]);
        let (d0, d1) = (self.density[j - 1], self.density[j]);
        let t = (x - x0) / (x1 - x0);
        d0 + (d1 - d0) * t
    }

    fn mass(&self) -> f64 {
        self.x
            .windows(2)
            .zip(self.density.windows(2))
            .map(|(x, d)| 0.5 * (x[1] - x[0]) * (d[0] + d[1]))
            .sum()
    }

    /// Exact ∫ x^n d(x) dx, using three-point Gauss-Legendre per segment.
    fn raw_moment(&self, n: u32) -> f64 {
        const NODES: [f64; 3] = [-0.774_596_669_241_483_4, 0.0, 0.774_596_669_241_483_4];
        const WEIGHTS: [f64; 3] = [5.0 / 9.0, 8.0 / 9.0, 5.0 / 9.0];
        self.x
            .windows(2)
            .zip(self.density.windows(2))
            .map(|(x, d)| {
                let half = 0.5 * (x[1] - x[0]);
                let mid = 0.5 * (x[1] + x[0]);
                NODES
                    .iter()
                    .zip(WEIGHTS.iter())
                    .map(|(t, w)| {
                        let xi = mid + half * t;
                        let di = 0.5 * (d[0] + d[1]) + 0.5 * (d[1] - d[0]) * t;
                        w * xi.powi(n as i32) * di
                    })
                    .sum::<f64>()
                    * half
            })
            .sum()
    }
}

#[derive(Debug, Clone, PartialEq)]
pub enum ProfileKind {
    /// Centered Gaussian density with the given RMS width.
    Gaussian { rms: f64 },
    /// Uniform density on `[-half_width, half_width]`.
    TopHat { half_width: f64 },
    Tabulated(Tabulated),
}

/// Transverse probability density of the beam at the mirror plane.
#[derive(Debug, Clone, PartialEq)]
pub struct BeamProfile {
    kind: ProfileKind,
    even: bool,
    second_moment: f64,
}

impl BeamProfile {
    pub fn gaussian(rms: f64) -> Result<Self> {
        ensure_finite("gaussian rms", rms)?;
        if rms <= 0.0 {
            return Err(Error::InvalidInput(format!("gaussian rms must be positive, got {rms}")));
        }
        Ok(Self {
            kind: ProfileKind::Gaussian { rms },
            even: true,
            second_moment: rms * rms,
        })
    }

    /// Gaussian whose width is the mirror-plane radius of `geometry`.
    pub fn gaussian_for(geometry: &Geometry) -> Result<Self> {
        Self::gaussian(geometry.mirror_radius())
    }

    pub fn tophat(half_width: f64) -> Result<Self> {
        ensure_finite("tophat half width", half_width)?;
        if half_width <= 0.0 {
            return Err(Error::InvalidInput(format!(
                "tophat half width must be positive, got {half_width}"
            )));
        }
        Ok(Self {
            kind: ProfileKind::TopHat { half_width },
            even: true,
            second_moment: half_width * half_width / 3.0,
        })
    }

    /// Top-hat whose RMS width equals the mirror-plane radius of `geometry`.
    pub fn tophat_for(geometry: &Geometry) -> Result<Self> {
        Self::tophat(3f64.sqrt() * geometry.mirror_radius())
    }

    /// Tabulated density, renormalized to unit mass.
    pub fn tabulated(x: Vec<f64>, density: Vec<f64>) -> Result<Self> {
        if x.len() != density.len() {
            return Err(Error::InvalidInput(format!(
                "tabulated profile has {} abscissae but {} densities",
                x.len(),
                density.len()
            )));
        }
        if x.len() < 2 {
            return Err(Error::InvalidInput(
                "tabulated profile needs at least two points".into(),
            ));
        }
        for (&xi, &di) in x.iter().zip(&density) {
            ensure_finite("tabulated abscissa", xi)?;
            ensure_finite("tabulated density", di)?;
            if di < 0.0 {
                return Err(Error::InvalidInput(format!("negative density {di} at x = {xi}")));
            }
        }
        if x.windows(2).any(|w| w[1] <= w[0]) {
            return Err(Error::InvalidInput(
                "tabulated abscissae must be strictly increasing".into(),
            ));
        }
        let mut table = Tabulated { x, density };
        let mass = table.mass();
        if !(mass > 0.0 && mass.is_finite()) {
            return Err(Error::InvalidInput(format!(
                "tabulated profile has non-positive mass {mass}"
            )));
        }
        table.density.iter_mut().for_each(|d| *d /= mass);

        let peak = table.density.iter().cloned().fold(0.0, f64::max);
        let even = table
            .x
            .iter()
            .all(|&xi| (table.eval(xi) - table.eval(-xi)).abs() <= EVENNESS_TOLERANCE * peak);
        let second_moment = table.raw_moment(2);
        Ok(Self {
            kind: ProfileKind::Tabulated(table),
            even,
            second_moment,
        })
    }

    pub fn kind(&self) -> &ProfileKind {
        &self.kind
    }

    /// Whether `density(-x) == density(x)` holds to [`EVENNESS_TOLERANCE`].
    pub fn is_even(&self) -> bool {
        self.even
    }

    /// ⟨x_m²⟩.
    pub fn second_moment(&self) -> f64 {
        self.second_moment
    }

    pub fn rms(&self) -> f64 {
        self.second_moment.sqrt()
    }

    pub fn density(&self, x: f64) -> f64 {
        match &self.kind {
            ProfileKind::Gaussian { rms } => {
                let z = x / rms;
                (-0.5 * z * z).exp() / ((2.0 * std::f64::consts::PI).sqrt() * rms)
            }
            ProfileKind::TopHat { half_width } => {
                if x.abs() <= *half_width {
                    0.5 / half_width
                } else {
                    0.0
                }
            }
            ProfileKind::Tabulated(t) => t.eval(x),
        }
    }

    /// Points where the density is not smooth, including the ends of the
    /// integration domain. Integrators must not straddle them.
    pub fn breakpoints(&self) -> Vec<f64> {
        match &self.kind {
            ProfileKind::Gaussian { rms } => {
                let t = GAUSSIAN_TRUNCATION * rms;
                vec![-t, t]
            }
            ProfileKind::TopHat { half_width } => vec![-half_width, *half_width],
            ProfileKind::Tabulated(t) => t.x.clone(),
        }
    }

    /// Profile reflected through the origin.
    pub fn mirrored(&self) -> Self {
        match &self.kind {
            ProfileKind::Tabulated(t) => {
                let x = t.x.iter().rev().map(|v| -v).collect();
                let d = t.density.iter().rev().cloned().collect();
                Self::tabulated(x, d).expect("reflection of a valid table is valid")
            }
            _ => self.clone(),
        }
    }
}

/// Whether the linear theory is adequate at the evaluated point.
#[derive(Debug, Clone, Copy, PartialEq)]
pub enum Regime {
    LinearOk { deviation: f64 },
    NonlinearRequired { deviation: f64 },
}

impl Regime {
    /// Classifies `|x / x_linear - 1|` against `threshold`.
    pub fn classify(x_avg: f64, x_avg_linear: f64, threshold: f64) -> Self {
        let deviation = if x_avg_linear == 0.0 {
            if x_avg == 0.0 {
                0.0
            } else {
                f64::INFINITY
            }
        } else {
            (x_avg / x_avg_linear - 1.0).abs()
        };
        if deviation > threshold {
            Regime::NonlinearRequired { deviation }
        } else {
            Regime::LinearOk { deviation }
        }
    }

    pub fn deviation(&self) -> f64 {
        match *self {
            Regime::LinearOk { deviation } | Regime::NonlinearRequired { deviation } => deviation,
        }
    }

    pub fn label(&self) -> &'static str {
        match self {
            Regime::LinearOk { .. } => "linear_ok",
            Regime::NonlinearRequired { .. } => "nonlinear_required",
        }
    }
}

/// Meter read-out at one operating point.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct AmplifierResult {
    pub x_avg: f64,
    pub x_avg_linear: f64,
    /// `(linear, nonlinear)` amplification factors when configured.
    pub amp_factor: Option<(f64, f64)>,
    pub p_post: f64,
    pub regime: Regime,
}

#[cfg(test)]
mod tests {
    use super::*;
    use approx::assert_relative_eq;

    #[test]
    fn mirror_radius_reference_setup() {
        let g = Geometry::new(640e-6, 500e-6, 0.296).unwrap();
        assert_relative_eq!(g.mirror_radius(), 598.56e-6, max_relative = 1e-14);
    }

    #[test]
    fn mirror_radius_endpoints() {
        let g = Geometry::new(3e-4, 3e-4, 0.37).unwrap();
        assert_relative_eq!(mirror_radius(&g), 3e-4, max_relative = 1e-15);
        assert_eq!(Geometry::new(1e-3, 2e-3, 0.0).unwrap().mirror_radius(), 1e-3);
        assert_eq!(Geometry::new(1e-3, 2e-3, 1.0).unwrap().mirror_radius(), 2e-3);
    }

    #[test]
    fn mirror_radius_monotone_in_gamma() {
        let mut prev = 0.0;
        for i in 0..=100 {
            let g = Geometry::new(2e-4, 9e-4, i as f64 / 100.0).unwrap();
            let a_m = g.mirror_radius();
            assert!(a_m >= prev && (2e-4..=9e-4).contains(&a_m));
            prev = a_m;
        }
    }

    #[test]
    fn geometry_rejects_bad_inputs() {
        assert!(Geometry::new(-1.0, 1.0, 0.5).is_err());
        assert!(Geometry::new(1.0, 0.0, 0.5).is_err());
        assert!(Geometry::new(1.0, 1.0, 1.5).is_err());
        assert!(Geometry::new(f64::NAN, 1.0, 0.5).is_err());
        assert!(Geometry::with_paths(1.0, 1.0, 0.3, Some(1.0), Some(1.0)).is_err());
        let g = Geometry::from_path_lengths(1.0, 1.0, 0.296, 0.704).unwrap();
        assert_relative_eq!(g.gamma(), 0.296, max_relative = 1e-15);
    }

    #[test]
    fn scale_to_detector_examples() {
        let g = Geometry::new(7e-4, 7e-4, 0.5).unwrap();
        assert_relative_eq!(scale_to_detector(1.0, &g, 3).unwrap(), 1.0, max_relative = 1e-14);

        let g = Geometry::new(640e-6, 500e-6, 0.296).unwrap();
        let v = scale_to_detector(2e-4, &g, 1).unwrap();
        assert_relative_eq!(v, 2e-4 * 500.0 / 598.56, max_relative = 1e-14);
        assert!((v - 1.6707e-4).abs() < 1e-8);
        let r = 500.0 / 598.56;
        assert_relative_eq!(scale_to_detector(3.0, &g, 2).unwrap(), 3.0 * r * r, max_relative = 1e-14);
        assert!(scale_to_detector(1.0, &g, 0).is_err());
    }

    #[test]
    fn selection_pair_requires_unit_norm() {
        let one = ComplexAmp::new(1.0, 0.0);
        let zero = ComplexAmp::new(0.0, 0.0);
        assert!(SelectionPair::new([one, zero], [zero, one]).is_ok());
        assert!(SelectionPair::new([one, one], [zero, one]).is_err());
        assert!(SelectionPair::new([ComplexAmp::new(f64::NAN, 0.0), zero], [zero, one]).is_err());
        let p = SelectionPair::new([one, zero], [zero, one]).unwrap();
        assert_eq!(p.overlap(), zero);
    }

    #[test]
    fn gaussian_second_moment_is_exact() {
        let p = BeamProfile::gaussian(3.2e-4).unwrap();
        assert_eq!(p.second_moment(), 3.2e-4 * 3.2e-4);
        assert!(p.is_even());
    }

    #[test]
    fn tabulated_is_renormalized_idempotently() {
        let x: Vec<f64> = (0..41).map(|i| -1e-3 + 5e-5 * i as f64).collect();
        let d: Vec<f64> = x.iter().map(|v| 3.0 * (1.0 - (v / 1e-3).powi(2))).collect();
        let p = BeamProfile::tabulated(x, d).unwrap();
        assert!(p.is_even());
        let ProfileKind::Tabulated(t) = p.kind() else { unreachable!() };
        assert!((t.mass() - 1.0).abs() < 1e-10);
        let again = BeamProfile::tabulated(t.x().to_vec(), t.density().to_vec()).unwrap();
        let ProfileKind::Tabulated(t2) = again.kind() else { unreachable!() };
        for (a, b) in t.density().iter().zip(t2.density()) {
            assert!((a - b).abs() <= 1e-14 * a.abs().max(1.0));
        }
    }

    #[test]
    fn tabulated_evenness_detection() {
        let x = vec![-2.0, -1.0, 0.0, 1.0, 2.0];
        let even = BeamProfile::tabulated(x.clone(), vec![0.0, 1.0, 2.0, 1.0, 0.0]).unwrap();
        assert!(even.is_even());
        assert!(even.mirrored().is_even());
        let odd = BeamProfile::tabulated(x, vec![0.0, 1.0, 2.0, 1.5, 0.0]).unwrap();
        assert!(!odd.is_even());
        assert!(!odd.mirrored().is_even());
        // symmetric shape on an asymmetric grid still counts as even
        let lopsided = BeamProfile::tabulated(
            vec![-2.0, -1.0, 0.0, 0.5, 1.0, 2.0],
            vec![0.0, 1.0, 2.0, 1.5, 1.0, 0.0],
        )
        .unwrap();
        assert!(lopsided.is_even());
    }

    #[test]
    fn tabulated_rejects_bad_tables() {
        assert!(BeamProfile::tabulated(vec![0.0, 1.0], vec![1.0]).is_err());
        assert!(BeamProfile::tabulated(vec![0.0], vec![1.0]).is_err());
        assert!(BeamProfile::tabulated(vec![0.0, 0.0], vec![1.0, 1.0]).is_err());
        assert!(BeamProfile::tabulated(vec![0.0, 1.0], vec![1.0, -1.0]).is_err());
        assert!(BeamProfile::tabulated(vec![0.0, 1.0], vec![0.0, 0.0]).is_err());
    }

    #[test]
    fn regime_classification() {
        assert_eq!(Regime::classify(0.0, 0.0, 0.01).label(), "linear_ok");
        assert_eq!(Regime::classify(0.96, 1.0, 0.01).label(), "nonlinear_required");
        assert_eq!(Regime::classify(0.995, 1.0, 0.01).label(), "linear_ok");
    }
}
