//! Brute-force reference simulation of the joint path/meter state.
//!
//! The meter wavefunction is sampled on a grid as `sqrt(density)` with zero
//! phase, tensored with the pre-selected path state, kicked pointwise by
//! `exp(-i k x A)` and projected onto the post-selected state. Moments of the
//! projected (unnormalized) meter state are then summed with trapezoidal
//! weights. Nothing here uses the closed-form moment formulas.

use crate::error::{Error, Result};
use crate::model::{BeamProfile, ComplexAmp, Geometry, SelectionPair};
use crate::numerics::KahanSum;
use crate::par::{self, Execution};

/// Initial number of grid intervals.
pub const DEFAULT_INTERVALS: usize = 1 << 14;
/// Hard ceiling for automatic refinement.
pub const MAX_INTERVALS: usize = 1 << 20;
/// Relative discretization error accepted by [`simulate`].
pub const RESOLUTION_TOLERANCE: f64 = 1e-8;
/// Minimum grid points per oscillation period `pi / k`.
pub const POINTS_PER_PERIOD: f64 = 20.0;

const NORM_TOLERANCE: f64 = 1e-10;
const VANISHING_PROBABILITY: f64 = 1e-16;

/// Sampled joint wavefunction `psi_up(x)|cw> + psi_down(x)|ccw>`.
#[derive(Debug, Clone)]
pub struct OracleGrid {
    pub points: Vec<f64>,
    pub weights: Vec<f64>,
    /// Trapezoid weights of the half-resolution subgrid (every other point
    /// within each piece; zero on the skipped points).
    pub half_weights: Vec<f64>,
    pub psi_up: Vec<ComplexAmp>,
    pub psi_down: Vec<ComplexAmp>,
}

/// Composite trapezoid grid: each smooth piece between profile breakpoints
/// gets an even number of equal intervals, about `intervals` in total.
fn trapezoid_grid(profile: &BeamProfile, intervals: usize) -> (Vec<f64>, Vec<f64>, Vec<f64>) {
    let breaks = profile.breakpoints();
    let span = breaks[breaks.len() - 1] - breaks[0];
    let mut points = vec![breaks[0]];
    let mut weights = vec![0.0];
    let mut half_weights = vec![0.0];
    for w in breaks.windows(2) {
        let (lo, hi) = (w[0], w[1]);
        let share = (intervals as f64 * (hi - lo) / span).round() as usize;
        let m = share.max(2).next_multiple_of(2);
        let h = (hi - lo) / m as f64;
        *weights.last_mut().unwrap() += 0.5 * h;
        *half_weights.last_mut().unwrap() += h;
        for i in 1..=m {
            points.push(if i == m { hi } else { lo + h * i as f64 });
            weights.push(if i == m { 0.5 * h } else { h });
            half_weights.push(match (i == m, i % 2 == 0) {
                (true, _) => h,
                (false, true) => 2.0 * h,
                (false, false) => 0.0,
            });
        }
    }
    (points, weights, half_weights)
}

impl OracleGrid {
    /// Samples `sqrt(density(x)) |pre>` on roughly `intervals` trapezoid panels.
    pub fn new(profile: &BeamProfile, pair: &SelectionPair, intervals: usize) -> Result<Self> {
        let (points, weights, half_weights) = trapezoid_grid(profile, intervals);
        let amp: Vec<f64> = points.iter().map(|&x| profile.density(x).sqrt()).collect();
        let pre = pair.pre();
        let grid = Self {
            psi_up: amp.iter().map(|&a| pre[0] * a).collect(),
            psi_down: amp.iter().map(|&a| pre[1] * a).collect(),
            points,
            weights,
            half_weights,
        };
        let norm = grid.norm();
        if (norm - 1.0).abs() > NORM_TOLERANCE {
            return Err(Error::ResolutionFailure {
                estimate: (norm - 1.0).abs(),
                points: grid.points.len(),
            });
        }
        Ok(grid)
    }

    /// `sum w (|psi_up|^2 + |psi_down|^2)`.
    pub fn norm(&self) -> f64 {
        let s: KahanSum = self
            .weights
            .iter()
            .zip(self.psi_up.iter().zip(&self.psi_down))
            .map(|(w, (u, d))| w * (u.norm_sqr() + d.norm_sqr()))
            .collect();
        s.value()
    }

    /// Applies the mirror kick `exp(-i k x A)` pointwise.
    pub fn kicked(&self, k: f64) -> Self {
        let mut out = self.clone();
        for ((x, u), d) in self.points.iter().zip(&mut out.psi_up).zip(&mut out.psi_down) {
            let phase = ComplexAmp::from_polar(1.0, -k * x);
            *u *= phase;
            *d *= phase.conj();
        }
        out
    }

    /// Meter wavefunction conditioned on the post-selected path state.
    pub fn post_selected(&self, post: &[ComplexAmp; 2]) -> Vec<ComplexAmp> {
        let (f0, f1) = (post[0].conj(), post[1].conj());
        self.psi_up
            .iter()
            .zip(&self.psi_down)
            .map(|(u, d)| f0 * u + f1 * d)
            .collect()
    }
}

#[derive(Debug, Clone, Copy, Default)]
struct RawSums {
    p: f64,
    x: f64,
    x2: f64,
    x_abs: f64,
}

#[derive(Default)]
struct Accumulator {
    p: KahanSum,
    x: KahanSum,
    x2: KahanSum,
    x_abs: KahanSum,
}

impl Accumulator {
    fn add(&mut self, x: f64, mass: f64) {
        self.p.add(mass);
        self.x.add(x * mass);
        self.x2.add(x * x * mass);
        self.x_abs.add(x.abs() * mass);
    }

    fn finish(&self) -> RawSums {
        RawSums {
            p: self.p.value(),
            x: self.x.value(),
            x2: self.x2.value(),
            x_abs: self.x_abs.value(),
        }
    }
}

/// Trapezoid sums of `|Phi_f|^2 x^j` on the full grid and on its
/// half-resolution subgrid.
fn raw_sums(profile: &BeamProfile, pair: &SelectionPair, k: f64, intervals: usize) -> Result<(RawSums, RawSums)> {
    let grid = OracleGrid::new(profile, pair, intervals)?.kicked(k);
    let meter = grid.post_selected(pair.post());
    let (mut fine, mut coarse) = (Accumulator::default(), Accumulator::default());
    for (i, (&x, phi)) in grid.points.iter().zip(&meter).enumerate() {
        let dens = phi.norm_sqr();
        fine.add(x, grid.weights[i] * dens);
        if grid.half_weights[i] != 0.0 {
            coarse.add(x, grid.half_weights[i] * dens);
        }
    }
    Ok((fine.finish(), coarse.finish()))
}

/// Output of [`simulate`]. Moments are detector-plane values.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct OracleRecord {
    pub x_avg: f64,
    pub x2_avg: f64,
    pub p_post: f64,
    /// Relative discretization error estimate from the half-resolution pass.
    pub error_estimate: f64,
    /// Grid intervals used for the accepted pass.
    pub intervals: usize,
}

// Below 1e-6 of the scale a value is treated as zero: the mean of an
// (almost) odd integrand is otherwise dominated by summation roundoff.
fn relative(err: f64, value: f64, scale: f64) -> f64 {
    let floor = 1e-6 * scale;
    if err == 0.0 {
        0.0
    } else {
        err / value.abs().max(floor).max(f64::MIN_POSITIVE)
    }
}

/// Simulates one post-selected measurement on the grid, doubling resolution
/// from [`DEFAULT_INTERVALS`] up to [`MAX_INTERVALS`] until the Richardson
/// error estimate falls below [`RESOLUTION_TOLERANCE`].
pub fn simulate(profile: &BeamProfile, pair: &SelectionPair, geometry: &Geometry, k: f64) -> Result<OracleRecord> {
    simulate_from(profile, pair, geometry, k, DEFAULT_INTERVALS)
}

/// [`simulate`] with an explicit starting resolution.
pub fn simulate_from(
    profile: &BeamProfile,
    pair: &SelectionPair,
    geometry: &Geometry,
    k: f64,
    start_intervals: usize,
) -> Result<OracleRecord> {
    if !k.is_finite() {
        return Err(Error::InvalidInput(format!("k must be finite, got {k}")));
    }
    let breaks = profile.breakpoints();
    let span = breaks[breaks.len() - 1] - breaks[0];
    // at least POINTS_PER_PERIOD samples per period pi/k
    let needed = (span * k.abs() * POINTS_PER_PERIOD / std::f64::consts::PI).ceil() as usize;
    let mut intervals = start_intervals.max(needed).max(4).next_power_of_two();
    if intervals > MAX_INTERVALS {
        return Err(Error::ResolutionFailure {
            estimate: f64::INFINITY,
            points: intervals,
        });
    }
    let scale = geometry.sigma() / geometry.mirror_radius();
    loop {
        let (fine, coarse) = raw_sums(profile, pair, k, intervals)?;
        if fine.p < VANISHING_PROBABILITY {
            return Err(Error::VanishingPostSelection { denominator: fine.p });
        }
        let richardson = |f: f64, c: f64| (f + (f - c) / 3.0, (f - c).abs() / 3.0);
        let (p, ep) = richardson(fine.p, coarse.p);
        let (x, ex) = richardson(fine.x, coarse.x);
        let (x2, ex2) = richardson(fine.x2, coarse.x2);
        let rel_p = relative(ep, p, p);
        let estimate = rel_p + relative(ex, x, fine.x_abs).max(relative(ex2, x2, x2));
        if estimate <= RESOLUTION_TOLERANCE {
            return Ok(OracleRecord {
                x_avg: scale * x / p,
                x2_avg: scale * scale * x2 / p,
                p_post: p,
                error_estimate: estimate,
                intervals,
            });
        }
        if intervals >= MAX_INTERVALS {
            return Err(Error::ResolutionFailure {
                estimate,
                points: intervals + 1,
            });
        }
        intervals *= 2;
    }
}

/// One oracle job.
#[derive(Debug, Clone)]
pub struct OracleCase {
    pub profile: BeamProfile,
    pub pair: SelectionPair,
    pub geometry: Geometry,
    pub k: f64,
}

/// Runs independent oracle cases, in parallel when requested.
pub fn simulate_batch(cases: &[OracleCase], exec: Execution) -> Vec<Result<OracleRecord>> {
    par::map(cases, exec, |c| simulate(&c.profile, &c.pair, &c.geometry, c.k))
}
