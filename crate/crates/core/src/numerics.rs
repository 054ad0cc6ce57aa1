//! One-dimensional numerical kernels: adaptive Gauss-Kronrod quadrature,
//! golden-section maximization and Brent root bracketing.

use std::cmp::Ordering;
use std::collections::BinaryHeap;

use crate::error::{Error, Result};

// Kronrod abscissae (positive half, descending) and weights for the 7/15 pair.
const XGK: [f64; 8] = [
    0.991_455_371_120_812_6,
    0.949_107_912_342_758_5,
    0.864_864_423_359_769_1,
    0.741_531_185_599_394_4,
    0.586_087_235_467_691_1,
    0.405_845_151_377_397_2,
    0.207_784_955_007_898_5,
    0.0,
];
const WGK: [f64; 8] = [
    0.022_935_322_010_529_22,
    0.063_092_092_629_978_55,
    0.104_790_010_322_250_2,
    0.140_653_259_715_525_9,
    0.169_004_726_639_267_9,
    0.190_350_578_064_785_4,
    0.204_432_940_075_298_9,
    0.209_482_141_084_727_8,
];
// Gauss weights at XGK[1], XGK[3], XGK[5] and the center.
const WG: [f64; 4] = [
    0.129_484_966_168_869_7,
    0.279_705_391_489_276_7,
    0.381_830_050_505_118_9,
    0.417_959_183_673_469_4,
];

/// Compensated (Neumaier) running sum.
#[derive(Debug, Default, Clone, Copy)]
pub struct KahanSum {
    sum: f64,
    comp: f64,
}

impl KahanSum {
    pub fn add(&mut self, v: f64) {
        let t = self.sum + v;
        if self.sum.abs() >= v.abs() {
            self.comp += (self.sum - t) + v;
        } else {
            self.comp += (v - t) + self.sum;
        }
        self.sum = t;
    }

    pub fn value(&self) -> f64 {
        self.sum + self.comp
    }
}

impl FromIterator<f64> for KahanSum {
    fn from_iter<I: IntoIterator<Item = f64>>(iter: I) -> Self {
        let mut s = KahanSum::default();
        iter.into_iter().for_each(|v| s.add(v));
        s
    }
}

/// Tolerances and budget for [`integrate`].
#[derive(Debug, Clone, Copy)]
pub struct QuadTolerance {
    pub abs: f64,
    pub rel: f64,
    /// Maximum number of live subintervals before giving up.
    pub max_intervals: usize,
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Integral {
    pub value: f64,
    pub error: f64,
    pub intervals: usize,
}

fn gk15<F: Fn(f64) -> f64>(f: &F, lo: f64, hi: f64) -> (f64, f64) {
    let center = 0.5 * (lo + hi);
    let half = 0.5 * (hi - lo);
    let fc = f(center);
    let mut kronrod = WGK[7] * fc;
    let mut gauss = WG[3] * fc;
    for j in 0..7 {
        let dx = half * XGK[j];
        let pair = f(center - dx) + f(center + dx);
        kronrod += WGK[j] * pair;
        if j % 2 == 1 {
            gauss += WG[j / 2] * pair;
        }
    }
    (kronrod * half, ((kronrod - gauss) * half).abs())
}

struct Panel {
    lo: f64,
    hi: f64,
    value: f64,
    error: f64,
}

impl PartialEq for Panel {
    fn eq(&self, other: &Self) -> bool {
        self.error.total_cmp(&other.error) == Ordering::Equal
    }
}
impl Eq for Panel {}
impl PartialOrd for Panel {
    fn partial_cmp(&self, other: &Self) -> Option<Ordering> {
        Some(self.cmp(other))
    }
}
impl Ord for Panel {
    fn cmp(&self, other: &Self) -> Ordering {
        self.error.total_cmp(&other.error)
    }
}

/// Globally adaptive Gauss-Kronrod (7/15) integration over the union of
/// `panels`, bisecting the panel with the largest error estimate until the
/// total estimate meets `max(abs, rel * |I|)`.
pub fn integrate<F: Fn(f64) -> f64>(f: F, panels: &[(f64, f64)], tol: QuadTolerance) -> Result<Integral> {
    let mut heap: BinaryHeap<Panel> = panels
        .iter()
        .filter(|(lo, hi)| hi > lo)
        .map(|&(lo, hi)| {
            let (value, error) = gk15(&f, lo, hi);
            Panel { lo, hi, value, error }
        })
        .collect();
    loop {
        let value: KahanSum = heap.iter().map(|p| p.value).collect();
        let value = value.value();
        let error: f64 = heap.iter().map(|p| p.error).sum();
        if !value.is_finite() || !error.is_finite() {
            return Err(Error::NumericalFailure {
                what: "adaptive quadrature",
                error_estimate: error,
            });
        }
        if error <= tol.abs.max(tol.rel * value.abs()) {
            return Ok(Integral {
                value,
                error,
                intervals: heap.len(),
            });
        }
        if heap.len() >= tol.max_intervals {
            return Err(Error::NumericalFailure {
                what: "adaptive quadrature",
                error_estimate: error,
            });
        }
        let worst = heap.pop().expect("non-empty when error is positive");
        let mid = 0.5 * (worst.lo + worst.hi);
        if mid <= worst.lo || mid >= worst.hi {
            // cannot split further in floating point
            return Err(Error::NumericalFailure {
                what: "adaptive quadrature",
                error_estimate: error,
            });
        }
        for (lo, hi) in [(worst.lo, mid), (mid, worst.hi)] {
            let (value, error) = gk15(&f, lo, hi);
            heap.push(Panel { lo, hi, value, error });
        }
    }
}

/// Splits every `[b_i, b_{i+1}]` so that no panel is longer than `max_len`.
pub fn panels_between(breakpoints: &[f64], max_len: f64) -> Vec<(f64, f64)> {
    let mut out = Vec::new();
    for w in breakpoints.windows(2) {
        let (lo, hi) = (w[0], w[1]);
        let pieces = if max_len.is_finite() && max_len > 0.0 {
            ((hi - lo) / max_len).ceil().max(1.0) as usize
        } else {
            1
        };
        let step = (hi - lo) / pieces as f64;
        for i in 0..pieces {
            let a = lo + step * i as f64;
            let b = if i + 1 == pieces { hi } else { lo + step * (i + 1) as f64 };
            out.push((a, b));
        }
    }
    out
}

const INV_PHI: f64 = 0.618_033_988_749_894_8;

/// Golden-section search for the maximum of a unimodal `f` on `[lo, hi]`.
/// Returns `(argmax, max)`.
pub fn golden_section_max<F: Fn(f64) -> f64>(f: F, mut lo: f64, mut hi: f64, xtol: f64) -> (f64, f64) {
    let mut x1 = hi - INV_PHI * (hi - lo);
    let mut x2 = lo + INV_PHI * (hi - lo);
    let mut f1 = f(x1);
    let mut f2 = f(x2);
    for _ in 0..500 {
        if hi - lo <= xtol {
            break;
        }
        if f1 < f2 {
            lo = x1;
            x1 = x2;
            f1 = f2;
            x2 = lo + INV_PHI * (hi - lo);
            f2 = f(x2);
        } else {
            hi = x2;
            x2 = x1;
            f2 = f1;
            x1 = hi - INV_PHI * (hi - lo);
            f1 = f(x1);
        }
    }
    if f1 >= f2 {
        (x1, f1)
    } else {
        (x2, f2)
    }
}

/// Brent's bracketing root finder on `[lo, hi]`; `f(lo)` and `f(hi)` must
/// differ in sign (or one of them be zero).
pub fn brent_root<F: Fn(f64) -> f64>(f: F, lo: f64, hi: f64, xtol: f64, max_iter: usize) -> Result<f64> {
    let (mut a, mut b) = (lo, hi);
    let (mut fa, mut fb) = (f(a), f(b));
    if fa == 0.0 {
        return Ok(a);
    }
    if fb == 0.0 {
        return Ok(b);
    }
    if fa.signum() == fb.signum() {
        return Err(Error::InvalidInput(format!(
            "root not bracketed on [{lo:e}, {hi:e}]"
        )));
    }
    let (mut c, mut fc) = (a, fa);
    let mut d = b - a;
    let mut e = d;
    for _ in 0..max_iter {
        if fb.signum() == fc.signum() {
            c = a;
            fc = fa;
            d = b - a;
            e = d;
        }
        if fc.abs() < fb.abs() {
            a = b;
            b = c;
            c = a;
            fa = fb;
            fb = fc;
            fc = fa;
        }
        let tol = 2.0 * f64::EPSILON * b.abs() + 0.5 * xtol;
        let m = 0.5 * (c - b);
        if m.abs() <= tol || fb == 0.0 {
            return Ok(b);
        }
        if e.abs() >= tol && fa.abs() > fb.abs() {
            let s = fb / fa;
            let (mut p, mut q);
            if a == c {
                p = 2.0 * m * s;
                q = 1.0 - s;
            } else {
                let qa = fa / fc;
                let r = fb / fc;
                p = s * (2.0 * m * qa * (qa - r) - (b - a) * (r - 1.0));
                q = (qa - 1.0) * (r - 1.0) * (s - 1.0);
            }
            if p > 0.0 {
                q = -q;
            } else {
                p = -p;
            }
            if 2.0 * p < (3.0 * m * q - (tol * q).abs()).min((e * q).abs()) {
                e = d;
                d = p / q;
            } else {
                d = m;
                e = m;
            }
        } else {
            d = m;
            e = m;
        }
        a = b;
        fa = fb;
        b += if d.abs() > tol { d } else { tol.copysign(m) };
        fb = f(b);
    }
    Err(Error::NumericalFailure {
        what: "root bracketing",
        error_estimate: (c - b).abs(),
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use approx::assert_relative_eq;
    use std::f64::consts::PI;

    const TIGHT: QuadTolerance = QuadTolerance {
        abs: 1e-14,
        rel: 1e-12,
        max_intervals: 4000,
    };

    #[test]
    fn integrates_polynomials_exactly() {
        let r = integrate(|x| x.powi(6) - 2.0 * x, &[(0.0, 2.0)], TIGHT).unwrap();
        assert_relative_eq!(r.value, 128.0 / 7.0 - 4.0, max_relative = 1e-14);
    }

    #[test]
    fn integrates_oscillatory_gaussian() {
        // ∫ exp(-x^2/2) cos(40 x) dx / sqrt(2 pi) = exp(-800)  ~ 0; use a milder frequency
        let f = |x: f64| (-0.5 * x * x).exp() * (6.0 * x).cos() / (2.0 * PI).sqrt();
        let panels = panels_between(&[-12.0, 12.0], PI / 12.0);
        let r = integrate(f, &panels, TIGHT).unwrap();
        assert_relative_eq!(r.value, (-18.0f64).exp(), max_relative = 1e-6, epsilon = 1e-14);
    }

    #[test]
    fn reports_failure_when_budget_exhausted() {
        let tol = QuadTolerance {
            abs: 0.0,
            rel: 0.0,
            max_intervals: 8,
        };
        let err = integrate(|x: f64| x.abs().sqrt(), &[(-1.0, 1.0)], tol).unwrap_err();
        assert!(matches!(err, Error::NumericalFailure { .. }));
    }

    #[test]
    fn panel_splitting_respects_length() {
        let p = panels_between(&[-1.0, 0.0, 3.0], 0.7);
        assert!(p.iter().all(|(a, b)| b - a <= 0.7 + 1e-15));
        assert_eq!(p.first().unwrap().0, -1.0);
        assert_eq!(p.last().unwrap().1, 3.0);
        assert!(p.windows(2).all(|w| w[0].1 == w[1].0));
    }

    #[test]
    fn golden_section_finds_peak() {
        let (x, fx) = golden_section_max(|x| -(x - 0.3).powi(2) + 2.0, -1.0, 2.0, 1e-12);
        assert!((x - 0.3).abs() < 1e-7);
        assert_relative_eq!(fx, 2.0, max_relative = 1e-14);
    }

    #[test]
    fn brent_solves_cubic() {
        let r = brent_root(|x| x * x * x - 2.0, 0.0, 2.0, 1e-15, 200).unwrap();
        assert_relative_eq!(r, 2f64.cbrt(), max_relative = 1e-14);
        assert!(brent_root(|x| x * x + 1.0, -1.0, 1.0, 1e-12, 100).is_err());
    }

    #[test]
    fn kahan_sum_recovers_small_terms() {
        let s: KahanSum = [1.0, 1e-16, 1e-16, -1.0].into_iter().collect();
        assert_relative_eq!(s.value(), 2e-16, max_relative = 1e-12);
    }
}
