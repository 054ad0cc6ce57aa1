//! Weak values and the exact which-path transition amplitude.
//!
//! The measured observable is the path operator `A = |cw><cw| - |ccw><ccw|`,
//! so `A^2 = 1` and `exp(-i k x A) = diag(exp(-i k x), exp(i k x))`.

use std::f64::consts::FRAC_1_SQRT_2;

use crate::error::{Error, Result};
use crate::model::{ensure_finite_amp, ComplexAmp, SelectionPair};

/// Weak value of the path operator together with the overlap it was
/// normalized by.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct WeakValue {
    value: ComplexAmp,
    overlap: ComplexAmp,
}

impl WeakValue {
    /// Wraps a raw weak value, e.g. for exploring complex `A_w` directly.
    pub fn from_parts(value: ComplexAmp, overlap: ComplexAmp) -> Result<Self> {
        ensure_finite_amp("weak value", value)?;
        ensure_finite_amp("overlap", overlap)?;
        if overlap.norm() == 0.0 {
            return Err(Error::OrthogonalSelection);
        }
        Ok(Self { value, overlap })
    }

    pub fn value(&self) -> ComplexAmp {
        self.value
    }

    /// ⟨f|i⟩.
    pub fn overlap(&self) -> ComplexAmp {
        self.overlap
    }

    /// `(1 + |A_w|^2) / 2`.
    pub fn alpha_plus(&self) -> f64 {
        0.5 * (1.0 + self.value.norm_sqr())
    }

    /// `(1 - |A_w|^2) / 2`.
    pub fn alpha_minus(&self) -> f64 {
        0.5 * (1.0 - self.value.norm_sqr())
    }

    /// Transition amplitude in the factored form
    /// `<f|i> (cos kx - i A_w sin kx)`.
    pub fn amplitude(&self, k: f64, x_m: f64) -> ComplexAmp {
        let (s, c) = (k * x_m).sin_cos();
        self.overlap * (ComplexAmp::new(c, 0.0) - ComplexAmp::i() * self.value * s)
    }
}

/// Pre-selected input port state and dark-port post-selection of a Sagnac
/// interferometer with phase difference `phi` between the two paths.
pub fn sagnac_states(phi: f64) -> Result<SelectionPair> {
    if !phi.is_finite() {
        return Err(Error::InvalidInput(format!("phi must be finite, got {phi}")));
    }
    let half = ComplexAmp::from_polar(FRAC_1_SQRT_2, -0.5 * phi);
    let pre = [half, ComplexAmp::i() * half.conj()];
    let post = [
        ComplexAmp::new(0.0, FRAC_1_SQRT_2),
        ComplexAmp::new(FRAC_1_SQRT_2, 0.0),
    ];
    SelectionPair::new(pre, post)
}

/// ⟨f|A|i⟩ / ⟨f|i⟩ for the path operator.
pub fn weak_value(pair: &SelectionPair) -> Result<WeakValue> {
    let (pre, post) = (pair.pre(), pair.post());
    let overlap = pair.overlap();
    if overlap.norm() == 0.0 {
        return Err(Error::OrthogonalSelection);
    }
    let matrix_element = post[0].conj() * pre[0] - post[1].conj() * pre[1];
    let value = matrix_element / overlap;
    if !(value.re.is_finite() && value.im.is_finite()) {
        return Err(Error::OrthogonalSelection);
    }
    Ok(WeakValue { value, overlap })
}

/// ⟨f| exp(-i k x_m A) |i⟩ evaluated through the diagonal matrix exponential.
/// Valid for orthogonal pairs as well.
pub fn transition_amplitude(pair: &SelectionPair, k: f64, x_m: f64) -> ComplexAmp {
    let (pre, post) = (pair.pre(), pair.post());
    let kick = ComplexAmp::from_polar(1.0, -k * x_m);
    post[0].conj() * pre[0] * kick + post[1].conj() * pre[1] * kick.conj()
}
