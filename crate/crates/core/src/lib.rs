//! All-order model of weak-value amplification in a Sagnac interferometer.
//!
//! The crate computes the post-selected meter displacement of a tilted-mirror
//! Sagnac amplifier exactly in the coupling `k`, next to the first-order
//! (weak-value) prediction, and offers:
//!
//! * [`transition`]: pre/post-selected path states, weak values, the exact
//!   transition amplitude;
//! * [`moments`]: trigonometric profile moments and the all-order moment
//!   formulas;
//! * [`amplifier`]: linear reference, amplification factor, optimal phase,
//!   inversion from displacement to `k`;
//! * [`oracle`]: a brute-force grid simulation used as an independent check;
//! * [`config`] and [`run`]: the JSON-configured sweep driver behind the
//!   `weakamp` binary.
//!
//! Lengths are meters, wavenumbers inverse meters, angles radians.

pub mod amplifier;
pub mod config;
pub mod error;
pub mod model;
pub mod moments;
pub mod numerics;
pub mod oracle;
pub mod par;
pub mod run;
pub mod transition;

pub use amplifier::{
    amplification_factor, displacement_linear, evaluate, invert_k, max_displacement, optimal_phase,
    AmplificationConfig,
};
pub use error::{Error, Result};
pub use model::{
    mirror_radius, scale_to_detector, AmplifierResult, BeamProfile, ComplexAmp, Geometry,
    ProfileKind, Regime, SelectionPair,
};
pub use moments::{
    displacement_even, displacement_gaussian, moment_full, postselection_probability, trig_moments,
    TrigMoments,
};
pub use oracle::{simulate, OracleRecord};
pub use par::Execution;
pub use transition::{sagnac_states, transition_amplitude, weak_value, WeakValue};
