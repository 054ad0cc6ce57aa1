//! JSON run configuration for the `weakamp` driver.
//!
//! Lengths accept a bare number (meters) or a string with an `um`, `mm` or
//! `m` suffix. Angles accept a bare number (radians) or a string with a `deg`
//! or `rad` suffix. Unknown keys are rejected.

use std::path::PathBuf;
use std::str::FromStr;

use serde::de::{self, Deserializer};
use serde::Deserialize;
use serde_json::Value;
use thiserror::Error;

use crate::amplifier::{AmplificationConfig, DEFAULT_DEVIATION_THRESHOLD};
use crate::model::{BeamProfile, Geometry};

#[derive(Debug, Error)]
pub enum ConfigError {
    #[error("{path}: {message}")]
    Schema { path: String, message: String },
    #[error("{key}: {message}")]
    Invalid { key: &'static str, message: String },
    #[error("bad override `{0}`: expected key=value")]
    Override(String),
}

fn invalid(key: &'static str, message: impl Into<String>) -> ConfigError {
    ConfigError::Invalid {
        key,
        message: message.into(),
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum Mode {
    Point,
    SweepSigma,
    SweepPhi,
    Figure2,
    Figure4,
    Invert,
}

impl Mode {
    pub fn name(self) -> &'static str {
        match self {
            Mode::Point => "point",
            Mode::SweepSigma => "sweep-sigma",
            Mode::SweepPhi => "sweep-phi",
            Mode::Figure2 => "figure2",
            Mode::Figure4 => "figure4",
            Mode::Invert => "invert",
        }
    }
}

impl FromStr for Mode {
    type Err = String;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        serde_json::from_value(Value::String(s.to_string())).map_err(|_| {
            format!("unknown mode `{s}` (expected point, sweep-sigma, sweep-phi, figure2, figure4 or invert)")
        })
    }
}

#[derive(Deserialize)]
#[serde(untagged)]
enum NumOrStr {
    Num(f64),
    Str(String),
}

fn split_suffix<'a>(s: &'a str, suffixes: &[&'a str]) -> (&'a str, Option<&'a str>) {
    let s = s.trim();
    for suffix in suffixes {
        if let Some(head) = s.strip_suffix(suffix) {
            return (head.trim(), Some(suffix));
        }
    }
    (s, None)
}

fn parse_number(s: &str) -> Result<f64, String> {
    s.parse::<f64>()
        .map_err(|_| format!("`{s}` is not a number"))
        .and_then(|v| if v.is_finite() { Ok(v) } else { Err(format!("`{s}` is not finite")) })
}

/// Length in meters.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Length(pub f64);

impl FromStr for Length {
    type Err = String;

    fn from_str(s: &str) -> Result<Self, String> {
        let (num, unit) = split_suffix(s, &["nm", "um", "μm", "mm", "m"]);
        let scale = match unit {
            Some("nm") => 1e-9,
            Some("um") | Some("μm") => 1e-6,
            Some("mm") => 1e-3,
            _ => 1.0,
        };
        parse_number(num).map(|v| Length(v * scale))
    }
}

impl<'de> Deserialize<'de> for Length {
    fn deserialize<D: Deserializer<'de>>(d: D) -> Result<Self, D::Error> {
        match NumOrStr::deserialize(d)? {
            NumOrStr::Num(v) => Ok(Length(v)),
            NumOrStr::Str(s) => s.parse().map_err(|e: String| {
                de::Error::custom(format!("expected a length (number in m or string with nm/um/mm/m): {e}"))
            }),
        }
    }
}

/// Angle in radians.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Angle(pub f64);

impl FromStr for Angle {
    type Err = String;

    fn from_str(s: &str) -> Result<Self, String> {
        let (num, unit) = split_suffix(s, &["deg", "rad"]);
        let v = parse_number(num)?;
        Ok(Angle(if unit == Some("deg") { v.to_radians() } else { v }))
    }
}

impl<'de> Deserialize<'de> for Angle {
    fn deserialize<D: Deserializer<'de>>(d: D) -> Result<Self, D::Error> {
        match NumOrStr::deserialize(d)? {
            NumOrStr::Num(v) => Ok(Angle(v)),
            NumOrStr::Str(s) => s.parse().map_err(|e: String| {
                de::Error::custom(format!("expected an angle (radians or string with deg/rad): {e}"))
            }),
        }
    }
}

/// Wavenumber in inverse meters; strings may carry a `/m` suffix.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Wavenumber(pub f64);

impl<'de> Deserialize<'de> for Wavenumber {
    fn deserialize<D: Deserializer<'de>>(d: D) -> Result<Self, D::Error> {
        match NumOrStr::deserialize(d)? {
            NumOrStr::Num(v) => Ok(Wavenumber(v)),
            NumOrStr::Str(s) => {
                let (num, _) = split_suffix(&s, &["1/m", "/m"]);
                parse_number(num)
                    .map(Wavenumber)
                    .map_err(|e| de::Error::custom(format!("expected a wavenumber in 1/m: {e}")))
            }
        }
    }
}

#[derive(Debug, Clone, Deserialize)]
#[serde(untagged)]
enum OneOrMany<T> {
    One(T),
    Many(Vec<T>),
}

impl<T> OneOrMany<T> {
    fn into_vec(self) -> Vec<T> {
        match self {
            OneOrMany::One(v) => vec![v],
            OneOrMany::Many(v) => v,
        }
    }
}

#[derive(Debug, Clone, Deserialize)]
#[serde(deny_unknown_fields)]
struct RangeSpec<T> {
    min: T,
    max: T,
    count: usize,
}

#[derive(Debug, Clone, Deserialize)]
#[serde(untagged)]
enum PhiSpec {
    Range(RangeSpec<Angle>),
    Values(OneOrMany<Angle>),
}

/// Beam profile family; Gaussian and default top-hat widths follow the
/// mirror-plane radius of the geometry.
#[derive(Debug, Clone, PartialEq, Deserialize)]
#[serde(tag = "kind", rename_all = "lowercase", deny_unknown_fields)]
pub enum BeamSpec {
    Gaussian,
    Tophat {
        #[serde(default)]
        half_width: Option<Length>,
    },
    Tabulated {
        x: Vec<Length>,
        density: Vec<f64>,
    },
}

impl BeamSpec {
    pub fn build(&self, geometry: &Geometry) -> crate::Result<BeamProfile> {
        match self {
            BeamSpec::Gaussian => BeamProfile::gaussian_for(geometry),
            BeamSpec::Tophat { half_width: Some(l) } => BeamProfile::tophat(l.0),
            BeamSpec::Tophat { half_width: None } => BeamProfile::tophat_for(geometry),
            BeamSpec::Tabulated { x, density } => {
                BeamProfile::tabulated(x.iter().map(|l| l.0).collect(), density.clone())
            }
        }
    }
}

#[derive(Debug, Clone, Default, Deserialize)]
#[serde(deny_unknown_fields)]
struct GeometrySpec {
    a: Option<Length>,
    sigma: Option<Length>,
    gamma: Option<f64>,
    l_lm: Option<Length>,
    l_md: Option<Length>,
}

#[derive(Debug, Clone, Deserialize)]
#[serde(deny_unknown_fields)]
struct AmplificationSpec {
    l_md: Length,
    k0: Option<Wavenumber>,
    wavelength: Option<Length>,
    deviation_threshold: Option<f64>,
}

#[derive(Debug, Clone, Deserialize)]
#[serde(deny_unknown_fields)]
struct RawConfig {
    mode: Mode,
    beam: BeamSpec,
    #[serde(default)]
    geometry: GeometrySpec,
    k: Option<OneOrMany<Wavenumber>>,
    phi: Option<PhiSpec>,
    sigma_range: Option<RangeSpec<Length>>,
    amplification: Option<AmplificationSpec>,
    x_measured: Option<OneOrMany<Length>>,
    output: Option<PathBuf>,
    deviation_threshold: Option<f64>,
}

/// Validated run description.
#[derive(Debug, Clone)]
pub struct RunConfig {
    pub mode: Mode,
    pub beam: BeamSpec,
    /// Geometry at the nominal detector radius (first sweep value in
    /// sigma sweeps).
    pub geometry: Geometry,
    pub ks: Vec<f64>,
    pub phis: Vec<f64>,
    pub sigmas: Vec<f64>,
    pub amplification: Option<AmplificationConfig>,
    pub deviation_threshold: f64,
    pub x_measured: Vec<f64>,
    pub output: Option<PathBuf>,
}

pub const FIGURE_A: f64 = 640e-6;
pub const FIGURE_GAMMA: f64 = 0.296;
pub const FIGURE_K: f64 = 20.8;
pub const FIGURE4_SIGMA: f64 = 500e-6;
pub const FIGURE2_SIGMA_RANGE: (f64, f64, usize) = (100e-6, 2000e-6, 96);
pub const FIGURE2_PHI_DEG: f64 = 7.2;
pub const FIGURE4_PHI_DEG_RANGE: (f64, f64, usize) = (0.05, 30.0, 600);

fn linspace(min: f64, max: f64, count: usize) -> Vec<f64> {
    let step = (max - min) / (count - 1) as f64;
    (0..count)
        .map(|i| if i + 1 == count { max } else { min + step * i as f64 })
        .collect()
}

fn check_range(key: &'static str, min: f64, max: f64, count: usize) -> Result<Vec<f64>, ConfigError> {
    if min.is_nan() || max.is_nan() || min >= max {
        return Err(invalid(key, format!("range needs min < max, got {min} .. {max}")));
    }
    if count < 2 {
        return Err(invalid(key, format!("range needs count >= 2, got {count}")));
    }
    Ok(linspace(min, max, count))
}

/// Sets `path` (dot-separated) inside `root` to `value`, creating objects
/// along the way. `value` is read as JSON when it parses, else as a string.
pub fn apply_override(root: &mut Value, assignment: &str) -> Result<(), ConfigError> {
    let (path, raw) = assignment
        .split_once('=')
        .ok_or_else(|| ConfigError::Override(assignment.to_string()))?;
    let path = path.trim();
    if path.is_empty() {
        return Err(ConfigError::Override(assignment.to_string()));
    }
    let value = serde_json::from_str(raw.trim()).unwrap_or_else(|_| Value::String(raw.trim().to_string()));
    let mut node = root;
    let keys: Vec<&str> = path.split('.').collect();
    for (i, key) in keys.iter().enumerate() {
        if !node.is_object() {
            *node = Value::Object(Default::default());
        }
        let map = node.as_object_mut().expect("object ensured above");
        if i + 1 == keys.len() {
            map.insert(key.to_string(), value);
            return Ok(());
        }
        node = map.entry(key.to_string()).or_insert_with(|| Value::Object(Default::default()));
    }
    unreachable!("path has at least one key")
}

/// Parses and validates a configuration document.
pub fn parse_config(text: &str) -> Result<RunConfig, ConfigError> {
    let value: Value = serde_json::from_str(text).map_err(|e| ConfigError::Schema {
        path: "<document>".into(),
        message: e.to_string(),
    })?;
    from_value(value)
}

/// Validates an already-parsed (and possibly overridden) JSON document.
pub fn from_value(value: Value) -> Result<RunConfig, ConfigError> {
    let raw: RawConfig = serde_path_to_error::deserialize(value).map_err(|e| ConfigError::Schema {
        path: match e.path().to_string().as_str() {
            "." => "<document>".to_string(),
            p => p.to_string(),
        },
        message: e.inner().to_string(),
    })?;
    validate(raw)
}

fn validate(raw: RawConfig) -> Result<RunConfig, ConfigError> {
    let mode = raw.mode;
    let figure = matches!(mode, Mode::Figure2 | Mode::Figure4);

    let a = match (raw.geometry.a, figure) {
        (Some(a), _) => a.0,
        (None, true) => FIGURE_A,
        (None, false) => return Err(invalid("geometry.a", "missing beam radius at the lens")),
    };
    let gamma = match (raw.geometry.gamma, raw.geometry.l_lm, raw.geometry.l_md) {
        (Some(g), _, _) => g,
        (None, Some(lm), Some(md)) if lm.0 + md.0 > 0.0 => lm.0 / (lm.0 + md.0),
        (None, _, _) if figure => FIGURE_GAMMA,
        _ => return Err(invalid("geometry.gamma", "missing (give gamma or both l_lm and l_md)")),
    };
    if !(0.0..=1.0).contains(&gamma) {
        return Err(invalid("geometry.gamma", "gamma out of [0,1]"));
    }

    let sigmas = match mode {
        Mode::SweepSigma | Mode::Figure2 => {
            if raw.geometry.sigma.is_some() {
                return Err(invalid("geometry.sigma", "not used in sigma sweeps; set sigma_range"));
            }
            let (min, max, count) = match raw.sigma_range {
                Some(r) => (r.min.0, r.max.0, r.count),
                None if mode == Mode::Figure2 => FIGURE2_SIGMA_RANGE,
                None => return Err(invalid("sigma_range", "required in sweep-sigma mode")),
            };
            check_range("sigma_range", min, max, count)?
        }
        _ => {
            if raw.sigma_range.is_some() {
                return Err(invalid("sigma_range", format!("not used in {} mode", mode.name())));
            }
            match (raw.geometry.sigma, mode) {
                (Some(s), _) => vec![s.0],
                (None, Mode::Figure4) => vec![FIGURE4_SIGMA],
                (None, _) => return Err(invalid("geometry.sigma", "missing beam radius at the detector")),
            }
        }
    };
    let geometry = Geometry::with_paths(
        a,
        sigmas[0],
        gamma,
        raw.geometry.l_lm.map(|l| l.0),
        raw.geometry.l_md.map(|l| l.0),
    )
    .map_err(|e| invalid("geometry", e.to_string()))?;
    for &s in &sigmas {
        geometry.with_sigma(s).map_err(|e| invalid("sigma_range", e.to_string()))?;
    }

    let phis = match (raw.phi, mode) {
        (Some(PhiSpec::Range(r)), Mode::SweepPhi | Mode::Figure4) => {
            check_range("phi", r.min.0, r.max.0, r.count)?
        }
        (Some(PhiSpec::Range(_)), _) => {
            return Err(invalid("phi", format!("ranges are only valid in sweep-phi and figure4, not {}", mode.name())))
        }
        (Some(PhiSpec::Values(_)), Mode::SweepPhi | Mode::Figure4) => {
            return Err(invalid("phi", "expected a {min, max, count} range"))
        }
        (Some(PhiSpec::Values(v)), _) => v.into_vec().into_iter().map(|a| a.0).collect(),
        (None, Mode::Figure2) => vec![FIGURE2_PHI_DEG.to_radians()],
        (None, Mode::Figure4) => {
            let (lo, hi, n) = FIGURE4_PHI_DEG_RANGE;
            linspace(lo.to_radians(), hi.to_radians(), n)
        }
        (None, _) => return Err(invalid("phi", "missing phase difference")),
    };
    if phis.is_empty() {
        return Err(invalid("phi", "empty list"));
    }
    if phis.iter().any(|p| !p.is_finite()) {
        return Err(invalid("phi", "values must be finite"));
    }

    let ks = match (raw.k, mode) {
        (_, Mode::Invert) => Vec::new(),
        (Some(k), _) => k.into_vec().into_iter().map(|w| w.0).collect(),
        (None, Mode::Figure2 | Mode::Figure4) => vec![FIGURE_K],
        (None, _) => return Err(invalid("k", "missing coupling wavenumber")),
    };
    if mode != Mode::Invert && ks.is_empty() {
        return Err(invalid("k", "empty list"));
    }

    let x_measured = match (raw.x_measured, mode) {
        (Some(x), Mode::Invert) => x.into_vec().into_iter().map(|l| l.0).collect(),
        (None, Mode::Invert) => return Err(invalid("x_measured", "required in invert mode")),
        (Some(_), _) => return Err(invalid("x_measured", format!("not used in {} mode", mode.name()))),
        (None, _) => Vec::new(),
    };
    if mode == Mode::Invert && x_measured.is_empty() {
        return Err(invalid("x_measured", "empty list"));
    }

    let amp_threshold = raw.amplification.as_ref().and_then(|a| a.deviation_threshold);
    let deviation_threshold = match (raw.deviation_threshold, amp_threshold) {
        (Some(t), None) | (None, Some(t)) => t,
        (None, None) => DEFAULT_DEVIATION_THRESHOLD,
        (Some(_), Some(_)) => {
            return Err(invalid(
                "deviation_threshold",
                "given both at top level and under amplification",
            ))
        }
    };
    if !(deviation_threshold > 0.0 && deviation_threshold < 1.0) {
        return Err(invalid("deviation_threshold", "must lie in (0, 1)"));
    }

    let amplification = raw
        .amplification
        .map(|spec| {
            let k0 = match (spec.k0, spec.wavelength) {
                (Some(k0), None) => k0.0,
                (None, Some(w)) if w.0 > 0.0 => std::f64::consts::TAU / w.0,
                (None, Some(_)) => return Err(invalid("amplification.wavelength", "must be positive")),
                _ => {
                    return Err(invalid(
                        "amplification",
                        "give exactly one of k0 (laser wavenumber, 1/m) or wavelength",
                    ))
                }
            };
            AmplificationConfig::new(spec.l_md.0, k0, deviation_threshold)
                .map_err(|e| invalid("amplification", e.to_string()))
        })
        .transpose()?;

    let config = RunConfig {
        mode,
        beam: raw.beam,
        geometry,
        ks,
        phis,
        sigmas,
        amplification,
        deviation_threshold,
        x_measured,
        output: raw.output,
    };
    config
        .beam
        .build(&config.geometry)
        .map_err(|e| invalid("beam", e.to_string()))?;
    Ok(config)
}
