//! Sweep execution and CSV emission.
//!
//! Rows are independent and may be computed concurrently; they are always
//! written in input order. A failing row keeps its coordinates, leaves the
//! affected cells empty and reports the error in the `status` column.

use std::fmt::Write as _;

use crate::amplifier::{amplification_factor, displacement_linear, invert_k};
use crate::config::{Mode, RunConfig};
use crate::error::Result;
use crate::model::{BeamProfile, Geometry, Regime};
use crate::moments::{displacement_even, moment_full, postselection_probability};
use crate::par::{self, Execution};
use crate::transition::{sagnac_states, weak_value};

pub const FORWARD_COLUMNS: [&str; 6] = ["phi_rad", "sigma_m", "k_per_m", "x_linear_m", "x_nonlinear_m", "p_post"];
pub const AMP_COLUMNS: [&str; 2] = ["amp_linear", "amp_nonlinear"];
pub const INVERT_COLUMNS: [&str; 6] = [
    "phi_rad",
    "sigma_m",
    "x_measured_m",
    "k_per_m",
    "x_roundtrip_m",
    "residual_m",
];

/// Fixed-width scientific formatting with 17 significant digits.
pub fn format_value(v: f64) -> String {
    format!("{v:.16e}")
}

fn cell(v: &Result<f64>) -> String {
    v.as_ref().map(|v| format_value(*v)).unwrap_or_default()
}

fn status_text(errors: &[&crate::Error]) -> String {
    match errors.first() {
        None => "ok".to_string(),
        // keep the CSV unquoted
        Some(e) => e.to_string().replace([',', '"', '\n'], ";"),
    }
}

/// In-memory CSV table.
#[derive(Debug, Clone, PartialEq)]
pub struct Table {
    pub header: Vec<String>,
    pub rows: Vec<Vec<String>>,
    /// Number of rows whose status is not `ok`.
    pub failed_rows: usize,
}

impl Table {
    pub fn to_csv(&self) -> String {
        let mut out = String::new();
        out.push_str(&self.header.join(","));
        out.push('\n');
        for row in &self.rows {
            out.push_str(&row.join(","));
            out.push('\n');
        }
        out
    }

    pub fn column(&self, name: &str) -> Option<Vec<&str>> {
        let idx = self.header.iter().position(|h| h == name)?;
        Some(self.rows.iter().map(|r| r[idx].as_str()).collect())
    }
}

fn nonlinear_displacement(profile: &BeamProfile, geometry: &Geometry, phi: f64, k: f64) -> Result<f64> {
    if profile.is_even() {
        displacement_even(profile, geometry, phi, k)
    } else {
        let w = weak_value(&sagnac_states(phi)?)?;
        moment_full(profile, geometry, w.value(), k, 1)
    }
}

fn forward_row(config: &RunConfig, phi: f64, sigma: f64, k: f64) -> (Vec<String>, bool) {
    let mut row = vec![format_value(phi), format_value(sigma), format_value(k)];
    let setup = config
        .geometry
        .with_sigma(sigma)
        .and_then(|g| config.beam.build(&g).map(|p| (g, p)));
    let (geometry, profile) = match setup {
        Ok(v) => v,
        Err(e) => {
            let blanks = 3 + if config.amplification.is_some() { 2 } else { 0 } + 1;
            row.extend(std::iter::repeat_n(String::new(), blanks));
            row.push(status_text(&[&e]));
            return (row, false);
        }
    };
    let linear = displacement_linear(&geometry, phi, k);
    let nonlinear = nonlinear_displacement(&profile, &geometry, phi, k);
    let p_post = postselection_probability(&profile, phi, k);
    row.push(cell(&linear));
    row.push(cell(&nonlinear));
    row.push(cell(&p_post));
    let mut errors: Vec<&crate::Error> = [&nonlinear, &p_post, &linear]
        .into_iter()
        .filter_map(|r| r.as_ref().err())
        .collect();
    let amps = config.amplification.as_ref().map(|amp| {
        let of = |x: &Result<f64>| -> Option<Result<f64>> {
            // k = 0 has no amplification factor; leave the cell empty
            (k != 0.0).then(|| x.clone().and_then(|x| amplification_factor(x, k, amp)))
        };
        (of(&linear), of(&nonlinear))
    });
    if let Some((lin, non)) = &amps {
        for a in [lin, non] {
            row.push(a.as_ref().map(cell).unwrap_or_default());
        }
    }
    let regime = match (&nonlinear, &linear) {
        (Ok(x), Ok(xl)) => Regime::classify(*x, *xl, config.deviation_threshold).label(),
        // linear theory diverges but the all-order value is finite
        (Ok(_), Err(_)) => "nonlinear_required",
        _ => "",
    };
    row.push(regime.to_string());
    if let Some((lin, non)) = &amps {
        errors.extend([lin, non].into_iter().filter_map(|a| a.as_ref().and_then(|r| r.as_ref().err())));
    }
    let ok = errors.is_empty();
    row.push(status_text(&errors));
    (row, ok)
}

fn invert_row(config: &RunConfig, phi: f64, sigma: f64, x_measured: f64) -> (Vec<String>, bool) {
    let mut row = vec![format_value(phi), format_value(sigma), format_value(x_measured)];
    let outcome = config
        .geometry
        .with_sigma(sigma)
        .and_then(|g| config.beam.build(&g).map(|p| (g, p)))
        .and_then(|(g, p)| {
            let k = invert_k(&p, &g, phi, x_measured)?;
            let x = displacement_even(&p, &g, phi, k)?;
            Ok((k, x))
        });
    match outcome {
        Ok((k, x)) => {
            row.extend([format_value(k), format_value(x), format_value(x - x_measured)]);
            row.push("ok".into());
            (row, true)
        }
        Err(e) => {
            row.extend([String::new(), String::new(), String::new()]);
            row.push(status_text(&[&e]));
            (row, false)
        }
    }
}

#[derive(Debug, Clone, Copy)]
enum Job {
    Forward { phi: f64, sigma: f64, k: f64 },
    Invert { phi: f64, sigma: f64, x: f64 },
}

fn jobs(config: &RunConfig) -> Vec<Job> {
    let mut out = Vec::new();
    match config.mode {
        Mode::Invert => {
            for &phi in &config.phis {
                for &x in &config.x_measured {
                    out.push(Job::Invert {
                        phi,
                        sigma: config.sigmas[0],
                        x,
                    });
                }
            }
        }
        // one series per (k, phi) pair in sigma sweeps, per k in phi sweeps
        Mode::SweepPhi | Mode::Figure4 => {
            for &k in &config.ks {
                for &sigma in &config.sigmas {
                    for &phi in &config.phis {
                        out.push(Job::Forward { phi, sigma, k });
                    }
                }
            }
        }
        Mode::Point | Mode::SweepSigma | Mode::Figure2 => {
            for &k in &config.ks {
                for &phi in &config.phis {
                    for &sigma in &config.sigmas {
                        out.push(Job::Forward { phi, sigma, k });
                    }
                }
            }
        }
    }
    out
}

/// Computes every row of the configured run.
pub fn run(config: &RunConfig, exec: Execution) -> Table {
    let header: Vec<String> = if config.mode == Mode::Invert {
        INVERT_COLUMNS.iter().map(|s| s.to_string()).collect()
    } else {
        let mut h: Vec<String> = FORWARD_COLUMNS.iter().map(|s| s.to_string()).collect();
        if config.amplification.is_some() {
            h.extend(AMP_COLUMNS.iter().map(|s| s.to_string()));
        }
        h.push("regime".into());
        h
    };
    let mut header = header;
    header.push("status".into());

    let results = par::map(&jobs(config), exec, |job| match *job {
        Job::Forward { phi, sigma, k } => forward_row(config, phi, sigma, k),
        Job::Invert { phi, sigma, x } => invert_row(config, phi, sigma, x),
    });
    let failed_rows = results.iter().filter(|(_, ok)| !ok).count();
    Table {
        header,
        rows: results.into_iter().map(|(r, _)| r).collect(),
        failed_rows,
    }
}

/// Short human summary for the terminal.
pub fn summary(config: &RunConfig, table: &Table) -> String {
    let mut s = String::new();
    let _ = write!(
        s,
        "{}: {} rows, {} with errors",
        config.mode.name(),
        table.rows.len(),
        table.failed_rows
    );
    s
}
