use serde::{Deserialize, Serialize};

use super::spec::{ExperimentSpec, Mode};
use crate::error::{Error, Result};
use crate::math::{spectral_report, MultichannelProblem};

pub const SPECTRA_HEADER: [&str; 9] = [
    "n",
    "channels",
    "beta",
    "gamma",
    "analytic_max_error",
    "unit_multiplicity",
    "spectral_radius_deflated",
    "pass",
    "note",
];

/// Tolerance on analytic against numeric eigenvalues.
pub const EIGEN_TOL: f64 = 1e-9;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SpectraRow {
    pub n: usize,
    pub channels: usize,
    pub beta: f64,
    pub gamma: f64,
    pub analytic_max_error: f64,
    pub unit_multiplicity: usize,
    pub spectral_radius_deflated: f64,
    pub pass: bool,
    pub note: String,
}

/// Certifies every `(n, C, beta, gamma)` point of the spectra grid.
pub fn certify_spectra(spec: &ExperimentSpec) -> Result<Vec<SpectraRow>> {
    if !spec
        .mode
        .iter()
        .all(|m| matches!(m, Mode::Much | Mode::FastMuch))
    {
        return Err(Error::Config(
            "mode: spectral certification needs much or fast-much".into(),
        ));
    }
    let g = &spec.spectra;
    for &b in &g.beta {
        if !(b > 0.0 && b < 0.5) {
            return Err(Error::OutOfRange {
                name: "spectra.beta",
                range: "(0,1/2)",
                value: b,
            });
        }
    }
    for &gm in &g.gamma {
        if !(gm > 0.0 && gm < 1.0) {
            return Err(Error::OutOfRange {
                name: "spectra.gamma",
                range: "(0,1)",
                value: gm,
            });
        }
    }
    let mut rows = Vec::new();
    for &n in &g.n {
        for &c in &g.channels {
            for &beta in &g.beta {
                for &gamma in &g.gamma {
                    let problem = MultichannelProblem::uniform(c, n, beta, gamma)?;
                    rows.push(match spectral_report(&problem) {
                        Ok(r) => {
                            let err = r.analytic_max_error.unwrap_or(f64::NAN);
                            SpectraRow {
                                n,
                                channels: c,
                                beta,
                                gamma,
                                analytic_max_error: err,
                                unit_multiplicity: r.unit_multiplicity,
                                spectral_radius_deflated: r.spectral_radius_deflated,
                                pass: r.converges && r.unit_multiplicity == 1 && err <= EIGEN_TOL,
                                note: String::new(),
                            }
                        }
                        Err(e) => SpectraRow {
                            n,
                            channels: c,
                            beta,
                            gamma,
                            analytic_max_error: f64::NAN,
                            unit_multiplicity: 0,
                            spectral_radius_deflated: f64::NAN,
                            pass: false,
                            note: e.to_string(),
                        },
                    });
                }
            }
        }
    }
    Ok(rows)
}

pub fn write_spectra_csv<W: std::io::Write>(out: W, rows: &[SpectraRow]) -> Result<()> {
    let to_err = |e: csv::Error| Error::Io {
        path: "<spectra>".into(),
        message: e.to_string(),
    };
    let mut w = csv::Writer::from_writer(out);
    w.write_record(SPECTRA_HEADER).map_err(to_err)?;
    for r in rows {
        w.write_record([
            r.n.to_string(),
            r.channels.to_string(),
            format!("{}", r.beta),
            format!("{}", r.gamma),
            format!("{:e}", r.analytic_max_error),
            r.unit_multiplicity.to_string(),
            format!("{}", r.spectral_radius_deflated),
            r.pass.to_string(),
            r.note.clone(),
        ])
        .map_err(to_err)?;
    }
    w.flush().map_err(|e| Error::Io {
        path: "<spectra>".into(),
        message: e.to_string(),
    })
}
