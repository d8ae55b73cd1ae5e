//! CSV and JSON emission. Floats are written with 17 significant digits and
//! LF line endings so identical runs give identical bytes.

use std::fmt::Write as _;
use std::fs;
use std::path::{Path, PathBuf};

use serde::{Deserialize, Serialize};

use super::sweep::{SweepOutcome, SweepRecord};
use super::HarnessError;
use crate::diagnostics::{NormSeries, RateFit};

pub const SWEEP_HEADER: &str =
    "epsilon,err_R_L2,err_S_L2,manifold_residual_L2,negative_norm_final,wall_time_seconds";
pub const EVOLUTION_HEADER: &str = "t,norm_R_diff_L2,norm_S_diff_L2";

pub fn format_float(v: f64) -> String {
    format!("{v:.16e}")
}

pub fn sweep_csv(records: &[SweepRecord]) -> String {
    let mut out = String::with_capacity(64 * (records.len() + 1));
    out.push_str(SWEEP_HEADER);
    out.push('\n');
    for r in records {
        let cells = [
            r.epsilon,
            r.err_r_l2,
            r.err_s_l2,
            r.manifold_residual_l2,
            r.negative_norm_final,
            r.wall_time_seconds,
        ];
        let line: Vec<String> = cells.iter().map(|v| format_float(*v)).collect();
        let _ = writeln!(out, "{}", line.join(","));
    }
    out
}

pub fn evolution_csv(series_r: &NormSeries, series_s: &NormSeries) -> String {
    let mut out = String::from(EVOLUTION_HEADER);
    out.push('\n');
    for ((t, r), s) in series_r
        .times
        .iter()
        .zip(&series_r.values)
        .zip(&series_s.values)
    {
        let _ = writeln!(
            out,
            "{},{},{}",
            format_float(*t),
            format_float(*r),
            format_float(*s)
        );
    }
    out
}

pub fn evolution_file_name(k: usize) -> String {
    format!("evolution_eps_{k}.csv")
}

/// Slope, intercept and coefficient of determination of one fitted rate.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct FitSummary {
    pub slope: f64,
    pub intercept: f64,
    pub r_squared: f64,
}

impl From<RateFit> for FitSummary {
    fn from(f: RateFit) -> Self {
        Self {
            slope: f.slope,
            intercept: f.intercept,
            r_squared: f.r_squared,
        }
    }
}

/// Contents of `rates.json`. A fit is `null` when too few sweep points remain
/// after dropping the pre-asymptotic ones. The epsilon list lets readers
/// cross-check the file against `sweep.csv`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RatesFile {
    #[serde(rename = "err_R")]
    pub err_r: Option<FitSummary>,
    #[serde(rename = "err_S")]
    pub err_s: Option<FitSummary>,
    pub manifold: Option<FitSummary>,
    pub epsilons: Vec<f64>,
    pub drop_preasymptotic: usize,
}

fn write(path: PathBuf, contents: &str) -> Result<PathBuf, HarnessError> {
    fs::write(&path, contents).map_err(|source| HarnessError::Io {
        path: path.clone(),
        source,
    })?;
    Ok(path)
}

/// Writes `sweep.csv`, one `evolution_eps_<k>.csv` per sweep point,
/// `rates.json` and `advisory.json` into `dir`. Returns the written paths.
pub fn write_sweep_outputs(
    outcome: &SweepOutcome,
    dir: &Path,
) -> Result<Vec<PathBuf>, HarnessError> {
    fs::create_dir_all(dir).map_err(|source| HarnessError::Io {
        path: dir.to_path_buf(),
        source,
    })?;
    let mut written = vec![write(dir.join("sweep.csv"), &sweep_csv(&outcome.records))?];
    for (k, point) in outcome.points.iter().enumerate() {
        written.push(write(
            dir.join(evolution_file_name(k)),
            &evolution_csv(&point.series_r, &point.series_s),
        )?);
    }
    let rates = serde_json::to_string_pretty(&outcome.rates_file())
        .expect("rates serialize to JSON")
        + "\n";
    written.push(write(dir.join("rates.json"), &rates)?);
    written.push(write(dir.join("advisory.json"), "{}\n")?);
    Ok(written)
}

/// Parses a `sweep.csv` produced by [`sweep_csv`].
pub fn read_sweep_csv(text: &str) -> Result<Vec<SweepRecord>, String> {
    let mut lines = text.lines();
    match lines.next() {
        Some(h) if h == SWEEP_HEADER => {}
        Some(h) => return Err(format!("unexpected header `{h}`")),
        None => return Err("empty file".into()),
    }
    lines
        .enumerate()
        .map(|(i, line)| {
            let cells: Vec<f64> = line
                .split(',')
                .map(|c| c.parse::<f64>().map_err(|e| format!("row {}: {e}", i + 1)))
                .collect::<Result<_, _>>()?;
            match cells[..] {
                [epsilon, err_r_l2, err_s_l2, manifold_residual_l2, negative_norm_final, wall_time_seconds] => {
                    Ok(SweepRecord {
                        epsilon,
                        err_r_l2,
                        err_s_l2,
                        manifold_residual_l2,
                        negative_norm_final,
                        wall_time_seconds,
                    })
                }
                _ => Err(format!("row {} has {} cells, expected 6", i + 1, cells.len())),
            }
        })
        .collect()
}
