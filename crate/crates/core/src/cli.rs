//! Experiment drivers behind the `mvcert` binary: comparison tables over
//! finished runs and parameter sweeps.

use std::collections::BTreeMap;
use std::io::Write;
use std::path::{Path, PathBuf};
use std::time::Instant;

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::config::{Method, RunConfig, VoterKind};
use crate::error::{Error, Result};
use crate::train::{self, RunReport};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum OutputFormat {
    Csv,
    Json,
}

/// Mean ± std of test error and certificate over the runs of one (method, dataset).
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CompareRow {
    pub method: Method,
    pub dataset: String,
    pub n_runs: usize,
    pub error_mean: f64,
    pub error_std: f64,
    pub bound_mean: f64,
    pub bound_std: f64,
}

/// Sample mean and (n − 1) standard deviation; std is 0 for a single value.
pub fn mean_std(xs: &[f64]) -> (f64, f64) {
    let n = xs.len() as f64;
    let mean = xs.iter().sum::<f64>() / n;
    if xs.len() < 2 {
        return (mean, 0.0);
    }
    let var = xs.iter().map(|x| (x - mean).powi(2)).sum::<f64>() / (n - 1.0);
    (mean, var.sqrt())
}

pub fn compare_reports(reports: &[RunReport]) -> Result<Vec<CompareRow>> {
    if reports.len() < 2 {
        return Err(Error::config("runs", "compare needs at least two runs"));
    }
    let mut groups: BTreeMap<(String, Method), Vec<&RunReport>> = BTreeMap::new();
    for r in reports {
        groups.entry((r.dataset.clone(), r.method)).or_default().push(r);
    }
    Ok(groups
        .into_iter()
        .map(|((dataset, method), rs)| {
            let (error_mean, error_std) = mean_std(&rs.iter().map(|r| r.test_error).collect::<Vec<_>>());
            let (bound_mean, bound_std) = mean_std(&rs.iter().map(|r| r.bound.certificate).collect::<Vec<_>>());
            CompareRow {
                method,
                dataset,
                n_runs: rs.len(),
                error_mean,
                error_std,
                bound_mean,
                bound_std,
            }
        })
        .collect())
}

pub fn compare_dirs(dirs: &[PathBuf]) -> Result<Vec<CompareRow>> {
    let reports = dirs.iter().map(|d| train::read_report(d)).collect::<Result<Vec<_>>>()?;
    compare_reports(&reports)
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum SweepAxis {
    /// Number of training points.
    N,
    /// Number of voters.
    M,
    /// Maximal tree depth.
    Depth,
    /// Input-noise variance.
    Sigma2,
    /// Prior concentration.
    Beta,
}

impl std::str::FromStr for SweepAxis {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s {
            "n" => Ok(Self::N),
            "M" | "m" => Ok(Self::M),
            "depth" => Ok(Self::Depth),
            "sigma2" => Ok(Self::Sigma2),
            "beta" => Ok(Self::Beta),
            _ => Err(Error::config("axis", format!("unknown axis `{s}` (n, M, depth, sigma2, beta)"))),
        }
    }
}

/// One row of a sweep's long-format output.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SweepRow {
    pub axis: SweepAxis,
    pub value: f64,
    pub seed: u64,
    pub method: Method,
    pub n_train: usize,
    pub n_voters: usize,
    pub train_error: f64,
    pub test_error: f64,
    pub bound: f64,
    pub voter_strength: f64,
    pub posterior_entropy: f64,
    pub kl: f64,
    pub seconds: f64,
}

fn as_count(axis: &str, v: f64) -> Result<usize> {
    if v >= 1.0 && v.fract() == 0.0 {
        Ok(v as usize)
    } else {
        Err(Error::config(axis, format!("grid value {v} is not a positive integer")))
    }
}

/// Copy of `base` with the axis set to `value`. `n_features` sizes the stump grid.
pub fn apply_axis(base: &RunConfig, axis: SweepAxis, value: f64, n_features: usize) -> Result<RunConfig> {
    let mut cfg = base.clone();
    match axis {
        SweepAxis::N => cfg.dataset.n_train = as_count("dataset.n_train", value)?,
        SweepAxis::M => {
            let m = as_count("voters", value)?;
            match cfg.voters.kind {
                VoterKind::Stumps => {
                    if m % (2 * n_features) != 0 {
                        return Err(Error::config(
                            "voters.thresholds_per_feature",
                            format!("M = {m} is not a multiple of 2 × {n_features} features"),
                        ));
                    }
                    cfg.voters.thresholds_per_feature = m / (2 * n_features);
                }
                VoterKind::Forest => cfg.voters.n_trees = m,
            }
        }
        SweepAxis::Depth => cfg.voters.max_depth = Some(as_count("voters.max_depth", value)?),
        SweepAxis::Sigma2 => cfg.dataset.sigma2 = value,
        SweepAxis::Beta => cfg.prior.beta = value,
    }
    cfg.validate()?;
    Ok(cfg)
}

/// Runs every (grid value, seed, method) as an independent task; rows come
/// back sorted by (value, seed, method).
pub fn sweep(base: &RunConfig, axis: SweepAxis, grid: &[f64], seeds: &[u64], methods: &[Method]) -> Result<Vec<SweepRow>> {
    if grid.is_empty() || seeds.is_empty() || methods.is_empty() {
        return Err(Error::config("grid", "sweep needs a nonempty grid, seed list and method list"));
    }
    let n_features = train::prepare_data(base)?.train.n_features();
    let mut tasks = Vec::new();
    for &v in grid {
        for &seed in seeds {
            for &method in methods {
                let mut cfg = apply_axis(base, axis, v, n_features)?;
                cfg.seed = seed;
                cfg.method = method;
                cfg.validate()?;
                tasks.push((v, cfg));
            }
        }
    }
    let mut rows = tasks
        .into_par_iter()
        .map(|(value, cfg)| {
            let start = Instant::now();
            let out = train::run(&cfg)?;
            let r = out.report;
            Ok(SweepRow {
                axis,
                value,
                seed: cfg.seed,
                method: cfg.method,
                n_train: r.n_train,
                n_voters: r.n_voters,
                train_error: r.train_error,
                test_error: r.test_error,
                bound: r.bound.certificate,
                voter_strength: r.voter_strength,
                posterior_entropy: r.posterior_entropy,
                kl: r.kl,
                seconds: start.elapsed().as_secs_f64(),
            })
        })
        .collect::<Result<Vec<_>>>()?;
    rows.sort_by(|a, b| a.value.total_cmp(&b.value).then(a.seed.cmp(&b.seed)).then(a.method.cmp(&b.method)));
    Ok(rows)
}

/// Writes rows as RFC-4180 CSV or a JSON array.
pub fn write_rows<T: Serialize>(rows: &[T], format: OutputFormat, out: impl Write) -> Result<()> {
    match format {
        OutputFormat::Csv => {
            let mut w = csv::Writer::from_writer(out);
            for r in rows {
                w.serialize(r)?;
            }
            w.flush()?;
        }
        OutputFormat::Json => {
            let mut out = out;
            serde_json::to_writer_pretty(&mut out, rows)?;
            writeln!(out)?;
        }
    }
    Ok(())
}

pub fn write_rows_to<T: Serialize>(rows: &[T], format: OutputFormat, path: Option<&Path>) -> Result<()> {
    match path {
        Some(p) => write_rows(rows, format, std::fs::File::create(p)?),
        None => write_rows(rows, format, std::io::stdout().lock()),
    }
}
