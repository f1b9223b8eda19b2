//! `sweep`: the same run repeated over a list of learning rates.

use std::path::{Path, PathBuf};

use rayon::prelude::*;

use crate::experiment::{run_experiment, Rate, RunSettings, RunSummary};
use crate::{write_json, write_text, CliError, Result};

pub const SWEEP_COLUMNS: [&str; 12] = [
    "mu",
    "eps",
    "n",
    "final_lambda",
    "loss_alg",
    "best_beta",
    "loss_best",
    "regret",
    "normalized_regret",
    "bound_total",
    "bound_normalized",
    "out_of_range_steps",
];

/// Runs `base` once per `μ`, in parallel, and returns the summaries sorted
/// by `μ` ascending. Duplicate rates are rejected.
pub fn sweep(base: &RunSettings, mu_list: &[f64]) -> Result<Vec<RunSummary>> {
    if mu_list.is_empty() {
        return Err(CliError::usage("--mu-list needs at least one value"));
    }
    let mut mus = mu_list.to_vec();
    if let Some(bad) = mus.iter().find(|m| !(m.is_finite() && **m > 0.0)) {
        return Err(CliError::usage(format!("--mu-list values must be positive, got {bad}")));
    }
    mus.sort_by(f64::total_cmp);
    if mus.windows(2).any(|w| w[0] == w[1]) {
        return Err(CliError::usage("--mu-list contains a repeated value"));
    }
    mus.par_iter()
        .map(|&mu| {
            let mut s = base.clone();
            s.rate = Some(Rate::Mu(mu));
            run_experiment(&s).map(|o| o.summary)
        })
        .collect()
}

pub fn sweep_table(summaries: &[RunSummary]) -> String {
    let mut out = SWEEP_COLUMNS.join(",");
    out.push('\n');
    for s in summaries {
        let cells = [
            s.mu,
            s.eps,
            s.n as f64,
            s.final_lambda,
            s.loss_alg,
            s.best_beta,
            s.loss_best,
            s.regret,
            s.normalized_regret,
            s.bound_total,
            s.bound_normalized,
            s.out_of_range_steps as f64,
        ];
        let line: Vec<String> = cells
            .iter()
            .enumerate()
            .map(|(i, v)| match i {
                2 | 11 => format!("{v}"),
                _ => convexmix::signals::fmt_real(*v),
            })
            .collect();
        out.push_str(&line.join(","));
        out.push('\n');
    }
    out
}

/// Writes `summary_<k>.json` per rate (k in `μ` order, 1-based) and
/// `sweep.csv` into `dir`; returns the paths written.
pub fn write_sweep(dir: &Path, summaries: &[RunSummary]) -> Result<Vec<PathBuf>> {
    let mut paths = Vec::with_capacity(summaries.len() + 1);
    for (k, s) in summaries.iter().enumerate() {
        let p = dir.join(format!("summary_{}.json", k + 1));
        write_json(&p, s)?;
        paths.push(p);
    }
    let table = dir.join("sweep.csv");
    write_text(&table, &sweep_table(summaries))?;
    paths.push(table);
    Ok(paths)
}
