//! `run`: the combiner on one sequence, with per-prefix hindsight oracle,
//! regret and bound curves.

use std::path::PathBuf;

use convexmix::bounds::regret_and_bound;
use convexmix::mixture::run_from;
use convexmix::signals::{generate, SequenceKind, SequenceSpec, TrajectoryRow};
use convexmix::{MixtureParams, MixtureState, Mode, OracleStats, SignalSample, TheoremConstants};
use serde::{Deserialize, Serialize};

use crate::{CliError, Result};

#[derive(Debug, Clone, PartialEq)]
pub enum Source {
    /// One of the two reference sequences (1 or 2).
    Case(u8),
    Input(PathBuf),
    Spec(PathBuf),
}

/// The learning rate, given directly or through `ε`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Rate {
    Mu(f64),
    Eps(f64),
}

/// Everything a run needs; unset fields take per-source defaults.
#[derive(Debug, Clone, PartialEq)]
pub struct RunSettings {
    pub source: Source,
    pub n: Option<usize>,
    pub rate: Option<Rate>,
    pub lambda_plus: Option<f64>,
    pub y_bound: Option<f64>,
    pub mode: Option<Mode>,
    pub lambda_init: Option<f64>,
    /// 1-based inclusive window for the windowed regret.
    pub window: Option<(usize, usize)>,
}

impl RunSettings {
    pub fn case(case: u8) -> Self {
        Self {
            source: Source::Case(case),
            n: None,
            rate: None,
            lambda_plus: None,
            y_bound: None,
            mode: None,
            lambda_init: None,
            window: None,
        }
    }
}

/// Parses `A:B` into a 1-based inclusive window.
pub fn parse_window(text: &str) -> Result<(usize, usize)> {
    let bad = || CliError::usage(format!("window must look like A:B with 1 <= A <= B, got {text:?}"));
    let (a, b) = text.split_once(':').ok_or_else(bad)?;
    let a: usize = a.trim().parse().map_err(|_| bad())?;
    let b: usize = b.trim().parse().map_err(|_| bad())?;
    if a == 0 || a > b {
        return Err(bad());
    }
    Ok((a, b))
}

/// Regret restricted to a window of an already computed run.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct WindowReport {
    pub start: usize,
    pub end: usize,
    /// Weight in force at the first step of the window.
    pub lambda_start: f64,
    pub loss_alg: f64,
    pub best_beta: f64,
    pub loss_best: f64,
    pub regret: f64,
    pub bound_total: f64,
    pub bound_normalized: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RunSummary {
    pub n: usize,
    pub final_lambda: f64,
    pub loss_alg: f64,
    pub best_beta: f64,
    pub best_beta_degenerate: bool,
    pub loss_best: f64,
    pub regret: f64,
    pub normalized_regret: f64,
    /// Telescoped bound at the comparator-free worst case.
    pub bound_total: f64,
    pub bound_normalized: f64,
    /// Telescoped bound evaluated at the hindsight weight.
    pub bound_total_at_best_beta: f64,
    pub out_of_range_steps: usize,
    pub projected_steps: usize,
    pub clip_count: usize,
    /// No step ran with its weight outside `[λ⁺, 1−λ⁺]`.
    pub theorem_valid: bool,
    pub mu: f64,
    pub eps: f64,
    pub lambda_plus: f64,
    pub y_bound: f64,
    pub mode: Mode,
    pub lambda_init: f64,
    pub loss_factor: f64,
    pub bound_convention: String,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub window: Option<WindowReport>,
}

#[derive(Debug, Clone, PartialEq)]
pub struct ExperimentOutput {
    pub rows: Vec<TrajectoryRow>,
    pub summary: RunSummary,
    pub constants: TheoremConstants,
}

pub const BOUND_CONVENTION: &str =
    "bound = max(ln(1/lambda_1), ln(1/(1-lambda_1))) / a, i.e. ln2/a from lambda_1 = 1/2";

struct Resolved {
    samples: Vec<SignalSample>,
    clip_count: usize,
    params: MixtureParams,
    constants: TheoremConstants,
    init: MixtureState,
}

fn resolve(settings: &RunSettings) -> Result<Resolved> {
    let (spec, default_rate, default_mode) = match &settings.source {
        Source::Case(c @ (1 | 2)) => {
            let (kind, y, mu) = if *c == 1 {
                (SequenceKind::Case1, 0.5, 0.08)
            } else {
                (SequenceKind::Case2, 0.54, 0.04)
            };
            let spec = SequenceSpec::new(
                kind,
                settings.n.unwrap_or(10_000),
                settings.y_bound.unwrap_or(y),
            );
            (spec, Rate::Mu(mu), Mode::Project)
        }
        Source::Case(c) => return Err(CliError::usage(format!("--case must be 1 or 2, got {c}"))),
        Source::Input(path) => {
            let y_bound = settings
                .y_bound
                .ok_or_else(|| CliError::usage("--input needs --ybound for clipping"))?;
            let spec = SequenceSpec {
                kind: SequenceKind::CustomFile { path: path.clone() },
                n: settings.n,
                y_bound,
            };
            (spec, Rate::Eps(0.1), Mode::Monitor)
        }
        Source::Spec(path) => {
            let mut spec = SequenceSpec::load(path)?;
            if let Some(n) = settings.n {
                spec.n = Some(n);
            }
            if let Some(y) = settings.y_bound {
                spec.y_bound = y;
            }
            (spec, Rate::Eps(0.1), Mode::Monitor)
        }
    };

    let seq = generate(&spec)?;
    let lambda_plus = settings.lambda_plus.unwrap_or(0.08);
    let y_bound = spec.y_bound;
    let (constants, mu) = match settings.rate.unwrap_or(default_rate) {
        Rate::Mu(mu) => (TheoremConstants::from_mu(mu, y_bound, lambda_plus)?, mu),
        Rate::Eps(eps) => {
            let c = TheoremConstants::from_eps(eps, y_bound, lambda_plus)?;
            (c, c.mu)
        }
    };
    let params = MixtureParams::new(mu, lambda_plus, y_bound, settings.mode.unwrap_or(default_mode))?;
    let init = match settings.lambda_init {
        Some(l) => MixtureState::with_lambda(l)?,
        None => MixtureState::default(),
    };
    Ok(Resolved {
        samples: seq.samples,
        clip_count: seq.clip_count,
        params,
        constants,
        init,
    })
}

pub fn run_experiment(settings: &RunSettings) -> Result<ExperimentOutput> {
    let Resolved {
        samples,
        clip_count,
        params,
        constants,
        init,
    } = resolve(settings)?;
    let trajectory = run_from(&params, init, &samples)?;
    let lambda_init = init.lambda;

    let mut stats = OracleStats::new();
    let mut rows = Vec::with_capacity(trajectory.len());
    for (rec, &cum_loss) in trajectory.records.iter().zip(&trajectory.cum_loss) {
        stats = stats.accumulate(&rec.sample);
        let best = stats.best_beta()?;
        let rb = regret_and_bound(cum_loss, best.loss, &constants, rec.t, lambda_init, None)?;
        rows.push(TrajectoryRow {
            t: rec.t,
            y: rec.sample.y,
            yhat1: rec.sample.yhat1,
            yhat2: rec.sample.yhat2,
            lambda: rec.lambda_before,
            rho: rec.rho_before,
            yhat: rec.yhat,
            e: rec.e,
            cum_loss,
            best_beta_prefix: best.beta,
            best_loss_prefix: best.loss,
            regret: rb.regret,
            norm_regret: rb.regret / rec.t as f64,
            bound_norm: rb.bound_normalized,
            in_range: rec.in_range,
            projected: rec.projected,
        });
    }

    let n = trajectory.len();
    let best = stats.best_beta()?;
    let loss_alg = trajectory.total_loss();
    let rb = regret_and_bound(loss_alg, best.loss, &constants, n, lambda_init, None)?;
    let at_best = regret_and_bound(loss_alg, best.loss, &constants, n, lambda_init, Some(best.beta))?;

    let window = match settings.window {
        Some((start, end)) => {
            if end > n {
                return Err(CliError::usage(format!("window {start}:{end} exceeds the {n} steps run")));
            }
            Some(window_report(&trajectory.records[start - 1..end], &constants)?)
        }
        None => None,
    };

    let out_of_range_steps = trajectory.out_of_range_steps();
    let summary = RunSummary {
        n,
        final_lambda: trajectory.final_state.lambda,
        loss_alg,
        best_beta: best.beta,
        best_beta_degenerate: best.degenerate,
        loss_best: best.loss,
        regret: rb.regret,
        normalized_regret: rb.regret / n as f64,
        bound_total: rb.bound_total,
        bound_normalized: rb.bound_normalized,
        bound_total_at_best_beta: at_best.bound_total,
        out_of_range_steps,
        projected_steps: trajectory.projected_steps(),
        clip_count,
        theorem_valid: out_of_range_steps == 0,
        mu: params.mu,
        eps: constants.eps,
        lambda_plus: params.lambda_plus,
        y_bound: params.y_bound,
        mode: params.mode,
        lambda_init,
        loss_factor: constants.loss_factor(),
        bound_convention: BOUND_CONVENTION.to_string(),
        window,
    };
    Ok(ExperimentOutput {
        rows,
        summary,
        constants,
    })
}

/// Regret over a slice of step records, against the slice's own best
/// fixed weight, with the bound taken from the weight at the slice start.
pub fn window_report(
    records: &[convexmix::StepRecord],
    constants: &TheoremConstants,
) -> Result<WindowReport> {
    let first = records
        .first()
        .ok_or_else(|| CliError::usage("window is empty"))?;
    let last = records.last().expect("non-empty");
    let loss_alg: f64 = records.iter().map(|r| r.e * r.e).sum();
    let stats = OracleStats::from_samples(records.iter().map(|r| &r.sample));
    let best = stats.best_beta()?;
    let len = records.len();
    let rb = regret_and_bound(loss_alg, best.loss, constants, len, first.lambda_before, None)?;
    Ok(WindowReport {
        start: first.t,
        end: last.t,
        lambda_start: first.lambda_before,
        loss_alg,
        best_beta: best.beta,
        loss_best: best.loss,
        regret: rb.regret,
        bound_total: rb.bound_total,
        bound_normalized: rb.bound_normalized,
    })
}
