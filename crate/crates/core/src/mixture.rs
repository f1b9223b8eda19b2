//! The convexly constrained combiner.
//!
//! At step `t` the combiner predicts `ŷ_t = λ_t·ŷ₁,t + (1−λ_t)·ŷ₂,t`,
//! observes `e_t = y_t − ŷ_t` and updates
//!
//! ```text
//! ρ_{t+1} = ρ_t + μ·e_t·λ_t(1−λ_t)·(ŷ₁,t − ŷ₂,t),   λ_{t+1} = 1/(1+e^{−ρ_{t+1}})
//! ```
//!
//! The same update written directly on `λ` is the exponentiated-gradient
//! step with the adaptive rate `μλ_t(1−λ_t)`; see [`step_multiplicative`].

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

/// One time step: the desired value and the two expert outputs.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct SignalSample {
    pub y: f64,
    pub yhat1: f64,
    pub yhat2: f64,
}

impl SignalSample {
    pub fn new(y: f64, yhat1: f64, yhat2: f64) -> Result<Self> {
        if !(y.is_finite() && yhat1.is_finite() && yhat2.is_finite()) {
            return Err(Error::domain(format!(
                "non-finite sample (y={y}, yhat1={yhat1}, yhat2={yhat2})"
            )));
        }
        Ok(Self { y, yhat1, yhat2 })
    }

    /// Clamps every field into `[-y_bound, y_bound]`, returning the clipped
    /// sample and how many fields were changed.
    pub fn clipped(self, y_bound: f64) -> (Self, usize) {
        let mut count = 0;
        let mut clip = |v: f64| {
            let c = v.clamp(-y_bound, y_bound);
            if c != v {
                count += 1;
            }
            c
        };
        let out = Self {
            y: clip(self.y),
            yhat1: clip(self.yhat1),
            yhat2: clip(self.yhat2),
        };
        (out, count)
    }

    pub fn within(&self, y_bound: f64) -> bool {
        self.y.abs() <= y_bound && self.yhat1.abs() <= y_bound && self.yhat2.abs() <= y_bound
    }

    /// `ŷ₁ − ŷ₂`.
    pub fn spread(&self) -> f64 {
        self.yhat1 - self.yhat2
    }
}

/// How the `[λ⁺, 1−λ⁺]` constraint is treated.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Mode {
    /// Run the raw update and only flag steps whose weight left the range.
    #[default]
    Monitor,
    /// Clamp the weight back to the nearest boundary after each update.
    Project,
}

impl std::str::FromStr for Mode {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s {
            "monitor" => Ok(Mode::Monitor),
            "project" => Ok(Mode::Project),
            other => Err(Error::domain(format!(
                "unknown mode {other:?} (expected monitor or project)"
            ))),
        }
    }
}

impl std::fmt::Display for Mode {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.write_str(match self {
            Mode::Monitor => "monitor",
            Mode::Project => "project",
        })
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct MixtureParams {
    /// Learning rate `μ`.
    pub mu: f64,
    /// Boundary `λ⁺`; the weight is meant to stay in `[λ⁺, 1−λ⁺]`.
    pub lambda_plus: f64,
    /// Signal bound `Y`.
    pub y_bound: f64,
    pub mode: Mode,
}

impl MixtureParams {
    pub fn new(mu: f64, lambda_plus: f64, y_bound: f64, mode: Mode) -> Result<Self> {
        if !(mu.is_finite() && mu > 0.0) {
            return Err(Error::domain(format!("learning rate must be positive, got {mu}")));
        }
        if !(lambda_plus > 0.0 && lambda_plus < 0.5) {
            return Err(Error::domain(format!(
                "lambda_plus must lie in (0, 1/2), got {lambda_plus}"
            )));
        }
        if !(y_bound.is_finite() && y_bound > 0.0) {
            return Err(Error::domain(format!("signal bound must be positive, got {y_bound}")));
        }
        Ok(Self {
            mu,
            lambda_plus,
            y_bound,
            mode,
        })
    }

    pub fn in_range(&self, lambda: f64) -> bool {
        lambda >= self.lambda_plus && lambda <= 1.0 - self.lambda_plus
    }
}

/// The combiner's evolving state. `lambda` is always `logistic(rho)`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct MixtureState {
    pub rho: f64,
    pub lambda: f64,
    /// 1-based index of the next step.
    pub t: usize,
}

impl Default for MixtureState {
    fn default() -> Self {
        Self {
            rho: 0.0,
            lambda: 0.5,
            t: 1,
        }
    }
}

impl MixtureState {
    /// Starts from an arbitrary weight instead of `1/2`.
    pub fn with_lambda(lambda: f64) -> Result<Self> {
        Ok(Self {
            rho: logit(lambda)?,
            lambda,
            t: 1,
        })
    }
}

/// What happened during one step.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct StepRecord {
    pub t: usize,
    pub sample: SignalSample,
    pub rho_before: f64,
    pub lambda_before: f64,
    pub lambda_after: f64,
    /// Combined prediction `ŷ_t`.
    pub yhat: f64,
    /// `e_t = y_t − ŷ_t`.
    pub e: f64,
    /// Whether `lambda_before ∈ [λ⁺, 1−λ⁺]`.
    pub in_range: bool,
    /// Whether the post-update weight was clamped this step.
    pub projected: bool,
}

/// Output of [`run`]: one record per sample and the running cumulative loss.
#[derive(Debug, Clone, PartialEq)]
pub struct Trajectory {
    pub records: Vec<StepRecord>,
    /// `cum_loss[i] = Σ_{t ≤ i+1} e_t²`.
    pub cum_loss: Vec<f64>,
    pub final_state: MixtureState,
}

impl Trajectory {
    pub fn len(&self) -> usize {
        self.records.len()
    }

    pub fn is_empty(&self) -> bool {
        self.records.is_empty()
    }

    pub fn total_loss(&self) -> f64 {
        self.cum_loss.last().copied().unwrap_or(0.0)
    }

    pub fn out_of_range_steps(&self) -> usize {
        self.records.iter().filter(|r| !r.in_range).count()
    }

    pub fn projected_steps(&self) -> usize {
        self.records.iter().filter(|r| r.projected).count()
    }
}

/// `1/(1+e^{−ρ})`, evaluated without overflow for large `|ρ|`.
pub fn logistic(rho: f64) -> Result<f64> {
    if !rho.is_finite() {
        return Err(Error::domain(format!("logistic of non-finite value {rho}")));
    }
    Ok(if rho >= 0.0 {
        1.0 / (1.0 + (-rho).exp())
    } else {
        let e = rho.exp();
        e / (1.0 + e)
    })
}

/// Inverse of [`logistic`]: `ln(λ/(1−λ))`.
pub fn logit(lambda: f64) -> Result<f64> {
    if !(lambda > 0.0 && lambda < 1.0) {
        return Err(Error::domain(format!("logit needs lambda in (0, 1), got {lambda}")));
    }
    Ok(lambda.ln() - (-lambda).ln_1p())
}

/// Convex combination `λ·ŷ₁ + (1−λ)·ŷ₂`.
pub fn predict(lambda: f64, sample: &SignalSample) -> f64 {
    lambda * sample.yhat1 + (1.0 - lambda) * sample.yhat2
}

fn checked_lambda(rho: f64, step: usize) -> Result<f64> {
    if !rho.is_finite() {
        return Err(Error::Numeric {
            step,
            what: format!("auxiliary variable became {rho}"),
        });
    }
    let lambda = logistic(rho).expect("finite rho");
    if lambda <= 0.0 || lambda >= 1.0 {
        return Err(Error::Numeric {
            step,
            what: format!("weight saturated to {lambda} (rho = {rho})"),
        });
    }
    Ok(lambda)
}

/// One additive update of `ρ`, followed by projection in [`Mode::Project`].
pub fn step(
    params: &MixtureParams,
    state: &MixtureState,
    sample: &SignalSample,
) -> Result<(MixtureState, StepRecord)> {
    let lambda = state.lambda;
    let yhat = predict(lambda, sample);
    let e = sample.y - yhat;
    if !(yhat.is_finite() && e.is_finite()) {
        return Err(Error::Numeric {
            step: state.t,
            what: format!("prediction {yhat} / error {e} not finite"),
        });
    }

    let delta = params.mu * e * lambda * (1.0 - lambda) * sample.spread();
    let mut rho = state.rho + delta;
    let mut lambda_next = checked_lambda(rho, state.t)?;

    let mut projected = false;
    if params.mode == Mode::Project && !params.in_range(lambda_next) {
        lambda_next = lambda_next.clamp(params.lambda_plus, 1.0 - params.lambda_plus);
        rho = logit(lambda_next)?;
        projected = true;
    }

    let record = StepRecord {
        t: state.t,
        sample: *sample,
        rho_before: state.rho,
        lambda_before: lambda,
        lambda_after: lambda_next,
        yhat,
        e,
        in_range: params.in_range(lambda),
        projected,
    };
    let next = MixtureState {
        rho,
        lambda: lambda_next,
        t: state.t + 1,
    };
    Ok((next, record))
}

/// The update written directly on `λ`:
///
/// ```text
/// λ' = λ·e^{ηŷ₁} / (λ·e^{ηŷ₁} + (1−λ)·e^{ηŷ₂}),   η = μ·e·λ(1−λ)
/// ```
///
/// No projection is applied.
pub fn step_multiplicative(params: &MixtureParams, lambda: f64, sample: &SignalSample) -> Result<f64> {
    if !(lambda > 0.0 && lambda < 1.0) {
        return Err(Error::domain(format!("weight must lie in (0, 1), got {lambda}")));
    }
    let e = sample.y - predict(lambda, sample);
    let rate = params.mu * e * lambda * (1.0 - lambda);
    let x1 = rate * sample.yhat1;
    let x2 = rate * sample.yhat2;
    let m = x1.max(x2);
    let w1 = lambda * (x1 - m).exp();
    let w2 = (1.0 - lambda) * (x2 - m).exp();
    let out = w1 / (w1 + w2);
    if !out.is_finite() {
        return Err(Error::Numeric {
            step: 0,
            what: format!("multiplicative update produced {out}"),
        });
    }
    Ok(out)
}

/// Runs the combiner from the default initial state.
pub fn run(params: &MixtureParams, sequence: &[SignalSample]) -> Result<Trajectory> {
    run_from(params, MixtureState::default(), sequence)
}

/// Runs the combiner from `init` over `sequence`.
pub fn run_from(
    params: &MixtureParams,
    init: MixtureState,
    sequence: &[SignalSample],
) -> Result<Trajectory> {
    if sequence.is_empty() {
        return Err(Error::domain("cannot run on an empty sequence"));
    }
    let mut state = init;
    let mut records = Vec::with_capacity(sequence.len());
    let mut cum_loss = Vec::with_capacity(sequence.len());
    let mut total = 0.0;
    for sample in sequence {
        let (next, record) = step(params, &state, sample)?;
        total += record.e * record.e;
        cum_loss.push(total);
        records.push(record);
        state = next;
    }
    Ok(Trajectory {
        records,
        cum_loss,
        final_state: state,
    })
}
