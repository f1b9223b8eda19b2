//! Best fixed convex combination in hindsight.
//!
//! With `d_t = ŷ₁,t − ŷ₂,t` and `r_t = y_t − ŷ₂,t`, the loss of the fixed
//! weight `β` is `Σ (r_t − β·d_t)² = s_rr − 2β·s_rd + β²·s_dd`, so three
//! running sums are enough to evaluate and minimize it at every prefix.

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::mixture::SignalSample;

#[derive(Debug, Clone, Copy, PartialEq, Default, Serialize, Deserialize)]
pub struct OracleStats {
    pub n: usize,
    /// `Σ d_t²`
    pub s_dd: f64,
    /// `Σ r_t·d_t`
    pub s_rd: f64,
    /// `Σ r_t²`
    pub s_rr: f64,
}

/// Minimizer of the hindsight loss over `[0, 1]`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct BestBeta {
    pub beta: f64,
    pub loss: f64,
    /// Set when the experts never differ, so every `β` is optimal.
    pub degenerate: bool,
}

impl OracleStats {
    pub fn new() -> Self {
        Self::default()
    }

    pub fn from_samples<'a>(samples: impl IntoIterator<Item = &'a SignalSample>) -> Self {
        samples.into_iter().fold(Self::new(), |s, x| s.accumulate(x))
    }

    #[must_use]
    pub fn accumulate(self, sample: &SignalSample) -> Self {
        let d = sample.yhat1 - sample.yhat2;
        let r = sample.y - sample.yhat2;
        Self {
            n: self.n + 1,
            s_dd: self.s_dd + d * d,
            s_rd: self.s_rd + r * d,
            s_rr: self.s_rr + r * r,
        }
    }

    /// Statistics of the concatenation of the two underlying sequences.
    #[must_use]
    pub fn merge(self, other: &Self) -> Self {
        Self {
            n: self.n + other.n,
            s_dd: self.s_dd + other.s_dd,
            s_rd: self.s_rd + other.s_rd,
            s_rr: self.s_rr + other.s_rr,
        }
    }

    /// Cumulative squared loss of the fixed combination `β·ŷ₁ + (1−β)·ŷ₂`.
    pub fn loss_at_beta(&self, beta: f64) -> Result<f64> {
        if !(0.0..=1.0).contains(&beta) {
            return Err(Error::domain(format!("beta must lie in [0, 1], got {beta}")));
        }
        Ok(self.quadratic(beta))
    }

    fn quadratic(&self, beta: f64) -> f64 {
        (self.s_rr - 2.0 * beta * self.s_rd + beta * beta * self.s_dd).max(0.0)
    }

    pub fn best_beta(&self) -> Result<BestBeta> {
        if self.n == 0 {
            return Err(Error::domain("best beta needs at least one sample"));
        }
        if self.s_dd <= 0.0 {
            return Ok(BestBeta {
                beta: 0.5,
                loss: self.quadratic(0.5),
                degenerate: true,
            });
        }
        let beta = (self.s_rd / self.s_dd).clamp(0.0, 1.0);
        Ok(BestBeta {
            beta,
            loss: self.quadratic(beta),
            degenerate: false,
        })
    }
}

/// Loss of the fixed weight `beta` summed directly over `sequence`.
pub fn direct_loss(sequence: &[SignalSample], beta: f64) -> f64 {
    sequence
        .iter()
        .map(|s| {
            let e = s.y - (beta * s.yhat1 + (1.0 - beta) * s.yhat2);
            e * e
        })
        .sum()
}

/// Brute-force minimizer over `{0, h, 2h, …, 1}` by direct summation.
/// Ties go to the smaller `β`.
pub fn grid_best_beta(sequence: &[SignalSample], resolution: f64) -> Result<(f64, f64)> {
    if sequence.is_empty() {
        return Err(Error::domain("grid search needs a non-empty sequence"));
    }
    if !(resolution > 0.0 && resolution <= 0.1) {
        return Err(Error::domain(format!(
            "resolution must lie in (0, 0.1], got {resolution}"
        )));
    }
    let steps = (1.0 / resolution + 1e-9).floor() as usize;
    let mut grid: Vec<f64> = (0..=steps).map(|i| (i as f64 * resolution).min(1.0)).collect();
    if *grid.last().unwrap() < 1.0 {
        grid.push(1.0);
    }

    let mut best = (0.0, f64::INFINITY);
    for beta in grid {
        let loss = direct_loss(sequence, beta);
        if loss < best.1 {
            best = (beta, loss);
        }
    }
    Ok(best)
}
