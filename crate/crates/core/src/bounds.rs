//! Constants and inequalities behind the regret guarantee.
//!
//! For a signal bound `Y`, a weight boundary `λ⁺` and a free parameter
//! `ε > 0`, the guarantee uses
//!
//! ```text
//! z = (1 − 4λ⁺(1−λ⁺)) / (1 + 4λ⁺(1−λ⁺))
//! b = ε/Y²
//! a = (1−z²)·ε / (Y²(2ε+1))
//! s = Y²/2 + 1/(4b)
//! μ = 4ε/(2ε+1) · (2+2z)/Y²
//! ```
//!
//! and shows that whenever `λ_t ∈ [λ⁺, 1−λ⁺]` each step satisfies
//! `a·e_t² − b·e_{β,t}² ≤ D(u‖w_t) − D(u‖w_{t+1})` for every fixed `β`.
//! Summing over `t` gives
//! `L_n − ((2ε+1)/(1−z²))·L_n(β) ≤ D(u‖w_1)/a`.

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::IDENTITY_TOL;

/// `z` as a function of the boundary `λ⁺ ∈ (0, 1/2)`.
pub fn z_of(lambda_plus: f64) -> Result<f64> {
    if !(lambda_plus > 0.0 && lambda_plus < 0.5) {
        return Err(Error::domain(format!(
            "lambda_plus must lie in (0, 1/2), got {lambda_plus}"
        )));
    }
    let k = 4.0 * lambda_plus * (1.0 - lambda_plus);
    Ok((1.0 - k) / (1.0 + k))
}

/// `(2+2z)/Y²`, the scale of the `ε ↦ μ` map.
fn rate_scale(y_bound: f64, lambda_plus: f64) -> Result<f64> {
    let z = z_of(lambda_plus)?;
    Ok((2.0 + 2.0 * z) / (y_bound * y_bound))
}

/// Supremum of the learning rates reachable by some `ε > 0`.
pub fn mu_supremum(y_bound: f64, lambda_plus: f64) -> Result<f64> {
    Ok(2.0 * rate_scale(y_bound, lambda_plus)?)
}

/// Inverse of the `ε ↦ μ` map: `ε = μ / (4c − 2μ)` with `c = (2+2z)/Y²`.
pub fn eps_from_mu(mu: f64, y_bound: f64, lambda_plus: f64) -> Result<f64> {
    check_positive("y_bound", y_bound)?;
    check_positive("mu", mu)?;
    let c = rate_scale(y_bound, lambda_plus)?;
    if mu >= 2.0 * c {
        return Err(Error::domain(format!(
            "mu = {mu} admits no eps: it must stay below the supremum 2(2+2z)/Y^2 = {}",
            2.0 * c
        )));
    }
    Ok(mu / (4.0 * c - 2.0 * mu))
}

fn check_positive(name: &str, v: f64) -> Result<()> {
    if v.is_finite() && v > 0.0 {
        Ok(())
    } else {
        Err(Error::domain(format!("{name} must be positive and finite, got {v}")))
    }
}

/// Every constant of the guarantee for one `(ε, Y, λ⁺)`.
///
/// Built by [`TheoremConstants::from_eps`] the fields satisfy `4as = 1−z²`
/// and `μ = (2+2z)/s`. [`TheoremConstants::from_parts`] accepts arbitrary
/// `a`, `b`, `μ` so that broken triples can be audited.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct TheoremConstants {
    pub y_bound: f64,
    pub lambda_plus: f64,
    pub z: f64,
    pub eps: f64,
    pub mu: f64,
    pub a: f64,
    pub b: f64,
    pub s: f64,
}

/// Residuals of the defining identities.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct IdentityCheck {
    /// `|4as − (1−z²)|`
    pub four_as: f64,
    /// `|μ − (2+2z)/s| / μ`
    pub mu_rel: f64,
    /// `|b − ε/Y²| / b`
    pub b_rel: f64,
}

impl IdentityCheck {
    pub fn holds(&self, tol: f64) -> bool {
        self.four_as <= tol && self.mu_rel <= tol && self.b_rel <= tol
    }
}

impl TheoremConstants {
    pub fn from_eps(eps: f64, y_bound: f64, lambda_plus: f64) -> Result<Self> {
        check_positive("eps", eps)?;
        check_positive("y_bound", y_bound)?;
        let z = z_of(lambda_plus)?;
        let y2 = y_bound * y_bound;
        let b = eps / y2;
        let a = (1.0 - z * z) * eps / (y2 * (2.0 * eps + 1.0));
        let s = y2 / 2.0 + 1.0 / (4.0 * b);
        let mu = 4.0 * eps / (2.0 * eps + 1.0) * (2.0 + 2.0 * z) / y2;
        let c = Self {
            y_bound,
            lambda_plus,
            z,
            eps,
            mu,
            a,
            b,
            s,
        };
        let check = c.identities();
        if !check.holds(IDENTITY_TOL) {
            return Err(Error::Numeric {
                step: 0,
                what: format!("constants for eps={eps}, Y={y_bound}, lambda_plus={lambda_plus} break their identities: {check:?}"),
            });
        }
        Ok(c)
    }

    /// Constants for a given learning rate, via [`eps_from_mu`].
    pub fn from_mu(mu: f64, y_bound: f64, lambda_plus: f64) -> Result<Self> {
        Self::from_eps(eps_from_mu(mu, y_bound, lambda_plus)?, y_bound, lambda_plus)
    }

    /// Unchecked constructor; `s` is recomputed from `b`.
    pub fn from_parts(
        eps: f64,
        y_bound: f64,
        lambda_plus: f64,
        a: f64,
        b: f64,
        mu: f64,
    ) -> Result<Self> {
        for (name, v) in [("eps", eps), ("y_bound", y_bound), ("a", a), ("b", b), ("mu", mu)] {
            check_positive(name, v)?;
        }
        let z = z_of(lambda_plus)?;
        Ok(Self {
            y_bound,
            lambda_plus,
            z,
            eps,
            mu,
            a,
            b,
            s: y_bound * y_bound / 2.0 + 1.0 / (4.0 * b),
        })
    }

    pub fn identities(&self) -> IdentityCheck {
        IdentityCheck {
            four_as: (4.0 * self.a * self.s - (1.0 - self.z * self.z)).abs(),
            mu_rel: (self.mu - (2.0 + 2.0 * self.z) / self.s).abs() / self.mu,
            b_rel: (self.b - self.eps / (self.y_bound * self.y_bound)).abs() / self.b,
        }
    }

    /// Factor `(2ε+1)/(1−z²)` multiplying the hindsight loss in the regret.
    pub fn loss_factor(&self) -> f64 {
        (2.0 * self.eps + 1.0) / (1.0 - self.z * self.z)
    }
}

/// `D(u‖w) = Σ uᵢ ln(uᵢ/wᵢ)` for probability pairs, with `0·ln 0 = 0`.
pub fn kl(u: [f64; 2], w: [f64; 2]) -> Result<f64> {
    for (name, p) in [("u", u), ("w", w)] {
        if p.iter().any(|x| !(0.0..=1.0).contains(x)) || (p[0] + p[1] - 1.0).abs() > 1e-12 {
            return Err(Error::domain(format!(
                "{name} = {p:?} is not a probability pair"
            )));
        }
    }
    let mut d = 0.0;
    for i in 0..2 {
        if u[i] == 0.0 {
            continue;
        }
        if w[i] == 0.0 {
            return Err(Error::InfiniteDivergence { index: i });
        }
        d += u[i] * (u[i] / w[i]).ln();
    }
    Ok(d.max(0.0))
}

pub fn pair(p: f64) -> [f64; 2] {
    [p, 1.0 - p]
}

/// Progress `β·ln(λ'/λ) + (1−β)·ln((1−λ')/(1−λ))` of one weight move
/// towards the comparator `[β, 1−β]`.
pub fn progress(beta: f64, lambda_t: f64, lambda_t1: f64) -> Result<f64> {
    for (name, l) in [("lambda_t", lambda_t), ("lambda_t1", lambda_t1)] {
        if !(l > 0.0 && l < 1.0) {
            return Err(Error::domain(format!("{name} must lie in (0, 1), got {l}")));
        }
    }
    if !(0.0..=1.0).contains(&beta) {
        return Err(Error::domain(format!("beta must lie in [0, 1], got {beta}")));
    }
    let up = (lambda_t1 / lambda_t).ln();
    let down = ((1.0 - lambda_t1) / (1.0 - lambda_t)).ln();
    // skip zero-weight terms so an infinite ratio never meets a zero weight
    let mut p = 0.0;
    if beta > 0.0 {
        p += beta * up;
    }
    if beta < 1.0 {
        p += (1.0 - beta) * down;
    }
    Ok(p)
}

/// One evaluation of the per-step inequality.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct StepMargin {
    /// `a·e_t² − b·e_{β,t}²`
    pub lhs: f64,
    pub progress: f64,
    /// `progress − lhs`; nonnegative when the inequality holds.
    pub margin: f64,
}

/// Margin of `a·e_t² − b·e_{β,t}² ≤ progress` for one step.
///
/// The progress is computed from the log ratios and cross-checked against
/// the KL difference `D(u‖w_t) − D(u‖w_{t+1})`.
pub fn per_step_margin(
    constants: &TheoremConstants,
    beta: f64,
    lambda_t: f64,
    lambda_t1: f64,
    e_t: f64,
    e_beta_t: f64,
) -> Result<StepMargin> {
    let prog = progress(beta, lambda_t, lambda_t1)?;
    let u = pair(beta);
    let before = kl(u, pair(lambda_t))?;
    let after = kl(u, pair(lambda_t1))?;
    let mismatch = (prog - (before - after)).abs();
    if mismatch > IDENTITY_TOL * before.max(after).max(1.0) {
        return Err(Error::Numeric {
            step: 0,
            what: format!("progress {prog} disagrees with KL difference {} by {mismatch}", before - after),
        });
    }
    let lhs = constants.a * e_t * e_t - constants.b * e_beta_t * e_beta_t;
    Ok(StepMargin {
        lhs,
        progress: prog,
        margin: prog - lhs,
    })
}

/// Roots of `H(k) = k²μ²s − μk + a`, the quadratic whose sign on
/// `[λ⁺(1−λ⁺), 1/4]` decides the per-step inequality.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct SufficiencyRoots {
    pub k1: f64,
    pub k2: f64,
    /// `k1 ≥ 1/4` (within the identity tolerance)
    pub covers_quarter: bool,
    /// `k2 ≤ λ⁺(1−λ⁺)` (within the identity tolerance)
    pub covers_boundary: bool,
    mu: f64,
    a: f64,
    s: f64,
}

impl SufficiencyRoots {
    pub fn h(&self, k: f64) -> f64 {
        k * k * self.mu * self.mu * self.s - self.mu * k + self.a
    }

    pub fn sufficient(&self) -> bool {
        self.covers_quarter && self.covers_boundary
    }
}

pub fn sufficiency_roots(constants: &TheoremConstants) -> Result<SufficiencyRoots> {
    let TheoremConstants {
        a, s, mu, lambda_plus, ..
    } = *constants;
    let disc = 1.0 - 4.0 * a * s;
    if disc < -IDENTITY_TOL {
        return Err(Error::domain(format!(
            "1 - 4as = {disc} < 0: the sufficiency quadratic has complex roots"
        )));
    }
    let root = disc.max(0.0).sqrt();
    let k1 = (1.0 + root) / (2.0 * mu * s);
    let k2 = (1.0 - root) / (2.0 * mu * s);
    let k0 = lambda_plus * (1.0 - lambda_plus);
    Ok(SufficiencyRoots {
        k1,
        k2,
        covers_quarter: k1 >= 0.25 - IDENTITY_TOL,
        covers_boundary: k2 <= k0 + IDENTITY_TOL,
        mu,
        a,
        s,
    })
}

/// Regret against a comparator loss and the telescoped bound on it.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct RegretBound {
    /// `L_alg − ((2ε+1)/(1−z²))·L_best`
    pub regret: f64,
    /// `D(u‖w_1)/a`
    pub bound_total: f64,
    pub bound_normalized: f64,
}

/// Worst case of `D([β,1−β]‖[λ,1−λ])` over `β ∈ [0,1]`, attained at an
/// endpoint since the divergence is convex in `β`. Equals `ln 2` at `λ = 1/2`.
pub fn worst_case_divergence(lambda_init: f64) -> Result<f64> {
    if !(lambda_init > 0.0 && lambda_init < 1.0) {
        return Err(Error::domain(format!(
            "initial weight must lie in (0, 1), got {lambda_init}"
        )));
    }
    Ok((-lambda_init.ln()).max(-(-lambda_init).ln_1p()))
}

/// Regret and bound after `n` steps started from `lambda_init`.
///
/// With `beta = None` the bound uses the comparator-free worst case
/// [`worst_case_divergence`].
pub fn regret_and_bound(
    l_alg: f64,
    l_best: f64,
    constants: &TheoremConstants,
    n: usize,
    lambda_init: f64,
    beta: Option<f64>,
) -> Result<RegretBound> {
    if l_alg < 0.0 || l_best < 0.0 {
        return Err(Error::domain("losses must be nonnegative"));
    }
    if n == 0 {
        return Err(Error::domain("n must be at least 1"));
    }
    let divergence = match beta {
        Some(beta) => kl(pair(beta), pair(lambda_init))?,
        None => worst_case_divergence(lambda_init)?,
    };
    let bound_total = divergence / constants.a;
    Ok(RegretBound {
        regret: l_alg - constants.loss_factor() * l_best,
        bound_total,
        bound_normalized: bound_total / n as f64,
    })
}
