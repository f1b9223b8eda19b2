//! Necessary conditions on `(a, b, μ)` and an exact audit of the per-step
//! inequality on adversarial instances.
//!
//! The lower-bound argument evaluates the per-step inequality on two
//! hand-built instances and relaxes the progress term with Jensen's
//! inequality. Here every instance is evaluated exactly through the
//! multiplicative update instead, so the audit never depends on the
//! relaxation being applied in the right direction.

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use crate::bounds::progress;
use crate::error::{Error, Result};
use crate::mixture::{predict, step_multiplicative, MixtureParams, Mode, SignalSample};
use crate::INEQUALITY_TOL;

/// Necessary conditions printed for a candidate triple.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct LemmaBounds {
    /// `a / (λ⁺(1−λ⁺))`
    pub mu_min: f64,
    /// `4a + μ/4`
    pub b_min_via_mu: f64,
    /// `4a + a/(4λ⁺(1−λ⁺))`
    pub b_min_combined: f64,
}

pub fn lemma_bounds(a: f64, mu: f64, lambda_plus: f64) -> Result<LemmaBounds> {
    if !(a > 0.0 && mu > 0.0) {
        return Err(Error::domain(format!("a and mu must be positive, got a={a}, mu={mu}")));
    }
    if !(lambda_plus > 0.0 && lambda_plus < 0.5) {
        return Err(Error::domain(format!(
            "lambda_plus must lie in (0, 1/2), got {lambda_plus}"
        )));
    }
    let k0 = lambda_plus * (1.0 - lambda_plus);
    Ok(LemmaBounds {
        mu_min: a / k0,
        b_min_via_mu: 4.0 * a + mu / 4.0,
        b_min_combined: 4.0 * a + a / (4.0 * k0),
    })
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct AuditInstance {
    pub y: f64,
    pub yhat1: f64,
    pub yhat2: f64,
    pub lambda_t: f64,
    pub beta: f64,
}

impl AuditInstance {
    pub fn sample(&self) -> SignalSample {
        SignalSample {
            y: self.y,
            yhat1: self.yhat1,
            yhat2: self.yhat2,
        }
    }

    fn key(&self) -> [f64; 5] {
        [self.y, self.yhat1, self.yhat2, self.lambda_t, self.beta]
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct AuditReport {
    pub yhat: f64,
    pub e_t: f64,
    pub e_beta: f64,
    pub lambda_next: f64,
    /// `a·e_t² − b·e_{β,t}²`
    pub lhs: f64,
    /// Exact `β·ln(λ'/λ) + (1−β)·ln((1−λ')/(1−λ))`.
    pub progress: f64,
    pub margin: f64,
    pub violated: bool,
}

/// The two printed constructions:
/// `y = ŷ₁ = Y, ŷ₂ = 0, λ = λ⁺, β = 1` and
/// `y = −Y/2, ŷ₁ = 0, ŷ₂ = Y, λ = 1/2, β = 1`.
pub fn construction_instances(y_bound: f64, lambda_plus: f64) -> [AuditInstance; 2] {
    [
        AuditInstance {
            y: y_bound,
            yhat1: y_bound,
            yhat2: 0.0,
            lambda_t: lambda_plus,
            beta: 1.0,
        },
        AuditInstance {
            y: -y_bound / 2.0,
            yhat1: 0.0,
            yhat2: y_bound,
            lambda_t: 0.5,
            beta: 1.0,
        },
    ]
}

/// A candidate `(a, b, μ)` triple under audit.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Auditor {
    pub a: f64,
    pub b: f64,
    pub mu: f64,
    /// A margin below `-tolerance` counts as a violation.
    pub tolerance: f64,
}

/// Instances found with a negative margin, most negative first.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ViolationSearch {
    pub evaluated: usize,
    pub witnesses: Vec<(AuditInstance, AuditReport)>,
}

impl Auditor {
    pub fn new(a: f64, b: f64, mu: f64) -> Result<Self> {
        for (name, v) in [("a", a), ("b", b), ("mu", mu)] {
            if !(v.is_finite() && v > 0.0) {
                return Err(Error::domain(format!("{name} must be positive, got {v}")));
            }
        }
        Ok(Self {
            a,
            b,
            mu,
            tolerance: INEQUALITY_TOL,
        })
    }

    pub fn with_tolerance(mut self, tolerance: f64) -> Self {
        self.tolerance = tolerance;
        self
    }

    pub fn evaluate(&self, inst: &AuditInstance) -> Result<AuditReport> {
        if !(inst.lambda_t > 0.0 && inst.lambda_t < 1.0) || !(0.0..=1.0).contains(&inst.beta) {
            return Err(Error::domain(format!("invalid audit instance {inst:?}")));
        }
        let sample = inst.sample();
        // project mode is irrelevant here: only the raw multiplicative step is used
        let params = MixtureParams {
            mu: self.mu,
            lambda_plus: f64::MIN_POSITIVE,
            y_bound: f64::INFINITY,
            mode: Mode::Monitor,
        };
        let lambda_next = step_multiplicative(&params, inst.lambda_t, &sample)?;
        if lambda_next <= 0.0 || lambda_next >= 1.0 {
            return Err(Error::Numeric {
                step: 0,
                what: format!("updated weight degenerated to {lambda_next} on {inst:?}"),
            });
        }
        let yhat = predict(inst.lambda_t, &sample);
        let e_t = inst.y - yhat;
        let e_beta = inst.y - (inst.beta * inst.yhat1 + (1.0 - inst.beta) * inst.yhat2);
        let lhs = self.a * e_t * e_t - self.b * e_beta * e_beta;
        let progress = progress(inst.beta, inst.lambda_t, lambda_next)?;
        let margin = progress - lhs;
        Ok(AuditReport {
            yhat,
            e_t,
            e_beta,
            lambda_next,
            lhs,
            progress,
            margin,
            violated: margin < -self.tolerance,
        })
    }

    /// Evaluates the structured corner grid in a fixed order, then fills up
    /// to `budget` instances with uniform draws from `seed`.
    pub fn search(
        &self,
        lambda_plus: f64,
        y_bound: f64,
        budget: usize,
        seed: u64,
    ) -> Result<ViolationSearch> {
        if budget == 0 {
            return Err(Error::domain("search budget must be at least 1"));
        }
        if !(lambda_plus > 0.0 && lambda_plus < 0.5) || !(y_bound > 0.0) {
            return Err(Error::domain("invalid lambda_plus or y_bound"));
        }
        let mut witnesses = Vec::new();
        let mut evaluated = 0;
        let mut visit = |inst: AuditInstance| -> Result<()> {
            let report = self.evaluate(&inst)?;
            evaluated += 1;
            if report.violated {
                witnesses.push((inst, report));
            }
            Ok(())
        };

        let grid = structured_grid(lambda_plus, y_bound);
        for inst in grid.iter().take(budget) {
            visit(*inst)?;
        }
        if budget > grid.len() {
            let mut rng = ChaCha8Rng::seed_from_u64(seed);
            for _ in grid.len()..budget {
                let inst = AuditInstance {
                    y: rng.gen_range(-y_bound..=y_bound),
                    yhat1: rng.gen_range(-y_bound..=y_bound),
                    yhat2: rng.gen_range(-y_bound..=y_bound),
                    lambda_t: rng.gen_range(lambda_plus..=1.0 - lambda_plus),
                    beta: rng.gen_range(0.0..=1.0),
                };
                visit(inst)?;
            }
        }

        witnesses.sort_by(|(ia, ra), (ib, rb)| {
            ra.margin.total_cmp(&rb.margin).then_with(|| {
                ia.key()
                    .iter()
                    .zip(ib.key().iter())
                    .map(|(x, y)| x.total_cmp(y))
                    .find(|o| o.is_ne())
                    .unwrap_or(std::cmp::Ordering::Equal)
            })
        });
        Ok(ViolationSearch {
            evaluated,
            witnesses,
        })
    }
}

/// Corner instances: `y, ŷ₁, ŷ₂ ∈ {−Y, −Y/2, 0, Y/2, Y}`,
/// `λ ∈ {λ⁺, 1/4, 1/2, 3/4, 1−λ⁺}`, `β ∈ {0, 1/2, 1}`.
pub fn structured_grid(lambda_plus: f64, y_bound: f64) -> Vec<AuditInstance> {
    let levels = [-y_bound, -y_bound / 2.0, 0.0, y_bound / 2.0, y_bound];
    let lambdas = [lambda_plus, 0.25, 0.5, 0.75, 1.0 - lambda_plus];
    let betas = [0.0, 0.5, 1.0];
    let mut out = Vec::with_capacity(levels.len().pow(3) * lambdas.len() * betas.len());
    for &y in &levels {
        for &yhat1 in &levels {
            for &yhat2 in &levels {
                for &lambda_t in &lambdas {
                    for &beta in &betas {
                        out.push(AuditInstance {
                            y,
                            yhat1,
                            yhat2,
                            lambda_t,
                            beta,
                        });
                    }
                }
            }
        }
    }
    out
}

/// Exact per-step evaluation with the default tolerance.
pub fn evaluate_instance(a: f64, b: f64, mu: f64, instance: &AuditInstance) -> Result<AuditReport> {
    Auditor::new(a, b, mu)?.evaluate(instance)
}

pub fn search_violations(
    a: f64,
    b: f64,
    mu: f64,
    lambda_plus: f64,
    y_bound: f64,
    budget: usize,
    seed: u64,
) -> Result<ViolationSearch> {
    Auditor::new(a, b, mu)?.search(lambda_plus, y_bound, budget, seed)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::bounds::TheoremConstants;

    #[test]
    fn bounds_for_theorem_triple() {
        let c = TheoremConstants::from_eps(0.1, 1.0, 0.08).unwrap();
        let lb = lemma_bounds(c.a, c.mu, 0.08).unwrap();
        assert!((lb.mu_min - 0.795_795_956_388_853_7).abs() < 1e-12);
        assert!((lb.b_min_via_mu - 0.491_801_901_048_311_6).abs() < 1e-12);
        assert!((lb.b_min_combined - 0.433_231_318_658_091_9).abs() < 1e-12);
        // the triple itself sits below the printed necessary condition on b
        assert!(c.b < lb.b_min_combined);
    }

    #[test]
    fn bounds_scale_with_a() {
        let lb = lemma_bounds(1e-300, 0.8, 0.1).unwrap();
        assert!((lb.b_min_via_mu - 0.2).abs() < 1e-15);
        assert!(lb.mu_min < 1e-290 && lb.b_min_combined < 1e-290);

        let a = 0.03;
        let near_half = lemma_bounds(a, 1.0, 0.5 - 1e-9).unwrap();
        assert!((near_half.b_min_combined - 5.0 * a).abs() < 1e-9);

        assert!(lemma_bounds(0.0, 1.0, 0.1).is_err());
        assert!(lemma_bounds(0.1, 1.0, 0.5).is_err());
    }

    #[test]
    fn printed_constructions() {
        let [i1, i2] = construction_instances(1.0, 0.08);
        assert_eq!(i1, AuditInstance { y: 1.0, yhat1: 1.0, yhat2: 0.0, lambda_t: 0.08, beta: 1.0 });
        assert_eq!(i2, AuditInstance { y: -0.5, yhat1: 0.0, yhat2: 1.0, lambda_t: 0.5, beta: 1.0 });

        let [h1, h2] = construction_instances(0.5, 0.08);
        assert_eq!(h1.y, 0.5 * i1.y);
        assert_eq!(h2.y, 0.5 * i2.y);
        assert_eq!(h2.yhat2, 0.5 * i2.yhat2);
    }

    #[test]
    fn second_construction_makes_positive_progress() {
        let c = TheoremConstants::from_eps(0.1, 1.0, 0.08).unwrap();
        let [_, i2] = construction_instances(1.0, 0.08);
        let r = evaluate_instance(c.a, c.b, c.mu, &i2).unwrap();
        assert!((r.progress - 0.120_493_049_268_880_9).abs() < 1e-12);
        assert!((r.margin - 0.086_922_466_878_661_27).abs() < 1e-12);
        assert!(!r.violated);
        // the relaxed bound claims progress ≤ −μY²/16
        assert!(r.progress > -c.mu / 16.0);
    }

    #[test]
    fn frozen_instance_has_zero_margin() {
        let inst = AuditInstance { y: 0.3, yhat1: 0.3, yhat2: 0.3, lambda_t: 0.4, beta: 0.2 };
        let r = evaluate_instance(0.05, 0.1, 1.0, &inst).unwrap();
        assert_eq!(r.margin, 0.0);
        assert!(!r.violated);
    }

    #[test]
    fn first_construction_violates_when_a_is_too_large() {
        let (mu, lp) = (1.0, 0.08);
        let k0 = lp * (1.0 - lp);
        let [i1, _] = construction_instances(1.0, lp);
        let a = 1.01 * mu * k0;
        let r = evaluate_instance(a, 0.1, mu, &i1).unwrap();
        assert!(r.lhs > mu * k0 * (1.0 - lp).powi(2));
        assert!(r.violated, "{r:?}");
    }

    #[test]
    fn jensen_relaxation_dominates_exact_progress() {
        let lp: f64 = 0.08;
        for i in 0..=2000 {
            let x = i as f64 * 0.01;
            let exact = -(lp + (1.0 - lp) * (-x).exp()).ln();
            assert!(exact <= (1.0 - lp) * x + 1e-15, "x = {x}");
        }
    }

    #[test]
    fn theorem_triple_has_no_grid_violations() {
        let c = TheoremConstants::from_eps(0.1, 1.0, 0.08).unwrap();
        let res = search_violations(c.a, c.b, c.mu, 0.08, 1.0, 1875, 3).unwrap();
        assert_eq!(res.evaluated, 1875);
        assert!(res.witnesses.is_empty());
    }

    #[test]
    fn halved_b_produces_witnesses_at_half() {
        let c = TheoremConstants::from_eps(0.1, 1.0, 0.08).unwrap();
        assert!(4.0 * c.a * (0.5 + 1.0 / (2.0 * c.b)) > 1.0);
        let res = search_violations(c.a, c.b / 2.0, c.mu, 0.08, 1.0, 1875, 0).unwrap();
        assert!(!res.witnesses.is_empty());
        let (worst, report) = res.witnesses[0];
        assert_eq!(worst.lambda_t, 0.5);
        assert!((report.margin + 0.161_805_272_177_012_1).abs() < 1e-9);
        for w in res.witnesses.windows(2) {
            assert!(w[0].1.margin <= w[1].1.margin);
        }
    }

    #[test]
    fn budget_one_evaluates_first_corner() {
        let res = search_violations(0.0586, 0.005, 1.03, 0.08, 1.0, 1, 42).unwrap();
        assert_eq!(res.evaluated, 1);
        let again = search_violations(0.0586, 0.005, 1.03, 0.08, 1.0, 1, 42).unwrap();
        assert_eq!(res, again);
        assert_eq!(structured_grid(0.08, 1.0)[0], AuditInstance {
            y: -1.0, yhat1: -1.0, yhat2: -1.0, lambda_t: 0.08, beta: 0.0
        });
    }

    #[test]
    fn random_fill_is_seeded() {
        let a = search_violations(0.0586, 0.005, 1.03, 0.08, 1.0, 5000, 9).unwrap();
        let b = search_violations(0.0586, 0.005, 1.03, 0.08, 1.0, 5000, 9).unwrap();
        assert_eq!(a, b);
        assert_eq!(a.evaluated, 5000);
        assert!(a.witnesses.len() > 1316);
    }

    #[test]
    fn invalid_inputs() {
        assert!(search_violations(0.1, 0.1, 1.0, 0.08, 1.0, 0, 0).is_err());
        assert!(Auditor::new(0.0, 0.1, 1.0).is_err());
        let bad = AuditInstance { y: 0.0, yhat1: 0.0, yhat2: 0.0, lambda_t: 1.0, beta: 0.5 };
        assert!(evaluate_instance(0.1, 0.1, 1.0, &bad).is_err());
    }
}
