//! `lemma-audit`: necessary conditions, the two printed constructions and
//! a violation search for one `(a, b, μ)` triple.

use convexmix::lemma::{construction_instances, lemma_bounds, AuditInstance, AuditReport, Auditor, LemmaBounds};
use convexmix::TheoremConstants;
use serde::Serialize;

use crate::{CliError, Result};

#[derive(Debug, Clone, Copy, PartialEq)]
pub enum Triple {
    /// Derive `(a, b, μ)` from `ε`.
    Eps(f64),
    Explicit { a: f64, b: f64, mu: f64 },
}

#[derive(Debug, Clone, PartialEq)]
pub struct AuditSettings {
    pub triple: Triple,
    pub y_bound: f64,
    pub lambda_plus: f64,
    pub budget: usize,
    pub seed: u64,
    pub tolerance: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct ConstructionResult {
    pub name: &'static str,
    pub instance: AuditInstance,
    pub report: AuditReport,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct Witness {
    pub instance: AuditInstance,
    pub report: AuditReport,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct AuditOutcome {
    pub a: f64,
    pub b: f64,
    pub mu: f64,
    pub y_bound: f64,
    pub lambda_plus: f64,
    pub tolerance: f64,
    pub lemma_bounds: LemmaBounds,
    /// Whether `b` meets each printed necessary condition.
    pub b_meets_via_mu: bool,
    pub b_meets_combined: bool,
    pub mu_meets_min: bool,
    pub constructions: Vec<ConstructionResult>,
    pub budget: usize,
    pub seed: u64,
    pub evaluated: usize,
    pub witness_count: usize,
    pub witnesses: Vec<Witness>,
}

impl AuditOutcome {
    pub fn violations_found(&self) -> bool {
        self.witness_count > 0
    }
}

pub fn audit(settings: &AuditSettings) -> Result<AuditOutcome> {
    let (a, b, mu) = match settings.triple {
        Triple::Eps(eps) => {
            let c = TheoremConstants::from_eps(eps, settings.y_bound, settings.lambda_plus)?;
            (c.a, c.b, c.mu)
        }
        Triple::Explicit { a, b, mu } => (a, b, mu),
    };
    if !(settings.y_bound.is_finite() && settings.y_bound > 0.0) {
        return Err(CliError::usage(format!("--ybound must be positive, got {}", settings.y_bound)));
    }
    let bounds = lemma_bounds(a, mu, settings.lambda_plus)?;
    let auditor = Auditor::new(a, b, mu)?.with_tolerance(settings.tolerance);

    let [first, second] = construction_instances(settings.y_bound, settings.lambda_plus);
    let constructions = vec![
        ConstructionResult {
            name: "first: y = yhat1 = Y, yhat2 = 0, lambda = lambda+, beta = 1",
            instance: first,
            report: auditor.evaluate(&first)?,
        },
        ConstructionResult {
            name: "second: y = -Y/2, yhat1 = 0, yhat2 = Y, lambda = 1/2, beta = 1",
            instance: second,
            report: auditor.evaluate(&second)?,
        },
    ];

    let search = auditor.search(settings.lambda_plus, settings.y_bound, settings.budget, settings.seed)?;
    Ok(AuditOutcome {
        a,
        b,
        mu,
        y_bound: settings.y_bound,
        lambda_plus: settings.lambda_plus,
        tolerance: settings.tolerance,
        b_meets_via_mu: b >= bounds.b_min_via_mu,
        b_meets_combined: b >= bounds.b_min_combined,
        mu_meets_min: mu >= bounds.mu_min,
        lemma_bounds: bounds,
        constructions,
        budget: settings.budget,
        seed: settings.seed,
        evaluated: search.evaluated,
        witness_count: search.witnesses.len(),
        witnesses: search
            .witnesses
            .into_iter()
            .map(|(instance, report)| Witness { instance, report })
            .collect(),
    })
}

/// Human-readable digest printed by the binary.
pub fn render_text(o: &AuditOutcome) -> String {
    let mut s = String::new();
    s += &format!("triple: a = {:.6e}, b = {:.6e}, mu = {:.6e}\n", o.a, o.b, o.mu);
    s += &format!(
        "necessary conditions: mu >= {:.6} ({}), b >= 4a + mu/4 = {:.6} ({}), b >= 4a + a/(4 lambda+(1-lambda+)) = {:.6} ({})\n",
        o.lemma_bounds.mu_min,
        met(o.mu_meets_min),
        o.lemma_bounds.b_min_via_mu,
        met(o.b_meets_via_mu),
        o.lemma_bounds.b_min_combined,
        met(o.b_meets_combined),
    );
    for c in &o.constructions {
        s += &format!(
            "construction {}\n  lhs = {:.6}, exact progress = {:+.6}, margin = {:+.6}, violated = {}\n",
            c.name, c.report.lhs, c.report.progress, c.report.margin, c.report.violated
        );
    }
    s += &format!(
        "search: {} instances evaluated (budget {}, seed {}), {} violations at tolerance {:e}\n",
        o.evaluated, o.budget, o.seed, o.witness_count, o.tolerance
    );
    if let Some(w) = o.witnesses.first() {
        s += &format!(
            "worst witness: y = {}, yhat1 = {}, yhat2 = {}, lambda = {}, beta = {} -> margin {:+.6}\n",
            w.instance.y, w.instance.yhat1, w.instance.yhat2, w.instance.lambda_t, w.instance.beta, w.report.margin
        );
    }
    s
}

fn met(ok: bool) -> &'static str {
    if ok {
        "met"
    } else {
        "NOT met"
    }
}
