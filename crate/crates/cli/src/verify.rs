//! `verify`: seeded property suites for the guarantee.
//!
//! Trial `i` draws its sequence from `ChaCha8(seed + i)`, uniform in
//! `[−Y, Y]³`, and runs the combiner unprojected. Every failure carries the
//! trial seed needed to reproduce it.

use convexmix::bounds::{self, eps_from_mu, kl, pair, per_step_margin, sufficiency_roots};
use convexmix::mixture::{run, step_multiplicative};
use convexmix::oracle::grid_best_beta;
use convexmix::{MixtureParams, Mode, OracleStats, SignalSample, TheoremConstants, IDENTITY_TOL};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::Serialize;

use crate::experiment::Rate;
use crate::{CliError, Result};

/// β values checked at every step in addition to the random draws.
pub const FIXED_BETAS: [f64; 5] = [0.0, 0.25, 0.5, 0.75, 1.0];
pub const RANDOM_BETAS_PER_STEP: usize = 20;
pub const TELESCOPE_BETAS: [f64; 3] = [0.0, 0.5, 1.0];
/// Failures kept verbatim in the report; the rest are only counted.
const MAX_LISTED_FAILURES: usize = 200;

#[derive(Debug, Clone, PartialEq)]
pub struct VerifySettings {
    pub trials: usize,
    pub n: usize,
    pub seed: u64,
    pub rate: Rate,
    pub y_bound: f64,
    pub lambda_plus: f64,
    /// Replaces `a` after the constants are derived.
    pub override_a: Option<f64>,
    pub resolution: f64,
    pub tolerance: f64,
}

impl Default for VerifySettings {
    fn default() -> Self {
        Self {
            trials: 100,
            n: 500,
            seed: 0,
            rate: Rate::Eps(0.1),
            y_bound: 1.0,
            lambda_plus: 0.08,
            override_a: None,
            resolution: 1e-3,
            tolerance: convexmix::INEQUALITY_TOL,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct SuiteResult {
    pub name: &'static str,
    pub checks: u64,
    pub failures: u64,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct Failure {
    pub suite: &'static str,
    pub trial: Option<usize>,
    /// Seed that regenerates the trial's sequence.
    pub seed: Option<u64>,
    pub step: Option<usize>,
    pub detail: String,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct VerifyReport {
    pub tolerance: f64,
    pub identity_tolerance: f64,
    pub trials: usize,
    pub n: usize,
    pub seed: u64,
    pub constants: TheoremConstants,
    pub suites: Vec<SuiteResult>,
    /// Steps skipped by the per-step suite because the weight was outside
    /// `[λ⁺, 1−λ⁺]`.
    pub skipped_out_of_range_steps: u64,
    pub failures: Vec<Failure>,
    pub passed: bool,
}

impl VerifyReport {
    pub fn suite(&self, name: &str) -> Option<&SuiteResult> {
        self.suites.iter().find(|s| s.name == name)
    }

    pub fn total_failures(&self) -> u64 {
        self.suites.iter().map(|s| s.failures).sum()
    }
}

struct Collector {
    suites: Vec<SuiteResult>,
    failures: Vec<Failure>,
}

impl Collector {
    fn new(names: &[&'static str]) -> Self {
        Self {
            suites: names
                .iter()
                .map(|&name| SuiteResult {
                    name,
                    checks: 0,
                    failures: 0,
                })
                .collect(),
            failures: Vec::new(),
        }
    }

    fn check(&mut self, suite: &'static str, ok: bool, failure: impl FnOnce() -> Failure) {
        let s = self
            .suites
            .iter_mut()
            .find(|s| s.name == suite)
            .expect("registered suite");
        s.checks += 1;
        if !ok {
            s.failures += 1;
            if self.failures.len() < MAX_LISTED_FAILURES {
                self.failures.push(failure());
            }
        }
    }
}

pub const SUITES: [&str; 6] = [
    "constant_identities",
    "run",
    "per_step_margin",
    "form_equivalence",
    "telescoping",
    "oracle_agreement",
];

/// The random sequence of one trial.
pub fn trial_sequence(seed: u64, n: usize, y_bound: f64) -> Vec<SignalSample> {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    (0..n)
        .map(|_| SignalSample {
            y: rng.gen_range(-y_bound..=y_bound),
            yhat1: rng.gen_range(-y_bound..=y_bound),
            yhat2: rng.gen_range(-y_bound..=y_bound),
        })
        .collect()
}

fn constants_for(settings: &VerifySettings) -> Result<TheoremConstants> {
    let (y, lp) = (settings.y_bound, settings.lambda_plus);
    let eps = match settings.rate {
        Rate::Eps(eps) => eps,
        Rate::Mu(mu) => eps_from_mu(mu, y, lp)?,
    };
    let c = TheoremConstants::from_eps(eps, y, lp)?;
    match settings.override_a {
        Some(a) => Ok(TheoremConstants::from_parts(c.eps, y, lp, a, c.b, c.mu)?),
        None => Ok(c),
    }
}

pub fn verify(settings: &VerifySettings) -> Result<VerifyReport> {
    if settings.trials == 0 || settings.n == 0 {
        return Err(CliError::usage("--trials and --n must be at least 1"));
    }
    let constants = constants_for(settings)?;
    let tol = settings.tolerance;
    let mut col = Collector::new(&SUITES);

    check_constants(&constants, &mut col);

    let params = MixtureParams::new(constants.mu, settings.lambda_plus, settings.y_bound, Mode::Monitor)?;
    let mut skipped = 0u64;
    for trial in 0..settings.trials {
        let seed = settings.seed.wrapping_add(trial as u64);
        let seq = trial_sequence(seed, settings.n, settings.y_bound);
        let fail = |suite, step, detail: String| Failure {
            suite,
            trial: Some(trial),
            seed: Some(seed),
            step,
            detail,
        };

        let tr = match run(&params, &seq) {
            Ok(tr) => {
                col.check("run", true, || unreachable!());
                tr
            }
            Err(e) => {
                col.check("run", false, || fail("run", None, e.to_string()));
                continue;
            }
        };

        let mut beta_rng = ChaCha8Rng::seed_from_u64(seed ^ 0x9e37_79b9_7f4a_7c15);
        for r in &tr.records {
            let mult = step_multiplicative(&params, r.lambda_before, &r.sample);
            let diff = mult.as_ref().map(|m| (m - r.lambda_after).abs()).unwrap_or(f64::INFINITY);
            col.check("form_equivalence", diff <= IDENTITY_TOL, || {
                fail("form_equivalence", Some(r.t), format!("|additive - multiplicative| = {diff:e}"))
            });

            if !r.in_range {
                skipped += 1;
                continue;
            }
            let randoms: Vec<f64> = (0..RANDOM_BETAS_PER_STEP).map(|_| beta_rng.gen_range(0.0..=1.0)).collect();
            for beta in FIXED_BETAS.iter().chain(randoms.iter()).copied() {
                let y_beta = beta * r.sample.yhat1 + (1.0 - beta) * r.sample.yhat2;
                let m = per_step_margin(&constants, beta, r.lambda_before, r.lambda_after, r.e, r.sample.y - y_beta);
                let (ok, detail) = match m {
                    Ok(m) => (m.margin >= -tol, format!("beta={beta}: margin {:e} < -{tol:e}", m.margin)),
                    Err(e) => (false, format!("beta={beta}: {e}")),
                };
                col.check("per_step_margin", ok, || fail("per_step_margin", Some(r.t), detail));
            }
        }

        for beta in TELESCOPE_BETAS {
            let sum: std::result::Result<f64, _> = tr
                .records
                .iter()
                .map(|r| bounds::progress(beta, r.lambda_before, r.lambda_after))
                .sum();
            let u = pair(beta);
            let ends = kl(u, pair(tr.records[0].lambda_before))
                .and_then(|d1| Ok(d1 - kl(u, pair(tr.final_state.lambda))?));
            let (ok, detail) = match (sum, ends) {
                (Ok(s), Ok(d)) => ((s - d).abs() <= tol, format!("beta={beta}: |sum - KL difference| = {:e}", (s - d).abs())),
                (Err(e), _) | (_, Err(e)) => (false, format!("beta={beta}: {e}")),
            };
            col.check("telescoping", ok, || fail("telescoping", None, detail));
        }

        let stats = OracleStats::from_samples(&seq);
        if stats.s_dd > 0.0 {
            let best = stats.best_beta()?;
            let (gb, _) = grid_best_beta(&seq, settings.resolution)?;
            let gap = (best.beta - gb).abs();
            col.check("oracle_agreement", gap <= settings.resolution + 1e-12, || {
                fail("oracle_agreement", None, format!("closed form {} vs grid {gb}", best.beta))
            });
        }
    }

    let passed = col.suites.iter().all(|s| s.failures == 0);
    Ok(VerifyReport {
        tolerance: tol,
        identity_tolerance: IDENTITY_TOL,
        trials: settings.trials,
        n: settings.n,
        seed: settings.seed,
        constants,
        suites: col.suites,
        skipped_out_of_range_steps: skipped,
        failures: col.failures,
        passed,
    })
}

fn check_constants(c: &TheoremConstants, col: &mut Collector) {
    let global = |detail: String| Failure {
        suite: "constant_identities",
        trial: None,
        seed: None,
        step: None,
        detail,
    };
    let id = c.identities();
    col.check("constant_identities", id.four_as <= IDENTITY_TOL, || {
        global(format!("|4as - (1 - z^2)| = {:e}", id.four_as))
    });
    col.check("constant_identities", id.mu_rel <= IDENTITY_TOL, || {
        global(format!("mu differs from (2+2z)/s by {:e} (relative)", id.mu_rel))
    });
    match sufficiency_roots(c) {
        Ok(r) => {
            col.check("constant_identities", (r.k1 - 0.25).abs() <= IDENTITY_TOL, || {
                global(format!("k1 = {} is not 1/4", r.k1))
            });
            col.check("constant_identities", r.covers_boundary, || {
                global(format!("k2 = {} exceeds lambda+(1-lambda+)", r.k2))
            });
        }
        Err(e) => col.check("constant_identities", false, || global(e.to_string())),
    }
    let back = eps_from_mu(c.mu, c.y_bound, c.lambda_plus);
    let rel = back.as_ref().map(|e| (e / c.eps - 1.0).abs()).unwrap_or(f64::INFINITY);
    col.check("constant_identities", rel <= IDENTITY_TOL, || {
        global(format!("eps roundtrip through mu is off by {rel:e} (relative)"))
    });
}
