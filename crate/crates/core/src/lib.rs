//! Online convexly constrained mixture of two experts.
//!
//! The combiner keeps a single weight `λ ∈ (0, 1)` parameterized through the
//! logistic function of an unconstrained variable `ρ`, predicts
//! `λ·ŷ₁ + (1−λ)·ŷ₂`, and moves `ρ` along the negative gradient of the
//! squared error. Alongside the algorithm this crate carries everything
//! needed to check its deterministic regret guarantee against the best
//! fixed convex combination chosen in hindsight:
//!
//! - [`mixture`]: the combiner itself, in additive (`ρ`) and multiplicative
//!   (`λ`) forms.
//! - [`oracle`]: the hindsight-optimal fixed weight, in closed form over
//!   streaming statistics and by brute-force grid.
//! - [`bounds`]: the guarantee's constants, the per-step KL-progress
//!   inequality, the sufficiency quadratic and the telescoped bound.
//! - [`lemma`]: the lower-bound constructions and a violation search for
//!   arbitrary `(a, b, μ)` triples.
//! - [`signals`]: sequence generators, CSV ingestion with clipping and
//!   trajectory serialization.

pub mod bounds;
pub mod error;
pub mod lemma;
pub mod mixture;
pub mod oracle;
pub mod signals;

pub use error::{Error, Result};
pub use mixture::{MixtureParams, MixtureState, Mode, SignalSample, StepRecord, Trajectory};
pub use oracle::{BestBeta, OracleStats};
pub use bounds::TheoremConstants;

/// Absolute tolerance for inequality checks (margins, bound comparisons).
pub const INEQUALITY_TOL: f64 = 1e-9;

/// Absolute tolerance for algebraic identities.
pub const IDENTITY_TOL: f64 = 1e-12;
