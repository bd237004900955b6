//! Probabilistic oracle machines with reflective oracles.
//!
//! Machines are small branching programs that can flip biased coins, call
//! each other as subroutines, and ask an oracle whether another machine
//! outputs `1` with probability above a rational threshold. This crate
//! evaluates such machines exactly, checks and solves the reflection
//! conditions on finite query sets, reduces the search for a reflective
//! oracle to a Nash equilibrium of a normal-form game, and builds
//! causal-decision-theory agents whose joint behavior plays Nash equilibria.
//!
//! Module map:
//!
//! - [`machine`], [`eval`], [`sample`]: the machine model, exact interval
//!   evaluation and seeded sampling.
//! - [`dsl`]: the `.rom` text format.
//! - [`analysis`], [`poly`]: closedness and boundedness of query sets, and
//!   exact output-probability polynomials.
//! - [`reflection`]: reflection checks and the direct grid solver.
//! - [`game`]: two-action normal-form games, equilibrium search and the
//!   game whose equilibria are reflective oracles.
//! - [`cdt`]: decision-theoretic agents built on top of the oracle.

pub mod analysis;
pub mod cdt;
pub mod dsl;
pub mod error;
pub mod eval;
pub mod game;
pub mod machine;
pub mod poly;
pub mod rational;
pub mod reflection;
pub mod sample;

mod program;

pub use error::{Error, Result};
pub use eval::{exact_eval, EvalInterval};
pub use machine::{
    MachineExpr, MachineRegistry, OracleAssignment, Output, Prob, Query, QuerySet, RunOutcome,
};
pub use rational::Rational;
pub use sample::sample_run;

/// Default step budget for sampling.
pub const DEFAULT_STEP_BUDGET: u64 = 10_000;
/// Default depth budget for exact evaluation.
pub const DEFAULT_DEPTH_BUDGET: usize = 64;
