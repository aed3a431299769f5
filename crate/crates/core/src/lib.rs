//! Planning and exact checking for HyperSTL over discrete-time systems.
//!
//! The crate is organised bottom-up:
//!
//! * [`config`] reads the versioned JSON configuration.
//! * [`formula`] holds the syntax tree and its text grammar.
//! * [`semantics`] evaluates Boolean satisfaction and quantitative robustness.
//! * [`system`] describes dynamics and rollouts.
//! * [`milp`] encodes robustness as mixed-integer constraints and solves them.
//! * [`optimizer`] is a derivative-free cross-entropy search.
//! * [`planner`] runs the counterexample-guided planning loop on top of a backend.
//! * [`hyperspecs`] builds the information-flow templates.
//! * [`oracle`] decides small instances exactly by enumeration.

// Negated float comparisons are deliberate: they also reject NaN.
#![allow(clippy::neg_cmp_op_on_partial_ord)]
// `Body::not` is a constructor next to `and` and `or`, not an operator.
#![allow(clippy::should_implement_trait)]
// Index loops read better where several arrays share one index.
#![allow(clippy::needless_range_loop)]

pub mod config;
pub mod formula;
pub mod hyperspecs;
pub mod milp;
pub mod optimizer;
pub mod oracle;
pub mod planner;
pub mod semantics;
pub mod system;

use thiserror::Error as ThisError;

/// Errors raised across the crate.
#[derive(Debug, ThisError)]
pub enum Error {
    #[error("invalid formula: {0}")]
    InvalidFormula(String),
    #[error("parse error at {0}")]
    Parse(#[from] formula::ParseError),
    #[error("evaluation at t={t} needs {horizon} more steps but the traces end at {last}")]
    HorizonOverrun {
        t: usize,
        horizon: usize,
        last: usize,
    },
    #[error("invalid system: {0}")]
    InvalidSystem(String),
    #[error("state left its box at step {step}, dimension {dim}: value {value}")]
    BoxViolation { step: usize, dim: usize, value: f64 },
    #[error("invalid configuration: {0}")]
    Config(String),
    #[error("unsupported: {0}")]
    Unsupported(String),
    #[error("enumeration too large: {0} traces exceeds the cap of {1}")]
    TooLarge(u128, u128),
    #[error("solver failure: {0}")]
    Solver(String),
    #[error(transparent)]
    Io(#[from] std::io::Error),
    #[error(transparent)]
    Json(#[from] serde_json::Error),
}

pub type Result<T, E = Error> = std::result::Result<T, E>;
