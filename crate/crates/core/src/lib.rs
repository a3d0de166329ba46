//! Approximation algorithms for capacitated center and supplier problems with a
//! uniform capacity lower bound, per-facility upper bounds and outliers.
//!
//! The crate is organised bottom-up:
//!
//! * [`instance`] holds problems, solutions and feasibility checks.
//! * [`reduce`] guesses the optimal radius, splits the threshold graph into
//!   connected components and recombines per-component answers.
//! * [`cct`] and [`greedy`] implement the core-center tree, the pass-up and the
//!   pass-down procedures; [`solvers`] wires them into four end-to-end pipelines.
//! * [`lp`], [`tree_transfer`] and [`assign`] provide the LP relaxation, transfer
//!   checks, tree-instance rounding and solution extraction.
//! * [`oracle`] is an exhaustive exact solver used as ground truth.
//! * [`io`], [`generate`], [`bench`] and [`cli`] back the command line tool.

pub mod assign;
pub mod bench;
pub mod cct;
pub mod cli;
pub mod error;
pub mod flow;
pub mod generate;
pub mod greedy;
pub mod instance;
pub mod io;
pub mod lp;
pub mod oracle;
pub mod rational;
pub mod reduce;
pub mod solvers;
pub mod tree_transfer;

pub use error::{Error, Result};
pub use instance::{
    CapacityMode, FeasibilityReport, Instance, Metric, OpenCopy, ProblemKind, Solution, Vertex,
    Violation,
};
pub use rational::Rational;
pub use reduce::InducedInstance;
pub use solvers::Variant;
