//! Occupational-measure linear programming for infinite-horizon discrete-time
//! optimal control on possibly unbounded state sets.
//!
//! The crate discretizes a controlled system onto a grid plus an absorbing
//! infinity node, builds discounted and averaging occupational measures,
//! computes discounted and finite-horizon values by dynamic programming, and
//! solves the corresponding finite linear programs over measures. Sweeps over
//! discount factors and horizons compare the dynamic-programming values with
//! the long-run average optimum of the stationary LP.

pub mod discretize;
pub mod dp;
pub mod error;
pub mod io;
pub mod limits;
pub mod lp;
pub mod measures;
pub mod system;
#[cfg(test)]
mod testkit;

pub use discretize::{CostAtInf, DiscretizedSystem, GridSpec, Pair, Policy, Transition};
pub use dp::{A1Report, A1Verdict, FiniteHorizonSolution, ValueFunction, ValueKind};
pub use error::{Error, Result};
pub use limits::{Probe, SweepKind, SweepPoint, SweepReport, SweepVerdict, Tolerances, TruncatedSweepReport};
pub use lp::{BasisSpec, LPSolution, LinearProgram, LpStatus, TestFunction, TestFunctionBasis};
pub use measures::{Measure, MeasureKind, OccupationalMeasure, ResidualMode};
pub use system::{Cost, Parameters, State, StateBounds, SystemModel};
