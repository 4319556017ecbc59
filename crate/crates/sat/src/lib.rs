//! A compact incremental CDCL SAT solver.
//!
//! Two-watched-literal propagation, first-UIP learning with recursive clause
//! minimization, VSIDS branching with phase saving, Luby restarts and
//! LBD-guided clause database reduction. Solving under assumptions yields a
//! failed-assumption core on `Unsat`.

mod heap;
mod solver;
mod types;

pub use solver::{Limits, SolveResult, Solver, Stats};
pub use types::{Lit, Var};
