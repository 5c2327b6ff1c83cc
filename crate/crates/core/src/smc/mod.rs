//! Monotone satisfiability modulo convex (here: linear) constraints over
//! ReLU phase indicators.

mod encode;
mod lp;
mod sat;
mod solve;

use thiserror::Error;

pub use encode::{
    encode_region, encode_transition, escape_constraints, MonotoneSmcProblem, SuccessorConstraint, Target,
    VarLayout,
};
pub use lp::{
    feasible_parts, lp_feasible, LinearConstraint, LinearConstraintSystem, LpError, LpOutcome, Relation, LP_TOL,
};
pub use sat::{blocking_clause, Lit, SatResult, SatSolver};
pub use solve::{
    clauses_from_json, clauses_to_json, extract_iis, preprocess_region, smc_solve, Conflict, PreprocessResult,
    SmcBudget, SmcOutcome, SmcStats, SmcStatus, Witness,
};

#[derive(Debug, Error, Clone, PartialEq)]
pub enum SmcError {
    #[error("dimension mismatch: {0}")]
    DimensionMismatch(String),
    #[error("resource limit reached")]
    ResourceLimit,
    #[error("constraint system is feasible; no conflict to extract")]
    NotInfeasible,
    #[error(transparent)]
    Numerical(#[from] LpError),
    #[error("conflict cache: {0}")]
    Parse(String),
}
