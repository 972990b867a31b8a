//! Small dense linear-programming kernel: problem builder, presolve and a
//! bounded-variable primal simplex.

mod dense;
mod presolve;
mod problem;
mod simplex;

pub use problem::{Constraint, LpError, LpProblem, RowId, Sense, VarId, Variable};
pub use simplex::{solve, solve_with, LpSolution, LpStatus, SolverOptions};
