//! Linear-programming kernel: simplex, matrix games, transport.

pub mod lp;
pub mod matrix;

pub use lp::{
    feasibility, solve_lp, solve_lp_with, transport_lp, Feasibility, LinearProgram, LpError,
    LpSolution, LpStatus, Relation, TransportError, TransportPlan,
};
pub use matrix::{matrix_game_value, MatrixGameSolution};
