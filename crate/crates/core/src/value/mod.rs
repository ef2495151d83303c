//! Value bounds for the auxiliary game: lattice backward induction, exact
//! tree programs for short horizons, and the uniform-value estimate.

pub mod engine;
pub mod exact;
pub mod grid;
pub mod lattice;
pub mod mdp;
pub mod stage;
pub mod theta;
pub mod uniform;

pub use engine::{default_delta, Interval, ValueEngine, ValueError, WBounds};
pub use grid::{solve_bounds, stage_grid, ValueGrid, LIPSCHITZ};
pub use lattice::SimplexGrid;
pub use stage::{solve_stage, Continuation, MeanCap, StageSolution, SupportSet};
pub use theta::{theta_grid, ThetaError, ThetaWeights};
pub use exact::{value_theta_exact, value_theta_exact_at};
pub use uniform::{uniform_value_estimate, TableRow, UniformConfig, UniformReport};
pub use mdp::{markov_strategy_of_play, next_measure, play_of_markov_strategy, stage_reward, AtomActions, Play, PlayError, PlayStep};
