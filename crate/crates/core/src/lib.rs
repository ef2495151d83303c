//! Solver suite for zero-sum repeated games where player 1 is informed and
//! controls the transitions.

pub mod corpus;
pub mod game;
pub mod measures;
pub mod scalar;
pub mod simulator;
pub mod strategies;
pub mod value;
pub mod zerosum;

pub use scalar::{Scalar, Tolerances};

/// Double precision aliases.
pub type Spec = game::RepeatedGameSpec<f64>;
pub type Aux = game::AuxGame<f64>;
pub type Engine = value::ValueEngine<f64>;
pub type Grid = value::ValueGrid<f64>;
pub type Measure = measures::BeliefMeasure<f64>;
pub type Prior = measures::Belief<f64>;
pub type Theta = value::ThetaWeights<f64>;
pub type Report = value::UniformReport<f64>;
