//! Benchmark environments behind one cooperative-game interface.
//!
//! Every learner works on normalized actions in `[0, 1]`; environments map
//! them onto their native ranges. All agents receive the same reward.

mod boat;
mod matrix;

pub use boat::{
    boat_reset, boat_reward, boat_state_index, boat_step, BoatGame, BoatState, ACCEL_RANGE,
    ANGLE_RANGE, ANGULAR_ACCEL_RANGE, ANGULAR_SPEED_RANGE, BOAT_STATE_COUNT, DEFAULT_STEP_CAP,
    SPEED_RANGE, X_RANGE, Y_RANGE,
};
pub use matrix::{bilinear_eval, colormap_grid, Grid3, MatrixGame, MatrixGameSpec};

use crate::error::Result;
use crate::primitives::RandomSource;

/// Discretized state identifier. Single-state games always use `StateId(0)`.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub struct StateId(pub u32);

impl StateId {
    pub const SINGLE: StateId = StateId(0);
}

impl std::fmt::Display for StateId {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        write!(f, "{}", self.0)
    }
}

/// Outcome of one joint step.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Transition {
    pub next: StateId,
    pub reward: f64,
    pub terminal: bool,
}

pub trait Environment {
    /// Starts a new episode and returns the initial state.
    fn reset(&mut self) -> StateId;

    /// Applies one joint action. `actions` holds one normalized component per
    /// action dimension, in dimension order.
    fn step(&mut self, actions: &[f64], rng: &mut RandomSource) -> Result<Transition>;

    /// Total number of action dimensions across all controllers.
    fn action_dims(&self) -> usize;

    /// True for stateless repeated games.
    fn is_single_state(&self) -> bool;
}
