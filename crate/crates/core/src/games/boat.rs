//! Two-controller boat crossing a river with a stochastic current.
//!
//! One controller sets the forward acceleration, the other the angular
//! acceleration. The boat leaves `(0, 50)` and the trial ends when it touches
//! the far bank (`x = 50`) or either shore (`y = 0`, `y = 100`). Only the
//! terminal step pays: the quay reward at the landing point minus `0.1` per
//! elapsed step.

use std::f64::consts::FRAC_PI_3;

use super::{Environment, StateId, Transition};
use crate::error::{Error, Result};
use crate::primitives::{project, Interval, RandomSource};

pub const X_RANGE: Interval = Interval::new_unchecked(0.0, 50.0);
pub const Y_RANGE: Interval = Interval::new_unchecked(0.0, 100.0);
pub const ANGLE_RANGE: Interval = Interval::new_unchecked(-FRAC_PI_3, FRAC_PI_3);
pub const SPEED_RANGE: Interval = Interval::new_unchecked(2.0, 5.0);
pub const ANGULAR_SPEED_RANGE: Interval = Interval::new_unchecked(-1.0, 1.0);
pub const ACCEL_RANGE: Interval = Interval::new_unchecked(-1.0, 2.0);
pub const ANGULAR_ACCEL_RANGE: Interval = Interval::new_unchecked(-1.0, 1.0);

pub const DEFAULT_STEP_CAP: u32 = 200;
pub const BOAT_STATE_COUNT: u32 = 50 * 100 * 10 * 10 * 10;

const CURRENT_MEAN: f64 = 4.0;
const CURRENT_STD: f64 = 1.0;
const STEP_PENALTY: f64 = 0.1;
const BANK_EPS: f64 = 1e-9;

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct BoatState {
    pub x: f64,
    pub y: f64,
    pub theta: f64,
    pub v: f64,
    pub omega: f64,
    pub steps: u32,
}

impl BoatState {
    pub fn within_bounds(&self) -> bool {
        X_RANGE.contains(self.x)
            && Y_RANGE.contains(self.y)
            && ANGLE_RANGE.contains(self.theta)
            && SPEED_RANGE.contains(self.v)
            && ANGULAR_SPEED_RANGE.contains(self.omega)
    }

    fn on_far_bank(&self) -> bool {
        self.x >= X_RANGE.hi() - BANK_EPS
    }
}

pub fn boat_reset() -> BoatState {
    BoatState {
        x: 0.0,
        y: 50.0,
        theta: 0.0,
        v: 2.0,
        omega: 0.0,
        steps: 0,
    }
}

/// Quay reward at landing point `(x, y)`; zero away from the far bank.
pub fn boat_reward(x: f64, y: f64) -> f64 {
    if x < X_RANGE.hi() - BANK_EPS {
        return 0.0;
    }
    if y > 25.0 && y <= 35.0 {
        15.0 - 3.0 * (y - 30.0).abs()
    } else if y > 40.0 && y <= 60.0 {
        10.0 - (y - 50.0).abs()
    } else if y > 60.0 && y <= 100.0 {
        10.0 - (y - 80.0).abs() / 2.0
    } else {
        0.0
    }
}

#[inline]
fn bin(value: f64, iv: Interval, bins: u32) -> u32 {
    let b = ((value - iv.lo()) / iv.width() * f64::from(bins)).floor();
    (b.max(0.0) as u32).min(bins - 1)
}

/// Cell index over a 50 x 100 x 10 x 10 x 10 grid, unit-width cells in
/// `x` and `y`, ten equal half-open bins for the rest (top edge folded into
/// the last bin).
pub fn boat_state_index(s: &BoatState) -> StateId {
    let xb = (s.x.floor().max(0.0) as u32).min(49);
    let yb = (s.y.floor().max(0.0) as u32).min(99);
    let tb = bin(s.theta, ANGLE_RANGE, 10);
    let vb = bin(s.v, SPEED_RANGE, 10);
    let wb = bin(s.omega, ANGULAR_SPEED_RANGE, 10);
    StateId((((xb * 100 + yb) * 10 + tb) * 10 + vb) * 10 + wb)
}

/// One unit-time forward-Euler step. The current force is redrawn from
/// `N(4, 1)` on every call.
pub fn boat_step(
    s: &BoatState,
    accel: f64,
    angular_accel: f64,
    step_cap: u32,
    rng: &mut RandomSource,
) -> Result<(BoatState, Transition)> {
    if !ACCEL_RANGE.contains(accel) || !ANGULAR_ACCEL_RANGE.contains(angular_accel) {
        return Err(Error::Usage(format!(
            "boat accelerations ({accel}, {angular_accel}) outside [-1,2] x [-1,1]"
        )));
    }
    let force = rng.gaussian(CURRENT_MEAN, CURRENT_STD);
    let rel = s.x / X_RANGE.hi();
    let current = force * (rel - rel * rel);

    let next = BoatState {
        x: project(s.x + s.v * s.theta.cos(), X_RANGE),
        y: project(s.y + s.v * s.theta.sin() + current, Y_RANGE),
        theta: project(s.theta + s.omega, ANGLE_RANGE),
        v: project(s.v + accel, SPEED_RANGE),
        omega: project(s.omega + angular_accel, ANGULAR_SPEED_RANGE),
        steps: s.steps + 1,
    };
    let terminal = next.on_far_bank()
        || next.y <= Y_RANGE.lo()
        || next.y >= Y_RANGE.hi()
        || next.steps >= step_cap;
    let reward = if terminal {
        boat_reward(next.x, next.y) - STEP_PENALTY * f64::from(next.steps)
    } else {
        0.0
    };
    Ok((
        next,
        Transition {
            next: boat_state_index(&next),
            reward,
            terminal,
        },
    ))
}

/// Environment wrapper. Action component 0 drives the forward acceleration,
/// component 1 the angular acceleration, both normalized to `[0, 1]`.
#[derive(Debug, Clone)]
pub struct BoatGame {
    state: BoatState,
    step_cap: u32,
}

impl BoatGame {
    pub fn new(step_cap: u32) -> Result<Self> {
        if step_cap == 0 {
            return Err(Error::Config("boat step cap must be positive".into()));
        }
        Ok(BoatGame {
            state: boat_reset(),
            step_cap,
        })
    }

    pub fn state(&self) -> &BoatState {
        &self.state
    }
}

impl Environment for BoatGame {
    fn reset(&mut self) -> StateId {
        self.state = boat_reset();
        boat_state_index(&self.state)
    }

    fn step(&mut self, actions: &[f64], rng: &mut RandomSource) -> Result<Transition> {
        let [ua, uw] = actions else {
            return Err(Error::Usage(format!(
                "boat expects 2 action components, got {}",
                actions.len()
            )));
        };
        let accel = project(ACCEL_RANGE.from_unit(*ua), ACCEL_RANGE);
        let angular = project(ANGULAR_ACCEL_RANGE.from_unit(*uw), ANGULAR_ACCEL_RANGE);
        let (next, t) = boat_step(&self.state, accel, angular, self.step_cap, rng)?;
        self.state = next;
        Ok(t)
    }

    fn action_dims(&self) -> usize {
        2
    }

    fn is_single_state(&self) -> bool {
        false
    }
}
