//! Independent learners for cooperative games with continuous actions.
//!
//! The main learner, [`SccRfmq`], keeps a small set of sampled actions per
//! state, scores them with recursive frequency-maximum Q values, and
//! periodically resamples around the best one with an adaptive spread.
//! Baselines (discrete rFMQ, SMC, SMC+rFMQ, CALA), the benchmark games and
//! an experiment harness live alongside it.
//!
//! ```
//! use sccrfmq::{Agent, Environment, HyperParams, MatrixGame, MatrixGameSpec, RandomSource, SccRfmq};
//!
//! let mut env = MatrixGame::new(MatrixGameSpec::climbing());
//! let mut a = SccRfmq::new(10, HyperParams::default(), RandomSource::new(1, "a")).unwrap();
//! let mut b = SccRfmq::new(10, HyperParams::default(), RandomSource::new(1, "b")).unwrap();
//! let mut env_rng = RandomSource::new(1, "env");
//! let mut joint = [0.0; 2];
//! for _ in 0..100 {
//!     let s = env.reset();
//!     a.act(s, &mut joint[..1]).unwrap();
//!     b.act(s, &mut joint[1..]).unwrap();
//!     let t = env.step(&joint, &mut env_rng).unwrap();
//!     a.observe(t.reward, None).unwrap();
//!     b.observe(t.reward, None).unwrap();
//! }
//! ```

#![allow(clippy::neg_cmp_op_on_partial_ord)]

pub mod baselines;
pub mod error;
pub mod games;
pub mod harness;
pub mod learner;
pub mod primitives;
pub mod scc;

pub use error::{Error, Result};
pub use games::{BoatGame, Environment, MatrixGame, MatrixGameSpec, StateId, Transition};
pub use learner::{Agent, SnapshotRow};
pub use primitives::{argmax_first, project, Interval, RandomSource};
pub use scc::{HyperParams, SccRfmq, StateLearner};
