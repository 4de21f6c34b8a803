//! Comparison learners: discrete rFMQ on a fixed action grid, SMC-learning,
//! the SMC-resampling + rFMQ hybrid, and continuous-action learning automata.

mod cala;
mod rfmq;
mod smc;
mod smc_rfmq;

pub use cala::{cala_round, CalaParams, CalaPolicy, CalaTeam};
pub use rfmq::DiscreteRfmq;
pub use smc::{boltzmann, kernel_bandwidth, kernel_resample, Smc, SmcActor, SmcParams};
pub use smc_rfmq::{smc_rfmq_weights, SmcRfmq, SmcRfmqParams};
