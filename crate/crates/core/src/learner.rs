//! The select/observe cycle every independent learner implements, plus the
//! plain-text snapshot dump used for debugging and fixtures.
//!
//! Snapshot CSV layout (one row per sample per visited state, states
//! ascending):
//!
//! ```text
//! state,index,action,q,qmax,f,e,weight,spread
//! ```
//!
//! Multi-dimensional actions are joined with `;`. Columns a learner does not
//! track are left empty.

use std::io::Write;

use crate::error::Result;
use crate::games::StateId;

pub trait Agent: Send {
    /// Number of action components this agent controls.
    fn action_dims(&self) -> usize;

    /// Chooses an action for `state`, writing normalized components to `out`.
    fn act(&mut self, state: StateId, out: &mut [f64]) -> Result<()>;

    /// Feeds back the shared reward of the last action. `next` is `None` when
    /// the step was terminal.
    fn observe(&mut self, reward: f64, next: Option<StateId>) -> Result<()>;

    /// Called once after every episode; drives round-based schedules.
    fn end_episode(&mut self) {}

    fn snapshot(&self) -> Vec<SnapshotRow>;
}

#[derive(Debug, Clone, Default, PartialEq)]
pub struct SnapshotRow {
    pub state: u32,
    pub index: usize,
    pub action: Vec<f64>,
    pub q: Option<f64>,
    pub q_max: Option<f64>,
    pub freq: Option<f64>,
    pub eval: Option<f64>,
    pub weight: Option<f64>,
    pub spread: Option<f64>,
}

pub const SNAPSHOT_HEADER: &str = "state,index,action,q,qmax,f,e,weight,spread";

pub fn write_snapshot<W: Write>(rows: &[SnapshotRow], mut w: W) -> std::io::Result<()> {
    fn opt(v: Option<f64>) -> String {
        v.map(|x| x.to_string()).unwrap_or_default()
    }
    writeln!(w, "{SNAPSHOT_HEADER}")?;
    for r in rows {
        let action = r
            .action
            .iter()
            .map(|a| a.to_string())
            .collect::<Vec<_>>()
            .join(";");
        writeln!(
            w,
            "{},{},{},{},{},{},{},{},{}",
            r.state,
            r.index,
            action,
            opt(r.q),
            opt(r.q_max),
            opt(r.freq),
            opt(r.eval),
            opt(r.weight),
            opt(r.spread)
        )?;
    }
    Ok(())
}

/// ε-greedy exploration rate `10 / (10 + k)`.
#[inline]
pub fn decaying_epsilon(k: u64) -> f64 {
    10.0 / (10.0 + k as f64)
}
