use std::collections::HashMap;

use crate::error::{Error, Result};
use crate::games::StateId;
use crate::learner::{decaying_epsilon, Agent, SnapshotRow};
use crate::primitives::{argmax_first_unchecked, RandomSource};
use crate::scc::{even_actions, HyperParams, SampleStats};

/// rFMQ over the fixed grid `{ i / (n + 1) }` with ε = 10 / (10 + t), `t`
/// counting completed episodes.
#[derive(Debug, Clone)]
pub struct DiscreteRfmq {
    actions: Vec<f64>,
    params: HyperParams,
    states: HashMap<StateId, Vec<SampleStats>>,
    rounds: u64,
    rng: RandomSource,
    pending: Option<(StateId, usize)>,
}

impl DiscreteRfmq {
    pub fn new(n: usize, params: HyperParams, rng: RandomSource) -> Result<Self> {
        params.validate()?;
        if n == 0 {
            return Err(Error::Config("rFMQ needs a nonempty action set".into()));
        }
        Ok(DiscreteRfmq {
            actions: even_actions(n),
            params,
            states: HashMap::new(),
            rounds: 0,
            rng,
            pending: None,
        })
    }

    pub fn actions(&self) -> &[f64] {
        &self.actions
    }

    pub fn rounds(&self) -> u64 {
        self.rounds
    }

    pub fn exploration_rate(&self) -> f64 {
        decaying_epsilon(self.rounds)
    }

    pub fn stats(&self, state: StateId) -> Option<&[SampleStats]> {
        self.states.get(&state).map(Vec::as_slice)
    }

    /// Index of the max-E action in `state` (0 if unvisited).
    pub fn greedy_index(&self, state: StateId) -> usize {
        self.states.get(&state).map_or(0, |s| {
            let es: Vec<f64> = s.iter().map(|x| x.eval).collect();
            argmax_first_unchecked(&es)
        })
    }

    /// One full round against `reward`: select, collect the reward of the
    /// chosen action, update, and advance the round counter.
    pub fn step<F>(&mut self, mut reward: F) -> Result<(f64, SampleStats)>
    where
        F: FnMut(f64) -> f64,
    {
        let mut a = [0.0];
        self.act(StateId::SINGLE, &mut a)?;
        let (_, idx) = self.pending.expect("set by act");
        self.observe(reward(a[0]), None)?;
        self.end_episode();
        Ok((a[0], self.states[&StateId::SINGLE][idx]))
    }
}

impl Agent for DiscreteRfmq {
    fn action_dims(&self) -> usize {
        1
    }

    fn act(&mut self, state: StateId, out: &mut [f64]) -> Result<()> {
        let eps = self.exploration_rate();
        let actions = &self.actions;
        let stats = self
            .states
            .entry(state)
            .or_insert_with(|| actions.iter().map(|&a| SampleStats::new(a)).collect());
        let index = if self.rng.chance(eps) {
            self.rng.index(stats.len())
        } else {
            let es: Vec<f64> = stats.iter().map(|s| s.eval).collect();
            argmax_first_unchecked(&es)
        };
        out[0] = stats[index].action;
        self.pending = Some((state, index));
        Ok(())
    }

    fn observe(&mut self, reward: f64, next: Option<StateId>) -> Result<()> {
        if !reward.is_finite() {
            return Err(Error::Data(format!("non-finite reward {reward}")));
        }
        let (state, index) = self
            .pending
            .take()
            .ok_or_else(|| Error::Usage("observe called without a preceding act".into()))?;
        let bootstrap = next.and_then(|s| self.states.get(&s)).map_or(0.0, |v| {
            v.iter().map(|s| s.q).fold(f64::NEG_INFINITY, f64::max)
        });
        let target = reward + self.params.gamma * bootstrap;
        let p = &self.params;
        self.states.get_mut(&state).expect("initialized by act")[index]
            .update(target, p.alpha, p.alpha_f, p.eq_tol);
        Ok(())
    }

    fn end_episode(&mut self) {
        self.rounds += 1;
    }

    fn snapshot(&self) -> Vec<SnapshotRow> {
        let mut keys: Vec<_> = self.states.keys().copied().collect();
        keys.sort();
        keys.iter()
            .flat_map(|k| {
                self.states[k]
                    .iter()
                    .enumerate()
                    .map(move |(i, s)| SnapshotRow {
                        state: k.0,
                        index: i,
                        action: vec![s.action],
                        q: Some(s.q),
                        q_max: Some(s.q_max),
                        freq: Some(s.freq),
                        eval: Some(s.eval),
                        ..Default::default()
                    })
            })
            .collect()
    }
}
