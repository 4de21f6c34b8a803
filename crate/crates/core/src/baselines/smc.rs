//! Sequential Monte Carlo actor-critic over a per-state weighted action set.
//!
//! The critic keeps a Q estimate per sample; the actor's weights are the
//! Boltzmann distribution of those estimates. When the weights concentrate
//! (largest weight above the threshold) the set is regenerated by drawing
//! parents in proportion to weight and jittering each with a Gaussian kernel.

use std::collections::HashMap;

use crate::error::{Error, Result};
use crate::games::StateId;
use crate::learner::{Agent, SnapshotRow};
use crate::primitives::{project, Interval, RandomSource};
use crate::scc::even_actions;

/// Numerically stable softmax of `values / tau`.
pub fn boltzmann(values: &[f64], tau: f64) -> Result<Vec<f64>> {
    if !(tau > 0.0) {
        return Err(Error::Config(format!(
            "temperature must be positive, got {tau}"
        )));
    }
    let top = values.iter().cloned().fold(f64::NEG_INFINITY, f64::max);
    let mut w: Vec<f64> = values.iter().map(|v| ((v - top) / tau).exp()).collect();
    let sum: f64 = w.iter().sum();
    w.iter_mut().for_each(|x| *x /= sum);
    Ok(w)
}

/// Kernel bandwidth for dimension `d`: weighted standard deviation times
/// `(4 / (3 n))^(1/5)`, floored at `floor`.
pub fn kernel_bandwidth(actions: &[f64], dim: usize, weights: &[f64], d: usize, floor: f64) -> f64 {
    let n = weights.len();
    let mean: f64 = (0..n).map(|i| weights[i] * actions[i * dim + d]).sum();
    let var: f64 = (0..n)
        .map(|i| weights[i] * (actions[i * dim + d] - mean).powi(2))
        .sum();
    let factor = (4.0 / (3.0 * n as f64)).powf(0.2);
    (var.max(0.0).sqrt() * factor).max(floor)
}

/// Importance resampling with Gaussian jitter, projected into `[0, 1]`.
pub fn kernel_resample(
    actions: &[f64],
    dim: usize,
    weights: &[f64],
    floor: f64,
    rng: &mut RandomSource,
) -> Vec<f64> {
    let n = weights.len();
    let h: Vec<f64> = (0..dim)
        .map(|d| kernel_bandwidth(actions, dim, weights, d, floor))
        .collect();
    let mut out = Vec::with_capacity(n * dim);
    for _ in 0..n {
        let parent = rng.categorical(weights);
        for (d, &hd) in h.iter().enumerate() {
            out.push(project(
                rng.gaussian(actions[parent * dim + d], hd),
                Interval::UNIT,
            ));
        }
    }
    out
}

#[derive(Debug, Clone, PartialEq)]
pub struct SmcParams {
    pub alpha: f64,
    pub gamma: f64,
    /// Resample when the largest weight exceeds this.
    pub threshold: f64,
    pub tau0: f64,
    pub tau_decay: f64,
    /// Episodes per temperature decay step.
    pub tau_period: u64,
    pub bandwidth_floor: f64,
}

impl SmcParams {
    /// Matrix-game defaults.
    pub fn matrix() -> Self {
        SmcParams {
            alpha: 0.5,
            gamma: 1.0,
            threshold: 0.9,
            tau0: 25.0,
            tau_decay: 0.9,
            tau_period: 5000,
            bandwidth_floor: 0.01,
        }
    }

    /// Boat defaults; the threshold depends on the controller split.
    pub fn boat(single_controller: bool) -> Self {
        SmcParams {
            threshold: if single_controller { 0.6 } else { 0.8 },
            tau0: 10.0,
            tau_period: 2000,
            ..Self::matrix()
        }
    }

    /// `tau0 · decay^⌊t / period⌋`.
    pub fn temperature(&self, t: u64) -> f64 {
        self.tau0 * self.tau_decay.powi((t / self.tau_period) as i32)
    }

    pub fn validate(&self) -> Result<()> {
        if !(self.tau0 > 0.0) || !(self.tau_decay > 0.0) || self.tau_period == 0 {
            return Err(Error::Config(
                "SMC temperature schedule must be positive".into(),
            ));
        }
        if !(self.alpha > 0.0 && self.alpha <= 1.0) {
            return Err(Error::Config(format!(
                "alpha must lie in (0,1], got {}",
                self.alpha
            )));
        }
        if !(self.threshold > 0.0 && self.threshold <= 1.0) {
            return Err(Error::Config(format!(
                "resample threshold must lie in (0,1], got {}",
                self.threshold
            )));
        }
        if !(self.bandwidth_floor > 0.0) {
            return Err(Error::Config("bandwidth floor must be positive".into()));
        }
        Ok(())
    }
}

/// Weighted sample set for one state.
#[derive(Debug, Clone, PartialEq)]
pub struct SmcActor {
    dim: usize,
    actions: Vec<f64>,
    weights: Vec<f64>,
    q: Vec<f64>,
    resamples: u32,
}

impl SmcActor {
    /// Evenly spaced grid with `per_dim` points per dimension (`per_dim^dim`
    /// samples, first dimension outermost), uniform weights.
    pub fn grid(per_dim: usize, dim: usize) -> Self {
        let axis = even_actions(per_dim);
        let total = per_dim.pow(dim as u32);
        let mut actions = Vec::with_capacity(total * dim);
        for k in 0..total {
            let mut rem = k;
            let mut coords = vec![0.0; dim];
            for d in (0..dim).rev() {
                coords[d] = axis[rem % per_dim];
                rem /= per_dim;
            }
            actions.extend(coords);
        }
        Self::from_actions(actions, dim)
    }

    pub fn from_actions(actions: Vec<f64>, dim: usize) -> Self {
        let n = actions.len() / dim;
        SmcActor {
            dim,
            actions,
            weights: vec![1.0 / n as f64; n],
            q: vec![0.0; n],
            resamples: 0,
        }
    }

    pub fn len(&self) -> usize {
        self.weights.len()
    }

    pub fn is_empty(&self) -> bool {
        self.weights.is_empty()
    }

    pub fn action(&self, i: usize) -> &[f64] {
        &self.actions[i * self.dim..(i + 1) * self.dim]
    }

    pub fn weights(&self) -> &[f64] {
        &self.weights
    }

    pub fn q(&self) -> &[f64] {
        &self.q
    }

    pub fn resamples(&self) -> u32 {
        self.resamples
    }

    pub fn max_q(&self) -> f64 {
        self.q.iter().cloned().fold(f64::NEG_INFINITY, f64::max)
    }

    /// Test hook.
    pub fn set_weights(&mut self, w: Vec<f64>) {
        assert_eq!(w.len(), self.len());
        self.weights = w;
    }

    /// Categorical draw proportional to the weights. Degenerate weights are
    /// reset to uniform first.
    pub fn select(&mut self, rng: &mut RandomSource) -> usize {
        let sum: f64 = self.weights.iter().sum();
        if !(sum > 0.0) || !sum.is_finite() || self.weights.iter().any(|w| !(*w >= 0.0)) {
            log::warn!(
                "degenerate SMC weights {:?}; resetting to uniform",
                self.weights
            );
            let n = self.len();
            self.weights.iter_mut().for_each(|w| *w = 1.0 / n as f64);
        }
        rng.categorical(&self.weights)
    }

    /// Critic step toward `target`, then Boltzmann reweighting at `tau`.
    pub fn update(&mut self, index: usize, target: f64, alpha: f64, tau: f64) -> Result<()> {
        if !target.is_finite() {
            return Err(Error::Data(format!("non-finite learning target {target}")));
        }
        let q = self
            .q
            .get_mut(index)
            .ok_or_else(|| Error::Usage(format!("sample index {index} out of range")))?;
        *q = (1.0 - alpha) * *q + alpha * target;
        self.weights = boltzmann(&self.q, tau)?;
        Ok(())
    }

    pub fn needs_resample(&self, threshold: f64) -> bool {
        self.weights.iter().any(|&w| w > threshold)
    }

    /// Redraws the whole set from the weighted kernel density; weights go
    /// uniform and critic values to zero.
    pub fn resample(&mut self, floor: f64, rng: &mut RandomSource) {
        self.actions = kernel_resample(&self.actions, self.dim, &self.weights, floor, rng);
        let n = self.len();
        self.weights.iter_mut().for_each(|w| *w = 1.0 / n as f64);
        self.q.iter_mut().for_each(|q| *q = 0.0);
        self.resamples += 1;
    }
}

/// SMC-learning agent. With `dim = 2` one agent drives both controls of a
/// game jointly.
#[derive(Debug, Clone)]
pub struct Smc {
    per_dim: usize,
    dim: usize,
    params: SmcParams,
    states: HashMap<StateId, SmcActor>,
    rounds: u64,
    rng: RandomSource,
    pending: Option<(StateId, usize)>,
}

impl Smc {
    pub fn new(per_dim: usize, dim: usize, params: SmcParams, rng: RandomSource) -> Result<Self> {
        params.validate()?;
        if per_dim == 0 || dim == 0 {
            return Err(Error::Config(
                "SMC needs at least one sample and one dimension".into(),
            ));
        }
        Ok(Smc {
            per_dim,
            dim,
            params,
            states: HashMap::new(),
            rounds: 0,
            rng,
            pending: None,
        })
    }

    pub fn samples_per_state(&self) -> usize {
        self.per_dim.pow(self.dim as u32)
    }

    pub fn actor(&self, s: StateId) -> Option<&SmcActor> {
        self.states.get(&s)
    }

    pub fn temperature(&self) -> f64 {
        self.params.temperature(self.rounds)
    }
}

impl Agent for Smc {
    fn action_dims(&self) -> usize {
        self.dim
    }

    fn act(&mut self, state: StateId, out: &mut [f64]) -> Result<()> {
        let (per_dim, dim) = (self.per_dim, self.dim);
        let actor = self
            .states
            .entry(state)
            .or_insert_with(|| SmcActor::grid(per_dim, dim));
        let index = actor.select(&mut self.rng);
        out[..dim].copy_from_slice(actor.action(index));
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
        let bootstrap = next
            .and_then(|s| self.states.get(&s))
            .map_or(0.0, SmcActor::max_q);
        let target = reward + self.params.gamma * bootstrap;
        let tau = self.params.temperature(self.rounds);
        let actor = self.states.get_mut(&state).expect("initialized by act");
        actor.update(index, target, self.params.alpha, tau)?;
        if actor.needs_resample(self.params.threshold) {
            actor.resample(self.params.bandwidth_floor, &mut self.rng);
        }
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
                let a = &self.states[k];
                (0..a.len()).map(move |i| SnapshotRow {
                    state: k.0,
                    index: i,
                    action: a.action(i).to_vec(),
                    q: Some(a.q[i]),
                    weight: Some(a.weights[i]),
                    ..Default::default()
                })
            })
            .collect()
    }
}
