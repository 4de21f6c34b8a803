//! rFMQ evaluation on an action set refreshed every `c` visits by plain SMC
//! importance resampling. Weights are the Boltzmann distribution of the
//! per-round Q change, `ΔQ = Q_{t+1} − Q_t`.

use std::collections::HashMap;

use super::smc::{boltzmann, kernel_resample};
use crate::error::{Error, Result};
use crate::games::StateId;
use crate::learner::{decaying_epsilon, Agent, SnapshotRow};
use crate::primitives::{argmax_first_unchecked, RandomSource};
use crate::scc::{even_actions, HyperParams, SampleStats};

/// Boltzmann weights of `delta_q` at temperature `tau`.
pub fn smc_rfmq_weights(delta_q: &[f64], tau: f64) -> Result<Vec<f64>> {
    boltzmann(delta_q, tau)
}

#[derive(Debug, Clone, PartialEq)]
pub struct SmcRfmqParams {
    /// Shares α, α_F, γ, `c` and the equality tolerance.
    pub rfmq: HyperParams,
    pub tau0: f64,
    pub tau_decay: f64,
    pub tau_period: u64,
    pub bandwidth_floor: f64,
}

impl Default for SmcRfmqParams {
    fn default() -> Self {
        SmcRfmqParams {
            rfmq: HyperParams::default(),
            tau0: 20.0,
            tau_decay: 0.9,
            tau_period: 5000,
            bandwidth_floor: 0.01,
        }
    }
}

impl SmcRfmqParams {
    pub fn temperature(&self, t: u64) -> f64 {
        self.tau0 * self.tau_decay.powi((t / self.tau_period) as i32)
    }
}

#[derive(Debug, Clone, PartialEq)]
struct HybridState {
    samples: Vec<SampleStats>,
    weights: Vec<f64>,
    visits: u32,
}

impl HybridState {
    fn new(actions: &[f64]) -> Self {
        HybridState {
            samples: actions.iter().map(|&a| SampleStats::new(a)).collect(),
            weights: vec![1.0 / actions.len() as f64; actions.len()],
            visits: 0,
        }
    }

    fn resample(&mut self, floor: f64, rng: &mut RandomSource) {
        let actions: Vec<f64> = self.samples.iter().map(|s| s.action).collect();
        let fresh = kernel_resample(&actions, 1, &self.weights, floor, rng);
        *self = HybridState::new(&fresh);
    }
}

#[derive(Debug, Clone)]
pub struct SmcRfmq {
    n: usize,
    params: SmcRfmqParams,
    states: HashMap<StateId, HybridState>,
    rounds: u64,
    rng: RandomSource,
    pending: Option<(StateId, usize)>,
}

impl SmcRfmq {
    pub fn new(n: usize, params: SmcRfmqParams, rng: RandomSource) -> Result<Self> {
        params.rfmq.validate()?;
        if n == 0 {
            return Err(Error::Config("SMC+rFMQ needs a nonempty action set".into()));
        }
        if !(params.tau0 > 0.0 && params.tau_decay > 0.0) || params.tau_period == 0 {
            return Err(Error::Config(
                "SMC+rFMQ temperature schedule must be positive".into(),
            ));
        }
        Ok(SmcRfmq {
            n,
            params,
            states: HashMap::new(),
            rounds: 0,
            rng,
            pending: None,
        })
    }

    pub fn weights(&self, s: StateId) -> Option<&[f64]> {
        self.states.get(&s).map(|h| h.weights.as_slice())
    }

    pub fn samples(&self, s: StateId) -> Option<&[SampleStats]> {
        self.states.get(&s).map(|h| h.samples.as_slice())
    }
}

impl Agent for SmcRfmq {
    fn action_dims(&self) -> usize {
        1
    }

    fn act(&mut self, state: StateId, out: &mut [f64]) -> Result<()> {
        let n = self.n;
        let h = self
            .states
            .entry(state)
            .or_insert_with(|| HybridState::new(&even_actions(n)));
        if h.visits >= self.params.rfmq.resample_period {
            h.resample(self.params.bandwidth_floor, &mut self.rng);
        }
        let eps = decaying_epsilon(u64::from(h.visits));
        let index = if self.rng.chance(eps) {
            self.rng.index(h.samples.len())
        } else {
            let es: Vec<f64> = h.samples.iter().map(|s| s.eval).collect();
            argmax_first_unchecked(&es)
        };
        out[0] = h.samples[index].action;
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
        let p = &self.params.rfmq;
        let bootstrap = next.and_then(|s| self.states.get(&s)).map_or(0.0, |h| {
            h.samples
                .iter()
                .map(|s| s.q)
                .fold(f64::NEG_INFINITY, f64::max)
        });
        let target = reward + p.gamma * bootstrap;
        let tau = self.params.temperature(self.rounds);
        let h = self.states.get_mut(&state).expect("initialized by act");
        let before = h.samples[index].q;
        h.samples[index].update(target, p.alpha, p.alpha_f, p.eq_tol);
        let mut delta = vec![0.0; h.samples.len()];
        delta[index] = h.samples[index].q - before;
        h.weights = smc_rfmq_weights(&delta, tau)?;
        h.visits += 1;
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
                let h = &self.states[k];
                h.samples.iter().enumerate().map(move |(i, s)| SnapshotRow {
                    state: k.0,
                    index: i,
                    action: vec![s.action],
                    q: Some(s.q),
                    q_max: Some(s.q_max),
                    freq: Some(s.freq),
                    eval: Some(s.eval),
                    weight: Some(h.weights[i]),
                    spread: None,
                })
            })
            .collect()
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn weight_examples() {
        let w = smc_rfmq_weights(&[0.0; 5], 20.0).unwrap();
        assert!(w.iter().all(|x| (x - 0.2).abs() < 1e-15));
        let tau = 20.0;
        let w = smc_rfmq_weights(&[tau * 2f64.ln(), 0.0], tau).unwrap();
        assert!((w[0] - 2.0 / 3.0).abs() < 1e-12);
        let w = smc_rfmq_weights(&[1e6 * tau, 0.0], tau).unwrap();
        assert!((w[0] - 1.0).abs() < 1e-12 && w[1] >= 0.0);
    }

    #[test]
    fn resamples_every_period_and_keeps_normalized() {
        let params = SmcRfmqParams {
            rfmq: HyperParams {
                resample_period: 10,
                ..HyperParams::default()
            },
            ..SmcRfmqParams::default()
        };
        let mut l = SmcRfmq::new(10, params, RandomSource::new(2, "hyb")).unwrap();
        let mut a = [0.0];
        let initial: Vec<f64> = even_actions(10);
        for round in 0..35 {
            l.act(StateId::SINGLE, &mut a).unwrap();
            l.observe(1.0 - (a[0] - 0.3).abs(), None).unwrap();
            l.end_episode();
            let w = l.weights(StateId::SINGLE).unwrap();
            assert!((w.iter().sum::<f64>() - 1.0).abs() < 1e-12);
            assert!(w.iter().all(|&x| x >= 0.0));
            if round == 9 {
                let acts: Vec<f64> = l
                    .samples(StateId::SINGLE)
                    .unwrap()
                    .iter()
                    .map(|s| s.action)
                    .collect();
                assert_eq!(acts, initial);
            }
        }
        let acts: Vec<f64> = l
            .samples(StateId::SINGLE)
            .unwrap()
            .iter()
            .map(|s| s.action)
            .collect();
        assert_ne!(acts, initial);
        assert!(acts.iter().all(|a| (0.0..=1.0).contains(a)));
    }
}
