//! SCC-rFMQ: per-state sampled action sets that are periodically refreshed by
//! coordination resampling, evaluated with multi-state recursive frequency
//! maximum Q-learning.
//!
//! Each visited state owns a [`StateLearner`] holding `n` sampled actions in
//! `[0, 1]`. Every `c` visits the set is resampled: the top `⌊n/3⌋` actions
//! by `Q` survive, the rest are drawn around the current best action with a
//! spread `σ` that shrinks while the best action keeps winning (WoLM), or
//! uniformly with probability `ε_re`, which halves on each resample. Between
//! resamples, actions are chosen ε-greedily on the optimistic evaluation
//! `E = (1 − F)·Q + F·Qmax`.

use std::collections::HashMap;

use crate::error::{Error, Result};
use crate::games::StateId;
use crate::learner::{decaying_epsilon, Agent, SnapshotRow};
use crate::primitives::{argmax_first_unchecked, project, Interval, RandomSource};

/// How a fresh state's sample set is seeded.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum InitMode {
    /// `{ i / (n + 1) : i = 1..=n }`
    Even,
    /// `n` independent uniform draws on `[0, 1]`.
    Uniform,
}

#[derive(Debug, Clone, PartialEq)]
pub struct HyperParams {
    /// Q learning rate α.
    pub alpha: f64,
    /// Frequency learning rate α_F.
    pub alpha_f: f64,
    pub gamma: f64,
    /// Resample period `c`, in visits of a state.
    pub resample_period: u32,
    /// Initial and maximal exploratory rate σ0.
    pub sigma0: f64,
    /// σ shrink factor on a win.
    pub delta_d: f64,
    /// σ growth factor on a loss.
    pub delta_l: f64,
    /// Decay of the uniform-mixture rate ε_re per resample.
    pub delta_re: f64,
    /// Tolerance for treating a target as equal to Qmax.
    pub eq_tol: f64,
    pub init: InitMode,
}

impl Default for HyperParams {
    fn default() -> Self {
        HyperParams {
            alpha: 0.5,
            alpha_f: 0.01,
            gamma: 1.0,
            resample_period: 200,
            sigma0: 0.33,
            delta_d: 0.5,
            delta_l: 1.1,
            delta_re: 0.5,
            eq_tol: 1e-9,
            init: InitMode::Even,
        }
    }
}

impl HyperParams {
    pub fn validate(&self) -> Result<()> {
        let unit = |x: f64| x > 0.0 && x <= 1.0;
        if !unit(self.alpha) || !unit(self.alpha_f) {
            return Err(Error::Config(format!(
                "learning rates must lie in (0,1], got alpha={} alpha_f={}",
                self.alpha, self.alpha_f
            )));
        }
        if !(self.delta_d > 0.0 && self.delta_d < 1.0 && self.delta_l > 1.0) {
            return Err(Error::Config(format!(
                "need 0 < delta_d < 1 < delta_l, got {} and {}",
                self.delta_d, self.delta_l
            )));
        }
        if !(self.delta_re >= 0.0 && self.delta_re < 1.0) {
            return Err(Error::Config(format!(
                "delta_re must lie in [0,1), got {}",
                self.delta_re
            )));
        }
        if !(self.sigma0 > 0.0 && self.sigma0.is_finite()) {
            return Err(Error::Config(format!(
                "sigma0 must be positive, got {}",
                self.sigma0
            )));
        }
        if self.resample_period == 0 {
            return Err(Error::Config("resample period must be positive".into()));
        }
        if !(self.gamma >= 0.0 && self.gamma <= 1.0) {
            return Err(Error::Config(format!(
                "gamma must lie in [0,1], got {}",
                self.gamma
            )));
        }
        if !(self.eq_tol >= 0.0) {
            return Err(Error::Config("eq_tol must be non-negative".into()));
        }
        Ok(())
    }
}

/// Evenly spaced set `{ i / (n + 1) }`.
pub fn even_actions(n: usize) -> Vec<f64> {
    (1..=n).map(|i| i as f64 / (n + 1) as f64).collect()
}

/// Per-action rFMQ statistics.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct SampleStats {
    pub action: f64,
    pub q: f64,
    pub q_max: f64,
    pub freq: f64,
    pub eval: f64,
}

impl SampleStats {
    pub fn new(action: f64) -> Self {
        SampleStats {
            action,
            q: 0.0,
            q_max: 0.0,
            freq: 1.0,
            eval: 0.0,
        }
    }

    /// Back to the freshly-sampled statistics, keeping the action.
    pub fn reset(&mut self) {
        *self = SampleStats::new(self.action);
    }

    /// Q-learning step toward `target`, then the three-branch Qmax / F
    /// update and a fresh `E`.
    pub fn update(&mut self, target: f64, alpha: f64, alpha_f: f64, eq_tol: f64) {
        self.q = (1.0 - alpha) * self.q + alpha * target;
        if target > self.q_max + eq_tol {
            self.q_max = target;
            self.freq = 1.0;
        } else if (target - self.q_max).abs() <= eq_tol {
            self.freq = (1.0 - alpha_f) * self.freq + alpha_f;
        } else {
            self.freq *= 1.0 - alpha_f;
        }
        self.freq = self.freq.clamp(0.0, 1.0);
        self.eval = (1.0 - self.freq) * self.q + self.freq * self.q_max;
    }
}

/// Sample set and resampling bookkeeping for one agent in one state.
#[derive(Debug, Clone, PartialEq)]
pub struct StateLearner {
    samples: Vec<SampleStats>,
    sigma: f64,
    eps_re: f64,
    best_action: Option<f64>,
    best_value: f64,
    visits: u32,
    resamples: u32,
}

impl StateLearner {
    pub fn new(n: usize, params: &HyperParams, rng: &mut RandomSource) -> Result<Self> {
        if n < 3 {
            return Err(Error::Config(format!(
                "SCC-rFMQ needs at least 3 samples per state, got {n}"
            )));
        }
        let actions = match params.init {
            InitMode::Even => even_actions(n),
            InitMode::Uniform => (0..n).map(|_| rng.uniform()).collect(),
        };
        Ok(Self::from_actions(&actions, params))
    }

    /// Fresh learner over an explicit action set.
    pub fn from_actions(actions: &[f64], params: &HyperParams) -> Self {
        StateLearner {
            samples: actions.iter().map(|&a| SampleStats::new(a)).collect(),
            sigma: params.sigma0,
            eps_re: 1.0,
            best_action: None,
            best_value: 0.0,
            visits: 0,
            resamples: 0,
        }
    }

    pub fn samples(&self) -> &[SampleStats] {
        &self.samples
    }

    pub fn samples_mut(&mut self) -> &mut [SampleStats] {
        &mut self.samples
    }

    pub fn sigma(&self) -> f64 {
        self.sigma
    }

    pub fn eps_re(&self) -> f64 {
        self.eps_re
    }

    pub fn best_action(&self) -> Option<f64> {
        self.best_action
    }

    pub fn best_value(&self) -> f64 {
        self.best_value
    }

    pub fn visits(&self) -> u32 {
        self.visits
    }

    pub fn resamples(&self) -> u32 {
        self.resamples
    }

    /// Test hook: overwrite the WoLM memory.
    pub fn set_memory(&mut self, sigma: f64, best_action: Option<f64>, best_value: f64) {
        self.sigma = sigma;
        self.best_action = best_action;
        self.best_value = best_value;
    }

    /// Test hook: overwrite the visit counter.
    pub fn set_visits(&mut self, visits: u32) {
        self.visits = visits;
    }

    /// `10 / (10 + visits since last resample)`.
    pub fn exploration_rate(&self) -> f64 {
        decaying_epsilon(u64::from(self.visits))
    }

    pub fn max_q(&self) -> f64 {
        self.samples
            .iter()
            .map(|s| s.q)
            .fold(f64::NEG_INFINITY, f64::max)
    }

    /// Index of the sample with the largest Q.
    pub fn best_q_index(&self) -> usize {
        let qs: Vec<f64> = self.samples.iter().map(|s| s.q).collect();
        argmax_first_unchecked(&qs)
    }

    /// Index of the sample with the largest E.
    pub fn greedy_index(&self) -> usize {
        let es: Vec<f64> = self.samples.iter().map(|s| s.eval).collect();
        argmax_first_unchecked(&es)
    }

    /// ε-greedy choice on E.
    pub fn select(&self, rng: &mut RandomSource) -> usize {
        if rng.chance(self.exploration_rate()) {
            rng.index(self.samples.len())
        } else {
            self.greedy_index()
        }
    }

    /// Applies one rFMQ update toward `target` and counts the visit.
    pub fn observe(&mut self, index: usize, target: f64, params: &HyperParams) -> Result<()> {
        if !target.is_finite() {
            return Err(Error::Data(format!("non-finite learning target {target}")));
        }
        let sample = self
            .samples
            .get_mut(index)
            .ok_or_else(|| Error::Usage(format!("sample index {index} out of range")))?;
        sample.update(target, params.alpha, params.alpha_f, params.eq_tol);
        self.visits += 1;
        Ok(())
    }

    /// Win-or-learn-more adjustment of σ. Returns the new σ.
    pub fn wolm_update(&mut self, params: &HyperParams) -> f64 {
        let i = self.best_q_index();
        let a_max = self.samples[i].action;
        let q_best = self.samples[i].q;
        self.sigma = match self.best_action {
            Some(prev) if prev == a_max => {
                if q_best >= self.best_value {
                    (self.sigma * params.delta_d).max(f64::MIN_POSITIVE)
                } else {
                    (self.sigma * params.delta_l).min(params.sigma0)
                }
            }
            _ => params.sigma0,
        };
        self.sigma
    }

    /// Coordination resample: WoLM, memory refresh, keep the top ⌊n/3⌋ by Q,
    /// redraw the rest, decay ε_re and reset all statistics.
    pub fn coordination_resample(&mut self, params: &HyperParams, rng: &mut RandomSource) {
        self.wolm_update(params);
        let best = self.best_q_index();
        let a_max = self.samples[best].action;
        self.best_action = Some(a_max);
        self.best_value = self.samples[best].q;

        let n = self.samples.len();
        let keep = n / 3;
        let mut order: Vec<usize> = (0..n).collect();
        // Stable: equal Q keeps the lower index first, matching argmax_first.
        order.sort_by(|&a, &b| self.samples[b].q.total_cmp(&self.samples[a].q));
        let mut retained = vec![false; n];
        for &i in &order[..keep] {
            retained[i] = true;
        }

        for (sample, kept) in self.samples.iter_mut().zip(retained) {
            if !kept {
                sample.action = if rng.chance(self.eps_re) {
                    rng.uniform()
                } else {
                    project(rng.gaussian(a_max, self.sigma), Interval::UNIT)
                };
            }
            sample.reset();
        }
        self.eps_re *= params.delta_re;
        self.visits = 0;
        self.resamples += 1;
    }

    fn snapshot_rows(&self, state: StateId) -> impl Iterator<Item = SnapshotRow> + '_ {
        self.samples
            .iter()
            .enumerate()
            .map(move |(i, s)| SnapshotRow {
                state: state.0,
                index: i,
                action: vec![s.action],
                q: Some(s.q),
                q_max: Some(s.q_max),
                freq: Some(s.freq),
                eval: Some(s.eval),
                weight: None,
                spread: Some(self.sigma),
            })
    }
}

/// One SCC-rFMQ agent controlling a single action dimension.
#[derive(Debug, Clone)]
pub struct SccRfmq {
    n: usize,
    params: HyperParams,
    states: HashMap<StateId, StateLearner>,
    rng: RandomSource,
    pending: Option<(StateId, usize)>,
}

impl SccRfmq {
    pub fn new(n: usize, params: HyperParams, rng: RandomSource) -> Result<Self> {
        params.validate()?;
        if n < 3 {
            return Err(Error::Config(format!(
                "SCC-rFMQ needs at least 3 samples per state, got {n}"
            )));
        }
        Ok(SccRfmq {
            n,
            params,
            states: HashMap::new(),
            rng,
            pending: None,
        })
    }

    pub fn params(&self) -> &HyperParams {
        &self.params
    }

    pub fn state(&self, s: StateId) -> Option<&StateLearner> {
        self.states.get(&s)
    }

    pub fn visited_states(&self) -> usize {
        self.states.len()
    }

    /// Greedy (max-E) action in `s`, if the state was visited.
    pub fn greedy_action(&self, s: StateId) -> Option<f64> {
        self.states
            .get(&s)
            .map(|l| l.samples[l.greedy_index()].action)
    }
}

impl Agent for SccRfmq {
    fn action_dims(&self) -> usize {
        1
    }

    fn act(&mut self, state: StateId, out: &mut [f64]) -> Result<()> {
        let SccRfmq {
            n,
            params,
            states,
            rng,
            pending,
        } = self;
        let learner = match states.entry(state) {
            std::collections::hash_map::Entry::Occupied(e) => e.into_mut(),
            std::collections::hash_map::Entry::Vacant(e) => {
                e.insert(StateLearner::new(*n, params, rng)?)
            }
        };
        if learner.visits >= params.resample_period {
            learner.coordination_resample(params, rng);
        }
        let index = learner.select(rng);
        out[0] = learner.samples[index].action;
        *pending = Some((state, index));
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
            .map_or(0.0, StateLearner::max_q);
        let target = reward + self.params.gamma * bootstrap;
        let learner = self
            .states
            .get_mut(&state)
            .expect("pending state was initialized by act");
        learner.observe(index, target, &self.params)
    }

    fn snapshot(&self) -> Vec<SnapshotRow> {
        let mut keys: Vec<_> = self.states.keys().copied().collect();
        keys.sort();
        keys.iter()
            .flat_map(|k| self.states[k].snapshot_rows(*k))
            .collect()
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn params() -> HyperParams {
        HyperParams::default()
    }

    fn rng() -> RandomSource {
        RandomSource::new(7, "scc-test")
    }

    #[test]
    fn even_init() {
        let l = StateLearner::new(10, &params(), &mut rng()).unwrap();
        let actions: Vec<f64> = l.samples().iter().map(|s| s.action).collect();
        assert_eq!(actions, even_actions(10));
        assert!((actions[0] - 1.0 / 11.0).abs() < 1e-15);
        assert!((actions[9] - 10.0 / 11.0).abs() < 1e-15);
        for s in l.samples() {
            assert_eq!((s.q, s.q_max, s.freq, s.eval), (0.0, 0.0, 1.0, 0.0));
        }
        assert_eq!(l.sigma(), 0.33);
        assert_eq!(l.eps_re(), 1.0);
        assert_eq!(l.best_action(), None);
    }

    #[test]
    fn uniform_init_and_cardinality() {
        let p = HyperParams {
            init: InitMode::Uniform,
            ..params()
        };
        let l = StateLearner::new(5, &p, &mut rng()).unwrap();
        assert_eq!(l.samples().len(), 5);
        assert!(l.samples().iter().all(|s| (0.0..1.0).contains(&s.action)));
    }

    #[test]
    fn too_few_samples_rejected() {
        assert!(matches!(
            StateLearner::new(2, &params(), &mut rng()),
            Err(Error::Config(_))
        ));
        assert!(SccRfmq::new(2, params(), rng()).is_err());
    }

    #[test]
    fn observe_examples() {
        let p = params();
        let mut l = StateLearner::from_actions(&[0.1, 0.2, 0.3], &p);
        l.observe(0, 5.0, &p).unwrap();
        assert_eq!(l.samples()[0].q, 2.5);
        assert_eq!(l.visits(), 1);

        let mut s = SampleStats {
            action: 0.0,
            q: 0.0,
            q_max: 5.0,
            freq: 0.3,
            eval: 0.0,
        };
        s.update(6.0, 0.5, 0.01, 1e-9);
        assert_eq!((s.q_max, s.freq), (6.0, 1.0));

        // Q = -2 steps to 2 under α = 0.5 toward 6.
        let mut s = SampleStats {
            action: 0.0,
            q: -2.0,
            q_max: 6.0,
            freq: 0.5,
            eval: 0.0,
        };
        s.update(6.0, 0.5, 0.01, 1e-9);
        assert!((s.q - 2.0).abs() < 1e-12);
        assert!((s.freq - 0.505).abs() < 1e-12);
        assert!((s.eval - 4.02).abs() < 1e-12);

        let mut s = SampleStats {
            action: 0.0,
            q: 0.0,
            q_max: 6.0,
            freq: 0.5,
            eval: 0.0,
        };
        s.update(3.0, 0.5, 0.01, 1e-9);
        assert!((s.freq - 0.495).abs() < 1e-12);
    }

    #[test]
    fn observe_rejects_bad_input() {
        let p = params();
        let mut l = StateLearner::from_actions(&[0.1, 0.2, 0.3], &p);
        assert!(matches!(l.observe(0, f64::NAN, &p), Err(Error::Data(_))));
        assert!(matches!(l.observe(9, 1.0, &p), Err(Error::Usage(_))));
    }

    #[test]
    fn selection_examples() {
        let p = params();
        let mut l = StateLearner::from_actions(&[0.1, 0.2, 0.3], &p);
        assert_eq!(l.exploration_rate(), 1.0);
        l.samples_mut()[1].eval = 5.0;
        l.samples_mut()[2].eval = 2.0;
        l.set_visits(190);
        assert_eq!(l.greedy_index(), 1);
        let mut r = rng();
        let exploit = (0..1000).filter(|_| l.select(&mut r) == 1).count();
        // ε = 0.05, so index 1 appears ≈ 0.95 + 0.05/3 of the time.
        assert!(exploit > 930, "{exploit}");
    }

    #[test]
    fn exploration_rate_matches_bernoulli() {
        // With E maximal at index 0, any non-zero pick is an exploration.
        // P(pick != 0) = ε (n−1)/n, so ε̂ = freq · n/(n−1).
        let p = params();
        let mut l = StateLearner::from_actions(&[0.1, 0.2, 0.3, 0.4, 0.5], &p);
        l.samples_mut()[0].eval = 1.0;
        l.set_visits(40);
        let mut r = rng();
        let draws = 100_000;
        let off = (0..draws).filter(|_| l.select(&mut r) != 0).count();
        let eps_hat = off as f64 / draws as f64 * 5.0 / 4.0;
        assert!((eps_hat - 0.2).abs() < 0.01, "{eps_hat}");
    }

    #[test]
    fn wolm_examples() {
        let p = params();
        let mut l = StateLearner::from_actions(&[0.1, 0.2, 0.3], &p);
        l.samples_mut()[1].q = 5.0;
        l.set_memory(0.1, Some(0.3), 4.0);
        assert_eq!(l.wolm_update(&p), 0.33);

        l.set_memory(0.2, Some(0.2), 4.0);
        assert!((l.wolm_update(&p) - 0.1).abs() < 1e-15);

        l.samples_mut()[1].q = 3.0;
        l.set_memory(0.32, Some(0.2), 4.0);
        assert_eq!(l.wolm_update(&p), 0.33);

        l.set_memory(0.1, Some(0.2), 4.0);
        assert!((l.wolm_update(&p) - 0.11).abs() < 1e-15);

        l.set_memory(0.1, None, 0.0);
        assert_eq!(l.wolm_update(&p), 0.33);
    }

    #[test]
    fn resample_keeps_top_third() {
        let p = params();
        for (n, kept) in [(10usize, 3usize), (5, 1), (3, 1), (50, 16)] {
            let actions = even_actions(n);
            let mut l = StateLearner::from_actions(&actions, &p);
            for (i, s) in l.samples_mut().iter_mut().enumerate() {
                s.q = i as f64;
            }
            l.coordination_resample(&p, &mut rng());
            assert_eq!(l.samples().len(), n);
            let survivors: Vec<f64> = actions[n - kept..].to_vec();
            for a in &survivors {
                assert!(l.samples().iter().any(|s| s.action == *a));
            }
            assert_eq!(l.best_action(), Some(actions[n - 1]));
            assert_eq!(l.best_value(), (n - 1) as f64);
            for s in l.samples() {
                assert_eq!((s.q, s.q_max, s.freq, s.eval), (0.0, 0.0, 1.0, 0.0));
                assert!((0.0..=1.0).contains(&s.action));
            }
            assert_eq!(l.visits(), 0);
        }
    }

    #[test]
    fn eps_re_halves_per_resample() {
        let p = params();
        let mut l = StateLearner::from_actions(&even_actions(10), &p);
        let mut r = rng();
        l.coordination_resample(&p, &mut r);
        assert_eq!(l.eps_re(), 0.5);
        l.coordination_resample(&p, &mut r);
        assert_eq!(l.eps_re(), 0.25);
    }

    #[test]
    fn degenerate_spread_collapses_onto_best() {
        let p = HyperParams {
            delta_re: 0.0,
            ..params()
        };
        let mut l = StateLearner::from_actions(&even_actions(9), &p);
        let mut r = rng();
        // First resample: ε_re = 1 so draws are uniform; afterwards ε_re = 0.
        l.coordination_resample(&p, &mut r);
        let best = l.samples()[4].action;
        l.samples_mut()[4].q = 1.0;
        l.set_memory(1e-300, Some(best), 0.0);
        l.coordination_resample(&p, &mut r);
        // Kept: index 4 (best Q), then 0 and 1 on ties. The rest collapse.
        for (i, s) in l.samples().iter().enumerate() {
            if ![0, 1].contains(&i) {
                assert!((s.action - best).abs() < 1e-200, "sample {i}: {}", s.action);
            }
        }
    }

    #[test]
    fn agent_resamples_every_period() {
        let p = HyperParams {
            resample_period: 5,
            ..params()
        };
        let mut agent = SccRfmq::new(6, p, rng()).unwrap();
        let mut a = [0.0];
        for round in 0..23 {
            agent.act(StateId::SINGLE, &mut a).unwrap();
            assert!((0.0..=1.0).contains(&a[0]));
            agent.observe(1.0, None).unwrap();
            let st = agent.state(StateId::SINGLE).unwrap();
            assert_eq!(st.resamples(), round / 5);
        }
        assert!(matches!(agent.observe(1.0, None), Err(Error::Usage(_))));
        agent.act(StateId::SINGLE, &mut a).unwrap();
        assert!(matches!(
            agent.observe(f64::INFINITY, None),
            Err(Error::Data(_))
        ));
    }

    #[test]
    fn agent_bootstraps_from_next_state() {
        let p = HyperParams {
            gamma: 1.0,
            ..params()
        };
        let mut agent = SccRfmq::new(3, p, rng()).unwrap();
        let mut a = [0.0];
        // Teach state 1 a terminal reward of 4.
        agent.act(StateId(1), &mut a).unwrap();
        agent.observe(4.0, None).unwrap();
        let q1 = agent.state(StateId(1)).unwrap().max_q();
        assert_eq!(q1, 2.0);
        agent.act(StateId(0), &mut a).unwrap();
        agent.observe(0.0, Some(StateId(1))).unwrap();
        let l0 = agent.state(StateId(0)).unwrap();
        assert_eq!(l0.max_q(), 1.0);
        assert_eq!(
            l0.samples().iter().map(|s| s.q_max).fold(0.0, f64::max),
            2.0
        );
        assert_eq!(agent.visited_states(), 2);
    }
}
