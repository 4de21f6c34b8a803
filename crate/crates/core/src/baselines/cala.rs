//! Continuous-action learning automata.
//!
//! Each automaton keeps a Gaussian policy `N(μ, φ)` with `φ = max(s, σ_L)`.
//! A round plays the sampled joint action and the joint mean action, then
//! nudges `μ` and `s` by the normalized reward difference:
//!
//! ```text
//! μ ← μ + λ (β̂x − β̂μ) (x − μ) / φ
//! s ← s + λ (β̂x − β̂μ) [((x − μ) / φ)² − 1] − λ K (s − σ_L)
//! ```

use crate::error::{Error, Result};
use crate::primitives::{project, Interval, RandomSource};

#[derive(Debug, Clone, PartialEq)]
pub struct CalaParams {
    pub lambda: f64,
    pub sigma_l: f64,
    pub k: f64,
    pub mu0: f64,
    pub s0: f64,
}

impl Default for CalaParams {
    fn default() -> Self {
        CalaParams {
            lambda: 0.05,
            sigma_l: 1e-5,
            k: 1.0,
            mu0: 0.5,
            s0: 0.33,
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct CalaPolicy {
    mu: f64,
    s: f64,
    params: CalaParams,
    seen_min: f64,
    seen_max: f64,
}

impl CalaPolicy {
    pub fn new(params: CalaParams) -> Result<Self> {
        if !(params.lambda > 0.0) || !(params.sigma_l > 0.0) || !(params.k >= 0.0) {
            return Err(Error::Config(
                "CALA needs lambda > 0, sigma_l > 0, k >= 0".into(),
            ));
        }
        if !(0.0..=1.0).contains(&params.mu0) {
            return Err(Error::Config(format!(
                "CALA mu0 must lie in [0,1], got {}",
                params.mu0
            )));
        }
        Ok(CalaPolicy {
            mu: params.mu0,
            s: params.s0.max(params.sigma_l),
            params,
            seen_min: f64::INFINITY,
            seen_max: f64::NEG_INFINITY,
        })
    }

    pub fn mu(&self) -> f64 {
        self.mu
    }

    pub fn spread(&self) -> f64 {
        self.s
    }

    pub fn phi(&self) -> f64 {
        self.s.max(self.params.sigma_l)
    }

    /// Draw from the current policy, projected into `[0, 1]`.
    pub fn sample(&self, rng: &mut RandomSource) -> f64 {
        project(rng.gaussian(self.mu, self.phi()), Interval::UNIT)
    }

    fn normalize(&self, beta: f64) -> f64 {
        let span = self.seen_max - self.seen_min;
        if span > 0.0 {
            (beta - self.seen_min) / span
        } else {
            0.0
        }
    }

    /// Updates after playing `x` (reward `beta_x`) and the mean (`beta_mu`).
    pub fn update(&mut self, x: f64, beta_x: f64, beta_mu: f64) -> Result<()> {
        if !beta_x.is_finite() || !beta_mu.is_finite() {
            return Err(Error::Data("non-finite CALA reward".into()));
        }
        self.seen_min = self.seen_min.min(beta_x).min(beta_mu);
        self.seen_max = self.seen_max.max(beta_x).max(beta_mu);
        let diff = self.normalize(beta_x) - self.normalize(beta_mu);
        let phi = self.phi();
        let z = (x - self.mu) / phi;
        let lambda = self.params.lambda;
        let mu = self.mu + lambda * diff * z;
        let s = self.s + lambda * diff * (z * z - 1.0)
            - lambda * self.params.k * (self.s - self.params.sigma_l);
        self.mu = project(mu, Interval::UNIT);
        self.s = s.max(self.params.sigma_l);
        Ok(())
    }
}

/// One joint round: every automaton samples, the sampled and the mean joint
/// actions are each evaluated once, and all automata update on the shared
/// rewards. Returns the reward of the sampled joint action.
pub fn cala_round<F>(
    policies: &mut [CalaPolicy],
    mut evaluate: F,
    rng: &mut RandomSource,
) -> Result<f64>
where
    F: FnMut(&[f64]) -> Result<f64>,
{
    let xs: Vec<f64> = policies.iter().map(|p| p.sample(rng)).collect();
    let mus: Vec<f64> = policies.iter().map(CalaPolicy::mu).collect();
    let beta_x = evaluate(&xs)?;
    let beta_mu = evaluate(&mus)?;
    for (p, &x) in policies.iter_mut().zip(&xs) {
        p.update(x, beta_x, beta_mu)?;
    }
    Ok(beta_x)
}

/// A team of automata with its own random stream.
#[derive(Debug, Clone)]
pub struct CalaTeam {
    pub policies: Vec<CalaPolicy>,
    rng: RandomSource,
}

impl CalaTeam {
    pub fn new(agents: usize, params: CalaParams, rng: RandomSource) -> Result<Self> {
        let policies = (0..agents)
            .map(|_| CalaPolicy::new(params.clone()))
            .collect::<Result<_>>()?;
        Ok(CalaTeam { policies, rng })
    }

    pub fn round<F>(&mut self, evaluate: F) -> Result<f64>
    where
        F: FnMut(&[f64]) -> Result<f64>,
    {
        cala_round(&mut self.policies, evaluate, &mut self.rng)
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn policy() -> CalaPolicy {
        CalaPolicy::new(CalaParams::default()).unwrap()
    }

    #[test]
    fn equal_rewards_leave_mean() {
        let mut p = policy();
        p.update(0.2, 3.0, 0.0).unwrap(); // establishes a nonzero span
        let mu = p.mu();
        p.update(0.9, 1.5, 1.5).unwrap();
        assert_eq!(p.mu(), mu);
    }

    #[test]
    fn zero_displacement_leaves_mean() {
        let mut p = policy();
        p.update(0.5, 10.0, -10.0).unwrap();
        assert_eq!(p.mu(), 0.5);
    }

    #[test]
    fn mean_moves_toward_better_sample() {
        let mut p = policy();
        p.update(0.7, 1.0, 0.0).unwrap();
        assert!(p.mu() > 0.5);
    }

    #[test]
    fn spread_decays_to_lower_bound() {
        let mut p = policy();
        let mut prev = p.spread();
        for _ in 0..2000 {
            p.update(0.3, 2.0, 2.0).unwrap();
            assert!(p.spread() <= prev);
            assert!(p.spread() >= 1e-5);
            prev = p.spread();
        }
        assert!((p.spread() - 1e-5).abs() < 1e-9);
    }

    #[test]
    fn team_round_on_quadratic() {
        let mut team =
            CalaTeam::new(2, CalaParams::default(), RandomSource::new(4, "cala")).unwrap();
        for _ in 0..20_000 {
            team.round(|a| Ok(1.0 - (a[0] - 0.7).powi(2) - (a[1] - 0.3).powi(2)))
                .unwrap();
            for p in &team.policies {
                assert!(p.spread() >= 1e-5);
                assert!((0.0..=1.0).contains(&p.mu()));
            }
        }
        assert!(
            (team.policies[0].mu() - 0.7).abs() < 0.1,
            "{}",
            team.policies[0].mu()
        );
        assert!(
            (team.policies[1].mu() - 0.3).abs() < 0.1,
            "{}",
            team.policies[1].mu()
        );
    }

    #[test]
    fn rejects_bad_params() {
        let bad = CalaParams {
            lambda: 0.0,
            ..CalaParams::default()
        };
        assert!(CalaPolicy::new(bad).is_err());
        assert!(policy().update(0.1, f64::NAN, 0.0).is_err());
    }
}
