//! Episode loop and the parallel run executor.
//!
//! Every run draws from independent streams derived from the master seed and
//! a label (`run{r}/agent{i}`, `run{r}/env`, `run{r}/cala`), so results do
//! not depend on the number of worker threads.

use rayon::prelude::*;

use super::config::{Algo, ExperimentConfig, GameKind};
use super::metrics::MetricSeries;
use crate::baselines::{CalaTeam, DiscreteRfmq, Smc, SmcRfmq};
use crate::error::{Error, Result};
use crate::games::{BoatGame, Environment, MatrixGame, MatrixGameSpec};
use crate::learner::{Agent, SnapshotRow};
use crate::primitives::RandomSource;
use crate::scc::SccRfmq;

/// Outcome of one independent run.
#[derive(Debug, Clone)]
pub struct RunOutput {
    pub series: MetricSeries,
    /// Final learner state per agent, when requested.
    pub snapshots: Vec<Vec<SnapshotRow>>,
}

pub fn build_environment(cfg: &ExperimentConfig) -> Result<Box<dyn Environment + Send>> {
    Ok(match cfg.game {
        GameKind::Boat => Box::new(BoatGame::new(cfg.params.step_cap)?),
        _ => Box::new(MatrixGame::new(matrix_spec(cfg)?)),
    })
}

pub fn matrix_spec(cfg: &ExperimentConfig) -> Result<MatrixGameSpec> {
    match cfg.game {
        GameKind::Cg => Ok(MatrixGameSpec::climbing()),
        GameKind::Pscg => Ok(MatrixGameSpec::partially_stochastic_climbing()),
        GameKind::Custom => {
            let grid = cfg
                .grid
                .ok_or_else(|| Error::Config("custom game requires 'grid'".into()))?;
            MatrixGameSpec::custom(grid, cfg.grid_alt)
        }
        GameKind::Boat => Err(Error::Config("boat is not a matrix game".into())),
    }
}

fn agent_stream(cfg: &ExperimentConfig, run: usize, i: usize) -> RandomSource {
    RandomSource::new(cfg.seed, &format!("run{run}/agent{i}"))
}

pub fn build_agents(cfg: &ExperimentConfig, run: usize) -> Result<Vec<Box<dyn Agent>>> {
    let p = &cfg.params;
    let n = cfg.samples;
    if cfg.agents == 1 {
        return match cfg.algos[0] {
            Algo::Smc => Ok(vec![Box::new(Smc::new(
                n,
                2,
                p.smc.clone(),
                agent_stream(cfg, run, 0),
            )?)]),
            other => Err(Error::Config(format!(
                "{other} cannot act as a joint controller"
            ))),
        };
    }
    cfg.algos
        .iter()
        .enumerate()
        .map(|(i, algo)| -> Result<Box<dyn Agent>> {
            let rng = agent_stream(cfg, run, i);
            Ok(match algo {
                Algo::SccRfmq => Box::new(SccRfmq::new(n, p.scc.clone(), rng)?),
                Algo::Rfmq => Box::new(DiscreteRfmq::new(n, p.scc.clone(), rng)?),
                Algo::Smc => Box::new(Smc::new(n, 1, p.smc.clone(), rng)?),
                Algo::SmcRfmq => Box::new(SmcRfmq::new(n, p.smc_rfmq.clone(), rng)?),
                Algo::Cala => {
                    return Err(Error::Config("cala runs through its own loop".into()));
                }
            })
        })
        .collect()
}

/// Plays `episodes` episodes and returns the total reward of each.
pub fn run_episodes(
    env: &mut dyn Environment,
    agents: &mut [Box<dyn Agent>],
    episodes: u64,
    env_rng: &mut RandomSource,
) -> Result<Vec<f64>> {
    let dims: usize = agents.iter().map(|a| a.action_dims()).sum();
    if dims != env.action_dims() {
        return Err(Error::Config(format!(
            "agents control {dims} action components, environment expects {}",
            env.action_dims()
        )));
    }
    let mut joint = vec![0.0; dims];
    let mut rewards = Vec::with_capacity(episodes as usize);
    for _ in 0..episodes {
        let mut state = env.reset();
        let mut total = 0.0;
        loop {
            let mut offset = 0;
            for agent in agents.iter_mut() {
                let d = agent.action_dims();
                agent.act(state, &mut joint[offset..offset + d])?;
                offset += d;
            }
            let t = env.step(&joint, env_rng)?;
            total += t.reward;
            let next = (!t.terminal).then_some(t.next);
            for agent in agents.iter_mut() {
                agent.observe(t.reward, next)?;
            }
            if t.terminal {
                break;
            }
            state = t.next;
        }
        for agent in agents.iter_mut() {
            agent.end_episode();
        }
        rewards.push(total);
    }
    Ok(rewards)
}

/// CALA rounds on a single-state game; logs the reward of the sampled
/// joint action.
pub fn run_cala(cfg: &ExperimentConfig, run: usize) -> Result<(Vec<f64>, CalaTeam)> {
    let spec = matrix_spec(cfg)?;
    let mut env_rng = RandomSource::new(cfg.seed, &format!("run{run}/env"));
    let mut team = CalaTeam::new(
        cfg.agents,
        cfg.params.cala.clone(),
        RandomSource::new(cfg.seed, &format!("run{run}/cala")),
    )?;
    let mut rewards = Vec::with_capacity(cfg.episodes as usize);
    for _ in 0..cfg.episodes {
        let r = team.round(|a| spec.sample(a[0], a[1], &mut env_rng))?;
        rewards.push(r);
    }
    Ok((rewards, team))
}

pub fn run_single(cfg: &ExperimentConfig, run: usize, keep_snapshot: bool) -> Result<RunOutput> {
    if cfg.algos.contains(&Algo::Cala) {
        let (rewards, team) = run_cala(cfg, run)?;
        let snapshots = if keep_snapshot {
            team.policies
                .iter()
                .map(|p| {
                    vec![SnapshotRow {
                        action: vec![p.mu()],
                        spread: Some(p.spread()),
                        ..Default::default()
                    }]
                })
                .collect()
        } else {
            Vec::new()
        };
        return Ok(RunOutput {
            series: MetricSeries::new(run, rewards),
            snapshots,
        });
    }
    let mut env = build_environment(cfg)?;
    let mut agents = build_agents(cfg, run)?;
    let mut env_rng = RandomSource::new(cfg.seed, &format!("run{run}/env"));
    let rewards = run_episodes(env.as_mut(), &mut agents, cfg.episodes, &mut env_rng)?;
    let snapshots = if keep_snapshot {
        agents.iter().map(|a| a.snapshot()).collect()
    } else {
        Vec::new()
    };
    Ok(RunOutput {
        series: MetricSeries::new(run, rewards),
        snapshots,
    })
}

/// Runs all `cfg.runs` runs on a dedicated pool and returns them in run
/// order. Only run 0 keeps snapshots, and only if `keep_snapshot`.
pub fn run_experiment_detailed(
    cfg: &ExperimentConfig,
    keep_snapshot: bool,
) -> Result<Vec<RunOutput>> {
    cfg.validate()?;
    let pool = rayon::ThreadPoolBuilder::new()
        .num_threads(cfg.threads.unwrap_or(0))
        .build()
        .map_err(|e| Error::Config(format!("cannot build thread pool: {e}")))?;
    pool.install(|| {
        (0..cfg.runs)
            .into_par_iter()
            .map(|r| {
                let out = run_single(cfg, r, keep_snapshot && r == 0)?;
                log::info!("run {r} finished ({} episodes)", out.series.rewards.len());
                Ok(out)
            })
            .collect()
    })
}

pub fn run_experiment(cfg: &ExperimentConfig) -> Result<Vec<MetricSeries>> {
    Ok(run_experiment_detailed(cfg, false)?
        .into_iter()
        .map(|o| o.series)
        .collect())
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::harness::config::ConfigBuilder;

    fn cfg(pairs: &[&str]) -> ExperimentConfig {
        let mut b = ConfigBuilder::new();
        for p in pairs {
            b.assign(p).unwrap();
        }
        b.build().unwrap()
    }

    #[test]
    fn matrix_runs_have_one_reward_per_episode() {
        let c = cfg(&["game=cg", "episodes=300", "runs=2"]);
        let s = run_experiment(&c).unwrap();
        assert_eq!(s.len(), 2);
        assert!(s.iter().all(|r| r.rewards.len() == 300));
        assert_eq!(s[1].run, 1);
        assert_ne!(s[0].rewards, s[1].rewards);
    }

    #[test]
    fn every_algorithm_runs() {
        for algo in [
            "scc_rfmq",
            "rfmq",
            "smc",
            "smc_rfmq",
            "cala",
            "scc_rfmq,smc",
        ] {
            let c = cfg(&[
                "game=pscg",
                "episodes=200",
                "runs=1",
                &format!("algo={algo}"),
            ]);
            let s = run_experiment(&c).unwrap();
            assert_eq!(s[0].rewards.len(), 200, "{algo}");
            assert!(
                s[0].rewards.iter().all(|r| (-30.0..=14.0).contains(r)),
                "{algo}"
            );
        }
    }

    #[test]
    fn boat_rewards_are_bounded() {
        for extra in [
            vec!["algo=scc_rfmq", "samples=5"],
            vec!["agents=1", "algo=smc", "samples=3"],
        ] {
            let mut pairs = vec!["game=boat", "episodes=20", "runs=1"];
            pairs.extend(extra);
            let s = run_experiment(&cfg(&pairs)).unwrap();
            // Quay reward is at most 20; time penalty at most 0.1 x 200.
            assert!(s[0].rewards.iter().all(|r| (-20.0..=20.0).contains(r)));
        }
    }

    #[test]
    fn seeded_runs_are_reproducible() {
        let c = cfg(&["game=cg", "episodes=500", "runs=3", "seed=11"]);
        assert_eq!(run_experiment(&c).unwrap(), run_experiment(&c).unwrap());
    }

    #[test]
    fn snapshot_is_kept_for_first_run_only() {
        let c = cfg(&["game=cg", "episodes=50", "runs=2"]);
        let out = run_experiment_detailed(&c, true).unwrap();
        assert_eq!(out[0].snapshots.len(), 2);
        assert_eq!(out[0].snapshots[0].len(), 10);
        assert!(out[1].snapshots.is_empty());
    }

    #[test]
    fn dimension_mismatch_is_reported() {
        let mut env = MatrixGame::new(MatrixGameSpec::climbing());
        let c = cfg(&["game=cg"]);
        let mut agents = build_agents(&c, 0).unwrap();
        agents.pop();
        let err =
            run_episodes(&mut env, &mut agents, 1, &mut RandomSource::new(0, "e")).unwrap_err();
        assert!(matches!(err, Error::Config(_)));
    }
}
