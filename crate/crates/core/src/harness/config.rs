//! Experiment configuration.
//!
//! Configuration is a flat set of `key=value` pairs, read from a file (one
//! pair per line, `#` starts a comment) and/or command-line flags. Unknown
//! keys are rejected. Unset keys take game-dependent defaults.

use std::collections::BTreeMap;
use std::fmt;
use std::path::{Path, PathBuf};
use std::str::FromStr;

use crate::baselines::{CalaParams, SmcParams, SmcRfmqParams};
use crate::error::{Error, Result};
use crate::games::{Grid3, DEFAULT_STEP_CAP};
use crate::scc::{HyperParams, InitMode};

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum GameKind {
    Cg,
    Pscg,
    Boat,
    Custom,
}

impl GameKind {
    pub fn is_matrix(self) -> bool {
        !matches!(self, GameKind::Boat)
    }
}

impl FromStr for GameKind {
    type Err = Error;
    fn from_str(s: &str) -> Result<Self> {
        match s {
            "cg" => Ok(GameKind::Cg),
            "pscg" => Ok(GameKind::Pscg),
            "boat" => Ok(GameKind::Boat),
            "custom" | "custom-grid" => Ok(GameKind::Custom),
            other => Err(Error::Config(format!("unknown game '{other}'"))),
        }
    }
}

impl fmt::Display for GameKind {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            GameKind::Cg => "cg",
            GameKind::Pscg => "pscg",
            GameKind::Boat => "boat",
            GameKind::Custom => "custom",
        })
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Algo {
    SccRfmq,
    Rfmq,
    Smc,
    SmcRfmq,
    Cala,
}

impl FromStr for Algo {
    type Err = Error;
    fn from_str(s: &str) -> Result<Self> {
        match s {
            "scc_rfmq" | "scc-rfmq" => Ok(Algo::SccRfmq),
            "rfmq" => Ok(Algo::Rfmq),
            "smc" => Ok(Algo::Smc),
            "smc_rfmq" | "smc-rfmq" => Ok(Algo::SmcRfmq),
            "cala" => Ok(Algo::Cala),
            other => Err(Error::Config(format!("unknown algorithm '{other}'"))),
        }
    }
}

impl fmt::Display for Algo {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            Algo::SccRfmq => "scc_rfmq",
            Algo::Rfmq => "rfmq",
            Algo::Smc => "smc",
            Algo::SmcRfmq => "smc_rfmq",
            Algo::Cala => "cala",
        })
    }
}

/// Every tunable, with defaults already resolved for the chosen game.
#[derive(Debug, Clone, PartialEq)]
pub struct Params {
    pub scc: HyperParams,
    pub smc: SmcParams,
    pub smc_rfmq: SmcRfmqParams,
    pub cala: CalaParams,
    pub step_cap: u32,
    /// Window of the smoothed per-episode reward curve.
    pub window: usize,
    pub colormap_resolution: usize,
}

#[derive(Debug, Clone, PartialEq)]
pub struct ExperimentConfig {
    pub game: GameKind,
    pub grid: Option<Grid3>,
    pub grid_alt: Option<Grid3>,
    /// One algorithm per agent.
    pub algos: Vec<Algo>,
    pub agents: usize,
    pub episodes: u64,
    pub runs: usize,
    pub seed: u64,
    /// Samples per state (per action dimension for a joint SMC controller).
    pub samples: usize,
    pub params: Params,
    pub out: Option<PathBuf>,
    /// Worker threads for the run executor; `None` uses rayon's default.
    pub threads: Option<usize>,
}

const KEYS: &[&str] = &[
    "game",
    "algo",
    "agents",
    "episodes",
    "runs",
    "seed",
    "samples",
    "out",
    "threads",
    "grid",
    "grid_alt",
    "alpha",
    "alpha_f",
    "gamma",
    "c",
    "sigma0",
    "delta_d",
    "delta_l",
    "delta_re",
    "eq_tol",
    "init",
    "smc_threshold",
    "smc_tau0",
    "smc_tau_decay",
    "smc_tau_period",
    "bandwidth_floor",
    "smc_rfmq_tau0",
    "smc_rfmq_tau_period",
    "cala_lambda",
    "cala_sigma_l",
    "cala_k",
    "cala_mu0",
    "cala_s0",
    "step_cap",
    "window",
    "colormap_resolution",
];

/// Accumulates raw `key=value` pairs; later assignments win.
#[derive(Debug, Clone, Default)]
pub struct ConfigBuilder {
    values: BTreeMap<String, String>,
}

impl ConfigBuilder {
    pub fn new() -> Self {
        Self::default()
    }

    pub fn set(&mut self, key: &str, value: impl Into<String>) -> Result<&mut Self> {
        let key = key.trim();
        if !KEYS.contains(&key) {
            return Err(Error::Config(format!("unknown configuration key '{key}'")));
        }
        self.values
            .insert(key.to_string(), value.into().trim().to_string());
        Ok(self)
    }

    /// Parses a single `key=value` assignment.
    pub fn assign(&mut self, pair: &str) -> Result<&mut Self> {
        let (k, v) = pair
            .split_once('=')
            .ok_or_else(|| Error::Config(format!("expected key=value, got '{pair}'")))?;
        self.set(k, v)
    }

    pub fn parse_text(&mut self, text: &str) -> Result<&mut Self> {
        for (lineno, line) in text.lines().enumerate() {
            let line = line.split('#').next().unwrap_or("").trim();
            if line.is_empty() {
                continue;
            }
            self.assign(line)
                .map_err(|e| Error::Config(format!("line {}: {e}", lineno + 1)))?;
        }
        Ok(self)
    }

    pub fn read_file(&mut self, path: &Path) -> Result<&mut Self> {
        let text = std::fs::read_to_string(path).map_err(|e| Error::io(path, e))?;
        self.parse_text(&text)
    }

    fn get<T: FromStr>(&self, key: &str) -> Result<Option<T>>
    where
        T::Err: fmt::Display,
    {
        self.values
            .get(key)
            .map(|v| {
                v.parse::<T>()
                    .map_err(|e| Error::Config(format!("invalid value '{v}' for '{key}': {e}")))
            })
            .transpose()
    }

    fn get_or<T: FromStr>(&self, key: &str, default: T) -> Result<T>
    where
        T::Err: fmt::Display,
    {
        Ok(self.get(key)?.unwrap_or(default))
    }

    pub fn build(&self) -> Result<ExperimentConfig> {
        let game: GameKind = self
            .get("game")?
            .ok_or_else(|| Error::Config("'game' is required".into()))?;
        let agents: usize = self.get_or("agents", 2)?;
        if !(1..=2).contains(&agents) {
            return Err(Error::Config(format!(
                "agents must be 1 or 2, got {agents}"
            )));
        }

        let algos = match self.values.get("algo") {
            Some(list) => list
                .split(',')
                .map(|a| a.trim().parse())
                .collect::<Result<Vec<Algo>>>()?,
            None => vec![Algo::SccRfmq],
        };
        let algos = match algos.len() {
            1 => vec![algos[0]; agents],
            n if n == agents => algos,
            n => {
                return Err(Error::Config(format!(
                    "{n} algorithms given for {agents} agents"
                )))
            }
        };

        let matrix = game.is_matrix();
        let episodes = self.get_or("episodes", if matrix { 80_000 } else { 800_000 })?;
        let runs = self.get_or("runs", if matrix { 50 } else { 10 })?;

        let defaults = HyperParams::default();
        let scc = HyperParams {
            alpha: self.get_or("alpha", defaults.alpha)?,
            alpha_f: self.get_or("alpha_f", defaults.alpha_f)?,
            gamma: self.get_or("gamma", defaults.gamma)?,
            resample_period: self.get_or("c", defaults.resample_period)?,
            sigma0: self.get_or("sigma0", defaults.sigma0)?,
            delta_d: self.get_or("delta_d", defaults.delta_d)?,
            delta_l: self.get_or("delta_l", defaults.delta_l)?,
            delta_re: self.get_or("delta_re", defaults.delta_re)?,
            eq_tol: self.get_or("eq_tol", defaults.eq_tol)?,
            init: match self.values.get("init").map(String::as_str) {
                None | Some("even") => InitMode::Even,
                Some("uniform") => InitMode::Uniform,
                Some(other) => {
                    return Err(Error::Config(format!(
                        "init must be 'even' or 'uniform', got '{other}'"
                    )))
                }
            },
        };

        let smc_base = if matrix {
            SmcParams::matrix()
        } else {
            SmcParams::boat(agents == 1)
        };
        let smc = SmcParams {
            alpha: scc.alpha,
            gamma: scc.gamma,
            threshold: self.get_or("smc_threshold", smc_base.threshold)?,
            tau0: self.get_or("smc_tau0", smc_base.tau0)?,
            tau_decay: self.get_or("smc_tau_decay", smc_base.tau_decay)?,
            tau_period: self.get_or("smc_tau_period", smc_base.tau_period)?,
            bandwidth_floor: self.get_or("bandwidth_floor", smc_base.bandwidth_floor)?,
        };
        let hybrid_base = SmcRfmqParams::default();
        let smc_rfmq = SmcRfmqParams {
            rfmq: scc.clone(),
            tau0: self.get_or("smc_rfmq_tau0", hybrid_base.tau0)?,
            tau_decay: smc.tau_decay,
            tau_period: self.get_or("smc_rfmq_tau_period", hybrid_base.tau_period)?,
            bandwidth_floor: smc.bandwidth_floor,
        };
        let cala_base = CalaParams::default();
        let cala = CalaParams {
            lambda: self.get_or("cala_lambda", cala_base.lambda)?,
            sigma_l: self.get_or("cala_sigma_l", cala_base.sigma_l)?,
            k: self.get_or("cala_k", cala_base.k)?,
            mu0: self.get_or("cala_mu0", cala_base.mu0)?,
            s0: self.get_or("cala_s0", scc.sigma0)?,
        };

        let cfg = ExperimentConfig {
            game,
            grid: self.get_grid("grid")?,
            grid_alt: self.get_grid("grid_alt")?,
            algos,
            agents,
            episodes,
            runs,
            seed: self.get_or("seed", 0)?,
            samples: self.get_or("samples", 10)?,
            params: Params {
                scc,
                smc,
                smc_rfmq,
                cala,
                step_cap: self.get_or("step_cap", DEFAULT_STEP_CAP)?,
                window: self.get_or("window", 1000)?,
                colormap_resolution: self.get_or("colormap_resolution", 101)?,
            },
            out: self.get::<String>("out")?.map(PathBuf::from),
            threads: self.get("threads")?,
        };
        cfg.validate()?;
        Ok(cfg)
    }

    fn get_grid(&self, key: &str) -> Result<Option<Grid3>> {
        let Some(raw) = self.values.get(key) else {
            return Ok(None);
        };
        let vals = raw
            .split(',')
            .map(|v| v.trim().parse::<f64>())
            .collect::<std::result::Result<Vec<_>, _>>()
            .map_err(|e| Error::Config(format!("invalid '{key}': {e}")))?;
        if vals.len() != 9 {
            return Err(Error::Config(format!(
                "'{key}' needs 9 comma-separated values (row-major), got {}",
                vals.len()
            )));
        }
        let mut g = [[0.0; 3]; 3];
        for (i, v) in vals.into_iter().enumerate() {
            g[i / 3][i % 3] = v;
        }
        Ok(Some(g))
    }
}

/// Loads a configuration file (optional) and applies `overrides` on top.
pub fn load_config(
    path: Option<&Path>,
    overrides: &[(String, String)],
) -> Result<ExperimentConfig> {
    let mut b = ConfigBuilder::new();
    if let Some(p) = path {
        b.read_file(p)?;
    }
    for (k, v) in overrides {
        b.set(k, v.clone())?;
    }
    b.build()
}

impl ExperimentConfig {
    /// Resolved defaults for `game` with no other settings.
    pub fn defaults_for(game: GameKind) -> Result<Self> {
        let mut b = ConfigBuilder::new();
        b.set("game", game.to_string())?;
        if game == GameKind::Custom {
            b.set("grid", "0,0,0,0,0,0,0,0,0")?;
        }
        b.build()
    }

    pub fn validate(&self) -> Result<()> {
        if self.episodes == 0 {
            return Err(Error::Config("episodes must be at least 1".into()));
        }
        if self.runs == 0 {
            return Err(Error::Config("runs must be at least 1".into()));
        }
        if self.samples == 0 {
            return Err(Error::Config("samples must be at least 1".into()));
        }
        if self.threads == Some(0) {
            return Err(Error::Config("threads must be at least 1".into()));
        }
        if self.algos.len() != self.agents {
            return Err(Error::Config("one algorithm per agent required".into()));
        }
        let any_cala = self.algos.contains(&Algo::Cala);
        if any_cala && !self.game.is_matrix() {
            return Err(Error::Config(
                "cala only runs on single-state games (cg, pscg, custom)".into(),
            ));
        }
        if any_cala && self.algos.iter().any(|a| *a != Algo::Cala) {
            return Err(Error::Config(
                "cala cannot be mixed with other learners".into(),
            ));
        }
        if self.agents == 1 && self.algos[0] != Algo::Smc {
            return Err(Error::Config(
                "a single joint controller is only supported for smc".into(),
            ));
        }
        if self.algos.contains(&Algo::SccRfmq) && self.samples < 3 {
            return Err(Error::Config(format!(
                "scc_rfmq needs at least 3 samples, got {}",
                self.samples
            )));
        }
        if self.game == GameKind::Custom && self.grid.is_none() {
            return Err(Error::Config("custom game requires 'grid'".into()));
        }
        if self.params.window == 0 {
            return Err(Error::Config("window must be at least 1".into()));
        }
        if self.params.colormap_resolution < 2 {
            return Err(Error::Config(
                "colormap_resolution must be at least 2".into(),
            ));
        }
        self.params.scc.validate()?;
        self.params.smc.validate()?;
        Ok(())
    }

    /// Flat `key=value` rendering that round-trips through [`ConfigBuilder`].
    pub fn to_pairs(&self) -> Vec<(String, String)> {
        let p = &self.params;
        let grid = |g: &Grid3| {
            g.iter()
                .flatten()
                .map(|v| v.to_string())
                .collect::<Vec<_>>()
                .join(",")
        };
        let mut out = vec![
            ("game", self.game.to_string()),
            (
                "algo",
                self.algos
                    .iter()
                    .map(|a| a.to_string())
                    .collect::<Vec<_>>()
                    .join(","),
            ),
            ("agents", self.agents.to_string()),
            ("episodes", self.episodes.to_string()),
            ("runs", self.runs.to_string()),
            ("seed", self.seed.to_string()),
            ("samples", self.samples.to_string()),
            ("alpha", p.scc.alpha.to_string()),
            ("alpha_f", p.scc.alpha_f.to_string()),
            ("gamma", p.scc.gamma.to_string()),
            ("c", p.scc.resample_period.to_string()),
            ("sigma0", p.scc.sigma0.to_string()),
            ("delta_d", p.scc.delta_d.to_string()),
            ("delta_l", p.scc.delta_l.to_string()),
            ("delta_re", p.scc.delta_re.to_string()),
            ("eq_tol", p.scc.eq_tol.to_string()),
            (
                "init",
                match p.scc.init {
                    InitMode::Even => "even".to_string(),
                    InitMode::Uniform => "uniform".to_string(),
                },
            ),
            ("smc_threshold", p.smc.threshold.to_string()),
            ("smc_tau0", p.smc.tau0.to_string()),
            ("smc_tau_decay", p.smc.tau_decay.to_string()),
            ("smc_tau_period", p.smc.tau_period.to_string()),
            ("bandwidth_floor", p.smc.bandwidth_floor.to_string()),
            ("smc_rfmq_tau0", p.smc_rfmq.tau0.to_string()),
            ("smc_rfmq_tau_period", p.smc_rfmq.tau_period.to_string()),
            ("cala_lambda", p.cala.lambda.to_string()),
            ("cala_sigma_l", p.cala.sigma_l.to_string()),
            ("cala_k", p.cala.k.to_string()),
            ("cala_mu0", p.cala.mu0.to_string()),
            ("cala_s0", p.cala.s0.to_string()),
            ("step_cap", p.step_cap.to_string()),
            ("window", p.window.to_string()),
            ("colormap_resolution", p.colormap_resolution.to_string()),
        ];
        if let Some(g) = &self.grid {
            out.push(("grid", grid(g)));
        }
        if let Some(g) = &self.grid_alt {
            out.push(("grid_alt", grid(g)));
        }
        if let Some(t) = self.threads {
            out.push(("threads", t.to_string()));
        }
        if let Some(o) = &self.out {
            out.push(("out", o.display().to_string()));
        }
        out.into_iter().map(|(k, v)| (k.to_string(), v)).collect()
    }
}
