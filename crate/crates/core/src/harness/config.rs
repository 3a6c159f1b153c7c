//! Run configuration and its flat `key = value` text format.
//!
//! Grammar, one entry per line:
//!
//! ```text
//! line    := blank | comment | entry
//! comment := '#' anything
//! entry   := key '=' value        (surrounding whitespace ignored)
//! ```
//!
//! Keys are the long CLI flag names without dashes in front (`batch-init`,
//! `world-size`, ...). A key may appear at most once per file; command-line
//! values replace file values.

use std::collections::BTreeMap;
use std::fmt::Display;
use std::path::PathBuf;
use std::str::FromStr;

use serde::{Deserialize, Serialize};

use crate::decentral::{Algorithm, TrainConfig};
use crate::envsim::{Env, EnvConfig, EnvKind};
use crate::error::{Error, Result};
use crate::gradient::Estimator;
use crate::policy::{LinearGaussianSpec, MlpSpec, Policy};
use crate::theory::{self, ProblemConstants, TheoryReport};
use crate::topology::{build_graph, metropolis_weights, MixingMatrix, Topology};

pub struct KeySpec {
    pub name: &'static str,
    pub default: Option<&'static str>,
    pub help: &'static str,
}

const fn key(name: &'static str, default: Option<&'static str>, help: &'static str) -> KeySpec {
    KeySpec { name, default, help }
}

/// Every accepted key. `None` defaults mark required keys, except for the
/// optional theory overrides `c-g` and `c-h`.
pub const KEYS: &[KeySpec] = &[
    key("algo", None, "training algorithm: dpg, mdpg or mdpgt"),
    key("env", None, "environment: lineworld or gridworld"),
    key("episodes", None, "iterations K (one joint episode each)"),
    key("agents", Some("5"), "number of agents N"),
    key("world-size", Some("5"), "lineworld half-width or gridworld side"),
    key("horizon", Some("100"), "episode length H"),
    key("gamma", Some("0.99"), "discount factor"),
    key("collision-penalty", Some("1"), "reward penalty for a collision"),
    key("reward-scale", Some("1"), "multiplier applied to every reward"),
    key("layout-seed", Some("0"), "seed of the fixed gridworld goal layout"),
    key("topology", Some("full"), "full, ring, bipartite or a JSON edge list"),
    key("policy", Some("mlp"), "mlp (categorical) or gaussian (lineworld only)"),
    key("hidden", Some("64,64"), "MLP hidden widths"),
    key("xi", Some("1"), "gaussian policy standard deviation"),
    key("feature-clip", Some("10"), "gaussian feature norm bound C_f"),
    key("action-clip", Some("1"), "gaussian action bound C_a"),
    key("eta", Some("3e-5"), "step size"),
    key("beta", Some("0.5"), "momentum coefficient in (0, 1]"),
    key(
        "batch-init",
        Some("1"),
        "trajectories per agent for the initial surrogate",
    ),
    key("estimator", Some("pgt"), "gradient estimator: pgt or reinforce"),
    key("schedule", Some("manual"), "manual, corollary1 or corollary2"),
    key("seed", Some("0"), "root seed, or a comma-separated list of seeds"),
    key("out", Some("out"), "output directory"),
    key("is-variance-bound", Some("1"), "importance-weight variance bound M"),
    key("x-max", Some("10"), "parameter norm bound for gaussian score constants"),
    key(
        "c-g",
        None,
        "score norm bound C_g (default: derived for gaussian, 1 for mlp)",
    ),
    key(
        "c-h",
        None,
        "score Hessian bound C_h (default: derived for gaussian, 1 for mlp)",
    ),
];

const REQUIRED: [&str; 3] = ["algo", "env", "episodes"];

pub fn is_known_key(name: &str) -> bool {
    KEYS.iter().any(|k| k.name == name)
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum ScheduleKind {
    Manual,
    Corollary1,
    Corollary2,
}

impl FromStr for ScheduleKind {
    type Err = String;
    fn from_str(s: &str) -> Result<Self, Self::Err> {
        match s {
            "manual" => Ok(ScheduleKind::Manual),
            "corollary1" => Ok(ScheduleKind::Corollary1),
            "corollary2" => Ok(ScheduleKind::Corollary2),
            other => Err(format!("expected manual, corollary1 or corollary2, got `{other}`")),
        }
    }
}

impl std::fmt::Display for ScheduleKind {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.write_str(match self {
            ScheduleKind::Manual => "manual",
            ScheduleKind::Corollary1 => "corollary1",
            ScheduleKind::Corollary2 => "corollary2",
        })
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum PolicyChoice {
    Mlp {
        hidden: [usize; 2],
    },
    Gaussian {
        xi: f64,
        feature_clip: f64,
        action_clip: f64,
    },
}

/// Inputs to the theory report that the environment does not determine.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct TheoryInputs {
    pub is_variance_bound: f64,
    pub x_max: f64,
    pub c_g: Option<f64>,
    pub c_h: Option<f64>,
}

/// Fully resolved run configuration.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RunConfig {
    pub algo: Algorithm,
    pub env: EnvConfig,
    pub topology: Topology,
    pub policy: PolicyChoice,
    pub eta: f64,
    pub beta: f64,
    pub batch_init: usize,
    pub episodes: usize,
    pub estimator: Estimator,
    pub schedule: ScheduleKind,
    pub seeds: Vec<u64>,
    pub out: PathBuf,
    pub theory: TheoryInputs,
}

/// Splits config text into `(key, value)` pairs, rejecting unknown and
/// repeated keys.
pub fn parse_kv(text: &str) -> Result<Vec<(String, String)>> {
    let mut seen = BTreeMap::new();
    let mut out = Vec::new();
    for (idx, raw) in text.lines().enumerate() {
        let line_no = idx + 1;
        let line = raw.trim();
        if line.is_empty() || line.starts_with('#') {
            continue;
        }
        let Some((k, v)) = line.split_once('=') else {
            return Err(Error::Syntax {
                line: line_no,
                detail: format!("expected `key = value`, got `{line}`"),
            });
        };
        let (k, v) = (k.trim(), v.trim());
        if k.is_empty() {
            return Err(Error::Syntax {
                line: line_no,
                detail: "empty key".into(),
            });
        }
        if !is_known_key(k) {
            return Err(Error::UnknownKey(k.to_string()));
        }
        if let Some(first) = seen.insert(k.to_string(), line_no) {
            return Err(Error::Syntax {
                line: line_no,
                detail: format!("key `{k}` already set on line {first}"),
            });
        }
        out.push((k.to_string(), v.to_string()));
    }
    Ok(out)
}

/// Resolves a config from optional file text plus command-line overrides.
pub fn parse_config(file: Option<&str>, overrides: &[(String, String)]) -> Result<RunConfig> {
    let mut pairs: BTreeMap<String, String> = BTreeMap::new();
    if let Some(text) = file {
        pairs.extend(parse_kv(text)?);
    }
    for (k, v) in overrides {
        if !is_known_key(k) {
            return Err(Error::UnknownKey(k.clone()));
        }
        pairs.insert(k.clone(), v.clone());
    }
    RunConfig::from_pairs(&pairs)
}

fn parse_value<T>(key: &str, raw: &str) -> Result<T>
where
    T: FromStr,
    T::Err: Display,
{
    raw.parse().map_err(|e: T::Err| Error::BadValue {
        key: key.into(),
        value: raw.into(),
        detail: e.to_string(),
    })
}

fn out_of_range(key: &str, detail: impl Into<String>) -> Error {
    Error::OutOfRange {
        key: key.into(),
        detail: detail.into(),
    }
}

struct Lookup<'a>(&'a BTreeMap<String, String>);

impl Lookup<'_> {
    fn raw(&self, key: &str) -> Result<&str> {
        if let Some(v) = self.0.get(key) {
            return Ok(v);
        }
        KEYS.iter()
            .find(|k| k.name == key)
            .and_then(|k| k.default)
            .ok_or_else(|| Error::MissingKey(key.into()))
    }

    fn get<T>(&self, key: &str) -> Result<T>
    where
        T: FromStr,
        T::Err: Display,
    {
        parse_value(key, self.raw(key)?)
    }

    fn optional<T>(&self, key: &str) -> Result<Option<T>>
    where
        T: FromStr,
        T::Err: Display,
    {
        self.0.get(key).map(|v| parse_value(key, v)).transpose()
    }

    fn positive(&self, key: &str) -> Result<f64> {
        let v: f64 = self.get(key)?;
        if !(v.is_finite() && v > 0.0) {
            return Err(out_of_range(key, format!("must be positive and finite, got {v}")));
        }
        Ok(v)
    }

    fn count(&self, key: &str, min: usize) -> Result<usize> {
        let v: usize = self.get(key)?;
        if v < min {
            return Err(out_of_range(key, format!("must be at least {min}, got {v}")));
        }
        Ok(v)
    }

    fn list<T>(&self, key: &str) -> Result<Vec<T>>
    where
        T: FromStr,
        T::Err: Display,
    {
        self.raw(key)?
            .split(',')
            .map(|part| parse_value(key, part.trim()))
            .collect()
    }
}

impl RunConfig {
    pub fn from_pairs(pairs: &BTreeMap<String, String>) -> Result<Self> {
        for k in pairs.keys() {
            if !is_known_key(k) {
                return Err(Error::UnknownKey(k.clone()));
            }
        }
        for k in REQUIRED {
            if !pairs.contains_key(k) {
                return Err(Error::MissingKey(k.into()));
            }
        }
        let l = Lookup(pairs);

        let kind: EnvKind = l.get("env")?;
        let gamma: f64 = l.get("gamma")?;
        if !(gamma > 0.0 && gamma < 1.0) {
            return Err(out_of_range("gamma", format!("must lie in (0, 1), got {gamma}")));
        }
        let collision_penalty: f64 = l.get("collision-penalty")?;
        if !(collision_penalty.is_finite() && collision_penalty >= 0.0) {
            return Err(out_of_range("collision-penalty", "must be finite and non-negative"));
        }
        let reward_scale: f64 = l.get("reward-scale")?;
        if !reward_scale.is_finite() {
            return Err(out_of_range("reward-scale", "must be finite"));
        }
        let env = EnvConfig {
            kind,
            n_agents: l.count("agents", 1)?,
            world_size: l.count("world-size", 1)?,
            horizon: l.count("horizon", 1)?,
            gamma,
            collision_penalty,
            reward_scale,
            seed: l.get("layout-seed")?,
        };
        env.validate().map_err(|e| match e {
            Error::InvalidEnv(detail) => out_of_range("world-size", detail),
            other => other,
        })?;

        let policy = match l.raw("policy")? {
            "mlp" => {
                let hidden: Vec<usize> = l.list("hidden")?;
                let [a, b] = hidden[..] else {
                    return Err(out_of_range("hidden", "expected exactly two widths"));
                };
                if a == 0 || b == 0 {
                    return Err(out_of_range("hidden", "widths must be positive"));
                }
                PolicyChoice::Mlp { hidden: [a, b] }
            }
            "gaussian" => {
                if kind != EnvKind::Lineworld {
                    return Err(out_of_range("policy", "gaussian policies act on lineworld only"));
                }
                PolicyChoice::Gaussian {
                    xi: l.positive("xi")?,
                    feature_clip: l.positive("feature-clip")?,
                    action_clip: l.positive("action-clip")?,
                }
            }
            other => {
                return Err(Error::BadValue {
                    key: "policy".into(),
                    value: other.into(),
                    detail: "expected mlp or gaussian".into(),
                })
            }
        };

        let beta: f64 = l.get("beta")?;
        if !(beta > 0.0 && beta <= 1.0) {
            return Err(out_of_range("beta", format!("must lie in (0, 1], got {beta}")));
        }
        let seeds: Vec<u64> = l.list("seed")?;
        let x_max: f64 = l.get("x-max")?;
        if !(x_max.is_finite() && x_max >= 0.0) {
            return Err(out_of_range("x-max", "must be finite and non-negative"));
        }
        let theory = TheoryInputs {
            is_variance_bound: l.positive("is-variance-bound")?,
            x_max,
            c_g: l.optional("c-g")?,
            c_h: l.optional("c-h")?,
        };
        for (k, v) in [("c-g", theory.c_g), ("c-h", theory.c_h)] {
            if v.is_some_and(|v| !(v.is_finite() && v > 0.0)) {
                return Err(out_of_range(k, "must be positive and finite"));
            }
        }

        let mut cfg = RunConfig {
            algo: l.get("algo")?,
            env,
            topology: l.get("topology")?,
            policy,
            eta: l.positive("eta")?,
            beta,
            batch_init: l.count("batch-init", 1)?,
            episodes: l.count("episodes", 2)?,
            estimator: l.get("estimator")?,
            schedule: l.get("schedule")?,
            seeds,
            out: PathBuf::from(l.raw("out")?),
            theory,
        };
        // Fails early on bad topologies.
        cfg.mixing()?;
        if cfg.schedule != ScheduleKind::Manual {
            for k in ["eta", "beta", "batch-init"] {
                if pairs.contains_key(k) {
                    log::warn!("`{k}` is replaced by the {} schedule", cfg.schedule);
                }
            }
            cfg.apply_schedule()?;
        }
        Ok(cfg)
    }

    /// Overwrites `eta`, `beta` and `batch_init` from the selected schedule.
    /// A schedule momentum of 1 or more is capped at 1.
    fn apply_schedule(&mut self) -> Result<()> {
        let pc = self.problem_constants()?;
        pc.validate()?;
        let dc = theory::derive_constants(&pc);
        let s = match self.schedule {
            ScheduleKind::Manual => return Ok(()),
            ScheduleKind::Corollary1 => theory::corollary1_schedule(&dc, pc.lambda, pc.n_agents, self.episodes)?,
            ScheduleKind::Corollary2 => theory::corollary2_schedule(&dc, pc.lambda, pc.n_agents, self.episodes)?,
        };
        if s.beta >= 1.0 {
            log::warn!("schedule momentum {} capped at 1", s.beta);
        }
        self.eta = s.eta;
        self.beta = s.beta.min(1.0);
        self.batch_init = s.batch;
        Ok(())
    }

    /// Inverse of [`parse_config`]: every key with its resolved value.
    /// Schedule-derived values are left for the schedule to recompute.
    pub fn to_pairs(&self) -> Vec<(String, String)> {
        let mut p: Vec<(&str, String)> = vec![
            ("algo", self.algo.to_string()),
            ("env", self.env.kind.to_string()),
            ("episodes", self.episodes.to_string()),
            ("agents", self.env.n_agents.to_string()),
            ("world-size", self.env.world_size.to_string()),
            ("horizon", self.env.horizon.to_string()),
            ("gamma", self.env.gamma.to_string()),
            ("collision-penalty", self.env.collision_penalty.to_string()),
            ("reward-scale", self.env.reward_scale.to_string()),
            ("layout-seed", self.env.seed.to_string()),
            ("topology", self.topology.to_string()),
        ];
        match self.policy {
            PolicyChoice::Mlp { hidden } => {
                p.push(("policy", "mlp".into()));
                p.push(("hidden", format!("{},{}", hidden[0], hidden[1])));
            }
            PolicyChoice::Gaussian {
                xi,
                feature_clip,
                action_clip,
            } => {
                p.push(("policy", "gaussian".into()));
                p.push(("xi", xi.to_string()));
                p.push(("feature-clip", feature_clip.to_string()));
                p.push(("action-clip", action_clip.to_string()));
            }
        }
        if self.schedule == ScheduleKind::Manual {
            p.push(("eta", self.eta.to_string()));
            p.push(("beta", self.beta.to_string()));
            p.push(("batch-init", self.batch_init.to_string()));
        }
        p.push(("estimator", self.estimator.to_string()));
        p.push(("schedule", self.schedule.to_string()));
        let seeds: Vec<String> = self.seeds.iter().map(u64::to_string).collect();
        p.push(("seed", seeds.join(",")));
        p.push(("out", self.out.display().to_string()));
        p.push(("is-variance-bound", self.theory.is_variance_bound.to_string()));
        p.push(("x-max", self.theory.x_max.to_string()));
        if let Some(c) = self.theory.c_g {
            p.push(("c-g", c.to_string()));
        }
        if let Some(c) = self.theory.c_h {
            p.push(("c-h", c.to_string()));
        }
        p.into_iter().map(|(k, v)| (k.to_string(), v)).collect()
    }

    pub fn to_file_string(&self) -> String {
        self.to_pairs()
            .into_iter()
            .map(|(k, v)| format!("{k} = {v}\n"))
            .collect()
    }

    pub fn build_env(&self) -> Result<Env> {
        Env::new(self.env)
    }

    pub fn build_policy(&self) -> Policy {
        match self.policy {
            PolicyChoice::Mlp { hidden } => Policy::MlpCategorical(MlpSpec {
                input_dim: self.env.obs_dim(),
                hidden,
                actions: self.env.kind.discrete_actions(),
            }),
            PolicyChoice::Gaussian {
                xi,
                feature_clip,
                action_clip,
            } => Policy::LinearGaussian(LinearGaussianSpec {
                feature_dim: self.env.obs_dim(),
                xi,
                feature_clip,
                action_clip,
            }),
        }
    }

    pub fn mixing(&self) -> Result<MixingMatrix> {
        Ok(metropolis_weights(&build_graph(&self.topology, self.env.n_agents)?))
    }

    pub fn train_config(&self, seed: u64) -> TrainConfig {
        TrainConfig {
            algo: self.algo,
            eta: self.eta,
            beta: self.beta,
            batch_init: self.batch_init,
            estimator: self.estimator,
            seed,
        }
    }

    /// Constants of the analysis for this setup. Score bounds come from
    /// `c-g`/`c-h` when given, from the gaussian closed forms otherwise, and
    /// default to 1 for the MLP, which has no closed form.
    pub fn problem_constants(&self) -> Result<ProblemConstants> {
        let (c_g, c_h) = match (self.build_policy(), self.theory.c_g, self.theory.c_h) {
            (_, Some(g), Some(h)) => (g, h),
            (Policy::LinearGaussian(spec), g, h) => {
                let (dg, dh) = crate::policy::score_bounds(&spec, self.theory.x_max);
                (g.unwrap_or(dg), h.unwrap_or(dh))
            }
            (Policy::MlpCategorical(_), g, h) => (g.unwrap_or(1.0), h.unwrap_or(1.0)),
        };
        Ok(ProblemConstants {
            c_g,
            c_h,
            r: self.env.reward_bound(),
            gamma: self.env.gamma,
            horizon: self.env.horizon,
            m: self.theory.is_variance_bound,
            n_agents: self.env.n_agents,
            lambda: self.mixing()?.lambda(),
        })
    }

    pub fn theory_report(&self) -> Result<TheoryReport> {
        theory::report(&self.problem_constants()?, self.eta, self.beta, self.episodes)
    }
}
