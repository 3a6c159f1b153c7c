//! Decentralized training loops: DPG, MDPG and MDPGT.
//!
//! Iteration 0 samples the initialization batch at the common `x₀`, builds
//! `u₀` and produces `x₁`. Every later iteration `k` samples one joint episode
//! under `x_k`, refreshes each agent's surrogate and gossips to `x_{k+1}`.
//! Updates are ascent steps.

use std::fmt;
use std::str::FromStr;

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::envsim::{rollout, Env, Trajectory};
use crate::error::{Error, Result};
use crate::gradient::{evaluate, init_surrogate, surrogate_update, Estimator, Surrogate, UpdateInfo};
use crate::policy::Policy;
use crate::rng::{self, Purpose};
use crate::topology::{block_mean, consensus_error, MixingMatrix};

/// Parameter norms above this abort the run.
pub const DIVERGENCE_NORM: f64 = 1e6;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Algorithm {
    /// Gossip on plain policy gradients.
    Dpg,
    /// Gossip on the momentum surrogate, no tracker.
    Mdpg,
    /// Gossip with momentum surrogate and gradient tracking.
    Mdpgt,
}

impl fmt::Display for Algorithm {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            Algorithm::Dpg => "dpg",
            Algorithm::Mdpg => "mdpg",
            Algorithm::Mdpgt => "mdpgt",
        })
    }
}

impl FromStr for Algorithm {
    type Err = String;
    fn from_str(s: &str) -> Result<Self, Self::Err> {
        match s {
            "dpg" => Ok(Algorithm::Dpg),
            "mdpg" => Ok(Algorithm::Mdpg),
            "mdpgt" => Ok(Algorithm::Mdpgt),
            other => Err(format!("expected dpg, mdpg or mdpgt, got `{other}`")),
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct TrainConfig {
    pub algo: Algorithm,
    pub eta: f64,
    /// Ignored by DPG.
    pub beta: f64,
    /// Trajectories per agent used to build `u₀`.
    pub batch_init: usize,
    pub estimator: Estimator,
    pub seed: u64,
}

impl TrainConfig {
    pub fn validate(&self) -> Result<()> {
        if !(self.eta.is_finite() && self.eta > 0.0) {
            return Err(Error::OutOfRange {
                key: "eta".into(),
                detail: format!("step size must be positive and finite, got {}", self.eta),
            });
        }
        if !(self.beta > 0.0 && self.beta <= 1.0) {
            return Err(Error::OutOfRange {
                key: "beta".into(),
                detail: format!("momentum coefficient must lie in (0, 1], got {}", self.beta),
            });
        }
        if self.batch_init == 0 {
            return Err(Error::OutOfRange {
                key: "batch-init".into(),
                detail: "initialization batch needs at least one trajectory".into(),
            });
        }
        Ok(())
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct AgentState {
    pub x: Vec<f64>,
    pub surrogate: Surrogate,
    /// Gradient tracker; stays zero outside MDPGT.
    pub v: Vec<f64>,
}

/// Diagnostics for one iteration.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RunRecord {
    pub k: usize,
    /// Undiscounted episode reward per agent (batch mean at `k = 0`).
    pub rewards: Vec<f64>,
    pub mean_reward: f64,
    /// `‖x_{k+1} − Λx_{k+1}‖²`
    pub consensus_err: f64,
    /// `‖v̄_{k+1} − ū_k‖`; zero for algorithms without a tracker.
    pub tracking_resid: f64,
    /// `‖ū_k‖`
    pub u_norm: f64,
    /// Importance weights clamped this iteration, summed over agents.
    pub clamps: usize,
}

#[derive(Debug, Clone)]
pub struct Swarm {
    env: Env,
    policy: Policy,
    mixing: MixingMatrix,
    cfg: TrainConfig,
    agents: Vec<AgentState>,
    k: usize,
}

fn norm(x: &[f64]) -> f64 {
    x.iter().map(|v| v * v).sum::<f64>().sqrt()
}

fn mean_rows(rows: impl Iterator<Item = Vec<f64>>) -> Vec<f64> {
    block_mean(&rows.collect::<Vec<_>>())
}

impl Swarm {
    /// Every agent starts from the same `x₀`, drawn from the parameter stream.
    pub fn new(env: Env, policy: Policy, mixing: MixingMatrix, cfg: TrainConfig) -> Result<Self> {
        let x0 = policy.init_params(&mut rng::stream(cfg.seed, Purpose::Params, 0, 0));
        Self::with_initial_params(env, policy, mixing, cfg, x0)
    }

    pub fn with_initial_params(
        env: Env,
        policy: Policy,
        mixing: MixingMatrix,
        cfg: TrainConfig,
        x0: Vec<f64>,
    ) -> Result<Self> {
        cfg.validate()?;
        policy.validate()?;
        let n = env.config().n_agents;
        if mixing.n() != n {
            return Err(Error::DimensionMismatch {
                expected: n,
                got: mixing.n(),
            });
        }
        if policy.obs_dim() != env.config().obs_dim() {
            return Err(Error::DimensionMismatch {
                expected: env.config().obs_dim(),
                got: policy.obs_dim(),
            });
        }
        if x0.len() != policy.dim() {
            return Err(Error::DimensionMismatch {
                expected: policy.dim(),
                got: x0.len(),
            });
        }
        if x0.iter().any(|v| !v.is_finite()) {
            return Err(Error::NonFinite("initial parameters"));
        }
        let d = x0.len();
        let agent = AgentState {
            surrogate: Surrogate {
                u: vec![0.0; d],
                u_prev: vec![0.0; d],
                params_prev: x0.clone(),
            },
            v: vec![0.0; d],
            x: x0,
        };
        Ok(Swarm {
            env,
            policy,
            mixing,
            cfg,
            agents: vec![agent; n],
            k: 0,
        })
    }

    pub fn agents(&self) -> &[AgentState] {
        &self.agents
    }

    /// Index of the iteration [`Swarm::advance`] will run next; the agents
    /// currently hold `x_k`.
    pub fn iteration(&self) -> usize {
        self.k
    }

    pub fn config(&self) -> &TrainConfig {
        &self.cfg
    }

    pub fn mixing(&self) -> &MixingMatrix {
        &self.mixing
    }

    pub fn params(&self) -> Vec<Vec<f64>> {
        self.agents.iter().map(|a| a.x.clone()).collect()
    }

    /// Runs iteration `k` and moves the agents to `x_{k+1}`. On error the
    /// swarm is left unchanged.
    pub fn advance(&mut self) -> Result<RunRecord> {
        let (next, mut record) = if self.k == 0 { self.initialize()? } else { self.step()? };
        self.check(&next)?;
        record.consensus_err = consensus_error(&next.iter().map(|a| a.x.clone()).collect::<Vec<_>>());
        self.agents = next;
        self.k += 1;
        Ok(record)
    }

    fn initialize(&self) -> Result<(Vec<AgentState>, RunRecord)> {
        let n = self.agents.len();
        let thetas = self.params();
        let mut batches: Vec<Vec<Trajectory>> = vec![Vec::with_capacity(self.cfg.batch_init); n];
        let mut rewards = vec![0.0; n];
        for m in 0..self.cfg.batch_init {
            let mut stream = rng::stream(self.cfg.seed, Purpose::InitBatch, 0, m as u64);
            for (i, traj) in rollout(&self.env, &self.policy, &thetas, &mut stream)?
                .into_iter()
                .enumerate()
            {
                rewards[i] += traj.total_reward();
                batches[i].push(traj);
            }
        }
        rewards.iter_mut().for_each(|r| *r /= self.cfg.batch_init as f64);
        let surrogates = self
            .agents
            .par_iter()
            .zip(&batches)
            .map(|(a, batch)| init_surrogate(&self.policy, &a.x, batch, self.cfg.estimator))
            .collect::<Result<Vec<_>>>()?;
        let infos = vec![UpdateInfo::default(); n];
        Ok(self.gossip(surrogates, &infos, rewards))
    }

    fn step(&self) -> Result<(Vec<AgentState>, RunRecord)> {
        let thetas = self.params();
        let mut stream = rng::stream(self.cfg.seed, Purpose::Rollout, self.k as u64, 0);
        let trajectories = rollout(&self.env, &self.policy, &thetas, &mut stream)?;
        let rewards = trajectories.iter().map(Trajectory::total_reward).collect();
        let updates = self
            .agents
            .par_iter()
            .zip(&trajectories)
            .map(|(a, traj)| match self.cfg.algo {
                Algorithm::Dpg => {
                    let g = evaluate(traj, &self.policy, &a.x, self.cfg.estimator)?.gradient;
                    let s = Surrogate {
                        u: g,
                        u_prev: a.surrogate.u.clone(),
                        params_prev: a.x.clone(),
                    };
                    Ok((s, UpdateInfo::default()))
                }
                Algorithm::Mdpg | Algorithm::Mdpgt => surrogate_update(
                    &a.surrogate,
                    traj,
                    &self.policy,
                    &a.x,
                    self.cfg.beta,
                    self.cfg.estimator,
                ),
            })
            .collect::<Result<Vec<_>>>()?;
        let (surrogates, infos): (Vec<_>, Vec<_>) = updates.into_iter().unzip();
        Ok(self.gossip(surrogates, &infos, rewards))
    }

    /// Tracker and parameter gossip given the fresh surrogates `u_k`.
    fn gossip(
        &self,
        surrogates: Vec<Surrogate>,
        infos: &[UpdateInfo],
        rewards: Vec<f64>,
    ) -> (Vec<AgentState>, RunRecord) {
        let eta = self.cfg.eta;
        let u_bar = mean_rows(surrogates.iter().map(|s| s.u.clone()));
        let (directions, tracking_resid) = match self.cfg.algo {
            Algorithm::Mdpgt => {
                let v_prev: Vec<Vec<f64>> = self.agents.iter().map(|a| a.v.clone()).collect();
                let v_next: Vec<Vec<f64>> = self
                    .mixing
                    .mix(&v_prev)
                    .into_iter()
                    .zip(&surrogates)
                    .map(|(mixed, s)| {
                        mixed
                            .iter()
                            .zip(&s.u)
                            .zip(&s.u_prev)
                            .map(|((m, u), up)| m + u - up)
                            .collect()
                    })
                    .collect();
                let v_bar = block_mean(&v_next);
                let resid = norm(&v_bar.iter().zip(&u_bar).map(|(a, b)| a - b).collect::<Vec<_>>());
                (v_next, resid)
            }
            Algorithm::Mdpg | Algorithm::Dpg => (surrogates.iter().map(|s| s.u.clone()).collect(), 0.0),
        };
        let stepped: Vec<Vec<f64>> = self
            .agents
            .iter()
            .zip(&directions)
            .map(|(a, d)| a.x.iter().zip(d).map(|(x, d)| x + eta * d).collect())
            .collect();
        let x_next = self.mixing.mix(&stepped);
        let keep_tracker = self.cfg.algo == Algorithm::Mdpgt;
        let next = x_next
            .into_iter()
            .zip(surrogates)
            .zip(directions)
            .map(|((x, surrogate), d)| AgentState {
                x,
                v: if keep_tracker { d } else { vec![0.0; surrogate.u.len()] },
                surrogate,
            })
            .collect();
        let mean_reward = rewards.iter().sum::<f64>() / rewards.len() as f64;
        let record = RunRecord {
            k: self.k,
            rewards,
            mean_reward,
            consensus_err: 0.0,
            tracking_resid,
            u_norm: norm(&u_bar),
            clamps: infos.iter().filter(|i| i.clamped).count(),
        };
        (next, record)
    }

    fn check(&self, next: &[AgentState]) -> Result<()> {
        for (i, a) in next.iter().enumerate() {
            let diverged = |reason: String| Error::Diverged {
                iteration: self.k,
                agent: i,
                reason,
            };
            let finite = |v: &[f64]| v.iter().all(|x| x.is_finite());
            if !finite(&a.x) || !finite(&a.v) || !finite(&a.surrogate.u) {
                return Err(diverged("non-finite state".into()));
            }
            let n = norm(&a.x);
            if n > DIVERGENCE_NORM {
                return Err(diverged(format!("parameter norm {n} exceeds {DIVERGENCE_NORM}")));
            }
        }
        Ok(())
    }

    /// Runs `iterations` iterations from the current state. Faults inside the
    /// loop end the run early and are returned in [`RunOutput::failure`]
    /// alongside the records produced so far.
    pub fn run(&mut self, iterations: usize) -> Result<RunOutput> {
        if iterations < 2 {
            return Err(Error::OutOfRange {
                key: "episodes".into(),
                detail: format!("need at least 2 iterations, got {iterations}"),
            });
        }
        let n = self.agents.len();
        let (pick_agent, pick_k) = pick_output(self.cfg.seed, n, self.k, iterations);
        let mut records = Vec::with_capacity(iterations);
        let mut output = None;
        let mut failure = None;
        for _ in 0..iterations {
            match self.advance() {
                Ok(record) => records.push(record),
                Err(e) => {
                    log::error!("run aborted at iteration {}: {e}", self.k);
                    failure = Some(e);
                    break;
                }
            }
            if self.k == pick_k {
                output = Some(OutputIterate {
                    agent: pick_agent,
                    k: pick_k,
                    x: self.agents[pick_agent].x.clone(),
                });
            }
        }
        Ok(RunOutput {
            records,
            output,
            last_iterate: self.params(),
            failure,
        })
    }
}

/// Uniform `(agent, k)` over the iterates `x_{start+1} ..= x_{start+iterations}`.
fn pick_output(seed: u64, n: usize, start: usize, iterations: usize) -> (usize, usize) {
    use rand::Rng;
    let mut stream = rng::stream(seed, Purpose::Output, start as u64, 0);
    let flat = stream.random_range(0..n * iterations);
    (flat % n, start + 1 + flat / n)
}

/// The uniformly drawn iterate the convergence guarantee is stated for.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct OutputIterate {
    pub agent: usize,
    pub k: usize,
    pub x: Vec<f64>,
}

#[derive(Debug)]
pub struct RunOutput {
    pub records: Vec<RunRecord>,
    /// `None` only when the run aborted before the drawn iterate was reached.
    pub output: Option<OutputIterate>,
    pub last_iterate: Vec<Vec<f64>>,
    pub failure: Option<Error>,
}
