//! Cooperative navigation environments and joint trajectory sampling.
//!
//! * Lineworld: agents on the integer line `[-S, S]`, all heading for 0,
//!   actions down/stay/up. Agents never share a cell: moves are applied in
//!   agent order and a move into an occupied cell is refused, costing the
//!   mover the collision penalty.
//! * Gridworld: agents on a `size × size` grid, each with its own goal cell,
//!   actions up/down/left/right. Moves are simultaneous; agents that end a
//!   step on a shared cell each pay the collision penalty.
//!
//! Rewards are `-‖pos - goal‖₂` after the move. Observations are every
//! agent's position scaled to `[-1, 1]`, the observing agent first.

use std::fmt;
use std::str::FromStr;

use rand::seq::index;
use rand::Rng;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::policy::{Action, Policy, PolicyParams};
use crate::rng::{self, Purpose};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum EnvKind {
    Lineworld,
    Gridworld,
}

impl fmt::Display for EnvKind {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            EnvKind::Lineworld => "lineworld",
            EnvKind::Gridworld => "gridworld",
        })
    }
}

impl FromStr for EnvKind {
    type Err = String;
    fn from_str(s: &str) -> Result<Self, Self::Err> {
        match s {
            "lineworld" => Ok(EnvKind::Lineworld),
            "gridworld" => Ok(EnvKind::Gridworld),
            other => Err(format!("expected lineworld or gridworld, got `{other}`")),
        }
    }
}

impl EnvKind {
    pub fn discrete_actions(self) -> usize {
        match self {
            EnvKind::Lineworld => 3,
            EnvKind::Gridworld => 4,
        }
    }

    pub fn coords(self) -> usize {
        match self {
            EnvKind::Lineworld => 1,
            EnvKind::Gridworld => 2,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct EnvConfig {
    pub kind: EnvKind,
    pub n_agents: usize,
    /// Lineworld: half-width `S` of `[-S, S]`. Gridworld: side length.
    pub world_size: usize,
    pub horizon: usize,
    pub gamma: f64,
    /// Magnitude of the collision penalty (subtracted from the reward).
    pub collision_penalty: f64,
    /// Multiplies every reward; 0 gives a reward-free environment.
    pub reward_scale: f64,
    /// Seeds the fixed gridworld goal layout.
    pub seed: u64,
}

impl EnvConfig {
    pub fn lineworld(n_agents: usize, half_width: usize, horizon: usize, gamma: f64) -> Self {
        EnvConfig {
            kind: EnvKind::Lineworld,
            n_agents,
            world_size: half_width,
            horizon,
            gamma,
            collision_penalty: 1.0,
            reward_scale: 1.0,
            seed: 0,
        }
    }

    pub fn gridworld(n_agents: usize, side: usize, horizon: usize, gamma: f64) -> Self {
        EnvConfig {
            kind: EnvKind::Gridworld,
            world_size: side,
            ..EnvConfig::lineworld(n_agents, side, horizon, gamma)
        }
    }

    pub fn validate(&self) -> Result<()> {
        if self.n_agents == 0 {
            return Err(Error::TooFewAgents { min: 1, got: 0 });
        }
        if self.horizon == 0 {
            return Err(Error::InvalidEnv("horizon must be at least 1".into()));
        }
        if !(0.0..1.0).contains(&self.gamma) {
            return Err(Error::InvalidEnv(format!(
                "discount must lie in [0, 1), got {}",
                self.gamma
            )));
        }
        let min_size = match self.kind {
            EnvKind::Lineworld => 1,
            EnvKind::Gridworld => 2,
        };
        if self.world_size < min_size {
            return Err(Error::InvalidEnv(format!("world size must be at least {min_size}")));
        }
        if !(self.collision_penalty.is_finite() && self.collision_penalty >= 0.0) {
            return Err(Error::InvalidEnv("collision penalty must be >= 0".into()));
        }
        if !self.reward_scale.is_finite() {
            return Err(Error::InvalidEnv("reward scale must be finite".into()));
        }
        if self.n_agents > self.cells() {
            return Err(Error::WorldTooSmall {
                cells: self.cells(),
                agents: self.n_agents,
            });
        }
        Ok(())
    }

    pub fn cells(&self) -> usize {
        match self.kind {
            EnvKind::Lineworld => 2 * self.world_size + 1,
            EnvKind::Gridworld => self.world_size * self.world_size,
        }
    }

    /// Observation length seen by each agent.
    pub fn obs_dim(&self) -> usize {
        self.n_agents * self.kind.coords()
    }

    /// Bound `R` on `|r|`: the largest possible distance to a goal plus the
    /// collision penalty, scaled.
    pub fn reward_bound(&self) -> f64 {
        let max_dist = match self.kind {
            EnvKind::Lineworld => self.world_size as f64,
            EnvKind::Gridworld => std::f64::consts::SQRT_2 * (self.world_size - 1) as f64,
        };
        (max_dist + self.collision_penalty) * self.reward_scale.abs()
    }
}

pub type Pos = [i64; 2];

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct EnvState {
    pub positions: Vec<Pos>,
    pub goals: Vec<Pos>,
    pub step: usize,
}

/// A validated environment with its fixed goal layout.
#[derive(Debug, Clone)]
pub struct Env {
    cfg: EnvConfig,
    goals: Vec<Pos>,
}

impl Env {
    /// Gridworld goals are drawn once from `cfg.seed` and stay fixed for every
    /// episode; lineworld goals are all 0.
    pub fn new(cfg: EnvConfig) -> Result<Self> {
        cfg.validate()?;
        let goals = match cfg.kind {
            EnvKind::Lineworld => vec![[0, 0]; cfg.n_agents],
            EnvKind::Gridworld => {
                let mut layout = rng::stream(cfg.seed, Purpose::Layout, 0, 0);
                let side = cfg.world_size;
                (0..cfg.n_agents)
                    .map(|_| {
                        let cell = layout.random_range(0..side * side);
                        [(cell % side) as i64, (cell / side) as i64]
                    })
                    .collect()
            }
        };
        Ok(Env { cfg, goals })
    }

    pub fn config(&self) -> &EnvConfig {
        &self.cfg
    }

    pub fn goals(&self) -> &[Pos] {
        &self.goals
    }

    fn cell_to_pos(&self, cell: usize) -> Pos {
        match self.cfg.kind {
            EnvKind::Lineworld => [cell as i64 - self.cfg.world_size as i64, 0],
            EnvKind::Gridworld => {
                let side = self.cfg.world_size;
                [(cell % side) as i64, (cell / side) as i64]
            }
        }
    }

    fn bounds(&self) -> (i64, i64) {
        match self.cfg.kind {
            EnvKind::Lineworld => (-(self.cfg.world_size as i64), self.cfg.world_size as i64),
            EnvKind::Gridworld => (0, self.cfg.world_size as i64 - 1),
        }
    }

    /// Distinct random start cells.
    pub fn reset<R: Rng + ?Sized>(&self, rng: &mut R) -> Result<EnvState> {
        let cells = self.cfg.cells();
        if self.cfg.n_agents > cells {
            return Err(Error::WorldTooSmall {
                cells,
                agents: self.cfg.n_agents,
            });
        }
        let positions = index::sample(rng, cells, self.cfg.n_agents)
            .into_iter()
            .map(|c| self.cell_to_pos(c))
            .collect();
        Ok(EnvState {
            positions,
            goals: self.goals.clone(),
            step: 0,
        })
    }

    fn displacement(&self, agent: usize, action: &Action) -> Result<Pos> {
        let bad = |detail: String| Error::InvalidAction {
            context: "environment",
            detail: format!("agent {agent}: {detail}"),
        };
        match (self.cfg.kind, action) {
            (EnvKind::Lineworld, Action::Discrete(a)) => match a {
                0 => Ok([-1, 0]),
                1 => Ok([0, 0]),
                2 => Ok([1, 0]),
                _ => Err(bad(format!("lineworld action {a} outside 0..3"))),
            },
            // Continuous actions are rounded onto {-1, 0, +1}.
            (EnvKind::Lineworld, Action::Continuous { clipped, .. }) => {
                if !clipped.is_finite() {
                    return Err(bad("non-finite continuous action".into()));
                }
                Ok([clipped.round().clamp(-1.0, 1.0) as i64, 0])
            }
            (EnvKind::Gridworld, Action::Discrete(a)) => match a {
                0 => Ok([0, 1]),
                1 => Ok([0, -1]),
                2 => Ok([-1, 0]),
                3 => Ok([1, 0]),
                _ => Err(bad(format!("gridworld action {a} outside 0..4"))),
            },
            (EnvKind::Gridworld, Action::Continuous { .. }) => Err(bad("gridworld takes discrete actions".into())),
        }
    }

    fn distance(a: Pos, b: Pos) -> f64 {
        let dx = (a[0] - b[0]) as f64;
        let dy = (a[1] - b[1]) as f64;
        dx.hypot(dy)
    }

    pub fn step(&self, state: &EnvState, joint_action: &[Action]) -> Result<(EnvState, Vec<f64>)> {
        let n = self.cfg.n_agents;
        if joint_action.len() != n {
            return Err(Error::DimensionMismatch {
                expected: n,
                got: joint_action.len(),
            });
        }
        let moves = joint_action
            .iter()
            .enumerate()
            .map(|(i, a)| self.displacement(i, a))
            .collect::<Result<Vec<_>>>()?;
        let (lo, hi) = self.bounds();
        let clamp = |p: Pos, d: Pos| -> Pos {
            let y = if self.cfg.kind == EnvKind::Gridworld {
                (p[1] + d[1]).clamp(lo, hi)
            } else {
                0
            };
            [(p[0] + d[0]).clamp(lo, hi), y]
        };

        let mut positions = state.positions.clone();
        let mut collided = vec![false; n];
        match self.cfg.kind {
            EnvKind::Lineworld => {
                for i in 0..n {
                    let target = clamp(positions[i], moves[i]);
                    if target == positions[i] {
                        continue;
                    }
                    if positions.iter().enumerate().any(|(j, p)| j != i && *p == target) {
                        collided[i] = true;
                    } else {
                        positions[i] = target;
                    }
                }
            }
            EnvKind::Gridworld => {
                for i in 0..n {
                    positions[i] = clamp(positions[i], moves[i]);
                }
                for i in 0..n {
                    collided[i] = (0..n).any(|j| j != i && positions[j] == positions[i]);
                }
            }
        }

        let rewards = (0..n)
            .map(|i| {
                let penalty = if collided[i] { self.cfg.collision_penalty } else { 0.0 };
                self.cfg.reward_scale * (-Self::distance(positions[i], state.goals[i]) - penalty)
            })
            .collect();
        Ok((
            EnvState {
                positions,
                goals: state.goals.clone(),
                step: state.step + 1,
            },
            rewards,
        ))
    }

    pub fn observe(&self, state: &EnvState, agent: usize) -> Vec<f64> {
        let scale = |p: Pos| -> [f64; 2] {
            match self.cfg.kind {
                EnvKind::Lineworld => [p[0] as f64 / self.cfg.world_size as f64, 0.0],
                EnvKind::Gridworld => {
                    let span = (self.cfg.world_size - 1) as f64;
                    [2.0 * p[0] as f64 / span - 1.0, 2.0 * p[1] as f64 / span - 1.0]
                }
            }
        };
        let coords = self.cfg.kind.coords();
        let order = std::iter::once(agent).chain((0..self.cfg.n_agents).filter(|&j| j != agent));
        order
            .flat_map(|j| scale(state.positions[j]).into_iter().take(coords))
            .collect()
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct Step {
    pub obs: Vec<f64>,
    pub action: Action,
    pub reward: f64,
    /// `log π(action | obs)` under the sampling parameters.
    pub log_prob: f64,
}

#[derive(Debug, Clone, PartialEq)]
pub struct Trajectory {
    pub steps: Vec<Step>,
    pub gamma: f64,
}

impl Trajectory {
    pub fn len(&self) -> usize {
        self.steps.len()
    }

    pub fn is_empty(&self) -> bool {
        self.steps.is_empty()
    }

    /// `Σ_h γ^h r_h`.
    pub fn discounted_return(&self) -> f64 {
        let mut discount = 1.0;
        let mut total = 0.0;
        for step in &self.steps {
            total += discount * step.reward;
            discount *= self.gamma;
        }
        total
    }

    /// Undiscounted episode reward.
    pub fn total_reward(&self) -> f64 {
        self.steps.iter().map(|s| s.reward).sum()
    }

    /// Sum of the recorded sampling log-probabilities.
    pub fn log_prob_sum(&self) -> f64 {
        self.steps.iter().map(|s| s.log_prob).sum()
    }
}

/// Runs one joint episode of `horizon` steps from a fresh reset. All agents
/// share the state sequence; each gets its own trajectory.
pub fn rollout<R: Rng + ?Sized>(
    env: &Env,
    policy: &Policy,
    thetas: &[Vec<f64>],
    rng: &mut R,
) -> Result<Vec<Trajectory>> {
    let cfg = env.config();
    if thetas.len() != cfg.n_agents {
        return Err(Error::DimensionMismatch {
            expected: cfg.n_agents,
            got: thetas.len(),
        });
    }
    if policy.obs_dim() != cfg.obs_dim() {
        return Err(Error::DimensionMismatch {
            expected: cfg.obs_dim(),
            got: policy.obs_dim(),
        });
    }
    let mut state = env.reset(rng)?;
    let mut trajectories: Vec<Trajectory> = (0..cfg.n_agents)
        .map(|_| Trajectory {
            steps: Vec::with_capacity(cfg.horizon),
            gamma: cfg.gamma,
        })
        .collect();
    let mut joint = Vec::with_capacity(cfg.n_agents);
    let mut observations = Vec::with_capacity(cfg.n_agents);
    for _ in 0..cfg.horizon {
        joint.clear();
        observations.clear();
        let mut log_probs = Vec::with_capacity(cfg.n_agents);
        for (i, theta) in thetas.iter().enumerate() {
            let obs = env.observe(&state, i);
            let (action, lp) = policy.sample_with_log_prob(theta, &obs, rng)?;
            joint.push(action);
            observations.push(obs);
            log_probs.push(lp);
        }
        let (next, rewards) = env.step(&state, &joint)?;
        for (i, traj) in trajectories.iter_mut().enumerate() {
            traj.steps.push(Step {
                obs: std::mem::take(&mut observations[i]),
                action: joint[i],
                reward: rewards[i],
                log_prob: log_probs[i],
            });
        }
        state = next;
    }
    Ok(trajectories)
}

/// Samples one trajectory per agent under the given per-agent policies.
pub fn sample_trajectories<R: Rng + ?Sized>(
    env: &Env,
    policies: &[PolicyParams],
    rng: &mut R,
) -> Result<Vec<Trajectory>> {
    let Some(first) = policies.first() else {
        return Err(Error::TooFewAgents { min: 1, got: 0 });
    };
    if policies.iter().any(|p| p.policy != first.policy) {
        return Err(Error::InvalidPolicy(
            "all agents must share one policy family and shape".into(),
        ));
    }
    let thetas: Vec<Vec<f64>> = policies.iter().map(|p| p.theta.clone()).collect();
    rollout(env, &first.policy, &thetas, rng)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::policy::{LinearGaussianSpec, MlpSpec};
    use rand::SeedableRng;
    use rand_chacha::ChaCha8Rng;

    fn line(n: usize) -> Env {
        Env::new(EnvConfig::lineworld(n, 5, 10, 0.9)).unwrap()
    }

    fn state(env: &Env, xs: &[i64]) -> EnvState {
        EnvState {
            positions: xs.iter().map(|&x| [x, 0]).collect(),
            goals: env.goals().to_vec(),
            step: 0,
        }
    }

    #[test]
    fn reset_places_distinct_agents() {
        let mut rng = ChaCha8Rng::seed_from_u64(3);
        let env = line(1);
        let s = env.reset(&mut rng).unwrap();
        assert!((-5..=5).contains(&s.positions[0][0]));
        assert_eq!(s.goals, vec![[0, 0]]);

        let grid = Env::new(EnvConfig::gridworld(5, 10, 10, 0.9)).unwrap();
        for _ in 0..50 {
            let s = grid.reset(&mut rng).unwrap();
            let mut cells = s.positions.clone();
            cells.sort();
            cells.dedup();
            assert_eq!(cells.len(), 5);
            assert!(s
                .positions
                .iter()
                .all(|p| (0..10).contains(&p[0]) && (0..10).contains(&p[1])));
        }
    }

    #[test]
    fn overcrowded_world_is_rejected() {
        assert!(matches!(
            Env::new(EnvConfig::gridworld(101, 10, 10, 0.9)),
            Err(Error::WorldTooSmall {
                cells: 100,
                agents: 101
            })
        ));
    }

    #[test]
    fn lineworld_step_reward() {
        let env = line(1);
        let (next, r) = env.step(&state(&env, &[3]), &[Action::Discrete(0)]).unwrap();
        assert_eq!(next.positions, vec![[2, 0]]);
        assert_eq!(r, vec![-2.0]);
    }

    #[test]
    fn lineworld_blocked_mover_pays_penalty() {
        let env = line(2);
        // Both agents try to enter cell 1; agent 0 moves first and wins.
        let (next, r) = env
            .step(&state(&env, &[0, 2]), &[Action::Discrete(2), Action::Discrete(0)])
            .unwrap();
        assert_eq!(next.positions, vec![[1, 0], [2, 0]]);
        assert_eq!(r, vec![-1.0, -3.0]);
    }

    #[test]
    fn invalid_action_index_faults() {
        let env = line(1);
        assert!(env.step(&state(&env, &[0]), &[Action::Discrete(3)]).is_err());
        let grid = Env::new(EnvConfig::gridworld(1, 4, 5, 0.9)).unwrap();
        let s = grid.reset(&mut ChaCha8Rng::seed_from_u64(0)).unwrap();
        assert!(grid.step(&s, &[Action::Continuous { raw: 0.0, clipped: 0.0 }]).is_err());
    }

    #[test]
    fn gridworld_wall_bounce_on_goal_gives_zero() {
        let grid = Env::new(EnvConfig::gridworld(1, 4, 5, 0.9)).unwrap();
        let corner = EnvState {
            positions: vec![[0, 0]],
            goals: vec![[0, 0]],
            step: 0,
        };
        // Moving left from the corner bounces off the wall and stays on goal.
        let (next, r) = grid.step(&corner, &[Action::Discrete(2)]).unwrap();
        assert_eq!(next.positions, vec![[0, 0]]);
        assert_eq!(r, vec![0.0]);
    }

    #[test]
    fn gridworld_collisions_charge_everyone_involved() {
        let mut cfg = EnvConfig::gridworld(3, 4, 5, 0.9);
        cfg.collision_penalty = 1.0;
        let grid = Env::new(cfg).unwrap();
        let s = EnvState {
            positions: vec![[0, 0], [2, 0], [3, 3]],
            goals: vec![[1, 0], [1, 0], [3, 3]],
            step: 0,
        };
        let (next, r) = grid
            .step(&s, &[Action::Discrete(3), Action::Discrete(2), Action::Discrete(0)])
            .unwrap();
        assert_eq!(next.positions[0], next.positions[1]);
        assert_eq!(r, vec![-1.0, -1.0, 0.0]);
    }

    #[test]
    fn observation_layout() {
        let env = line(1);
        assert_eq!(env.observe(&state(&env, &[0]), 0), vec![0.0]);
        let env = line(3);
        let s = state(&env, &[5, -5, 1]);
        assert_eq!(env.observe(&s, 1), vec![-1.0, 1.0, 0.2]);
        let grid = Env::new(EnvConfig::gridworld(2, 5, 5, 0.9)).unwrap();
        let s = EnvState {
            positions: vec![[0, 4], [2, 1]],
            goals: grid.goals().to_vec(),
            step: 0,
        };
        assert_eq!(grid.observe(&s, 1), vec![0.0, -0.5, -1.0, 1.0]);
    }

    #[test]
    fn trajectories_follow_horizon_discount_and_seed() {
        let policy = Policy::MlpCategorical(MlpSpec {
            input_dim: 2,
            hidden: [8, 8],
            actions: 3,
        });
        let mut cfg = EnvConfig::lineworld(2, 5, 1, 0.0);
        let env = Env::new(cfg).unwrap();
        let mut rng = ChaCha8Rng::seed_from_u64(9);
        let theta = policy.init_params(&mut rng);
        let thetas = vec![theta.clone(), theta.clone()];
        let t = rollout(&env, &policy, &thetas, &mut rng).unwrap();
        assert_eq!(t.len(), 2);
        assert!(t.iter().all(|tr| tr.len() == 1));
        assert_eq!(t[0].discounted_return(), t[0].steps[0].reward);

        cfg.horizon = 20;
        cfg.gamma = 0.9;
        let env = Env::new(cfg).unwrap();
        let a = rollout(&env, &policy, &thetas, &mut ChaCha8Rng::seed_from_u64(4)).unwrap();
        let b = rollout(&env, &policy, &thetas, &mut ChaCha8Rng::seed_from_u64(4)).unwrap();
        assert_eq!(a, b);
        let expected: f64 = a[1]
            .steps
            .iter()
            .enumerate()
            .map(|(h, s)| 0.9f64.powi(h as i32) * s.reward)
            .sum();
        approx::assert_relative_eq!(a[1].discounted_return(), expected, max_relative = 1e-14);
        for tr in &a {
            for (step, lp) in tr.steps.iter().zip(
                tr.steps
                    .iter()
                    .map(|s| policy.log_prob(&theta, &s.obs, &s.action).unwrap()),
            ) {
                assert_eq!(step.log_prob, lp);
            }
        }
    }

    #[test]
    fn gaussian_policies_drive_lineworld() {
        let policy = Policy::LinearGaussian(LinearGaussianSpec {
            feature_dim: 1,
            xi: 1.0,
            feature_clip: 1.0,
            action_clip: 1.0,
        });
        let env = Env::new(EnvConfig::lineworld(1, 5, 6, 0.9)).unwrap();
        let params = [PolicyParams::new(policy, vec![-2.0]).unwrap()];
        let t = sample_trajectories(&env, &params, &mut ChaCha8Rng::seed_from_u64(1)).unwrap();
        assert_eq!(t[0].len(), 6);
        assert!(t[0]
            .steps
            .iter()
            .all(|s| s.reward <= 0.0 && s.reward >= -env.config().reward_bound()));
    }
}
