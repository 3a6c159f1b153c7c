//! Policy-gradient estimators, trajectory importance weights and the
//! importance-sampled hybrid SARAH surrogate.

use std::fmt;
use std::str::FromStr;

use serde::{Deserialize, Serialize};

use crate::envsim::Trajectory;
use crate::error::{Error, Result};
use crate::policy::{Policy, PolicyParams};

/// Importance weights are clamped to `exp(±LOG_WEIGHT_CLAMP)`.
pub const LOG_WEIGHT_CLAMP: f64 = 50.0;

/// Largest tolerated `|υ · g|` component in a surrogate update.
pub const WEIGHTED_GRAD_LIMIT: f64 = 1e12;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Estimator {
    /// `(Σ_h ∇log π(a_h|s_h)) · Σ_h γ^h r_h`
    Reinforce,
    /// Reward-to-go: `Σ_h ∇log π(a_h|s_h) · Σ_{q≥h} γ^q r_q`, zero baseline.
    #[default]
    Pgt,
}

impl fmt::Display for Estimator {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            Estimator::Reinforce => "reinforce",
            Estimator::Pgt => "pgt",
        })
    }
}

impl FromStr for Estimator {
    type Err = String;
    fn from_str(s: &str) -> Result<Self, Self::Err> {
        match s {
            "reinforce" => Ok(Estimator::Reinforce),
            "pgt" => Ok(Estimator::Pgt),
            other => Err(format!("expected reinforce or pgt, got `{other}`")),
        }
    }
}

/// Gradient estimate at some parameters together with the per-step
/// log-probabilities of the trajectory's actions under those parameters.
#[derive(Debug, Clone, PartialEq)]
pub struct Evaluation {
    pub gradient: Vec<f64>,
    pub log_probs: Vec<f64>,
}

fn step_weights(traj: &Trajectory, estimator: Estimator) -> Vec<f64> {
    let mut discounted = Vec::with_capacity(traj.len());
    let mut discount = 1.0;
    for step in &traj.steps {
        discounted.push(discount * step.reward);
        discount *= traj.gamma;
    }
    match estimator {
        Estimator::Reinforce => {
            let total: f64 = discounted.iter().sum();
            vec![total; traj.len()]
        }
        Estimator::Pgt => {
            let mut to_go = vec![0.0; traj.len()];
            let mut acc = 0.0;
            for h in (0..traj.len()).rev() {
                acc += discounted[h];
                to_go[h] = acc;
            }
            to_go
        }
    }
}

/// Evaluates the estimator on `traj` with scores taken at `theta`.
pub fn evaluate(traj: &Trajectory, policy: &Policy, theta: &[f64], estimator: Estimator) -> Result<Evaluation> {
    if traj.is_empty() {
        return Err(Error::EmptyTrajectory);
    }
    let weights = step_weights(traj, estimator);
    let mut gradient = vec![0.0; policy.dim()];
    let log_probs = traj
        .steps
        .iter()
        .zip(weights)
        .map(|(step, w)| policy.accumulate_score(theta, &step.obs, &step.action, w, &mut gradient))
        .collect::<Result<Vec<_>>>()?;
    Ok(Evaluation { gradient, log_probs })
}

pub fn pg_estimate(traj: &Trajectory, params: &PolicyParams, estimator: Estimator) -> Result<Vec<f64>> {
    evaluate(traj, &params.policy, &params.theta, estimator).map(|e| e.gradient)
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct ImportanceWeight {
    pub value: f64,
    /// Set when `|log υ|` exceeded the clamp.
    pub clamped: bool,
    /// Set when some action has zero probability under the numerator policy.
    pub numerator_zero: bool,
}

/// `υ = Π_h π_num(a_h|s_h) / π_den(a_h|s_h)` from per-step log-probabilities,
/// accumulated in log space.
pub fn weight_from_log_probs(numerator: &[f64], denominator: &[f64]) -> Result<ImportanceWeight> {
    if numerator.len() != denominator.len() {
        return Err(Error::DimensionMismatch {
            expected: denominator.len(),
            got: numerator.len(),
        });
    }
    let mut log_weight = 0.0;
    let mut numerator_zero = false;
    for (step, (num, den)) in numerator.iter().zip(denominator).enumerate() {
        if *den == f64::NEG_INFINITY {
            return Err(Error::ImpossibleTrajectory { step });
        }
        if *num == f64::NEG_INFINITY {
            numerator_zero = true;
            continue;
        }
        log_weight += num - den;
    }
    if numerator_zero {
        log::warn!("importance weight is zero: action impossible under the numerator policy");
        return Ok(ImportanceWeight {
            value: 0.0,
            clamped: false,
            numerator_zero,
        });
    }
    if log_weight.is_nan() {
        return Err(Error::NonFinite("importance weight"));
    }
    let clamped = log_weight.abs() > LOG_WEIGHT_CLAMP;
    Ok(ImportanceWeight {
        value: log_weight.clamp(-LOG_WEIGHT_CLAMP, LOG_WEIGHT_CLAMP).exp(),
        clamped,
        numerator_zero,
    })
}

/// `υ(τ | x_old, x_new) = p(τ|x_old) / p(τ|x_new)` for a trajectory drawn
/// under `params_new`.
pub fn importance_weight(
    traj: &Trajectory,
    params_new: &PolicyParams,
    params_old: &PolicyParams,
) -> Result<ImportanceWeight> {
    if params_new.policy != params_old.policy {
        return Err(Error::InvalidPolicy(
            "importance weight needs two policies of the same family".into(),
        ));
    }
    if traj.is_empty() {
        return Err(Error::EmptyTrajectory);
    }
    let log_probs =
        |p: &PolicyParams| -> Result<Vec<f64>> { traj.steps.iter().map(|s| p.log_prob(&s.obs, &s.action)).collect() };
    weight_from_log_probs(&log_probs(params_old)?, &log_probs(params_new)?)
}

/// `β g_new + (1-β) (u_prev + g_new - υ g_old)`, componentwise.
pub fn hybrid_combine(beta: f64, u_prev: &[f64], g_new: &[f64], weight: f64, g_old: &[f64]) -> Vec<f64> {
    u_prev
        .iter()
        .zip(g_new)
        .zip(g_old)
        .map(|((u, gn), go)| beta * gn + (1.0 - beta) * (u + gn - weight * go))
        .collect()
}

/// Per-agent recursive gradient surrogate.
#[derive(Debug, Clone, PartialEq)]
pub struct Surrogate {
    pub u: Vec<f64>,
    pub u_prev: Vec<f64>,
    /// Parameters the current `u` was computed at; the next update evaluates
    /// the correction term here.
    pub params_prev: Vec<f64>,
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct UpdateInfo {
    pub weight: f64,
    pub clamped: bool,
    pub numerator_zero: bool,
}

impl Default for UpdateInfo {
    fn default() -> Self {
        UpdateInfo {
            weight: 1.0,
            clamped: false,
            numerator_zero: false,
        }
    }
}

/// `u₀ = (1/|B|) Σ_m g(τ_m | x₀)`, `u₋₁ = 0`.
pub fn init_surrogate(
    policy: &Policy,
    theta0: &[f64],
    batch: &[Trajectory],
    estimator: Estimator,
) -> Result<Surrogate> {
    if batch.is_empty() {
        return Err(Error::EmptyTrajectory);
    }
    let dim = policy.dim();
    let mut u = vec![0.0; dim];
    for traj in batch {
        let g = evaluate(traj, policy, theta0, estimator)?.gradient;
        for (acc, x) in u.iter_mut().zip(g) {
            *acc += x;
        }
    }
    let n = batch.len() as f64;
    u.iter_mut().for_each(|x| *x /= n);
    Ok(Surrogate {
        u,
        u_prev: vec![0.0; dim],
        params_prev: theta0.to_vec(),
    })
}

/// One hybrid update with `traj_k` drawn under `theta_k`. With `β = 1` this
/// is exactly `g(τ_k | x_k)` and the correction term is never evaluated.
pub fn surrogate_update(
    s: &Surrogate,
    traj_k: &Trajectory,
    policy: &Policy,
    theta_k: &[f64],
    beta: f64,
    estimator: Estimator,
) -> Result<(Surrogate, UpdateInfo)> {
    if !(beta > 0.0 && beta <= 1.0) {
        return Err(Error::OutOfRange {
            key: "beta".into(),
            detail: format!("momentum coefficient must lie in (0, 1], got {beta}"),
        });
    }
    let current = evaluate(traj_k, policy, theta_k, estimator)?;
    let (u, info) = if beta == 1.0 {
        (current.gradient, UpdateInfo::default())
    } else {
        let previous = evaluate(traj_k, policy, &s.params_prev, estimator)?;
        let w = weight_from_log_probs(&previous.log_probs, &current.log_probs)?;
        let worst = previous
            .gradient
            .iter()
            .map(|g| (w.value * g).abs())
            .fold(0.0, f64::max);
        if !worst.is_finite() || worst > WEIGHTED_GRAD_LIMIT {
            return Err(Error::WeightBlowUp {
                weight: w.value,
                product: worst,
            });
        }
        let u = hybrid_combine(beta, &s.u, &current.gradient, w.value, &previous.gradient);
        (
            u,
            UpdateInfo {
                weight: w.value,
                clamped: w.clamped,
                numerator_zero: w.numerator_zero,
            },
        )
    };
    if u.iter().any(|x| !x.is_finite()) {
        return Err(Error::NonFinite("gradient surrogate"));
    }
    Ok((
        Surrogate {
            u,
            u_prev: s.u.clone(),
            params_prev: theta_k.to_vec(),
        },
        info,
    ))
}
