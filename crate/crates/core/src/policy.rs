//! Stochastic policies: a linear-Gaussian policy over one continuous action
//! and a tanh MLP with a softmax head over discrete actions.
//!
//! Both families expose sampling, log-density and the analytic score
//! `∇_θ log π(a|s)`. MLP gradients are written out layer by layer
//! (dense → tanh → dense → tanh → dense → log-softmax).

use std::io::{Read, Write};

use rand::Rng;
use rand_distr::StandardNormal;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

const LN_SQRT_2PI: f64 = 0.918_938_533_204_672_8;

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct LinearGaussianSpec {
    /// Length of the feature vector (equals the observation length).
    pub feature_dim: usize,
    /// Standard deviation `ξ`.
    pub xi: f64,
    /// Feature norm bound `C_f`; observations are rescaled onto this ball.
    pub feature_clip: f64,
    /// Action bound `C_a`; sampled actions are clipped to `[-C_a, C_a]`.
    pub action_clip: f64,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub struct MlpSpec {
    pub input_dim: usize,
    pub hidden: [usize; 2],
    pub actions: usize,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub enum Policy {
    LinearGaussian(LinearGaussianSpec),
    MlpCategorical(MlpSpec),
}

/// An action as drawn by a policy.
///
/// Continuous draws keep the pre-clip sample: densities and scores are always
/// evaluated at `raw`, the environment executes `clipped`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub enum Action {
    Discrete(usize),
    Continuous { raw: f64, clipped: f64 },
}

/// Flat parameter vector tagged with the policy it parameterizes.
#[derive(Debug, Clone, PartialEq)]
pub struct PolicyParams {
    pub policy: Policy,
    pub theta: Vec<f64>,
}

impl PolicyParams {
    pub fn new(policy: Policy, theta: Vec<f64>) -> Result<Self> {
        policy.validate()?;
        check_theta(&policy, &theta)?;
        if theta.iter().any(|t| !t.is_finite()) {
            return Err(Error::NonFinite("policy parameters"));
        }
        Ok(PolicyParams { policy, theta })
    }

    pub fn zeros(policy: Policy) -> Self {
        PolicyParams {
            theta: vec![0.0; policy.dim()],
            policy,
        }
    }

    pub fn sample_action<R: Rng + ?Sized>(&self, obs: &[f64], rng: &mut R) -> Result<Action> {
        self.policy.sample_action(&self.theta, obs, rng)
    }

    pub fn log_prob(&self, obs: &[f64], action: &Action) -> Result<f64> {
        self.policy.log_prob(&self.theta, obs, action)
    }

    pub fn score(&self, obs: &[f64], action: &Action) -> Result<Vec<f64>> {
        self.policy.score(&self.theta, obs, action)
    }

    pub fn to_json(&self) -> String {
        serde_json::to_string(&self.theta).expect("f64 slice serializes")
    }

    pub fn from_json(policy: Policy, text: &str) -> Result<Self> {
        let theta: Vec<f64> = serde_json::from_str(text)?;
        PolicyParams::new(policy, theta)
    }

    /// Raw checkpoint: magic, family tag, shape words, length, then the
    /// parameters as little-endian `f64`.
    pub fn write_raw<W: Write>(&self, mut out: W) -> Result<()> {
        out.write_all(RAW_MAGIC)?;
        let (tag, shape) = self.policy.shape_words();
        out.write_all(&tag.to_le_bytes())?;
        out.write_all(&(shape.len() as u32).to_le_bytes())?;
        for s in &shape {
            out.write_all(&s.to_le_bytes())?;
        }
        out.write_all(&(self.theta.len() as u64).to_le_bytes())?;
        for t in &self.theta {
            out.write_all(&t.to_le_bytes())?;
        }
        Ok(())
    }

    /// Reads a raw checkpoint, checking its header against `policy`.
    pub fn read_raw<R: Read>(policy: Policy, mut input: R) -> Result<Self> {
        let mut magic = [0u8; 8];
        input.read_exact(&mut magic)?;
        if &magic != RAW_MAGIC {
            return Err(Error::InvalidPolicy("bad checkpoint magic".into()));
        }
        let mut w4 = [0u8; 4];
        let mut w8 = [0u8; 8];
        input.read_exact(&mut w4)?;
        let tag = u32::from_le_bytes(w4);
        input.read_exact(&mut w4)?;
        let n_shape = u32::from_le_bytes(w4) as usize;
        let mut shape = Vec::with_capacity(n_shape);
        for _ in 0..n_shape {
            input.read_exact(&mut w8)?;
            shape.push(u64::from_le_bytes(w8));
        }
        if (tag, shape) != policy.shape_words() {
            return Err(Error::InvalidPolicy(
                "checkpoint shape does not match the configured policy".into(),
            ));
        }
        input.read_exact(&mut w8)?;
        let len = u64::from_le_bytes(w8) as usize;
        let mut theta = Vec::with_capacity(len);
        for _ in 0..len {
            input.read_exact(&mut w8)?;
            theta.push(f64::from_le_bytes(w8));
        }
        PolicyParams::new(policy, theta)
    }
}

const RAW_MAGIC: &[u8; 8] = b"MDPGTPAR";

fn check_theta(policy: &Policy, theta: &[f64]) -> Result<()> {
    if theta.len() != policy.dim() {
        return Err(Error::DimensionMismatch {
            expected: policy.dim(),
            got: theta.len(),
        });
    }
    Ok(())
}

impl Policy {
    pub fn validate(&self) -> Result<()> {
        match self {
            Policy::LinearGaussian(s) => {
                if s.feature_dim == 0 {
                    return Err(Error::InvalidPolicy("feature_dim must be positive".into()));
                }
                for (name, v) in [
                    ("xi", s.xi),
                    ("feature_clip", s.feature_clip),
                    ("action_clip", s.action_clip),
                ] {
                    if !(v.is_finite() && v > 0.0) {
                        return Err(Error::InvalidPolicy(format!("{name} must be positive")));
                    }
                }
            }
            Policy::MlpCategorical(s) => {
                if s.input_dim == 0 || s.hidden.contains(&0) || s.actions < 2 {
                    return Err(Error::InvalidPolicy(
                        "mlp needs positive widths and at least two actions".into(),
                    ));
                }
            }
        }
        Ok(())
    }

    pub fn dim(&self) -> usize {
        match self {
            Policy::LinearGaussian(s) => s.feature_dim,
            Policy::MlpCategorical(s) => {
                let [h1, h2] = s.hidden;
                h1 * s.input_dim + h1 + h2 * h1 + h2 + s.actions * h2 + s.actions
            }
        }
    }

    pub fn obs_dim(&self) -> usize {
        match self {
            Policy::LinearGaussian(s) => s.feature_dim,
            Policy::MlpCategorical(s) => s.input_dim,
        }
    }

    fn shape_words(&self) -> (u32, Vec<u64>) {
        match self {
            Policy::LinearGaussian(s) => (0, vec![s.feature_dim as u64]),
            Policy::MlpCategorical(s) => (
                1,
                vec![
                    s.input_dim as u64,
                    s.hidden[0] as u64,
                    s.hidden[1] as u64,
                    s.actions as u64,
                ],
            ),
        }
    }

    /// Initial parameters: zeros for the linear-Gaussian policy, PyTorch-style
    /// `U(-1/√fan_in, 1/√fan_in)` for every MLP weight and bias.
    pub fn init_params<R: Rng + ?Sized>(&self, rng: &mut R) -> Vec<f64> {
        match self {
            Policy::LinearGaussian(s) => vec![0.0; s.feature_dim],
            Policy::MlpCategorical(s) => {
                let [h1, h2] = s.hidden;
                let mut theta = Vec::with_capacity(self.dim());
                for (fan_in, fan_out) in [(s.input_dim, h1), (h1, h2), (h2, s.actions)] {
                    let bound = 1.0 / (fan_in as f64).sqrt();
                    for _ in 0..fan_out * fan_in + fan_out {
                        theta.push(rng.random_range(-bound..bound));
                    }
                }
                theta
            }
        }
    }

    fn check_obs(&self, obs: &[f64]) -> Result<()> {
        if obs.len() != self.obs_dim() {
            return Err(Error::DimensionMismatch {
                expected: self.obs_dim(),
                got: obs.len(),
            });
        }
        Ok(())
    }

    pub fn sample_action<R: Rng + ?Sized>(&self, theta: &[f64], obs: &[f64], rng: &mut R) -> Result<Action> {
        self.sample_with_log_prob(theta, obs, rng).map(|(a, _)| a)
    }

    /// Draws an action and returns it with its log-probability, sharing one
    /// forward pass.
    pub fn sample_with_log_prob<R: Rng + ?Sized>(
        &self,
        theta: &[f64],
        obs: &[f64],
        rng: &mut R,
    ) -> Result<(Action, f64)> {
        check_theta(self, theta)?;
        self.check_obs(obs)?;
        match self {
            Policy::LinearGaussian(s) => {
                let mean = gaussian_mean(s, theta, obs);
                if !mean.is_finite() || theta.iter().any(|t| !t.is_finite()) {
                    return Err(Error::NonFinite("policy parameters"));
                }
                let noise: f64 = rng.sample(StandardNormal);
                let raw = mean + s.xi * noise;
                let z = (raw - mean) / s.xi;
                let action = Action::Continuous {
                    raw,
                    clipped: raw.clamp(-s.action_clip, s.action_clip),
                };
                Ok((action, -0.5 * z * z - LN_SQRT_2PI - s.xi.ln()))
            }
            Policy::MlpCategorical(s) => {
                let log_probs = Mlp::new(s, theta).log_probabilities(obs);
                if log_probs.iter().any(|p| p.is_nan() || *p == f64::INFINITY) {
                    return Err(Error::NonFinite("policy parameters"));
                }
                let u: f64 = rng.random();
                let mut acc = 0.0;
                for (a, lp) in log_probs.iter().enumerate() {
                    acc += lp.exp();
                    if u < acc {
                        return Ok((Action::Discrete(a), *lp));
                    }
                }
                // Rounding left the cumulative sum just below 1.
                let a = log_probs
                    .iter()
                    .rposition(|&lp| lp > f64::NEG_INFINITY)
                    .unwrap_or(s.actions - 1);
                Ok((Action::Discrete(a), log_probs[a]))
            }
        }
    }

    /// Log-density (Gaussian, at the raw sample) or log-probability
    /// (categorical). A zero-probability discrete action yields `-∞`.
    pub fn log_prob(&self, theta: &[f64], obs: &[f64], action: &Action) -> Result<f64> {
        check_theta(self, theta)?;
        self.check_obs(obs)?;
        match (self, action) {
            (Policy::LinearGaussian(s), Action::Continuous { raw, .. }) => {
                let z = (raw - gaussian_mean(s, theta, obs)) / s.xi;
                Ok(-0.5 * z * z - LN_SQRT_2PI - s.xi.ln())
            }
            (Policy::MlpCategorical(s), Action::Discrete(a)) => {
                check_discrete(*a, s.actions)?;
                let lp = Mlp::new(s, theta).log_probabilities(obs)[*a];
                if lp == f64::NEG_INFINITY {
                    log::warn!("action {a} has zero probability under the categorical policy");
                }
                Ok(lp)
            }
            _ => Err(family_mismatch()),
        }
    }

    pub fn score(&self, theta: &[f64], obs: &[f64], action: &Action) -> Result<Vec<f64>> {
        let mut grad = vec![0.0; self.dim()];
        self.accumulate_score(theta, obs, action, 1.0, &mut grad)?;
        Ok(grad)
    }

    /// Adds `weight · ∇_θ log π(a|s)` into `grad` and returns `log π(a|s)`.
    pub fn accumulate_score(
        &self,
        theta: &[f64],
        obs: &[f64],
        action: &Action,
        weight: f64,
        grad: &mut [f64],
    ) -> Result<f64> {
        check_theta(self, theta)?;
        self.check_obs(obs)?;
        if grad.len() != theta.len() {
            return Err(Error::DimensionMismatch {
                expected: theta.len(),
                got: grad.len(),
            });
        }
        match (self, action) {
            (Policy::LinearGaussian(s), Action::Continuous { raw, .. }) => {
                let phi = features(s, obs);
                let mean: f64 = theta.iter().zip(&phi).map(|(t, f)| t * f).sum();
                let z = (raw - mean) / s.xi;
                let coef = weight * z / s.xi;
                for (g, f) in grad.iter_mut().zip(&phi) {
                    *g += coef * f;
                }
                Ok(-0.5 * z * z - LN_SQRT_2PI - s.xi.ln())
            }
            (Policy::MlpCategorical(s), Action::Discrete(a)) => {
                check_discrete(*a, s.actions)?;
                Ok(Mlp::new(s, theta).backprop_log_prob(obs, *a, weight, grad))
            }
            _ => Err(family_mismatch()),
        }
    }

    /// Action probabilities of the categorical head; `None` for Gaussian
    /// policies.
    pub fn probabilities(&self, theta: &[f64], obs: &[f64]) -> Result<Option<Vec<f64>>> {
        check_theta(self, theta)?;
        self.check_obs(obs)?;
        Ok(match self {
            Policy::LinearGaussian(_) => None,
            Policy::MlpCategorical(s) => Some(Mlp::new(s, theta).probabilities(obs)),
        })
    }
}

fn family_mismatch() -> Error {
    Error::InvalidAction {
        context: "policy",
        detail: "action kind does not match the policy family".into(),
    }
}

fn check_discrete(a: usize, actions: usize) -> Result<()> {
    if a >= actions {
        return Err(Error::InvalidAction {
            context: "policy",
            detail: format!("action {a} outside 0..{actions}"),
        });
    }
    Ok(())
}

/// Identity features, radially clipped to norm `C_f`.
pub fn features(spec: &LinearGaussianSpec, obs: &[f64]) -> Vec<f64> {
    let norm = obs.iter().map(|x| x * x).sum::<f64>().sqrt();
    if norm > spec.feature_clip {
        let scale = spec.feature_clip / norm;
        obs.iter().map(|x| x * scale).collect()
    } else {
        obs.to_vec()
    }
}

fn gaussian_mean(spec: &LinearGaussianSpec, theta: &[f64], obs: &[f64]) -> f64 {
    theta.iter().zip(features(spec, obs)).map(|(t, f)| t * f).sum()
}

/// `(C_g, C_h)` for the linear-Gaussian policy with `||θ|| ≤ x_max` and
/// clipped actions: `C_h = C_f²/ξ²`, `C_g = (C_a + C_f x_max) C_f / ξ²`.
pub fn score_bounds(spec: &LinearGaussianSpec, x_max: f64) -> (f64, f64) {
    let xi2 = spec.xi * spec.xi;
    let c_h = spec.feature_clip * spec.feature_clip / xi2;
    let c_g = (spec.action_clip + spec.feature_clip * x_max) * spec.feature_clip / xi2;
    (c_g, c_h)
}

/// Borrowed view of a flat MLP parameter vector.
struct Mlp<'a> {
    spec: &'a MlpSpec,
    w1: &'a [f64],
    b1: &'a [f64],
    w2: &'a [f64],
    b2: &'a [f64],
    w3: &'a [f64],
    b3: &'a [f64],
}

struct Activations {
    h1: Vec<f64>,
    h2: Vec<f64>,
    log_probs: Vec<f64>,
}

fn dense(w: &[f64], b: &[f64], x: &[f64]) -> Vec<f64> {
    b.iter()
        .zip(w.chunks_exact(x.len()))
        .map(|(bias, row)| bias + row.iter().zip(x).map(|(a, b)| a * b).sum::<f64>())
        .collect()
}

fn log_softmax(z: &[f64]) -> Vec<f64> {
    let max = z.iter().copied().fold(f64::NEG_INFINITY, f64::max);
    let lse = max + z.iter().map(|v| (v - max).exp()).sum::<f64>().ln();
    // Probabilities that underflow to zero map to the −∞ sentinel.
    z.iter()
        .map(|v| {
            let lp = v - lse;
            if lp.exp() == 0.0 {
                f64::NEG_INFINITY
            } else {
                lp
            }
        })
        .collect()
}

impl<'a> Mlp<'a> {
    fn new(spec: &'a MlpSpec, theta: &'a [f64]) -> Self {
        let [h1, h2] = spec.hidden;
        let (w1, rest) = theta.split_at(h1 * spec.input_dim);
        let (b1, rest) = rest.split_at(h1);
        let (w2, rest) = rest.split_at(h2 * h1);
        let (b2, rest) = rest.split_at(h2);
        let (w3, b3) = rest.split_at(spec.actions * h2);
        Mlp {
            spec,
            w1,
            b1,
            w2,
            b2,
            w3,
            b3,
        }
    }

    fn forward(&self, obs: &[f64]) -> Activations {
        let h1: Vec<f64> = dense(self.w1, self.b1, obs).into_iter().map(f64::tanh).collect();
        let h2: Vec<f64> = dense(self.w2, self.b2, &h1).into_iter().map(f64::tanh).collect();
        let log_probs = log_softmax(&dense(self.w3, self.b3, &h2));
        Activations { h1, h2, log_probs }
    }

    fn log_probabilities(&self, obs: &[f64]) -> Vec<f64> {
        self.forward(obs).log_probs
    }

    fn probabilities(&self, obs: &[f64]) -> Vec<f64> {
        self.log_probabilities(obs).into_iter().map(f64::exp).collect()
    }

    fn backprop_log_prob(&self, obs: &[f64], action: usize, weight: f64, grad: &mut [f64]) -> f64 {
        let [n1, n2] = self.spec.hidden;
        let n_in = self.spec.input_dim;
        let acts = self.forward(obs);

        let (g_w1, rest) = grad.split_at_mut(n1 * n_in);
        let (g_b1, rest) = rest.split_at_mut(n1);
        let (g_w2, rest) = rest.split_at_mut(n2 * n1);
        let (g_b2, rest) = rest.split_at_mut(n2);
        let (g_w3, g_b3) = rest.split_at_mut(self.spec.actions * n2);

        // d log softmax_a / d logits = e_a - p
        let d_logits: Vec<f64> = acts
            .log_probs
            .iter()
            .enumerate()
            .map(|(k, lp)| {
                let indicator = if k == action { 1.0 } else { 0.0 };
                weight * (indicator - lp.exp())
            })
            .collect();

        let mut d_h2 = vec![0.0; n2];
        for (k, dz) in d_logits.iter().enumerate() {
            g_b3[k] += dz;
            let row = &self.w3[k * n2..(k + 1) * n2];
            let g_row = &mut g_w3[k * n2..(k + 1) * n2];
            for j in 0..n2 {
                g_row[j] += dz * acts.h2[j];
                d_h2[j] += dz * row[j];
            }
        }
        let d_a2: Vec<f64> = d_h2.iter().zip(&acts.h2).map(|(d, h)| d * (1.0 - h * h)).collect();

        let mut d_h1 = vec![0.0; n1];
        for (k, da) in d_a2.iter().enumerate() {
            g_b2[k] += da;
            let row = &self.w2[k * n1..(k + 1) * n1];
            let g_row = &mut g_w2[k * n1..(k + 1) * n1];
            for j in 0..n1 {
                g_row[j] += da * acts.h1[j];
                d_h1[j] += da * row[j];
            }
        }
        for k in 0..n1 {
            let da = d_h1[k] * (1.0 - acts.h1[k] * acts.h1[k]);
            g_b1[k] += da;
            let g_row = &mut g_w1[k * n_in..(k + 1) * n_in];
            for (g, x) in g_row.iter_mut().zip(obs) {
                *g += da * x;
            }
        }
        acts.log_probs[action]
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use approx::assert_abs_diff_eq;
    use rand::SeedableRng;
    use rand_chacha::ChaCha8Rng;

    fn gauss(xi: f64) -> Policy {
        Policy::LinearGaussian(LinearGaussianSpec {
            feature_dim: 1,
            xi,
            feature_clip: 1.0,
            action_clip: 1.0,
        })
    }

    fn mlp(actions: usize) -> Policy {
        Policy::MlpCategorical(MlpSpec {
            input_dim: 3,
            hidden: [5, 4],
            actions,
        })
    }

    fn cont(raw: f64) -> Action {
        Action::Continuous { raw, clipped: raw }
    }

    #[test]
    fn gaussian_log_prob_examples() {
        let p = gauss(1.0);
        assert_abs_diff_eq!(
            p.log_prob(&[0.0], &[1.0], &cont(0.0)).unwrap(),
            -0.918_938_533_204_672_8,
            epsilon = 1e-15
        );
        let p = gauss(0.5);
        let peak = p.log_prob(&[0.8], &[0.5], &cont(0.4)).unwrap();
        assert_abs_diff_eq!(peak, -LN_SQRT_2PI - 0.5f64.ln(), epsilon = 1e-15);
        assert!(p.log_prob(&[0.8], &[0.5], &cont(0.3)).unwrap() < peak);
    }

    #[test]
    fn gaussian_score_examples() {
        let p = gauss(1.0);
        assert_eq!(p.score(&[0.0], &[1.0], &cont(1.0)).unwrap(), vec![1.0]);
        assert_eq!(p.score(&[0.7], &[1.0], &cont(0.7)).unwrap(), vec![0.0]);
    }

    #[test]
    fn gaussian_sampling_clips_and_degenerates() {
        let mut rng = ChaCha8Rng::seed_from_u64(1);
        let tiny = gauss(1e-12);
        match tiny.sample_action(&[0.0], &[0.3], &mut rng).unwrap() {
            Action::Continuous { raw, .. } => assert_abs_diff_eq!(raw, 0.0, epsilon = 1e-9),
            other => panic!("{other:?}"),
        }
        let p = Policy::LinearGaussian(LinearGaussianSpec {
            feature_dim: 1,
            xi: 1.0,
            feature_clip: 1.0,
            action_clip: 1.0,
        });
        for _ in 0..1000 {
            let Action::Continuous { clipped, .. } = p.sample_action(&[10.0], &[1.0], &mut rng).unwrap() else {
                unreachable!()
            };
            assert!((-1.0..=1.0).contains(&clipped));
        }
    }

    #[test]
    fn zero_mlp_is_uniform() {
        let p = mlp(4);
        let theta = vec![0.0; p.dim()];
        let probs = p.probabilities(&theta, &[0.3, -0.2, 0.9]).unwrap().unwrap();
        for q in probs {
            assert_abs_diff_eq!(q, 0.25, epsilon = 1e-15);
        }
        assert_abs_diff_eq!(
            p.log_prob(&theta, &[0.3, -0.2, 0.9], &Action::Discrete(2)).unwrap(),
            0.25f64.ln(),
            epsilon = 1e-15
        );
    }

    #[test]
    fn non_finite_params_fault() {
        let p = mlp(3);
        let mut theta = vec![0.0; p.dim()];
        theta[p.dim() - 1] = f64::NAN;
        let mut rng = ChaCha8Rng::seed_from_u64(0);
        assert!(matches!(
            p.sample_action(&theta, &[0.0; 3], &mut rng),
            Err(Error::NonFinite(_))
        ));
        assert!(PolicyParams::new(gauss(1.0), vec![f64::INFINITY]).is_err());
    }

    #[test]
    fn mismatched_inputs_are_rejected() {
        let p = mlp(3);
        let theta = vec![0.0; p.dim()];
        assert!(p.log_prob(&theta, &[0.0; 2], &Action::Discrete(0)).is_err());
        assert!(p.log_prob(&theta, &[0.0; 3], &Action::Discrete(3)).is_err());
        assert!(p.log_prob(&theta, &[0.0; 3], &cont(0.0)).is_err());
        assert!(p.log_prob(&theta[1..], &[0.0; 3], &Action::Discrete(0)).is_err());
    }

    #[test]
    fn extreme_logits_give_neg_infinity() {
        let p = mlp(2);
        let mut theta = vec![0.0; p.dim()];
        // Output bias of action 0 drives its probability to exactly zero.
        let n = p.dim();
        theta[n - 2] = -700.0;
        let lp = p.log_prob(&theta, &[0.0; 3], &Action::Discrete(0)).unwrap();
        assert!(lp.is_finite() && lp < -690.0);
        theta[n - 2] = -1e4;
        let lp = p.log_prob(&theta, &[0.0; 3], &Action::Discrete(0)).unwrap();
        assert_eq!(lp, f64::NEG_INFINITY);
    }

    #[test]
    fn score_bounds_examples() {
        let spec = LinearGaussianSpec {
            feature_dim: 1,
            xi: 1.0,
            feature_clip: 1.0,
            action_clip: 1.0,
        };
        assert_eq!(score_bounds(&spec, 0.0), (1.0, 1.0));
        let wide = LinearGaussianSpec { xi: 2.0, ..spec };
        assert_eq!(score_bounds(&wide, 0.0).1, 0.25 * score_bounds(&spec, 0.0).1);
    }

    #[test]
    fn raw_checkpoint_round_trip_and_header_check() {
        let p = mlp(3);
        let mut rng = ChaCha8Rng::seed_from_u64(5);
        let params = PolicyParams::new(p, p.init_params(&mut rng)).unwrap();
        let mut buf = Vec::new();
        params.write_raw(&mut buf).unwrap();
        assert_eq!(PolicyParams::read_raw(p, buf.as_slice()).unwrap(), params);
        assert!(PolicyParams::read_raw(mlp(4), buf.as_slice()).is_err());
        let json = params.to_json();
        assert_eq!(PolicyParams::from_json(p, &json).unwrap(), params);
    }
}
