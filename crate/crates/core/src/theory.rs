//! Closed-form constants, step-size conditions and schedules from the
//! convergence analysis, plus the Gaussian-policy variance bound.

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::policy::{score_bounds, LinearGaussianSpec};

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct ProblemConstants {
    /// `‖∇log π‖ ≤ C_g`
    pub c_g: f64,
    /// `‖∇²log π‖ ≤ C_h`
    pub c_h: f64,
    /// `|r| ≤ R`
    pub r: f64,
    pub gamma: f64,
    pub horizon: usize,
    /// Bound on the importance-weight variance.
    pub m: f64,
    pub n_agents: usize,
    /// `‖W − P‖₂`, in `[0, 1)`.
    pub lambda: f64,
}

impl ProblemConstants {
    pub fn validate(&self) -> Result<()> {
        let bad = |key: &str, detail: String| {
            Err(Error::OutOfRange {
                key: key.into(),
                detail,
            })
        };
        for (key, v) in [("c_g", self.c_g), ("c_h", self.c_h), ("r", self.r), ("m", self.m)] {
            if !(v.is_finite() && v > 0.0) {
                return bad(key, format!("must be positive and finite, got {v}"));
            }
        }
        if !(self.gamma > 0.0 && self.gamma < 1.0) {
            return bad("gamma", format!("must lie in (0, 1), got {}", self.gamma));
        }
        if !(0.0..1.0).contains(&self.lambda) {
            return bad("lambda", format!("must lie in [0, 1), got {}", self.lambda));
        }
        if self.horizon == 0 {
            return bad("horizon", "must be at least 1".into());
        }
        if self.n_agents == 0 {
            return bad("agents", "must be at least 1".into());
        }
        Ok(())
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct DerivedConstants {
    /// Smoothness `L = C_h R / (1−γ)²`.
    pub l: f64,
    /// Gradient bound `G = C_g R / (1−γ)²`.
    pub g: f64,
    /// `σ̄² = C_g² R² / (1−γ)⁴`
    pub sigma_bar_sq: f64,
    /// `C_υ = H (2 H C_g² + C_h)(M + 1)`
    pub c_upsilon: f64,
    /// `D = 96 L² + 96 G² C_υ`
    pub d: f64,
}

impl DerivedConstants {
    /// `L² + G² C_υ`
    fn a(&self) -> f64 {
        self.l * self.l + self.g * self.g * self.c_upsilon
    }

    /// `12844 L² + 9792 G² C_υ`
    fn b(&self) -> f64 {
        12844.0 * self.l * self.l + 9792.0 * self.g * self.g * self.c_upsilon
    }
}

pub fn derive_constants(pc: &ProblemConstants) -> DerivedConstants {
    let one_minus = 1.0 - pc.gamma;
    let sq = one_minus * one_minus;
    let l = pc.c_h * pc.r / sq;
    let g = pc.c_g * pc.r / sq;
    let h = pc.horizon as f64;
    let c_upsilon = h * (2.0 * h * pc.c_g * pc.c_g + pc.c_h) * (pc.m + 1.0);
    DerivedConstants {
        l,
        g,
        sigma_bar_sq: pc.c_g * pc.c_g * pc.r * pc.r / (sq * sq),
        c_upsilon,
        d: 96.0 * l * l + 96.0 * g * g * c_upsilon,
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct EtaBound {
    pub value: f64,
    /// The three candidate bounds; `None` where a term degenerates at `λ = 0`.
    pub terms: [Option<f64>; 3],
    /// Set when `λ = 0` with several agents, i.e. only the last term applies.
    pub flagged: bool,
}

/// Largest step size admitted by the main convergence theorem.
pub fn theorem1_eta_max(dc: &DerivedConstants, lambda: f64, n_agents: usize) -> EtaBound {
    let a = dc.a();
    let third = 1.0 / (6.0 * (6.0 * a).sqrt());
    let terms = if lambda == 0.0 {
        [None, None, Some(third)]
    } else {
        let gap = 1.0 - lambda * lambda;
        let first = gap * gap / (lambda * dc.b().sqrt());
        let second = (n_agents as f64 * gap).sqrt() * lambda / (31.0 * a.sqrt());
        [Some(first), Some(second), Some(third)]
    };
    let flagged = lambda == 0.0 && n_agents > 1;
    if flagged {
        log::warn!("λ = 0 with {n_agents} agents: only the λ-free step-size term applies");
    }
    EtaBound {
        value: terms.iter().flatten().copied().fold(f64::INFINITY, f64::min),
        terms,
        flagged,
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct BetaChoice {
    pub beta: f64,
    /// `β ≥ 1`: outside the theorem's hypotheses.
    pub flagged: bool,
}

/// `β = D η² / N`
pub fn beta_from_eta(dc: &DerivedConstants, eta: f64, n_agents: usize) -> BetaChoice {
    let beta = dc.d * eta * eta / n_agents as f64;
    let flagged = beta >= 1.0;
    if flagged {
        log::warn!("momentum coefficient {beta} is not below 1");
    }
    BetaChoice { beta, flagged }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Schedule {
    pub eta: f64,
    pub beta: f64,
    pub batch: usize,
    /// Iteration count above which the schedule's guarantee applies.
    pub k_threshold: f64,
    /// `K` is below `k_threshold`.
    pub below_threshold: bool,
    /// `λ = 0`: the threshold terms with `λ` in a denominator are dropped.
    pub lambda_degenerate: bool,
}

/// Smallest `b ≥ 1` with `b³ N² ≥ K`, i.e. `⌈K^{1/3} / N^{2/3}⌉` without
/// rounding error.
fn cube_root_batch(n_agents: usize, k: usize) -> usize {
    let n2 = (n_agents as u128) * (n_agents as u128);
    let k = k as u128;
    let guess = ((k as f64) / (n2 as f64)).cbrt().floor().max(1.0) as u128;
    let mut b = guess.saturating_sub(1).max(1);
    while b * b * b * n2 < k {
        b += 1;
    }
    b as usize
}

fn check_schedule_inputs(n_agents: usize, k: usize) -> Result<()> {
    if n_agents == 0 {
        return Err(Error::OutOfRange {
            key: "agents".into(),
            detail: "must be at least 1".into(),
        });
    }
    if k == 0 {
        return Err(Error::OutOfRange {
            key: "episodes".into(),
            detail: "must be at least 1".into(),
        });
    }
    Ok(())
}

/// Mini-batch-initialized schedule:
/// `η = N^{2/3} / (8 L K^{1/3})`, `β = D N^{1/3} / (64 L² K^{2/3})`,
/// `|B| = ⌈K^{1/3} / N^{2/3}⌉`.
pub fn corollary1_schedule(dc: &DerivedConstants, lambda: f64, n_agents: usize, k: usize) -> Result<Schedule> {
    check_schedule_inputs(n_agents, k)?;
    let (n, kf) = (n_agents as f64, k as f64);
    let l = dc.l;
    let l3 = l * l * l;
    let eta = n.powf(2.0 / 3.0) / (8.0 * l * kf.powf(1.0 / 3.0));
    let beta = dc.d * n.powf(1.0 / 3.0) / (64.0 * l * l * kf.powf(2.0 / 3.0));
    let gap = 1.0 - lambda * lambda;
    let lambda_degenerate = lambda == 0.0;
    let mut terms = vec![n * n * dc.d.powf(1.5) / (512.0 * l3)];
    if !lambda_degenerate {
        terms.push(29791.0 * n.sqrt() * dc.a().powf(1.5) / (512.0 * l3 * lambda.powi(3) * gap.powf(1.5)));
    }
    terms.push(dc.b().powf(1.5) * n * n * lambda.powi(3) / (512.0 * l3 * gap.powi(6)));
    Ok(finish(
        eta,
        beta,
        cube_root_batch(n_agents, k),
        &terms,
        kf,
        lambda_degenerate,
    ))
}

/// Single-trajectory-initialized schedule:
/// `η = N^{3/4} / (8 L K^{1/4})`, `β = D N^{1/2} / (64 L² K^{1/2})`, `|B| = 1`.
pub fn corollary2_schedule(dc: &DerivedConstants, lambda: f64, n_agents: usize, k: usize) -> Result<Schedule> {
    check_schedule_inputs(n_agents, k)?;
    let (n, kf) = (n_agents as f64, k as f64);
    let l = dc.l;
    let l4 = l * l * l * l;
    let eta = n.powf(0.75) / (8.0 * l * kf.powf(0.25));
    let beta = dc.d * n.sqrt() / (64.0 * l * l * kf.sqrt());
    let gap = 1.0 - lambda * lambda;
    let lambda_degenerate = lambda == 0.0;
    let mut terms = vec![n.powi(3) * dc.d * dc.d / (4096.0 * l4)];
    if !lambda_degenerate {
        let a = dc.a();
        terms.push(923521.0 * n * a * a / (4096.0 * l4 * gap * gap * lambda.powi(4)));
    }
    let b = dc.b();
    terms.push(b * b * lambda.powi(4) * n.powi(3) / (4096.0 * l4 * gap.powi(8)));
    Ok(finish(eta, beta, 1, &terms, kf, lambda_degenerate))
}

fn finish(eta: f64, beta: f64, batch: usize, terms: &[f64], k: f64, lambda_degenerate: bool) -> Schedule {
    let k_threshold = terms.iter().copied().fold(0.0, f64::max);
    let below_threshold = k < k_threshold;
    if below_threshold {
        log::warn!("K = {k} is below the schedule's threshold {k_threshold}");
    }
    if beta >= 1.0 {
        log::warn!("schedule momentum coefficient {beta} is not below 1");
    }
    Schedule {
        eta,
        beta,
        batch,
        k_threshold,
        below_threshold,
        lambda_degenerate,
    }
}

/// `8 β σ̄² / N + 204 λ² β² σ̄² / (1−λ²)³`
pub fn steady_state_error(dc: &DerivedConstants, beta: f64, lambda: f64, n_agents: usize) -> f64 {
    let gap = 1.0 - lambda * lambda;
    8.0 * beta * dc.sigma_bar_sq / n_agents as f64
        + 204.0 * lambda * lambda * beta * beta * dc.sigma_bar_sq / (gap * gap * gap)
}

/// Problem constants for a linear-Gaussian policy with `‖θ‖ ≤ x_max`.
#[allow(clippy::too_many_arguments)]
pub fn gaussian_constants(
    spec: &LinearGaussianSpec,
    x_max: f64,
    r: f64,
    gamma: f64,
    horizon: usize,
    m: f64,
    n_agents: usize,
    lambda: f64,
) -> ProblemConstants {
    let (c_g, c_h) = score_bounds(spec, x_max);
    ProblemConstants {
        c_g,
        c_h,
        r,
        gamma,
        horizon,
        m,
        n_agents,
        lambda,
    }
}

fn gaussian_variance_prefactor(r: f64, c_f: f64, xi: f64, gamma: f64) -> f64 {
    r * r * c_f * c_f / ((1.0 - gamma) * (1.0 - gamma) * xi * xi)
}

/// Variance bound for the linear-Gaussian policy-gradient estimator,
/// `R²C_f²/((1−γ)²ξ²) · ((1−γ^{2H})/(1−γ²) + Hγ^{2H} − 2γ^H(1−γ^H)/(1−γ))`.
///
/// The `Hγ^{2H}` term enters with a plus sign; with a minus sign the bracket
/// turns negative for moderate `H` and `γ` (see
/// [`gaussian_variance_bound_minus_variant`]).
pub fn gaussian_variance_bound(r: f64, c_f: f64, xi: f64, gamma: f64, horizon: usize) -> f64 {
    let (a, b, c) = bracket_terms(gamma, horizon);
    gaussian_variance_prefactor(r, c_f, xi, gamma) * (a + b - c)
}

/// The same bound with `−Hγ^{2H}`. Negative for e.g. `H = 5, γ = 0.9`, so it
/// cannot bound a variance; kept for comparison.
pub fn gaussian_variance_bound_minus_variant(r: f64, c_f: f64, xi: f64, gamma: f64, horizon: usize) -> f64 {
    let (a, b, c) = bracket_terms(gamma, horizon);
    gaussian_variance_prefactor(r, c_f, xi, gamma) * (a - b - c)
}

fn bracket_terms(gamma: f64, horizon: usize) -> (f64, f64, f64) {
    let h = horizon as i32;
    let gh = gamma.powi(h);
    let g2h = gh * gh;
    let geometric = |ratio: f64, terms: i32| {
        // Σ_{t<terms} ratio^t, exact at ratio = 1.
        if ratio == 1.0 {
            terms as f64
        } else {
            (1.0 - ratio.powi(terms)) / (1.0 - ratio)
        }
    };
    (
        geometric(gamma * gamma, h),
        horizon as f64 * g2h,
        2.0 * gh * geometric(gamma, h),
    )
}

/// Everything the `theory` command prints and the run sidecar stores.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TheoryReport {
    pub problem: ProblemConstants,
    pub derived: DerivedConstants,
    pub eta_max: EtaBound,
    pub beta_at_eta: Option<BetaChoice>,
    pub corollary1: Schedule,
    pub corollary2: Schedule,
    pub steady_state_error: f64,
}

/// `eta` and `beta` are the values a run actually uses.
pub fn report(pc: &ProblemConstants, eta: f64, beta: f64, k: usize) -> Result<TheoryReport> {
    pc.validate()?;
    let dc = derive_constants(pc);
    Ok(TheoryReport {
        problem: *pc,
        derived: dc,
        eta_max: theorem1_eta_max(&dc, pc.lambda, pc.n_agents),
        beta_at_eta: (eta > 0.0).then(|| beta_from_eta(&dc, eta, pc.n_agents)),
        corollary1: corollary1_schedule(&dc, pc.lambda, pc.n_agents, k)?,
        corollary2: corollary2_schedule(&dc, pc.lambda, pc.n_agents, k)?,
        steady_state_error: steady_state_error(&dc, beta, pc.lambda, pc.n_agents),
    })
}
