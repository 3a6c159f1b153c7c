//! Summary statistics and the hypothesis tests used to compare runs.

use serde::{Deserialize, Serialize};
use statrs::distribution::{ContinuousCDF, FisherSnedecor, StudentsT};

use crate::error::{Error, Result};

/// Window of the trailing moving average applied to reward curves.
pub const SMOOTHING_WINDOW: usize = 100;

pub fn mean(x: &[f64]) -> f64 {
    x.iter().sum::<f64>() / x.len() as f64
}

/// Unbiased sample variance.
pub fn sample_variance(x: &[f64]) -> f64 {
    let m = mean(x);
    x.iter().map(|v| (v - m) * (v - m)).sum::<f64>() / (x.len() as f64 - 1.0)
}

pub fn standard_error(x: &[f64]) -> f64 {
    (sample_variance(x) / x.len() as f64).sqrt()
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum Alternative {
    Greater,
    Less,
    TwoSided,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct TestResult {
    pub statistic: f64,
    pub df: f64,
    /// Denominator degrees of freedom of an F statistic.
    pub df_denominator: Option<f64>,
    pub p_value: f64,
}

fn too_few(detail: String) -> Error {
    Error::OutOfRange {
        key: "samples".into(),
        detail,
    }
}

fn tail_p(cdf_at_stat: f64, sf_at_stat: f64, alt: Alternative) -> f64 {
    match alt {
        Alternative::Greater => sf_at_stat,
        Alternative::Less => cdf_at_stat,
        Alternative::TwoSided => (2.0 * cdf_at_stat.min(sf_at_stat)).min(1.0),
    }
}

/// Paired t-test on `a − b`; `Greater` tests `mean(a) > mean(b)`.
pub fn paired_t_test(a: &[f64], b: &[f64], alt: Alternative) -> Result<TestResult> {
    if a.len() != b.len() {
        return Err(Error::DimensionMismatch {
            expected: a.len(),
            got: b.len(),
        });
    }
    if a.len() < 2 {
        return Err(too_few(format!("paired test needs at least 2 pairs, got {}", a.len())));
    }
    let diff: Vec<f64> = a.iter().zip(b).map(|(x, y)| x - y).collect();
    let df = diff.len() as f64 - 1.0;
    let m = mean(&diff);
    let se = standard_error(&diff);
    if se == 0.0 {
        // Constant differences: the sign of the mean decides the test outright.
        let statistic = if m == 0.0 { 0.0 } else { m.signum() * f64::INFINITY };
        let (cdf, sf) = match statistic.partial_cmp(&0.0) {
            Some(std::cmp::Ordering::Greater) => (1.0, 0.0),
            Some(std::cmp::Ordering::Less) => (0.0, 1.0),
            _ => (0.5, 0.5),
        };
        let p_value = if m == 0.0 { 1.0 } else { tail_p(cdf, sf, alt) };
        return Ok(TestResult {
            statistic,
            df,
            df_denominator: None,
            p_value,
        });
    }
    let statistic = m / se;
    let dist = StudentsT::new(0.0, 1.0, df).expect("positive degrees of freedom");
    Ok(TestResult {
        statistic,
        df,
        df_denominator: None,
        p_value: tail_p(dist.cdf(statistic), dist.sf(statistic), alt),
    })
}

/// F-test on `var(a) / var(b)`; `Less` tests `var(a) < var(b)`.
pub fn f_test(a: &[f64], b: &[f64], alt: Alternative) -> Result<TestResult> {
    if a.len() < 2 || b.len() < 2 {
        return Err(too_few("variance test needs at least 2 samples per group".into()));
    }
    let (va, vb) = (sample_variance(a), sample_variance(b));
    if vb == 0.0 {
        return Err(too_few("reference group has zero variance".into()));
    }
    let statistic = va / vb;
    let (df, df_den) = (a.len() as f64 - 1.0, b.len() as f64 - 1.0);
    let dist = FisherSnedecor::new(df, df_den).expect("positive degrees of freedom");
    Ok(TestResult {
        statistic,
        df,
        df_denominator: Some(df_den),
        p_value: tail_p(dist.cdf(statistic), dist.sf(statistic), alt),
    })
}

/// Trailing moving average; the first `window − 1` points average the
/// available prefix.
pub fn smooth(x: &[f64], window: usize) -> Vec<f64> {
    let window = window.max(1);
    let mut out = Vec::with_capacity(x.len());
    let mut acc = 0.0;
    for (i, v) in x.iter().enumerate() {
        acc += v;
        if i >= window {
            acc -= x[i - window];
        }
        out.push(acc / (i + 1).min(window) as f64);
    }
    out
}

/// Mean of the last `window` points (all points if fewer).
pub fn final_window_mean(x: &[f64], window: usize) -> f64 {
    mean(&x[x.len().saturating_sub(window)..])
}

/// Euclidean distance between two equally long curves.
pub fn l2_distance(a: &[f64], b: &[f64]) -> f64 {
    assert_eq!(a.len(), b.len(), "curves must have equal length");
    a.iter().zip(b).map(|(x, y)| (x - y) * (x - y)).sum::<f64>().sqrt()
}
