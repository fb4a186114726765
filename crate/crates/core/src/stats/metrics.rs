use crate::error::{precondition, Result};

/// A solution counts as detected when any probability mass reached it.
pub fn detection(estimate: f64) -> bool {
    estimate > 0.0
}

pub fn abs_error(estimate: f64, reference: f64) -> f64 {
    (estimate - reference).abs()
}

/// Sum over solutions of `|(estimate - reference) / reference|`.
///
/// This is a sum, not a mean; dividing by the solution count would not
/// change any rank-based comparison.
pub fn aggregate_relative_error(estimates: &[f64], references: &[f64]) -> Result<f64> {
    if estimates.len() != references.len() {
        return Err(precondition(format!(
            "{} estimates for {} references",
            estimates.len(),
            references.len()
        )));
    }
    if let Some(r) = references.iter().find(|r| **r <= 0.0 || !r.is_finite()) {
        return Err(precondition(format!("relative error needs positive references, got {r}")));
    }
    Ok(estimates
        .iter()
        .zip(references)
        .map(|(e, r)| ((e - r) / r).abs())
        .sum())
}

/// Standard normal CDF.
pub fn normal_cdf(z: f64) -> f64 {
    0.5 * libm::erfc(-z / std::f64::consts::SQRT_2)
}

/// One-sided pooled two-proportion z-test of `H1: p_b > p_a`.
pub fn two_proportion_greater(hits_a: usize, n_a: usize, hits_b: usize, n_b: usize) -> Result<f64> {
    if n_a == 0 || n_b == 0 || hits_a > n_a || hits_b > n_b {
        return Err(precondition("two-proportion test needs 0 <= hits <= n and n >= 1"));
    }
    let (pa, pb) = (hits_a as f64 / n_a as f64, hits_b as f64 / n_b as f64);
    let pooled = (hits_a + hits_b) as f64 / (n_a + n_b) as f64;
    let se = (pooled * (1.0 - pooled) * (1.0 / n_a as f64 + 1.0 / n_b as f64)).sqrt();
    if se == 0.0 {
        return Ok(1.0);
    }
    Ok(1.0 - normal_cdf((pb - pa) / se))
}
