//! Replication budgeting for a target relative error of the MC estimator.

use crate::error::{precondition, Error, Result};

/// Conventional pilot size, relative error and risk level.
pub const DEFAULT_N0: usize = 150;
pub const DEFAULT_EPSILON: f64 = 0.05;
pub const DEFAULT_ALPHA: f64 = 0.05;

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct SampleStats {
    pub mean: f64,
    /// Bessel-corrected.
    pub sample_std: f64,
    pub count: usize,
}

impl SampleStats {
    pub fn from_samples(samples: &[f64]) -> Result<Self> {
        if samples.len() < 2 {
            return Err(precondition("sample statistics need at least two samples"));
        }
        // Welford
        let (mut mean, mut m2) = (0.0, 0.0);
        for (i, &x) in samples.iter().enumerate() {
            let d = x - mean;
            mean += d / (i + 1) as f64;
            m2 += d * (x - mean);
        }
        Ok(Self {
            mean,
            sample_std: (m2 / (samples.len() - 1) as f64).max(0.0).sqrt(),
            count: samples.len(),
        })
    }
}

/// Inverse standard normal CDF.
///
/// Acklam's rational approximation (relative error ~1.2e-9) followed by one
/// Halley step against an erfc-based CDF.
pub fn normal_quantile(p: f64) -> Result<f64> {
    if !(p > 0.0 && p < 1.0) {
        return Err(precondition(format!("normal quantile needs p in (0,1), got {p}")));
    }
    const A: [f64; 6] = [
        -3.969_683_028_665_376e1,
        2.209_460_984_245_205e2,
        -2.759_285_104_469_687e2,
        1.383_577_518_672_69e2,
        -3.066_479_806_614_716e1,
        2.506_628_277_459_239,
    ];
    const B: [f64; 5] = [
        -5.447_609_879_822_406e1,
        1.615_858_368_580_409e2,
        -1.556_989_798_598_866e2,
        6.680_131_188_771_972e1,
        -1.328_068_155_288_572e1,
    ];
    const C: [f64; 6] = [
        -7.784_894_002_430_293e-3,
        -3.223_964_580_411_365e-1,
        -2.400_758_277_161_838,
        -2.549_732_539_343_734,
        4.374_664_141_464_968,
        2.938_163_982_698_783,
    ];
    const D: [f64; 4] = [
        7.784_695_709_041_462e-3,
        3.224_671_290_700_398e-1,
        2.445_134_137_142_996,
        3.754_408_661_907_416,
    ];
    const P_LOW: f64 = 0.02425;

    let tail = |q: f64| {
        (((((C[0] * q + C[1]) * q + C[2]) * q + C[3]) * q + C[4]) * q + C[5])
            / ((((D[0] * q + D[1]) * q + D[2]) * q + D[3]) * q + 1.0)
    };
    let x = if p < P_LOW {
        tail((-2.0 * p.ln()).sqrt())
    } else if p <= 1.0 - P_LOW {
        let q = p - 0.5;
        let r = q * q;
        (((((A[0] * r + A[1]) * r + A[2]) * r + A[3]) * r + A[4]) * r + A[5]) * q
            / (((((B[0] * r + B[1]) * r + B[2]) * r + B[3]) * r + B[4]) * r + 1.0)
    } else {
        -tail((-2.0 * (1.0 - p).ln()).sqrt())
    };

    // Halley refinement
    let e = 0.5 * libm::erfc(-x / std::f64::consts::SQRT_2) - p;
    let u = e * (2.0 * std::f64::consts::PI).sqrt() * (x * x / 2.0).exp();
    Ok(x - u / (1.0 + x * u / 2.0))
}

fn check_levels(epsilon: f64, alpha: f64) -> Result<()> {
    if !(epsilon > 0.0 && epsilon < 1.0) || !(alpha > 0.0 && alpha < 1.0) {
        return Err(precondition(format!(
            "epsilon and alpha must lie in (0,1), got {epsilon} and {alpha}"
        )));
    }
    Ok(())
}

/// `ceil((z_{1-alpha/2} * s / (epsilon * mean))^2)`, at least 1.
pub fn required_replications_from_stats(stats: &SampleStats, epsilon: f64, alpha: f64) -> Result<u64> {
    check_levels(epsilon, alpha)?;
    if stats.mean.abs() < 1e-12 {
        return Err(Error::RelativeErrorUndefined { mean: stats.mean });
    }
    let z = normal_quantile(1.0 - alpha / 2.0)?;
    let n = (z * stats.sample_std / (epsilon * stats.mean)).powi(2).ceil();
    Ok((n as u64).max(1))
}

/// Replications needed for one observable, from its pilot samples.
pub fn required_replications(pilot: &[f64], epsilon: f64, alpha: f64) -> Result<u64> {
    required_replications_from_stats(&SampleStats::from_samples(pilot)?, epsilon, alpha)
}

/// Replications needed so that every observable meets the criterion.
pub fn required_replications_vector(pilots: &[Vec<f64>], epsilon: f64, alpha: f64) -> Result<u64> {
    if pilots.is_empty() {
        return Err(precondition("need at least one observable"));
    }
    pilots.iter().try_fold(1, |acc, p| Ok(acc.max(required_replications(p, epsilon, alpha)?)))
}
