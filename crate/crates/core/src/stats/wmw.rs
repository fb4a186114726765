//! Wilcoxon–Mann–Whitney rank-sum test.

use serde::{Deserialize, Serialize};

use super::metrics::normal_cdf;
use crate::error::{precondition, Result};

/// Largest smaller sample for which the exact null distribution is used.
pub const EXACT_MAX_SMALLER: usize = 8;
/// Largest pooled sample for the exact branch; beyond it the subset-sum
/// table gets expensive and the normal approximation is used.
pub const EXACT_MAX_TOTAL: usize = 1000;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Alternative {
    /// `a` tends to be smaller than `b`.
    Less,
    Greater,
    TwoSided,
}

impl Alternative {
    pub fn flipped(self) -> Self {
        match self {
            Self::Less => Self::Greater,
            Self::Greater => Self::Less,
            Self::TwoSided => Self::TwoSided,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct WmwOutcome {
    /// Mann–Whitney U of the first sample: rank sum minus `n_a (n_a + 1) / 2`.
    pub u: f64,
    pub p_value: f64,
    pub exact: bool,
    /// Every value identical across both samples; `p_value` is 1.
    pub degenerate: bool,
}

/// Midranks (1-based) of the pooled sample and the tie-group sizes.
fn midranks(pooled: &[f64]) -> (Vec<f64>, Vec<usize>) {
    let mut order: Vec<usize> = (0..pooled.len()).collect();
    order.sort_by(|&i, &j| pooled[i].total_cmp(&pooled[j]));
    let mut ranks = vec![0.0; pooled.len()];
    let mut ties = Vec::new();
    let mut i = 0;
    while i < order.len() {
        let mut j = i + 1;
        while j < order.len() && pooled[order[j]] == pooled[order[i]] {
            j += 1;
        }
        let rank = (i + j + 1) as f64 / 2.0;
        for &o in &order[i..j] {
            ranks[o] = rank;
        }
        if j - i > 1 {
            ties.push(j - i);
        }
        i = j;
    }
    (ranks, ties)
}

/// Null distribution of U for tie-free samples: `counts[u]` is the number
/// of rank assignments with that U, out of `C(n_a + n_b, n_a)`.
fn exact_u_counts(n_a: usize, n_b: usize) -> Vec<u128> {
    // ways[j][s]: subsets of size j of ranks seen so far with rank sum s
    let total = n_a + n_b;
    let max_sum: usize = (total - n_a + 1..=total).sum();
    let mut ways = vec![vec![0u128; max_sum + 1]; n_a + 1];
    ways[0][0] = 1;
    for rank in 1..=total {
        for j in (1..=n_a.min(rank)).rev() {
            let (lo, hi) = ways.split_at_mut(j);
            for s in (rank..=max_sum).rev() {
                hi[0][s] += lo[j - 1][s - rank];
            }
        }
    }
    let offset = n_a * (n_a + 1) / 2;
    ways[n_a][offset..=offset + n_a * n_b].to_vec()
}

pub fn wilcoxon_mann_whitney(a: &[f64], b: &[f64], alternative: Alternative) -> Result<WmwOutcome> {
    if a.is_empty() || b.is_empty() {
        return Err(precondition("rank-sum test needs two non-empty samples"));
    }
    if a.iter().chain(b).any(|v| v.is_nan()) {
        return Err(precondition("rank-sum test got NaN"));
    }
    let (na, nb) = (a.len(), b.len());
    let pooled: Vec<f64> = a.iter().chain(b).copied().collect();
    let (ranks, ties) = midranks(&pooled);
    let rank_sum_a: f64 = ranks[..na].iter().sum();
    let u = rank_sum_a - (na * (na + 1)) as f64 / 2.0;

    if ties.first() == Some(&(na + nb)) {
        return Ok(WmwOutcome {
            u,
            p_value: 1.0,
            exact: false,
            degenerate: true,
        });
    }

    if ties.is_empty() && na.min(nb) <= EXACT_MAX_SMALLER && na + nb <= EXACT_MAX_TOTAL {
        let counts = exact_u_counts(na, nb);
        let total: u128 = counts.iter().sum();
        let u_obs = u.round() as usize;
        let lower: u128 = counts[..=u_obs].iter().sum();
        let upper: u128 = counts[u_obs..].iter().sum();
        let p_lower = lower as f64 / total as f64;
        let p_upper = upper as f64 / total as f64;
        let p = match alternative {
            Alternative::Less => p_lower,
            Alternative::Greater => p_upper,
            Alternative::TwoSided => (2.0 * p_lower.min(p_upper)).min(1.0),
        };
        return Ok(WmwOutcome {
            u,
            p_value: p,
            exact: true,
            degenerate: false,
        });
    }

    let n = (na + nb) as f64;
    let mean = (na * nb) as f64 / 2.0;
    let tie_term: f64 = ties.iter().map(|&t| (t * t * t - t) as f64).sum::<f64>() / (n * (n - 1.0));
    let sd = ((na * nb) as f64 / 12.0 * ((n + 1.0) - tie_term)).sqrt();
    let p = match alternative {
        Alternative::Less => normal_cdf((u - mean + 0.5) / sd),
        Alternative::Greater => 1.0 - normal_cdf((u - mean - 0.5) / sd),
        Alternative::TwoSided => {
            let z = ((u - mean).abs() - 0.5).max(0.0) / sd;
            (2.0 * (1.0 - normal_cdf(z))).min(1.0)
        }
    };
    Ok(WmwOutcome {
        u,
        // keep p in (0, 1] when the tail underflows
        p_value: p.clamp(f64::MIN_POSITIVE, 1.0),
        exact: false,
        degenerate: false,
    })
}
