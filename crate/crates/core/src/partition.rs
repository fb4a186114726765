//! Stage-boundary partitioning: k-means over observables, one delegate per
//! cluster, and clone-count allocation.

use rand::seq::index;
use rand::Rng;

use crate::error::{precondition, Result};
use crate::rng::RandomStream;
use crate::sim::ObservableVector;

pub const DEFAULT_K: usize = 15;
pub const DEFAULT_MAX_ITER: usize = 100;

#[derive(Debug, Clone, PartialEq)]
pub struct Partition {
    /// Cluster index per input point, in input order.
    pub assignments: Vec<usize>,
    /// One centroid per non-empty cluster.
    pub centroids: Vec<ObservableVector>,
    /// Within-cluster sum of squares of the returned partition.
    pub wcss: f64,
    /// WCSS after each centroid update, in iteration order.
    pub wcss_trace: Vec<f64>,
    pub iterations: usize,
    pub converged: bool,
}

impl Partition {
    pub fn k_effective(&self) -> usize {
        self.centroids.len()
    }

    pub fn members(&self, cluster: usize) -> impl Iterator<Item = usize> + '_ {
        self.assignments
            .iter()
            .enumerate()
            .filter(move |(_, c)| **c == cluster)
            .map(|(i, _)| i)
    }

    pub fn cluster_sizes(&self) -> Vec<usize> {
        let mut sizes = vec![0; self.k_effective()];
        for &c in &self.assignments {
            sizes[c] += 1;
        }
        sizes
    }
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct CloneAllocation {
    pub counts: Vec<usize>,
}

impl CloneAllocation {
    pub fn total(&self) -> usize {
        self.counts.iter().sum()
    }
}

fn sq_dist(a: &[f64], b: &[f64]) -> f64 {
    a.iter().zip(b).map(|(x, y)| (x - y) * (x - y)).sum()
}

fn count_distinct(points: &[ObservableVector]) -> usize {
    let mut keys: Vec<Vec<u64>> = points
        .iter()
        .map(|p| p.values().iter().map(|v| (v + 0.0).to_bits()).collect())
        .collect();
    keys.sort_unstable();
    keys.dedup();
    keys.len()
}

/// Nearest centroid per point; ties go to the lowest centroid index.
fn assign(points: &[ObservableVector], centroids: &[Vec<f64>]) -> Vec<usize> {
    points
        .iter()
        .map(|p| {
            let mut best = 0;
            let mut best_d = f64::INFINITY;
            for (c, centroid) in centroids.iter().enumerate() {
                let d = sq_dist(p.values(), centroid);
                if d < best_d {
                    best_d = d;
                    best = c;
                }
            }
            best
        })
        .collect()
}

fn wcss(points: &[ObservableVector], assignments: &[usize], centroids: &[Vec<f64>]) -> f64 {
    points
        .iter()
        .zip(assignments)
        .map(|(p, &c)| sq_dist(p.values(), &centroids[c]))
        .sum()
}

/// Cluster means; `None` for empty clusters.
fn means(points: &[ObservableVector], assignments: &[usize], k: usize) -> Vec<Option<Vec<f64>>> {
    let dim = points[0].dimension();
    let mut sums = vec![vec![0.0; dim]; k];
    let mut counts = vec![0usize; k];
    for (p, &c) in points.iter().zip(assignments) {
        counts[c] += 1;
        for (s, v) in sums[c].iter_mut().zip(p.values()) {
            *s += v;
        }
    }
    sums.into_iter()
        .zip(counts)
        .map(|(s, n)| (n > 0).then(|| s.into_iter().map(|v| v / n as f64).collect()))
        .collect()
}

fn kmeans_pp_seed(points: &[ObservableVector], k: usize, stream: &mut RandomStream) -> Vec<Vec<f64>> {
    let mut centroids = Vec::with_capacity(k);
    let first = stream.random_range(0..points.len());
    centroids.push(points[first].values().to_vec());
    let mut d2: Vec<f64> = points.iter().map(|p| sq_dist(p.values(), &centroids[0])).collect();
    while centroids.len() < k {
        let total: f64 = d2.iter().sum();
        // callers guarantee k <= distinct points, so total > 0 here
        let target = stream.random::<f64>() * total;
        let mut acc = 0.0;
        let mut pick = None;
        for (i, &d) in d2.iter().enumerate() {
            if d <= 0.0 {
                continue;
            }
            acc += d;
            pick = Some(i);
            if acc > target {
                break;
            }
        }
        let pick = pick.expect("a point with positive distance exists");
        let c = points[pick].values().to_vec();
        for (d, p) in d2.iter_mut().zip(points) {
            *d = d.min(sq_dist(p.values(), &c));
        }
        centroids.push(c);
    }
    centroids
}

/// Lloyd's algorithm with k-means++ seeding.
///
/// `k` is capped at the number of distinct points. Iteration stops at an
/// assignment fixpoint or after `max_iter` centroid updates. An empty
/// cluster is re-seeded once per iteration at the point farthest from its
/// current centroid (taken from a cluster with at least two members);
/// clusters still empty at the end are dropped.
pub fn kmeans(
    points: &[ObservableVector],
    k: usize,
    max_iter: usize,
    stream: &mut RandomStream,
) -> Result<Partition> {
    if points.is_empty() {
        return Err(precondition("kmeans needs at least one point"));
    }
    if k == 0 || max_iter == 0 {
        return Err(precondition("kmeans needs k >= 1 and max_iter >= 1"));
    }
    let dim = points[0].dimension();
    if points.iter().any(|p| p.dimension() != dim) {
        return Err(precondition("points have mixed dimensions"));
    }

    let k = k.min(count_distinct(points));
    let mut centroids = kmeans_pp_seed(points, k, stream);
    let mut assignments = assign(points, &centroids);
    let mut trace = Vec::new();
    let mut converged = false;
    let mut iterations = 0;

    while iterations < max_iter {
        iterations += 1;
        let mut updated = means(points, &assignments, k);
        if updated.iter().any(Option::is_none) {
            repair_empty(points, &mut assignments, &centroids, &mut updated);
            updated = means(points, &assignments, k);
        }
        for (c, m) in centroids.iter_mut().zip(updated) {
            if let Some(m) = m {
                *c = m;
            }
        }
        trace.push(wcss(points, &assignments, &centroids));
        let next = assign(points, &centroids);
        if next == assignments {
            converged = true;
            break;
        }
        assignments = next;
    }

    // drop empty clusters, keeping the relative order of the rest
    let sizes = {
        let mut s = vec![0usize; k];
        for &c in &assignments {
            s[c] += 1;
        }
        s
    };
    let mut relabel = vec![usize::MAX; k];
    let mut kept = Vec::new();
    for (c, centroid) in centroids.into_iter().enumerate() {
        if sizes[c] > 0 {
            relabel[c] = kept.len();
            kept.push(ObservableVector::new(centroid)?);
        }
    }
    let assignments: Vec<usize> = assignments.iter().map(|&c| relabel[c]).collect();
    let final_wcss = points
        .iter()
        .zip(&assignments)
        .map(|(p, &c)| p.squared_distance(kept[c].values()))
        .sum();

    Ok(Partition {
        assignments,
        centroids: kept,
        wcss: final_wcss,
        wcss_trace: trace,
        iterations,
        converged,
    })
}

fn repair_empty(
    points: &[ObservableVector],
    assignments: &mut [usize],
    centroids: &[Vec<f64>],
    updated: &mut [Option<Vec<f64>>],
) {
    let k = centroids.len();
    let mut sizes = vec![0usize; k];
    for &c in assignments.iter() {
        sizes[c] += 1;
    }
    let empties: Vec<usize> = (0..k).filter(|&c| updated[c].is_none()).collect();
    for empty in empties {
        let donor = points
            .iter()
            .enumerate()
            .filter(|(i, _)| sizes[assignments[*i]] >= 2)
            .map(|(i, p)| (i, sq_dist(p.values(), &centroids[assignments[i]])))
            .fold(None, |best: Option<(usize, f64)>, (i, d)| match best {
                Some((_, bd)) if bd >= d => best,
                _ => Some((i, d)),
            });
        if let Some((i, _)) = donor {
            sizes[assignments[i]] -= 1;
            sizes[empty] += 1;
            assignments[i] = empty;
            updated[empty] = Some(points[i].values().to_vec());
        }
    }
}

/// Per-dimension z-scores; constant dimensions map to zero.
pub fn standardize(points: &[ObservableVector]) -> Result<Vec<ObservableVector>> {
    if points.is_empty() {
        return Ok(Vec::new());
    }
    let n = points.len() as f64;
    let dim = points[0].dimension();
    let mut mean = vec![0.0; dim];
    for p in points {
        for (m, v) in mean.iter_mut().zip(p.values()) {
            *m += v / n;
        }
    }
    let mut sd = vec![0.0; dim];
    for p in points {
        for ((s, v), m) in sd.iter_mut().zip(p.values()).zip(&mean) {
            *s += (v - m) * (v - m) / n;
        }
    }
    let sd: Vec<f64> = sd.into_iter().map(f64::sqrt).collect();
    points
        .iter()
        .map(|p| {
            let z = p
                .values()
                .iter()
                .zip(&mean)
                .zip(&sd)
                .map(|((v, m), s)| if *s > 0.0 { (v - m) / s } else { 0.0 })
                .collect();
            ObservableVector::new(z)
        })
        .collect()
}

/// Index of the member nearest to each centroid (Euclidean); ties go to
/// the lowest index.
pub fn select_delegates(partition: &Partition, points: &[ObservableVector]) -> Result<Vec<usize>> {
    if partition.assignments.len() != points.len() {
        return Err(precondition(format!(
            "partition covers {} points, got {}",
            partition.assignments.len(),
            points.len()
        )));
    }
    let mut best: Vec<Option<(usize, f64)>> = vec![None; partition.k_effective()];
    for (i, (p, &c)) in points.iter().zip(&partition.assignments).enumerate() {
        let d = p.squared_distance(partition.centroids[c].values());
        match best[c] {
            Some((_, bd)) if bd <= d => {}
            _ => best[c] = Some((i, d)),
        }
    }
    best.into_iter()
        .enumerate()
        .map(|(c, b)| b.map(|(i, _)| i).ok_or_else(|| precondition(format!("cluster {c} is empty"))))
        .collect()
}

/// `n / k` clones per delegate, plus one more for `n mod k` delegates
/// drawn uniformly without replacement.
pub fn allocate_clones(k: usize, n: usize, stream: &mut RandomStream) -> Result<CloneAllocation> {
    if k == 0 {
        return Err(precondition("clone allocation needs at least one delegate"));
    }
    if k > n {
        return Err(precondition(format!(
            "{k} delegates cannot each receive a clone from a budget of {n}"
        )));
    }
    let base = n / k;
    let remainder = n - k * base;
    let mut counts = vec![base; k];
    for i in index::sample(stream, k, remainder) {
        counts[i] += 1;
    }
    Ok(CloneAllocation { counts })
}
