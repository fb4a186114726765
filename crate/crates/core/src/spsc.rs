//! The SPSC executor: simulate, partition, select, clone.
//!
//! `[0, T]` is cut into `m` stages. After every stage except the last the
//! replications are clustered on their observables, one delegate per
//! cluster survives, and delegates are cloned back to the full budget. A
//! clone of cluster `C` carries `W(C) / n_C`, where `W(C)` is the summed
//! weight of `C`'s members and `n_C` its clone count. Summing final weights
//! inside a region therefore equals the product-of-conditional-frequencies
//! path sum over the recorded partitions.

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::error::{precondition, Error, Result};
use crate::partition::{self, CloneAllocation, Partition};
use crate::rng::RandomStream;
use crate::sim::{ObservableVector, Replication, SimulationModel, Weight};
use crate::stats::SolutionPredicate;

pub const DEFAULT_STAGES: usize = 5;

/// Largest number of cluster paths [`path_sum_oracle`] will enumerate.
pub const PATH_ENUMERATION_LIMIT: f64 = 1e6;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct SpscConfig {
    /// Replication budget `N`.
    pub n: usize,
    /// Number of stages `m`.
    pub stages: usize,
    /// Clusters per partition `k`.
    pub k: usize,
    pub horizon: u64,
    pub master_seed: u64,
    /// Explicit `t(0) = 0 < ... < t(m) = T`; homogeneous split when absent.
    pub stage_boundaries: Option<Vec<u64>>,
    pub max_iter: usize,
    /// Cluster on per-dimension z-scores instead of raw observables.
    pub standardize: bool,
    /// Delegates kept per cluster. Only 1 is supported.
    pub delegates_per_cluster: usize,
}

impl Default for SpscConfig {
    fn default() -> Self {
        Self {
            n: 50,
            stages: DEFAULT_STAGES,
            k: partition::DEFAULT_K,
            horizon: 1000,
            master_seed: 0,
            stage_boundaries: None,
            max_iter: partition::DEFAULT_MAX_ITER,
            standardize: false,
            delegates_per_cluster: 1,
        }
    }
}

/// `t(i) = round(i * T / m)`, bumping any non-increasing entry by one.
pub fn homogeneous_boundaries(horizon: u64, stages: usize) -> Vec<u64> {
    let m = stages as u64;
    let mut b: Vec<u64> = (0..=m).map(|i| (2 * i * horizon + m) / (2 * m)).collect();
    for i in 1..b.len() {
        if b[i] <= b[i - 1] {
            b[i] = b[i - 1] + 1;
        }
    }
    b
}

impl SpscConfig {
    pub fn validate(&self) -> Result<()> {
        let cfg = |m: String| Err(Error::Config(m));
        if self.n == 0 || self.stages == 0 || self.k == 0 || self.horizon == 0 {
            return cfg("n, stages, k and horizon must all be >= 1".into());
        }
        if self.k > self.n {
            return cfg(format!("k = {} exceeds the replication budget n = {}", self.k, self.n));
        }
        if self.max_iter == 0 {
            return cfg("max_iter must be >= 1".into());
        }
        if self.delegates_per_cluster != 1 {
            return cfg("only one delegate per cluster is supported".into());
        }
        match &self.stage_boundaries {
            Some(b) => {
                if b.len() != self.stages + 1 || b[0] != 0 || *b.last().unwrap() != self.horizon {
                    return cfg(format!(
                        "stage boundaries must run from 0 to {} with {} entries",
                        self.horizon,
                        self.stages + 1
                    ));
                }
                if b.windows(2).any(|w| w[1] <= w[0]) {
                    return cfg("stage boundaries must be strictly increasing".into());
                }
            }
            None => {
                if (self.stages as u64) > self.horizon {
                    return cfg(format!(
                        "{} stages cannot fit strictly inside horizon {}",
                        self.stages, self.horizon
                    ));
                }
            }
        }
        Ok(())
    }

    pub fn boundaries(&self) -> Vec<u64> {
        self.stage_boundaries
            .clone()
            .unwrap_or_else(|| homogeneous_boundaries(self.horizon, self.stages))
    }
}

/// Bookkeeping for stage `i`, covering `[t(i), t(i+1)]`.
#[derive(Debug, Clone, PartialEq)]
pub struct StageRecord {
    pub stage: usize,
    pub start: u64,
    pub end: u64,
    /// Clones issued per source cluster at `t(i)`; stage 0 has the single
    /// initial state with all `N` replications.
    pub source_clones: Vec<usize>,
    /// Sum of live weights at `t(i+1)`, before any cloning.
    pub total_weight: Weight,
    /// Lineage ids and observables of the live replications at `t(i+1)`.
    pub lineages: Vec<u64>,
    pub observables: Vec<ObservableVector>,
    /// Partition at `t(i+1)`; `None` on the last stage.
    pub partition: Option<Partition>,
    pub cluster_weights: Vec<Weight>,
    /// Lineage id of each cluster's delegate.
    pub delegates: Vec<u64>,
    pub allocation: Option<CloneAllocation>,
    /// `transitions[source][target]`: clones of `source` that landed in `target`.
    pub transitions: Vec<Vec<usize>>,
}

impl StageRecord {
    pub fn is_final(&self) -> bool {
        self.partition.is_none()
    }

    /// Row-normalized transitions, one row per source cluster.
    pub fn transition_matrix(&self) -> Vec<Vec<f64>> {
        self.transitions
            .iter()
            .zip(&self.source_clones)
            .map(|(row, &n)| row.iter().map(|&c| c as f64 / n as f64).collect())
            .collect()
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct FinalReplication {
    pub observables: ObservableVector,
    pub weight: Weight,
    pub lineage_id: u64,
    /// Cluster at `t(m-1)` this replication was cloned from.
    pub source_cluster: usize,
}

#[derive(Debug, Clone, PartialEq)]
pub struct SpscResult {
    pub finals: Vec<FinalReplication>,
    pub stages: Vec<StageRecord>,
    pub config: SpscConfig,
}

struct Live<S> {
    rep: Replication<S>,
    source: usize,
}

pub fn spsc_run<M: SimulationModel>(model: &M, config: &SpscConfig) -> Result<SpscResult> {
    config.validate()?;
    let n = config.n;
    let seed = config.master_seed;
    let bounds = config.boundaries();
    let horizon = config.horizon;

    let mut live: Vec<Live<M::State>> = (0..n as u64)
        .into_par_iter()
        .map(|id| {
            Replication::spawn(model, seed, id, Weight::uniform(n)).map(|rep| Live { rep, source: 0 })
        })
        .collect::<Result<_>>()?;
    let mut next_stream = n as u64;
    let mut source_clones = vec![n];
    let mut stages = Vec::with_capacity(config.stages);

    for stage in 0..config.stages {
        let (start, end) = (bounds[stage], bounds[stage + 1]);
        live.par_iter_mut()
            .try_for_each(|l| l.rep.advance(model, end - start, horizon))
            .map_err(|e| Error::Stage {
                stage,
                source: Box::new(e),
            })?;

        let points: Vec<ObservableVector> = live.iter().map(|l| model.observe(&l.rep.state)).collect();
        let total_weight: Weight = live.iter().map(|l| &l.rep.weight).sum();
        assert_eq!(total_weight, Weight::one(), "weight leak at stage {stage}");

        if stage + 1 == config.stages {
            stages.push(StageRecord {
                stage,
                start,
                end,
                source_clones,
                total_weight,
                lineages: live.iter().map(|l| l.rep.lineage_id).collect(),
                observables: points.clone(),
                partition: None,
                cluster_weights: Vec::new(),
                delegates: Vec::new(),
                allocation: None,
                transitions: Vec::new(),
            });
            let finals = live
                .into_iter()
                .zip(points)
                .map(|(l, observables)| FinalReplication {
                    observables,
                    weight: l.rep.weight,
                    lineage_id: l.rep.lineage_id,
                    source_cluster: l.source,
                })
                .collect();
            return Ok(SpscResult {
                finals,
                stages,
                config: config.clone(),
            });
        }

        let space = if config.standardize {
            partition::standardize(&points)?
        } else {
            points.clone()
        };
        let lineages: Vec<u64> = live.iter().map(|l| l.rep.lineage_id).collect();
        let mut kmeans_stream = RandomStream::auxiliary(seed, 2 * stage as u64);
        let mut alloc_stream = RandomStream::auxiliary(seed, 2 * stage as u64 + 1);
        let part = partition::kmeans(&space, config.k, config.max_iter, &mut kmeans_stream)?;
        let k_eff = part.k_effective();

        let mut transitions = vec![vec![0usize; k_eff]; source_clones.len()];
        let mut cluster_weights = vec![Weight::zero(); k_eff];
        for (l, &c) in live.iter().zip(&part.assignments) {
            transitions[l.source][c] += 1;
            cluster_weights[c] += &l.rep.weight;
        }
        let delegate_idx = partition::select_delegates(&part, &space)?;
        let allocation = partition::allocate_clones(k_eff, n, &mut alloc_stream)?;
        let delegates: Vec<u64> = delegate_idx.iter().map(|&d| live[d].rep.lineage_id).collect();

        let mut slots: Vec<Option<Live<M::State>>> = live.into_iter().map(Some).collect();
        let mut next = Vec::with_capacity(n);
        for (c, &d) in delegate_idx.iter().enumerate() {
            let share = cluster_weights[c].divided_by(allocation.counts[c]);
            let mut delegate = slots[d].take().expect("delegates are distinct").rep;
            delegate.weight = share.clone();
            for _ in 1..allocation.counts[c] {
                let clone = delegate.deep_clone(next_stream, share.clone())?;
                next_stream += 1;
                next.push(Live { rep: clone, source: c });
            }
            next.push(Live { rep: delegate, source: c });
        }
        next.sort_by_key(|l| l.rep.lineage_id);

        stages.push(StageRecord {
            stage,
            start,
            end,
            source_clones,
            total_weight,
            lineages,
            observables: points,
            delegates,
            partition: Some(part),
            cluster_weights,
            allocation: Some(allocation.clone()),
            transitions,
        });
        source_clones = allocation.counts;
        live = next;
    }
    unreachable!("the final stage returns")
}

/// Total final weight inside the predicate's region, exactly.
pub fn spsc_estimate_exact(result: &SpscResult, predicate: &SolutionPredicate) -> Weight {
    result
        .finals
        .iter()
        .filter(|f| predicate.contains(&f.observables))
        .map(|f| &f.weight)
        .sum()
}

pub fn spsc_estimate(result: &SpscResult, predicate: &SolutionPredicate) -> f64 {
    spsc_estimate_exact(result, predicate).to_f64()
}

/// Fraction of `source`'s clones that landed in cluster `target` at the
/// end of the record's stage.
pub fn conditional_estimate(record: &StageRecord, source: usize, target: usize) -> Result<f64> {
    let row = record.transitions.get(source).ok_or(Error::UnknownCluster {
        index: source,
        len: record.transitions.len(),
    })?;
    let hits = *row.get(target).ok_or(Error::UnknownCluster {
        index: target,
        len: row.len(),
    })?;
    let issued = record.source_clones[source];
    if issued == 0 {
        return Err(precondition(format!("source cluster {source} received no clones")));
    }
    Ok(hits as f64 / issued as f64)
}

/// Literal sum over cluster paths of products of conditional frequencies.
///
/// Uses only transition and clone counts, never weights. The last factor of
/// a path is the share of its final source cluster's clones that end inside
/// the predicate. Exponential in the number of stages.
pub fn path_sum_oracle(result: &SpscResult, predicate: &SolutionPredicate) -> Result<f64> {
    let m = result.stages.len();
    let widest = result
        .stages
        .iter()
        .filter_map(|s| s.partition.as_ref().map(Partition::k_effective))
        .max()
        .unwrap_or(1);
    let paths = (widest as f64).powi(m as i32);
    if paths > PATH_ENUMERATION_LIMIT {
        return Err(Error::EnumerationGuard {
            paths,
            limit: PATH_ENUMERATION_LIMIT,
        });
    }
    let last = &result.stages[m - 1];
    let mut in_region = vec![0usize; last.source_clones.len()];
    for f in &result.finals {
        if predicate.contains(&f.observables) {
            in_region[f.source_cluster] += 1;
        }
    }
    let terminal: Vec<f64> = in_region
        .iter()
        .zip(&last.source_clones)
        .map(|(&hit, &n)| hit as f64 / n as f64)
        .collect();

    fn walk(stages: &[StageRecord], stage: usize, source: usize, terminal: &[f64]) -> Result<f64> {
        if stage + 1 == stages.len() {
            return Ok(terminal[source]);
        }
        let record = &stages[stage];
        let mut total = 0.0;
        for target in 0..record.transitions[source].len() {
            let p = conditional_estimate(record, source, target)?;
            if p > 0.0 {
                total += p * walk(stages, stage + 1, target, terminal)?;
            }
        }
        Ok(total)
    }
    walk(&result.stages, 0, 0, &terminal)
}
