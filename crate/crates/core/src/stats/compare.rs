//! Repeated-campaign comparison of two execution policies.

use rayon::prelude::*;

use super::metrics::{abs_error, aggregate_relative_error, detection};
use super::wmw::{wilcoxon_mann_whitney, Alternative, WmwOutcome};
use super::SolutionPredicate;
use crate::error::{precondition, Result};
use crate::mc::{mc_estimate, mc_run};
use crate::rng::derive_seed;
use crate::sim::SimulationModel;
use crate::spsc::{spsc_estimate, spsc_run, SpscConfig};

/// An execution policy that turns a master seed into per-solution estimates.
pub trait Policy: Sync {
    fn name(&self) -> &str;

    fn estimates(&self, master_seed: u64, solutions: &[SolutionPredicate]) -> Result<Vec<f64>>;
}

pub struct McPolicy<'a, M> {
    pub model: &'a M,
    pub n: usize,
    pub horizon: u64,
}

impl<M: SimulationModel> Policy for McPolicy<'_, M> {
    fn name(&self) -> &str {
        "mc"
    }

    fn estimates(&self, master_seed: u64, solutions: &[SolutionPredicate]) -> Result<Vec<f64>> {
        let r = mc_run(self.model, self.n, self.horizon, master_seed)?;
        Ok(solutions.iter().map(|s| mc_estimate(&r, s)).collect())
    }
}

pub struct SpscPolicy<'a, M> {
    pub model: &'a M,
    /// `master_seed` is replaced per repeat.
    pub config: SpscConfig,
}

impl<M: SimulationModel> Policy for SpscPolicy<'_, M> {
    fn name(&self) -> &str {
        "spsc"
    }

    fn estimates(&self, master_seed: u64, solutions: &[SolutionPredicate]) -> Result<Vec<f64>> {
        let config = SpscConfig {
            master_seed,
            ..self.config.clone()
        };
        let r = spsc_run(self.model, &config)?;
        Ok(solutions.iter().map(|s| spsc_estimate(&r, s)).collect())
    }
}

/// Per-policy results of a campaign.
#[derive(Debug, Clone, PartialEq)]
pub struct PolicyOutcome {
    pub name: String,
    /// `estimates[repeat][solution]`.
    pub estimates: Vec<Vec<f64>>,
    pub seeds: Vec<u64>,
}

impl PolicyOutcome {
    pub fn repeats(&self) -> usize {
        self.estimates.len()
    }

    pub fn detected(&self, repeat: usize, solution: usize) -> bool {
        detection(self.estimates[repeat][solution])
    }

    pub fn detection_rate(&self, solution: usize) -> f64 {
        let hits = (0..self.repeats()).filter(|&r| self.detected(r, solution)).count();
        hits as f64 / self.repeats() as f64
    }

    /// Repeats in which every solution was detected.
    pub fn joint_detections(&self) -> usize {
        (0..self.repeats())
            .filter(|&r| (0..self.estimates[r].len()).all(|s| self.detected(r, s)))
            .count()
    }

    pub fn joint_detection_rate(&self) -> f64 {
        self.joint_detections() as f64 / self.repeats() as f64
    }

    pub fn detections(&self, solution: usize) -> usize {
        (0..self.repeats()).filter(|&r| self.detected(r, solution)).count()
    }

    /// Absolute errors of one solution, in repeat order.
    pub fn abs_errors(&self, solution: usize, reference: f64) -> Vec<f64> {
        self.estimates.iter().map(|e| abs_error(e[solution], reference)).collect()
    }

    pub fn aggregate_errors(&self, references: &[f64]) -> Result<Vec<f64>> {
        self.estimates
            .iter()
            .map(|e| aggregate_relative_error(e, references))
            .collect()
    }

    /// Probability mass outside every solution, per repeat.
    pub fn unclassified(&self) -> Vec<f64> {
        self.estimates
            .iter()
            .map(|e| (1.0 - e.iter().sum::<f64>()).max(0.0))
            .collect()
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct HypothesisTest {
    /// Solution name, or `"aggregate"`.
    pub target: String,
    pub alternative: String,
    pub outcome: WmwOutcome,
}

#[derive(Debug, Clone, PartialEq)]
pub struct ComparisonReport {
    pub solutions: Vec<String>,
    pub references: Vec<f64>,
    pub campaign_seed: u64,
    pub mc: PolicyOutcome,
    pub spsc: PolicyOutcome,
    /// One test per solution, then the aggregate.
    pub tests: Vec<HypothesisTest>,
}

impl ComparisonReport {
    pub fn repeats(&self) -> usize {
        self.mc.repeats()
    }

    pub fn aggregate_test(&self) -> &HypothesisTest {
        self.tests.last().expect("aggregate test is always present")
    }
}

fn run_repeats(policy: &dyn Policy, seeds: &[u64], solutions: &[SolutionPredicate]) -> Result<PolicyOutcome> {
    let estimates = seeds
        .par_iter()
        .map(|&s| policy.estimates(s, solutions))
        .collect::<Result<Vec<_>>>()?;
    Ok(PolicyOutcome {
        name: policy.name().to_string(),
        estimates,
        seeds: seeds.to_vec(),
    })
}

/// Runs both policies `repeats` times and tests `Err_second < Err_first`
/// per solution (absolute error) and on the aggregated relative error.
///
/// Repeat `r` gives the first policy seed `derive_seed(campaign_seed, 2r)`
/// and the second `derive_seed(campaign_seed, 2r + 1)`.
pub fn compare_policies(
    mc: &dyn Policy,
    spsc: &dyn Policy,
    solutions: &[SolutionPredicate],
    references: &[f64],
    repeats: usize,
    campaign_seed: u64,
) -> Result<ComparisonReport> {
    if repeats < 2 {
        return Err(precondition("a comparison needs at least two repeats"));
    }
    if solutions.len() != references.len() || solutions.is_empty() {
        return Err(precondition("need one reference per solution"));
    }
    let mc_seeds: Vec<u64> = (0..repeats as u64).map(|r| derive_seed(campaign_seed, 2 * r)).collect();
    let spsc_seeds: Vec<u64> = (0..repeats as u64).map(|r| derive_seed(campaign_seed, 2 * r + 1)).collect();
    let mc_out = run_repeats(mc, &mc_seeds, solutions)?;
    let spsc_out = run_repeats(spsc, &spsc_seeds, solutions)?;

    let mut tests = Vec::with_capacity(solutions.len() + 1);
    for (s, sol) in solutions.iter().enumerate() {
        let outcome = wilcoxon_mann_whitney(
            &spsc_out.abs_errors(s, references[s]),
            &mc_out.abs_errors(s, references[s]),
            Alternative::Less,
        )?;
        tests.push(HypothesisTest {
            target: sol.name.clone(),
            alternative: format!("Err_{} < Err_{}", spsc.name(), mc.name()),
            outcome,
        });
    }
    let outcome = wilcoxon_mann_whitney(
        &spsc_out.aggregate_errors(references)?,
        &mc_out.aggregate_errors(references)?,
        Alternative::Less,
    )?;
    tests.push(HypothesisTest {
        target: "aggregate".into(),
        alternative: format!("AggErr_{} < AggErr_{}", spsc.name(), mc.name()),
        outcome,
    });

    Ok(ComparisonReport {
        solutions: solutions.iter().map(|s| s.name.clone()).collect(),
        references: references.to_vec(),
        campaign_seed,
        mc: mc_out,
        spsc: spsc_out,
        tests,
    })
}

/// Reference probabilities from one long MC run.
pub fn baseline_references<M: SimulationModel>(
    model: &M,
    replications: usize,
    horizon: u64,
    master_seed: u64,
    solutions: &[SolutionPredicate],
) -> Result<Vec<f64>> {
    let r = mc_run(model, replications, horizon, master_seed)?;
    Ok(solutions.iter().map(|s| mc_estimate(&r, s)).collect())
}
