//! Plain Monte Carlo execution and the relative-frequency estimator.

use rayon::prelude::*;

use crate::error::{precondition, Result};
use crate::sim::{ObservableVector, Replication, SimulationModel, Weight};
use crate::stats::SolutionPredicate;

#[derive(Debug, Clone, PartialEq)]
pub struct McResult {
    /// Final-time observables in lineage order.
    pub finals: Vec<ObservableVector>,
    pub n: usize,
    pub horizon: u64,
    pub master_seed: u64,
}

/// Runs `n` independent replications (stream ids `0..n`) to `horizon`.
pub fn mc_run<M: SimulationModel>(model: &M, n: usize, horizon: u64, master_seed: u64) -> Result<McResult> {
    if n == 0 || horizon == 0 {
        return Err(precondition("mc_run needs n >= 1 and horizon >= 1"));
    }
    let finals = (0..n as u64)
        .into_par_iter()
        .map(|id| {
            let mut r = Replication::spawn(model, master_seed, id, Weight::uniform(n))?;
            r.advance(model, horizon, horizon)?;
            Ok(model.observe(&r.state))
        })
        .collect::<Result<Vec<_>>>()?;
    Ok(McResult {
        finals,
        n,
        horizon,
        master_seed,
    })
}

impl McResult {
    pub fn count(&self, predicate: &SolutionPredicate) -> usize {
        self.finals.iter().filter(|o| predicate.contains(o)).count()
    }
}

/// Fraction of finals inside the predicate's region.
pub fn mc_estimate(result: &McResult, predicate: &SolutionPredicate) -> f64 {
    result.count(predicate) as f64 / result.finals.len() as f64
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::sim::test_models::RandomWalk;
    use crate::stats::Interval;

    #[test]
    fn single_replication() {
        let r = mc_run(&RandomWalk, 1, 10, 3).unwrap();
        assert_eq!(r.finals.len(), 1);
        assert_eq!(mc_estimate(&r, &SolutionPredicate::everything()), 1.0);
    }

    #[test]
    fn rejects_empty_budget() {
        assert!(mc_run(&RandomWalk, 0, 10, 3).is_err());
        assert!(mc_run(&RandomWalk, 3, 0, 3).is_err());
    }

    #[test]
    fn equal_seeds_equal_finals() {
        let a = mc_run(&RandomWalk, 40, 30, 11).unwrap();
        let b = mc_run(&RandomWalk, 40, 30, 11).unwrap();
        assert_eq!(a, b);
    }

    #[test]
    fn count_over_n() {
        let finals: Vec<_> = (0..50)
            .map(|i| ObservableVector::new(vec![if i < 3 { 1.0 } else { 0.0 }]).unwrap())
            .collect();
        let r = McResult {
            finals,
            n: 50,
            horizon: 1,
            master_seed: 0,
        };
        let s = SolutionPredicate::new("one", vec![Some(Interval::closed(1.0, 1.0))]).unwrap();
        assert_eq!(mc_estimate(&r, &s), 0.06);
    }

    #[test]
    fn additive_on_disjoint_and_matches_filter() {
        let r = mc_run(&RandomWalk, 200, 25, 5).unwrap();
        let neg = SolutionPredicate::new("neg", vec![Some(Interval { lo: None, hi: Some(-0.5) })]).unwrap();
        let mid = SolutionPredicate::new("mid", vec![Some(Interval::closed(-0.4, 0.4))]).unwrap();
        let union = |o: &ObservableVector| o[0] <= -0.5 || (-0.4..=0.4).contains(&o[0]);
        let brute = r.finals.iter().filter(|o| union(o)).count() as f64 / 200.0;
        let sum = mc_estimate(&r, &neg) + mc_estimate(&r, &mid);
        assert!((sum - brute).abs() < 1e-15);
        let brute_neg = r.finals.iter().filter(|o| o[0] <= -0.5).count() as f64 / 200.0;
        assert_eq!(mc_estimate(&r, &neg), brute_neg);
    }
}
