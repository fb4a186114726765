//! Solution predicates, error metrics, the rank-sum test, and the
//! policy comparison campaign.

mod compare;
mod metrics;
mod predicate;
mod wmw;

pub use compare::{
    baseline_references, compare_policies, ComparisonReport, HypothesisTest, McPolicy, Policy,
    PolicyOutcome, SpscPolicy,
};
pub use metrics::{abs_error, aggregate_relative_error, detection, normal_cdf, two_proportion_greater};
pub use predicate::{builtin_solutions, Interval, SolutionPredicate};
pub use wmw::{wilcoxon_mann_whitney, Alternative, WmwOutcome};
