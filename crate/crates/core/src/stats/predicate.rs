use serde::{Deserialize, Serialize};

use crate::error::{precondition, Result};
use crate::sim::ObservableVector;

/// Closed interval; a missing bound is unbounded on that side.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Interval {
    #[serde(default)]
    pub lo: Option<f64>,
    #[serde(default)]
    pub hi: Option<f64>,
}

impl Interval {
    pub fn closed(lo: f64, hi: f64) -> Self {
        Self { lo: Some(lo), hi: Some(hi) }
    }

    pub fn at_least(lo: f64) -> Self {
        Self { lo: Some(lo), hi: None }
    }

    pub fn contains(&self, v: f64) -> bool {
        self.lo.is_none_or(|lo| v >= lo) && self.hi.is_none_or(|hi| v <= hi)
    }
}

/// A region of observable space: a conjunction of per-dimension intervals.
/// Dimensions without a constraint (or beyond the constraint list) are free.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SolutionPredicate {
    pub name: String,
    pub constraints: Vec<Option<Interval>>,
}

impl SolutionPredicate {
    pub fn new(name: impl Into<String>, constraints: Vec<Option<Interval>>) -> Result<Self> {
        let p = Self {
            name: name.into(),
            constraints,
        };
        p.validate()?;
        Ok(p)
    }

    /// The whole observable space.
    pub fn everything() -> Self {
        Self {
            name: "all".into(),
            constraints: Vec::new(),
        }
    }

    pub fn validate(&self) -> Result<()> {
        for (d, iv) in self.constraints.iter().enumerate() {
            if let Some(Interval { lo: Some(lo), hi: Some(hi) }) = iv {
                if lo > hi || lo.is_nan() || hi.is_nan() {
                    return Err(precondition(format!(
                        "solution {}: dimension {d} has lo {lo} > hi {hi}",
                        self.name
                    )));
                }
            }
        }
        Ok(())
    }

    pub fn contains(&self, obs: &ObservableVector) -> bool {
        self.constraints
            .iter()
            .zip(obs.values())
            .all(|(c, &v)| c.is_none_or(|iv| iv.contains(v)))
    }
}

/// S1 (both species extinct), S2 (predators extinct, prey alive) and S3
/// (coexistence) over the `[prey, predators, grass]` layout.
pub fn builtin_solutions() -> [SolutionPredicate; 3] {
    let zero = Some(Interval::closed(0.0, 0.0));
    let alive = Some(Interval::at_least(1.0));
    [
        SolutionPredicate {
            name: "S1".into(),
            constraints: vec![zero, zero],
        },
        SolutionPredicate {
            name: "S2".into(),
            constraints: vec![alive, zero],
        },
        SolutionPredicate {
            name: "S3".into(),
            constraints: vec![alive, alive],
        },
    ]
}
