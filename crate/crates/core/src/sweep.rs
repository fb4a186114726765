//! Parameter sweep over the prey-predator model, used to pick a
//! configuration whose coexistence probability at the horizon sits in a
//! target band.

use serde::{Deserialize, Serialize};

use crate::error::{precondition, Result};
use crate::mc::{mc_estimate, mc_run};
use crate::prey_predator::{PreyPredator, PreyPredatorConfig};
use crate::stats::builtin_solutions;

pub const COEXISTENCE_BAND: (f64, f64) = (0.95, 0.99);

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Parameter {
    /// Sets both grid sides.
    GridSide,
    InitialPrey,
    InitialPredators,
    PreyEnergyGain,
    /// Also sets `initial_predator_energy_max` to twice the gain.
    PredatorEnergyGain,
    PreyReproduceProb,
    PredatorReproduceProb,
    GrassRegrowthSteps,
}

impl Parameter {
    pub fn apply(self, cfg: &mut PreyPredatorConfig, value: f64) {
        let count = value.round().max(0.0) as u32;
        match self {
            Parameter::GridSide => {
                cfg.grid_width = count;
                cfg.grid_height = count;
            }
            Parameter::InitialPrey => cfg.initial_prey = count,
            Parameter::InitialPredators => cfg.initial_predators = count,
            Parameter::PreyEnergyGain => cfg.prey_energy_gain = value,
            Parameter::PredatorEnergyGain => {
                cfg.predator_energy_gain = value;
                cfg.initial_predator_energy_max = 2.0 * value;
            }
            Parameter::PreyReproduceProb => cfg.prey_reproduce_prob = value,
            Parameter::PredatorReproduceProb => cfg.predator_reproduce_prob = value,
            Parameter::GrassRegrowthSteps => cfg.grass_regrowth_steps = count,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Axis {
    pub parameter: Parameter,
    pub values: Vec<f64>,
}

/// The sweep range around the tuned default; any re-tune stays inside it.
pub fn default_axes() -> Vec<Axis> {
    let axis = |parameter, values: &[f64]| Axis {
        parameter,
        values: values.to_vec(),
    };
    vec![
        axis(Parameter::PredatorEnergyGain, &[56.0, 64.0, 72.0]),
        axis(Parameter::PredatorReproduceProb, &[0.025, 0.029, 0.033]),
        axis(Parameter::PreyReproduceProb, &[0.046, 0.054, 0.062]),
        axis(Parameter::GrassRegrowthSteps, &[42.0, 50.0, 58.0]),
    ]
}

/// Cartesian product of the axes applied to `base`, first axis slowest.
pub fn grid(base: &PreyPredatorConfig, axes: &[Axis]) -> Vec<PreyPredatorConfig> {
    let mut out = vec![base.clone()];
    for axis in axes {
        out = out
            .iter()
            .flat_map(|cfg| {
                axis.values.iter().map(move |&v| {
                    let mut c = cfg.clone();
                    axis.parameter.apply(&mut c, v);
                    c
                })
            })
            .collect();
    }
    out
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct SweepPoint {
    pub config: PreyPredatorConfig,
    /// Estimated probabilities of the builtin solutions, in order.
    pub probabilities: Vec<f64>,
    /// Mass in none of the solutions.
    pub unclassified: f64,
}

impl SweepPoint {
    pub fn coexistence(&self) -> f64 {
        self.probabilities[2]
    }

    pub fn in_band(&self, (lo, hi): (f64, f64)) -> bool {
        (lo..=hi).contains(&self.coexistence())
    }
}

/// MC estimates of the builtin solutions for each candidate.
pub fn evaluate(candidates: &[PreyPredatorConfig], replications: usize, horizon: u64, seed: u64) -> Result<Vec<SweepPoint>> {
    if replications == 0 {
        return Err(precondition("a sweep needs at least one replication per point"));
    }
    let solutions = builtin_solutions();
    candidates
        .iter()
        .map(|cfg| {
            let model = PreyPredator::new(cfg.clone())?;
            let run = mc_run(&model, replications, horizon, seed)?;
            let probabilities: Vec<f64> = solutions.iter().map(|s| mc_estimate(&run, s)).collect();
            let unclassified = 1.0 - probabilities.iter().sum::<f64>();
            Ok(SweepPoint {
                config: cfg.clone(),
                probabilities,
                unclassified: unclassified.max(0.0),
            })
        })
        .collect()
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn grid_is_cartesian_and_ordered() {
        let base = PreyPredatorConfig::netlogo_like();
        let axes = vec![
            Axis { parameter: Parameter::GridSide, values: vec![10.0, 20.0] },
            Axis { parameter: Parameter::PredatorEnergyGain, values: vec![5.0, 6.0, 7.0] },
        ];
        let g = grid(&base, &axes);
        assert_eq!(g.len(), 6);
        assert_eq!((g[0].grid_width, g[0].grid_height, g[0].predator_energy_gain), (10, 10, 5.0));
        assert_eq!(g[0].initial_predator_energy_max, 10.0);
        assert_eq!((g[5].grid_width, g[5].predator_energy_gain), (20, 7.0));
        assert_eq!(grid(&base, &[]), vec![base]);
        let tuned = PreyPredatorConfig::tuned();
        let range = grid(&tuned, &default_axes());
        assert_eq!(range.len(), 81);
        assert!(range.contains(&tuned));
    }

    #[test]
    fn evaluation_covers_all_outcomes() {
        let base = PreyPredatorConfig {
            grid_width: 10,
            grid_height: 10,
            initial_prey: 30,
            initial_predators: 6,
            ..PreyPredatorConfig::netlogo_like()
        };
        let pts = evaluate(&[base.clone()], 40, 60, 3).unwrap();
        let p = &pts[0];
        assert!((p.probabilities.iter().sum::<f64>() + p.unclassified - 1.0).abs() < 1e-12);
        assert_eq!(evaluate(&[base], 40, 60, 3).unwrap(), pts);
    }

    #[test]
    fn band_check() {
        let p = SweepPoint {
            config: PreyPredatorConfig::tuned(),
            probabilities: vec![0.01, 0.02, 0.97],
            unclassified: 0.0,
        };
        assert!(p.in_band(COEXISTENCE_BAND));
        assert!(!p.in_band((0.98, 0.99)));
    }
}
