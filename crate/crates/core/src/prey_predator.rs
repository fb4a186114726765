//! Grid-based prey/predator/grass model in the wolf-sheep-predation family.
//!
//! Each step runs six phases in a fixed order: move, graze, hunt,
//! reproduce, cull, regrow. Observables are `[prey, predators, grown grass]`.

use rand::Rng;
use serde::{Deserialize, Serialize};

use crate::error::{Error, ModelError, Result};
use crate::rng::RandomStream;
use crate::sim::{ObservableVector, SimulationModel};

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct PreyPredatorConfig {
    pub grid_width: u32,
    pub grid_height: u32,
    pub initial_prey: u32,
    pub initial_predators: u32,
    pub prey_energy_gain: f64,
    pub predator_energy_gain: f64,
    pub prey_reproduce_prob: f64,
    pub predator_reproduce_prob: f64,
    pub grass_regrowth_steps: u32,
    pub initial_prey_energy_max: f64,
    pub initial_predator_energy_max: f64,
    pub move_energy_cost: f64,
}

impl Default for PreyPredatorConfig {
    fn default() -> Self {
        Self::tuned()
    }
}

impl PreyPredatorConfig {
    /// The NetLogo-style starting point before tuning.
    pub fn netlogo_like() -> Self {
        Self {
            grid_width: 50,
            grid_height: 50,
            initial_prey: 400,
            initial_predators: 80,
            prey_energy_gain: 4.0,
            predator_energy_gain: 20.0,
            prey_reproduce_prob: 0.04,
            predator_reproduce_prob: 0.05,
            grass_regrowth_steps: 30,
            initial_prey_energy_max: 8.0,
            initial_predator_energy_max: 40.0,
            move_energy_cost: 1.0,
        }
    }

    /// Default workload, picked with the sweep utility: coexistence at
    /// T=1000 is about 0.989, total extinction about 0.0035 and predator
    /// extinction about 0.0075.
    pub fn tuned() -> Self {
        Self {
            grid_width: 40,
            grid_height: 40,
            initial_prey: 72,
            initial_predators: 22,
            prey_energy_gain: 4.0,
            predator_energy_gain: 64.0,
            prey_reproduce_prob: 0.054,
            predator_reproduce_prob: 0.029,
            grass_regrowth_steps: 50,
            initial_prey_energy_max: 8.0,
            initial_predator_energy_max: 128.0,
            move_energy_cost: 1.0,
        }
    }

    pub fn cells(&self) -> usize {
        self.grid_width as usize * self.grid_height as usize
    }

    pub fn validate(&self) -> Result<()> {
        let bad = |m: String| Err(Error::Config(m));
        if self.grid_width == 0 || self.grid_height == 0 {
            return bad(format!("zero-area grid {}x{}", self.grid_width, self.grid_height));
        }
        if self.grid_width > u16::MAX as u32 || self.grid_height > u16::MAX as u32 {
            return bad("grid side exceeds 65535 cells".into());
        }
        let cap = 10 * self.cells() as u64;
        if self.initial_prey as u64 > cap || self.initial_predators as u64 > cap {
            return bad(format!("initial populations must be <= 10 x cell count ({cap})"));
        }
        for (name, p) in [
            ("prey_reproduce_prob", self.prey_reproduce_prob),
            ("predator_reproduce_prob", self.predator_reproduce_prob),
        ] {
            if !(0.0..=1.0).contains(&p) {
                return bad(format!("{name} = {p} outside [0,1]"));
            }
        }
        for (name, v) in [
            ("prey_energy_gain", self.prey_energy_gain),
            ("predator_energy_gain", self.predator_energy_gain),
            ("initial_prey_energy_max", self.initial_prey_energy_max),
            ("initial_predator_energy_max", self.initial_predator_energy_max),
        ] {
            if !(v.is_finite() && v > 0.0) {
                return bad(format!("{name} = {v} must be positive"));
            }
        }
        if !(self.move_energy_cost.is_finite() && self.move_energy_cost >= 0.0) {
            return bad(format!("move_energy_cost = {} must be >= 0", self.move_energy_cost));
        }
        if self.grass_regrowth_steps == 0 {
            return bad("grass_regrowth_steps must be >= 1".into());
        }
        Ok(())
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum Species {
    Prey,
    Predator,
}

#[derive(Debug, Clone, PartialEq)]
pub struct Agent {
    pub species: Species,
    pub x: u16,
    pub y: u16,
    pub energy: f64,
}

#[derive(Debug, Clone, PartialEq)]
pub struct PreyPredatorState {
    pub agents: Vec<Agent>,
    /// Steps left until the grass of each cell regrows, row-major
    /// (`y * width + x`); 0 means grown.
    pub grass_counter: Vec<u32>,
    pub step_count: u64,
}

impl PreyPredatorState {
    pub fn count(&self, species: Species) -> usize {
        self.agents.iter().filter(|a| a.species == species).count()
    }

    pub fn is_grown(&self, cell: usize) -> bool {
        self.grass_counter[cell] == 0
    }

    pub fn grown_grass(&self) -> usize {
        self.grass_counter.iter().filter(|c| **c == 0).count()
    }
}

/// Births and deaths of the most recent step, per species.
#[derive(Debug, Default, Clone, Copy, PartialEq, Eq)]
pub struct StepLedger {
    pub prey_births: usize,
    pub prey_eaten: usize,
    pub prey_starved: usize,
    pub predator_births: usize,
    pub predator_starved: usize,
}

const NEIGHBORS: [(i32, i32); 8] = [
    (-1, -1),
    (0, -1),
    (1, -1),
    (-1, 0),
    (1, 0),
    (-1, 1),
    (0, 1),
    (1, 1),
];

#[derive(Debug, Clone)]
pub struct PreyPredator {
    config: PreyPredatorConfig,
}

impl PreyPredator {
    pub fn new(config: PreyPredatorConfig) -> Result<Self> {
        config.validate()?;
        Ok(Self { config })
    }

    pub fn config(&self) -> &PreyPredatorConfig {
        &self.config
    }

    fn cell(&self, x: u16, y: u16) -> usize {
        y as usize * self.config.grid_width as usize + x as usize
    }

    /// One step, returning the birth/death ledger.
    pub fn step_with_ledger(&self, state: &mut PreyPredatorState, rng: &mut RandomStream) -> StepLedger {
        let cfg = &self.config;
        let (w, h) = (cfg.grid_width as i32, cfg.grid_height as i32);
        let mut ledger = StepLedger::default();

        // move
        for a in state.agents.iter_mut() {
            let (dx, dy) = NEIGHBORS[rng.random_range(0..NEIGHBORS.len())];
            a.x = (a.x as i32 + dx).rem_euclid(w) as u16;
            a.y = (a.y as i32 + dy).rem_euclid(h) as u16;
            a.energy -= cfg.move_energy_cost;
        }

        // graze
        for i in 0..state.agents.len() {
            let a = &state.agents[i];
            if a.species != Species::Prey {
                continue;
            }
            let c = self.cell(a.x, a.y);
            if state.grass_counter[c] == 0 {
                state.grass_counter[c] = cfg.grass_regrowth_steps;
                state.agents[i].energy += cfg.prey_energy_gain;
            }
        }

        // hunt: prey sorted by cell, predators draw without replacement
        let mut eaten = vec![false; state.agents.len()];
        // (cell << 32) | agent index
        let mut prey: Vec<u64> = state
            .agents
            .iter()
            .enumerate()
            .filter(|(_, a)| a.species == Species::Prey)
            .map(|(i, a)| (self.cell(a.x, a.y) as u64) << 32 | i as u64)
            .collect();
        if !prey.is_empty() {
            prey.sort_unstable();
            // remaining[lo]: prey left in the cell whose run starts at lo
            let mut remaining = vec![u32::MAX; prey.len()];
            for i in 0..state.agents.len() {
                if state.agents[i].species != Species::Predator {
                    continue;
                }
                let c = self.cell(state.agents[i].x, state.agents[i].y) as u64;
                let lo = prey.partition_point(|&k| k >> 32 < c);
                if lo == prey.len() || prey[lo] >> 32 != c {
                    continue;
                }
                if remaining[lo] == u32::MAX {
                    remaining[lo] = prey[lo..].partition_point(|&k| k >> 32 == c) as u32;
                }
                let left = remaining[lo] as usize;
                if left == 0 {
                    continue;
                }
                let pick = lo + rng.random_range(0..left);
                let victim = (prey[pick] & 0xFFFF_FFFF) as usize;
                prey.swap(pick, lo + left - 1);
                remaining[lo] -= 1;
                eaten[victim] = true;
                ledger.prey_eaten += 1;
                state.agents[i].energy += cfg.predator_energy_gain;
            }
        }

        // reproduce
        let parents = state.agents.len();
        for i in 0..parents {
            if eaten[i] || state.agents[i].energy <= 0.0 {
                continue;
            }
            let p = match state.agents[i].species {
                Species::Prey => cfg.prey_reproduce_prob,
                Species::Predator => cfg.predator_reproduce_prob,
            };
            if rng.random::<f64>() < p {
                let parent = &mut state.agents[i];
                parent.energy /= 2.0;
                let child = parent.clone();
                match child.species {
                    Species::Prey => ledger.prey_births += 1,
                    Species::Predator => ledger.predator_births += 1,
                }
                state.agents.push(child);
            }
        }

        // cull
        let mut idx = 0;
        state.agents.retain(|a| {
            let was_eaten = idx < parents && eaten[idx];
            idx += 1;
            if was_eaten {
                return false;
            }
            if a.energy <= 0.0 {
                match a.species {
                    Species::Prey => ledger.prey_starved += 1,
                    Species::Predator => ledger.predator_starved += 1,
                }
                return false;
            }
            true
        });

        // regrow
        for counter in state.grass_counter.iter_mut() {
            *counter = counter.saturating_sub(1);
        }

        state.step_count += 1;
        ledger
    }
}

impl SimulationModel for PreyPredator {
    type State = PreyPredatorState;

    fn initialize(&self, rng: &mut RandomStream) -> std::result::Result<PreyPredatorState, ModelError> {
        let cfg = &self.config;
        let mut agents = Vec::with_capacity((cfg.initial_prey + cfg.initial_predators) as usize);
        for (species, count, emax) in [
            (Species::Prey, cfg.initial_prey, cfg.initial_prey_energy_max),
            (Species::Predator, cfg.initial_predators, cfg.initial_predator_energy_max),
        ] {
            for _ in 0..count {
                let x = rng.random_range(0..cfg.grid_width) as u16;
                let y = rng.random_range(0..cfg.grid_height) as u16;
                // uniform on (0, emax]
                let energy = emax * (1.0 - rng.random::<f64>());
                agents.push(Agent { species, x, y, energy });
            }
        }
        Ok(PreyPredatorState {
            agents,
            grass_counter: vec![0; cfg.cells()],
            step_count: 0,
        })
    }

    fn step(&self, state: &mut PreyPredatorState, rng: &mut RandomStream) -> std::result::Result<(), ModelError> {
        self.step_with_ledger(state, rng);
        Ok(())
    }

    fn observe(&self, state: &PreyPredatorState) -> ObservableVector {
        let (mut prey, mut predators) = (0usize, 0usize);
        for a in &state.agents {
            match a.species {
                Species::Prey => prey += 1,
                Species::Predator => predators += 1,
            }
        }
        ObservableVector::new(vec![prey as f64, predators as f64, state.grown_grass() as f64])
            .expect("counts are finite")
    }

    fn observable_names(&self) -> Vec<String> {
        vec!["prey".into(), "predators".into(), "grass".into()]
    }
}
