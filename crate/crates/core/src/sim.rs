//! Black-box simulation contract and replication lifecycle.
//!
//! A [`SimulationModel`] only ever sees its current state and a random
//! stream; `step` has no access to earlier states, so every model expressed
//! through this trait is Markov in its state.

use std::fmt;

use num_bigint::BigInt;
use num_rational::BigRational;
use num_traits::{One, ToPrimitive, Zero};

use crate::error::{precondition, Error, ModelError, Result};
use crate::rng::RandomStream;

/// Model observables at one time step.
#[derive(Debug, Clone, PartialEq)]
pub struct ObservableVector(Vec<f64>);

impl ObservableVector {
    pub fn new(values: Vec<f64>) -> Result<Self> {
        if values.is_empty() {
            return Err(precondition("observable vector must have dimension >= 1"));
        }
        if let Some(v) = values.iter().find(|v| !v.is_finite()) {
            return Err(precondition(format!("non-finite observable {v}")));
        }
        Ok(Self(values))
    }

    pub fn dimension(&self) -> usize {
        self.0.len()
    }

    pub fn values(&self) -> &[f64] {
        &self.0
    }

    pub fn squared_distance(&self, other: &[f64]) -> f64 {
        self.0
            .iter()
            .zip(other)
            .map(|(a, b)| (a - b) * (a - b))
            .sum()
    }
}

impl std::ops::Index<usize> for ObservableVector {
    type Output = f64;

    fn index(&self, i: usize) -> &f64 {
        &self.0[i]
    }
}

impl From<ObservableVector> for Vec<f64> {
    fn from(v: ObservableVector) -> Self {
        v.0
    }
}

/// Probability mass carried by a replication.
///
/// Stored as an exact rational: weights are produced only by uniform
/// initialization, summation, and division by clone counts, so exact
/// arithmetic keeps conservation and the degenerate MC equivalences exact.
#[derive(Debug, Clone, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub struct Weight(BigRational);

impl Weight {
    pub fn zero() -> Self {
        Self(BigRational::zero())
    }

    pub fn one() -> Self {
        Self(BigRational::one())
    }

    /// `num / den`; panics if `den == 0`.
    pub fn ratio(num: u64, den: u64) -> Self {
        Self(BigRational::new(BigInt::from(num), BigInt::from(den)))
    }

    pub fn uniform(n: usize) -> Self {
        Self::ratio(1, n as u64)
    }

    pub fn divided_by(&self, n: usize) -> Self {
        Self(&self.0 / BigInt::from(n))
    }

    pub fn is_probability(&self) -> bool {
        !self.0.is_negative_value() && self.0 <= BigRational::one()
    }

    pub fn to_f64(&self) -> f64 {
        self.0.to_f64().unwrap_or(f64::NAN)
    }

    pub fn as_rational(&self) -> &BigRational {
        &self.0
    }

    pub fn from_rational(r: BigRational) -> Self {
        Self(r)
    }
}

trait NegativeValue {
    fn is_negative_value(&self) -> bool;
}

impl NegativeValue for BigRational {
    fn is_negative_value(&self) -> bool {
        *self < BigRational::zero()
    }
}

impl std::ops::Add<&Weight> for Weight {
    type Output = Weight;

    fn add(self, rhs: &Weight) -> Weight {
        Weight(self.0 + &rhs.0)
    }
}

impl std::ops::AddAssign<&Weight> for Weight {
    fn add_assign(&mut self, rhs: &Weight) {
        self.0 += &rhs.0;
    }
}

impl<'a> std::iter::Sum<&'a Weight> for Weight {
    fn sum<I: Iterator<Item = &'a Weight>>(iter: I) -> Weight {
        iter.fold(Weight::zero(), |acc, w| acc + w)
    }
}

impl fmt::Display for Weight {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{}", self.0)
    }
}

/// Discrete-time stochastic simulation treated as a black box.
pub trait SimulationModel: Sync {
    type State: Clone + Send + Sync;

    fn initialize(&self, stream: &mut RandomStream) -> std::result::Result<Self::State, ModelError>;

    /// Advances the state by one time step.
    fn step(
        &self,
        state: &mut Self::State,
        stream: &mut RandomStream,
    ) -> std::result::Result<(), ModelError>;

    fn observe(&self, state: &Self::State) -> ObservableVector;

    fn observable_names(&self) -> Vec<String>;

    fn dimension(&self) -> usize {
        self.observable_names().len()
    }
}

#[derive(Debug, Clone)]
pub struct Replication<S> {
    pub state: S,
    pub time: u64,
    pub weight: Weight,
    pub stream: RandomStream,
    pub lineage_id: u64,
}

impl<S: Clone> Replication<S> {
    /// Initializes replication `stream_id` of a run keyed by `master_seed`.
    /// The lineage id equals the stream id.
    pub fn spawn<M>(model: &M, master_seed: u64, stream_id: u64, weight: Weight) -> Result<Self>
    where
        M: SimulationModel<State = S>,
    {
        let mut stream = RandomStream::new(master_seed, stream_id);
        let state = model.initialize(&mut stream).map_err(|source| Error::Model {
            lineage_id: stream_id,
            time: 0,
            source,
        })?;
        Ok(Self {
            state,
            time: 0,
            weight,
            stream,
            lineage_id: stream_id,
        })
    }

    /// Runs `steps` model steps without exceeding `horizon`.
    pub fn advance<M>(&mut self, model: &M, steps: u64, horizon: u64) -> Result<()>
    where
        M: SimulationModel<State = S>,
    {
        if steps == 0 {
            return Err(precondition("advance requires steps >= 1"));
        }
        if self.time + steps > horizon {
            return Err(precondition(format!(
                "advancing replication {} from t={} by {steps} passes horizon {horizon}",
                self.lineage_id, self.time
            )));
        }
        for _ in 0..steps {
            model
                .step(&mut self.state, &mut self.stream)
                .map_err(|source| Error::Model {
                    lineage_id: self.lineage_id,
                    time: self.time,
                    source,
                })?;
            self.time += 1;
        }
        Ok(())
    }

    /// Copies the state into a new replication with a fresh stream
    /// `(master_seed, new_stream_id)` and the given weight. The clone's
    /// lineage id is `new_stream_id`.
    pub fn deep_clone(&self, new_stream_id: u64, new_weight: Weight) -> Result<Self> {
        if !new_weight.is_probability() {
            return Err(precondition(format!("clone weight {new_weight} outside [0,1]")));
        }
        Ok(Self {
            state: self.state.clone(),
            time: self.time,
            weight: new_weight,
            stream: self.stream.fork(new_stream_id),
            lineage_id: new_stream_id,
        })
    }
}

#[cfg(test)]
pub(crate) mod test_models {
    use super::*;
    use rand::Rng;

    /// Gaussian random walk in one dimension, starting at zero.
    pub struct RandomWalk;

    impl SimulationModel for RandomWalk {
        type State = f64;

        fn initialize(&self, _: &mut RandomStream) -> std::result::Result<f64, ModelError> {
            Ok(0.0)
        }

        fn step(&self, x: &mut f64, s: &mut RandomStream) -> std::result::Result<(), ModelError> {
            *x += s.random::<f64>() - 0.5;
            Ok(())
        }

        fn observe(&self, x: &f64) -> ObservableVector {
            ObservableVector::new(vec![*x]).unwrap()
        }

        fn observable_names(&self) -> Vec<String> {
            vec!["x".into()]
        }
    }

    /// Fails once the state passes a threshold.
    pub struct Fragile;

    impl SimulationModel for Fragile {
        type State = u32;

        fn initialize(&self, _: &mut RandomStream) -> std::result::Result<u32, ModelError> {
            Ok(0)
        }

        fn step(&self, x: &mut u32, _: &mut RandomStream) -> std::result::Result<(), ModelError> {
            *x += 1;
            if *x > 3 {
                return Err(ModelError::new("counter overflow"));
            }
            Ok(())
        }

        fn observe(&self, x: &u32) -> ObservableVector {
            ObservableVector::new(vec![*x as f64]).unwrap()
        }

        fn observable_names(&self) -> Vec<String> {
            vec!["count".into()]
        }
    }
}
