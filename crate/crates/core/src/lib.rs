pub mod error;
pub mod mc;
pub mod partition;
pub mod prey_predator;
pub mod report;
pub mod rng;
pub mod sample_size;
pub mod sim;
pub mod spsc;
pub mod stats;
pub mod sweep;

pub use error::{Error, ModelError, Result};
pub use rng::RandomStream;
pub use sim::{ObservableVector, Replication, SimulationModel, Weight};
