//! Probabilistic stability certificates for coalitional games whose values
//! depend on an uncertain parameter that each agent samples privately.

pub mod compression;
pub mod error;
pub mod game;
pub mod instances;
pub mod lp;
pub mod risk;
pub mod sampling;
pub mod scenario_core;
pub mod validation;
pub mod zeta_core;

pub use error::{Error, Result};
pub use game::{Coalition, CoalitionValue, GameSpec, ValueModel};
pub use sampling::{Distribution, DistributionSpec, PrivateSamples};
pub use scenario_core::ScenarioCore;
