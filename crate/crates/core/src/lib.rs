//! Multi-objective reinforcement learning on finite-horizon tabular MDPs.
//!
//! The crate provides exact dynamic-programming oracles for values under a
//! preference vector, optimistic planners with Hoeffding and Bernstein style
//! exploration bonuses, an online learner that faces a (possibly adversarial)
//! stream of preferences, a preference-free explore-then-plan learner, and
//! generators for hard instances.
//!
//! All numeric code is generic over [`Scalar`] (`f32` or `f64`); the
//! `*64`/`*32` aliases below fix the precision.

pub mod adversary;
pub mod agents;
pub mod dp;
pub mod error;
pub mod fixtures;
pub mod format;
pub mod hard;
pub mod model;
pub mod momdp;
pub mod pfe;
pub mod planning;
pub mod policy;
pub mod preference;
pub mod scalar;

pub use error::{MorlError, Result};
pub use momdp::{Momdp, TransitionMode, TransitionModel};
pub use policy::{DeterministicPolicy, MixturePolicy, Trajectory};
pub use preference::Preference;
pub use scalar::Scalar;

pub type Momdp64 = Momdp<f64>;
pub type Momdp32 = Momdp<f32>;
pub type Preference64 = Preference<f64>;
pub type Preference32 = Preference<f32>;
pub type ValueTables64 = dp::ValueTables<f64>;
pub type ValueTables32 = dp::ValueTables<f32>;
pub type MixturePolicy64 = MixturePolicy<f64>;
pub type Trajectory64 = Trajectory<f64>;
pub type EmpiricalModel64 = model::EmpiricalModel<f64>;
pub type HistoryBuffer64 = model::HistoryBuffer<f64>;
pub type BonusParams64 = planning::BonusParams<f64>;
pub type EpisodeLog64 = agents::EpisodeLog<f64>;
pub type PreferenceSource64 = adversary::PreferenceSource<f64>;
pub type PfeParams64 = pfe::PfeParams<f64>;
