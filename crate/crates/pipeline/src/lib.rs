//! Simulation, feature extraction, classical baselines and metrics for
//! single-photon depth imaging.
//!
//! The crate covers everything between the ground-truth scene and the
//! network input/output: generating realistic photon-count measurements,
//! turning histogram cubes into the multi-feature depth representation,
//! nearest-neighbour and guided-filter reference reconstructions, and the
//! RMSE/ADE/SBR/ppp evaluation metrics.
//!
//! All operations are pure functions of immutable inputs. Randomness comes
//! exclusively from per-element seeded streams, so parallel execution is
//! bit-reproducible.

pub mod baselines;
pub mod features;
pub mod gauss;
pub mod metrics;
pub mod poisson;
pub mod simulator;
pub mod synth;

pub use spadsr_core::{CoreError as Error, Result};
