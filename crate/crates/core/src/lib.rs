//! Core types and file formats for the SPAD depth-imaging toolkit.
//!
//! This crate holds the domain types shared by the simulation, feature
//! extraction and reconstruction crates (histogram cubes, depth and
//! intensity maps, feature bundles, noise parameters), a plain tensor
//! container, and bit-exact readers/writers for the SPDT tensor format
//! plus PGM and PFM images.
//!
//! All types are immutable after construction and safe to share across
//! threads.

pub mod cube;
pub mod error;
pub mod featureset;
pub mod image;
pub mod noise;
pub mod pfm;
pub mod pgm;
pub mod rng;
pub mod spdt;
pub mod tensor;

pub use cube::HistogramCube;
pub use error::{CoreError, Result};
pub use featureset::FeatureSet;
pub use image::{DepthMap, IntensityMap};
pub use noise::NoiseSpec;
pub use rng::SplitMix64;
pub use tensor::{read_tensor, write_tensor, Tensor};
