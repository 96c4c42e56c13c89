//! Push/block interface growth in three equivalent representations (height
//! functions, annihilating particles, an interlaced staircase array), with
//! geometric last passage percolation and a flat PNG reference.
//!
//! Everything is generic over the floating point type through [`Real`];
//! `*64` / `*32` aliases fix the scalar.

pub mod error;
pub mod array;
pub mod growth;
pub mod io;
pub mod lpp;
pub mod noise;
pub mod params;
pub mod particles;
pub mod png;
pub mod profile;
pub mod rng;
pub mod scalar;
pub mod staircase;
pub mod stats;
pub mod verify;

pub use error::{NoiseError, ParamError, ProfileError};
pub use params::ModelParams;
pub use rng::{Purpose, Seed};
pub use scalar::Real;

pub type HeightProfile64 = profile::HeightProfile<f64>;
pub type HeightProfile32 = profile::HeightProfile<f32>;
pub type ParticleConfig64 = particles::ParticleConfig<f64>;
pub type ParticleConfig32 = particles::ParticleConfig<f32>;
pub type GrowthTrajectory64 = growth::GrowthTrajectory<f64>;
pub type GrowthTrajectory32 = growth::GrowthTrajectory<f32>;
pub type NoiseStream64 = noise::NoiseStream<f64>;
pub type NoiseStream32 = noise::NoiseStream<f32>;
pub type ArrayTrajectory64 = array::ArrayTrajectory<f64>;
pub type ArrayTrajectory32 = array::ArrayTrajectory<f32>;
pub type NucleationSet64 = png::NucleationSet<f64>;
pub type NucleationSet32 = png::NucleationSet<f32>;
