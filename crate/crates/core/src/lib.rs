//! Fast randomised multi-channel room impulse response simulation.
//!
//! The [`fram`] module samples virtual sources at random directions and
//! distances around the array while keeping per-microphone arrival times
//! exact, so every simulated reflection carries correct inter-channel time
//! differences. [`ism`] is a classical shoebox image-source reference that
//! shares the same [`resample`] chain. [`features`] computes directional
//! features and beampatterns for checking simulated filters, and
//! [`mixture`] generates training mixtures on the fly. [`io`] owns the file
//! formats, [`config`] the JSON configuration and [`binding`] the flat
//! `f32` interface for foreign-language loaders.

pub mod analysis;
pub mod bench;
pub mod binding;
pub mod cli;
pub mod config;
pub mod error;
pub mod features;
pub mod fram;
pub mod geometry;
pub mod io;
pub mod ism;
pub mod mixture;
pub mod params;
pub mod resample;
pub mod rng;

pub use error::{Error, Result};
pub use fram::{simulate_rir, Simulator, SourceRir};
pub use geometry::{Scene, SourcePlacement, Vec3};
pub use mixture::{generate_batch, BatchGenerator, BatchItem, CurriculumState, MixtureSpec};
pub use params::SimParams;
pub use resample::{FilterKind, RateFactors, RirFilter};
