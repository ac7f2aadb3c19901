//! Room impulse response synthesis combining a shoebox image-source model for
//! the early reflections with an exponentially decaying Gaussian tail whose
//! power is solved so the response meets a distance-derived direct-to-
//! reverberant ratio.

#![allow(clippy::neg_cmp_op_on_partial_ord)]

pub mod analysis;
pub mod cli;
pub mod config;
pub mod error;
pub mod geometry;
pub mod ism;
pub mod sampler;
pub mod signals;
pub mod synth;
pub mod tail;
pub mod wav;

pub use config::{SynthConfig, TailSolve};
pub use error::{Error, Result};
pub use geometry::{DirectivityPattern, MicPair, Room, Scene, Source, Vec3};
pub use synth::{Method, Rir};
