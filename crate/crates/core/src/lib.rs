//! Training-free camera control for flow-matching video samplers, plus the
//! camera-control evaluation suite and a synthetic-scene oracle.

pub mod cli;
pub mod diffusion;
pub mod displacement;
pub mod error;
pub mod geometry;
pub mod io;
pub mod metrics;
pub mod pipeline;
pub mod resample;
pub mod scene;

pub use error::{Error, ErrorKind, Result};
