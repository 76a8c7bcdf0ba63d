//! Two-stage DOA estimation for hybrid analog/digital uniform linear arrays:
//! an element-space ESPRIT on a small subarray finds coarse directions, a
//! structured covariance fit guides the choice of a few DFT beams, and a
//! sparse beamspace Unitary ESPRIT refines the estimates.

pub mod array;
pub mod coarse;
pub mod combiner;
pub mod covfit;
pub mod error;
pub mod fine;
pub mod harness;
pub mod linalg;
pub mod metrics;
pub mod rng;
pub mod selection;

pub use error::{DoaError, Result};
