//! Monte Carlo evaluation of secrecy-rate bounds for a block-fading wiretap
//! channel attacked by a half-duplex adversary that either jams or
//! eavesdrops in each block.
//!
//! Rates are in bits per channel use throughout.

pub mod bounds;
pub mod channel;
pub mod coupling;
pub mod delay;
pub mod error;
pub mod feedback;
pub mod multi;
pub mod protocol;
pub mod rng;
pub mod stats;

pub use error::{Error, Result};
