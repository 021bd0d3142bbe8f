//! Numerical bounds for sending correlated sources over two-receiver
//! broadcast channels.
//!
//! The crate evaluates inner and outer rate regions of broadcast channels,
//! the matching source-side regions, and checks whether a source pair can
//! be carried by a channel at a given bandwidth expansion ratio.

pub mod admissibility;
pub mod bounds;
pub mod channel;
pub mod error;
pub mod optimize;
pub mod prob;
pub mod region;

pub use error::{Error, Result};
