//! Latency-signature forensics for NVM chips.
//!
//! A seeded simulator ([`chipsim`]) stands in for physical chips; [`protocol`]
//! turns it into traces, window statistics and labeled 100-feature datasets;
//! [`features`] and [`classifiers`] learn chip origin from those datasets; and
//! [`detector`] produces the end-user verdicts: chip origin, recycled or fresh,
//! and which addresses have been used.

pub mod chipsim;
pub mod classifiers;
pub mod detector;
pub mod error;
pub mod features;
pub mod fsutil;
pub mod protocol;
pub mod seed;

pub use error::{Error, Result};

/// Chip class identifier (`class0` … `class8` in the builtin catalog).
pub type ClassTag = u32;
