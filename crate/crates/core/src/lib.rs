//! Bounds on minimum-error quantum channel discrimination under memory
//! constraints.

pub mod error;
pub mod linalg;
pub mod qops;
pub mod channels;
pub mod sdpiface;
pub mod csep;
pub mod testers;
pub mod scenarios;
pub mod cli;

pub use error::{Error, Result};
