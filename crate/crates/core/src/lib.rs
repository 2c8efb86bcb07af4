//! Lie point-symmetry analysis of polynomial PDEs.

pub mod error;
pub mod expr;
pub mod fixtures;
pub mod linalg;
pub mod parser;
pub mod properties;
pub mod reduction;
pub mod sampling;
pub mod symmetry;
pub mod verify;

pub use error::{Error, Result};
