//! Problem files and oracle data shipped with the library.

/// The Zoomeron equation with its generators, commutator table,
/// substitutions and candidate solutions.
pub const ZOOMERON: &str = include_str!("../fixtures/zoomeron.lie");

/// Generators and commutator table of the traveling-wave reduction.
pub const REDUCED_ALGEBRA: &str = include_str!("../fixtures/zoomeron_v4v5_algebra.lie");

/// Residuals of the radical solution at five rational points, computed to
/// fifty digits by an independent program.
pub const RADICAL_ORACLE: &str = include_str!("../fixtures/radical_oracle.json");
