//! Exact computation engine for rank-one cutting-and-stacking constructions
//! on infinite measure spaces, and for the Poisson suspensions they induce.
//!
//! Everything measurable in this crate is a finite union of floor-level
//! ranges of some construction stage, and every measure is an exact
//! `BigRational`. The crate is organized around five pieces:
//!
//! * [`construction`] — the tower recursion (heights, widths, column
//!   offsets, return times) and the canonical level-set algebra.
//! * [`dynamics`] — measures of shifted-set intersections, union
//!   expressions over shifted copies, Sidon witnesses, mixing curves.
//! * [`poisson`] — cylinder measures, joint count distributions and
//!   mixing gaps over the Poisson suspension, plus a seeded sampler.
//! * [`oracle`] — an independent explicit-floor brute-force
//!   implementation for tiny parameters, used as ground truth in tests.
//! * [`hp`] / [`rng`] — high-precision evaluation of `coeff * exp(-rate)`
//!   and the counter-based reproducible random number generator.

pub mod construction;
pub mod dynamics;
pub mod error;
pub mod hp;
pub mod oracle;
pub mod poisson;
pub mod rng;

pub use construction::{
    difference, intersect, symmetric_difference, union, ConstructionParams, CutRule, LevelSet,
    StageGeometry, StageSpec, Tower, TowerCaps,
};
pub use error::Error;

/// Arbitrary-precision integer used for heights, levels and shifts.
pub type Int = num_bigint::BigInt;
/// Arbitrary-precision rational used for all measures and probabilities.
pub type Rat = num_rational::BigRational;

/// Result alias for all fallible engine operations.
pub type Result<T> = std::result::Result<T, Error>;
