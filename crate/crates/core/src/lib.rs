//! Random walks on the affine groups `Aff(P) = (P) ⋉ Z(P)`.
//!
//! Everything is exact: group elements are pairs of rationals, walks keep
//! their products as integers scaled by prime powers, and the boundary is
//! approached through p-adic digit windows and real intervals. The crate is
//! `no_std` and needs only `alloc`.

#![no_std]

extern crate alloc;
#[cfg(test)]
extern crate std;

pub mod arith;
pub mod boundary;
pub mod error;
pub mod geometry;
pub mod group;
pub mod measure;
pub mod stats;
pub mod strips;
pub mod walk;

pub use arith::{Place, PrimeContext, Rational};
pub use error::{Error, Result};
pub use group::GroupElement;
pub use measure::{drift_vector, reflect, validate_measure, DriftReport, MeasureSpec, RawAtom};
pub use walk::{run_bilateral, run_walk, Trajectory, WalkSeed};
