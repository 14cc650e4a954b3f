//! Finite-energy pluripotential theory on the projective line, restricted to
//! circle-invariant potentials and computed on a grid.
//!
//! A potential is stored as samples of the convex profile `phi(s)`,
//! `s = log |z|^2`, together with its Legendre dual `psi` on `[0, 1]`.
//! Geodesics, rooftop envelopes and the `d_2` distance are all computed on
//! the dual side, where they become linear or pointwise operations.

pub mod capacity;
pub mod config;
pub mod dual;
pub mod energy;
pub mod envelope;
pub mod error;
pub mod fixtures;
pub mod geodesic;
pub mod hull;
pub mod metric;
pub mod potential;
pub mod profile;

pub use config::{fs_dual, fs_profile, fs_slope, ModelConfig};
pub use dual::DualPotential;
pub use error::{LabError, Result};
pub use hull::{convex_minorant, lower_convex_hull};
pub use potential::{ConjugateMethod, MaMeasure, RadialPotential};
pub use fixtures::{seeded_rng, Fixture};
pub use profile::{sample_profile, Profile};
