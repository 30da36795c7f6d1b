//! Independent random walkers on `[0, 1/eps] ∩ Z` coupled to current
//! reservoirs: particles are created at the origin and removed at the
//! rightmost occupied site, both at rate `eps * j`, so the boundaries impose
//! a current instead of densities.
//!
//! The crate has two halves. The microscopic half ([`lattice`], [`sim`],
//! [`couple`], [`mass`]) is an exact event-driven simulator of the jump
//! process, of the two-process coupling that controls loss of memory, and of
//! the total-mass random walk. The macroscopic half ([`kernels`],
//! [`barriers`], [`stationary`]) implements the limit theory: Neumann heat
//! kernels on `[0,1]`, the cut-and-paste operator, the upper/lower barrier
//! evolutions whose separating element is the hydrodynamic profile, and the
//! stationary-profile series with its linear `δ → 0` limits.

pub mod barriers;
pub mod couple;
pub mod error;
pub mod fenwick;
pub mod kernels;
pub mod lattice;
pub mod mass;
pub mod profile;
pub mod quad;
pub mod rng;
pub mod sim;
pub mod stationary;
pub mod stats;

pub use error::{CoreError, Result};
