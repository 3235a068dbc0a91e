//! Phase-field approximation of brittle fracture with unilateral constraints
//! on the crack opening.
//!
//! The library discretizes regularized energies of Ambrosio–Tortorelli type
//! for linearized elasticity where the crack is not allowed to interpenetrate:
//! the admissible jump set carries either a non-negative normal opening
//! (`NonInterpenetration`), a purely tangential slip (`ShearOnly`), or a
//! normal opening with no slip (`Masonry`). Besides the energies themselves it
//! provides
//!
//! - a staggered (alternating) minimization solver on structured bilinear
//!   finite elements ([`solver`]),
//! - explicit recovery-sequence constructions (optimal damage profile,
//!   mollified displacements) together with quadrature harnesses that check
//!   the expected upper energy bounds ([`recovery`]),
//! - an affine rescaling construction that trims an affine competitor to an
//!   L∞ bound while keeping an explicit L^p distance estimate ([`affine`]).
//!
//! All floating-point reductions are deterministic (pairwise tree sums,
//! fixed gather order), so repeated runs produce bit-identical results
//! regardless of thread count.

pub mod affine;
pub mod energy;
pub mod grid;
pub mod recovery;
pub mod solver;
pub mod tensor;

mod util;

mod error;

pub use energy::{EnergyBreakdown, ModelParams, Variant};
pub use error::Error;
pub use grid::{DirichletSpec, Field, Grid};
pub use solver::{SolveHistory, SolveOptions};
pub use tensor::{EigenPair2, SymTensor2};

/// Convenient alias used throughout the crate.
pub type Result<T> = std::result::Result<T, Error>;
