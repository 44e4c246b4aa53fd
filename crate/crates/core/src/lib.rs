//! Strongly q-concave operators on finite atomic Banach lattices.

pub mod dominated_linear;
pub mod domination;
pub mod error;
pub mod fremlin;
pub mod gallery;
pub mod lattice;
pub mod sample;
mod lp;
pub mod vector_norms;

pub use error::{Error, Result};
pub use lattice::{
    AtomicMeasureSpace, DiscreteDualMeasure, DualFunctional, LatticeKind, LatticeSpec, LatticeVector, Objective,
    SupportMax,
};
pub use domination::{DominationCertificate, MultilinearOperator};
pub use fremlin::TensorGrid;
pub use vector_norms::{ExponentTriple, VectorFamily};
