//! Finite atomic Banach lattices, their duals and unit-ball optimization.

pub mod exponent;
mod dual;
mod maximize;
mod space;
mod spec;
mod vector;
pub(crate) mod support;

pub use dual::{DiscreteDualMeasure, DualFunctional, BALL_TOL};
pub use exponent::conjugate;
pub use maximize::{
    support_maximize, support_maximize_with, FnObjective, MaximizeOptions, Objective, PowerSum, SupportMax,
    GRID_POINT_CAP, VERTEX_DIM_CAP,
};
pub(crate) use maximize::simplex_grid;
pub use space::AtomicMeasureSpace;
pub use spec::{LatticeKind, LatticeSpec};
pub use vector::LatticeVector;
pub(crate) use spec::ls_norm_unit;
