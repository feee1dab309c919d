//! Lagrange finite elements on triangles: spaces, quadrature, operator
//! assembly, sparse storage and direct solves.

pub mod assemble;
pub mod norms;
pub mod quadrature;
pub mod solve;
pub mod space;
pub mod sparse;

pub use assemble::{
    assemble_divergence, assemble_load, assemble_operator, set_essential_values, OperatorKind,
    VelocityField,
};
pub use norms::{g_norm, g_norm_sq, l2_error, l2_norm, G_NORM_WEIGHTS};
pub use quadrature::{GaussLegendre, TriQuadrature};
pub use solve::{factorize, solve_checked, SparseLu, DIRECT_SOLVE_REL_TOL};
pub use space::{build_fe_space, shape_ref_gradients, shape_values, ElementMap, FeSpace};
pub use sparse::{norm2, CooBuilder, SparseOperator};
