//! Linear solvers for graph Laplacians.

pub mod cg;
pub mod dense;
pub mod green;
pub mod ldl;
pub mod ordering;

pub use cg::{solve_dirichlet, CgOptions, CgOutcome};
pub use green::GreenFunction;
pub use ldl::LdlFactor;
