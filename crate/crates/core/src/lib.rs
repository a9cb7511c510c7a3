//! Rigorous lower bounds for the low-lying eigenvalues of one-electron
//! molecular Hamiltonians, with variational upper bounds and Temple
//! refinements for comparison.

#![allow(clippy::neg_cmp_op_on_partial_ord)]

pub mod error;
pub mod linalg;
pub mod lowerbound;
pub mod optim;
pub mod quadrature;
pub mod registry;
pub mod specfun;
pub mod symmetry;
pub mod tables;
pub mod twocenter;
pub mod variational;

pub use error::{Error, Result};
