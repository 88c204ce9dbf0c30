//! Structure-preserving mixed finite element discretizations of dynamic
//! Mindlin-Reissner and Kirchhoff plates in port-Hamiltonian form.

pub mod assembly;
pub mod cli;
pub mod elements;
pub mod error;
pub mod linalg;
pub mod manufactured;
pub mod mesh;
pub mod poly;
pub mod quadrature;
pub mod report;
pub mod study;
pub mod timeint;

pub use error::{Error, Result};
