//! Function spaces and assembly of the discrete port-Hamiltonian systems.

mod constitutive;
mod projection;
mod space;
mod system;

pub use constitutive::{
    constitutive_bending, constitutive_bending_inverse, constitutive_shear_inverse, MaterialParams,
};
pub use projection::{
    assemble_load, gram_matrix, l2_project, l2_project_excluding, moment_vector, solve_on_subspace, FieldSample,
    DATA_EXACTNESS_MARGIN,
};
pub use space::{CellBasis, FunctionSpace};
pub use system::{
    apply_essential_bcs, assemble_system, build_spaces, write_matrix_coo, FieldBlock, FieldKind, PhSystem, Scheme,
    StructureReport, STRUCTURE_TOLERANCE,
};
