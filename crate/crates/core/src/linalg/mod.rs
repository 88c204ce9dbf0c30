//! Sparse matrices and a direct sparse LU solver.

mod lu;
mod ordering;
mod sparse;

pub use lu::{
    lu_factor, lu_factor_with, ColumnOrdering, Inertia, LuFactorization, LuOptions, PivotMode, ZERO_PIVOT_RATIO,
};
pub use ordering::{defer_after_neighbours, nested_dissection};
pub use sparse::{dot, norm2, CsrMatrix, TripletBuilder};
