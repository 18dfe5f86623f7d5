//! Minimal dense reverse-mode automatic differentiation.
//!
//! Values are rank-2 `f64` matrices. Programs are recorded on a [`Tape`]
//! through its op methods and differentiated with [`Tape::backward`].

mod gradcheck;
mod matrix;
mod tape;

pub use gradcheck::{gradcheck, relative_error, GradcheckReport, InputReport, REL_ERROR_FLOOR};
pub use matrix::{dot, Matrix, SparseMatrix};
pub use tape::{Gradients, Tape, Var, NORM_FLOOR};
