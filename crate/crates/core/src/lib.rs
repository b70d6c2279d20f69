// `!(x > 0.0)` is used on purpose so NaN fails validation
#![allow(clippy::neg_cmp_op_on_partial_ord)]

pub mod collision;
pub mod diagnostics;
pub mod error;
pub mod field_solver;
pub mod io;
pub mod phase_space;
pub(crate) mod quadrature;
pub mod quasineutral;
pub mod rarefaction;
pub mod run;
pub mod verify;
pub mod vpb_solver;

pub use error::{Result, VpbError};
