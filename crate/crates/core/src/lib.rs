#![allow(clippy::neg_cmp_op_on_partial_ord)]

pub mod cli;
pub mod compactification;
pub mod error;
pub mod exact_solutions;
pub mod mass_geometry;
pub mod numerics;
pub mod penrose_bound;
pub mod tensor_core;
pub mod verify;

pub use error::{Error, Result};
