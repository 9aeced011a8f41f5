#![allow(clippy::neg_cmp_op_on_partial_ord)]

pub mod boundary;
pub mod dist;
pub mod divergence;
pub mod error;
pub mod evidence;
pub mod fixtures;
pub mod io;
pub mod model_fit;
pub mod pearson;
pub mod sim;
mod quad;

pub use error::{Error, Result};
