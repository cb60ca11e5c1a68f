#![allow(clippy::neg_cmp_op_on_partial_ord)]

//! File formats, configuration and pipeline stages for the co-appearance
//! network analysis toolkit.

pub mod config;
pub mod error;
pub mod graph_io;
pub mod io;
pub mod pipeline;

pub use error::{CliError, Result};
