//! Obstacle problems for level-set mean curvature flow with a driving force.

#![allow(clippy::neg_cmp_op_on_partial_ord, clippy::needless_range_loop)]

pub mod candidates;
pub mod catalog;
pub mod checker;
pub mod config;
pub mod diagnostics;
pub mod error;
pub mod field;
pub mod grid;
pub mod io;
pub mod nd;
pub mod obstacle;
pub mod plot;
pub mod profile;
pub mod radial;
pub mod repro;
pub mod run;
pub mod scheme;

pub use error::{Error, Result};
