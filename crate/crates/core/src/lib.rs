//! Compact finite-volume framework for porous-media flow on single and
//! coupled (mixed-dimensional) domains.

#![allow(clippy::neg_cmp_op_on_partial_ord)]
pub mod app;
pub mod error;
pub mod fvgeom;
pub mod geometry;
pub mod material;
pub mod mesh;
pub mod models;
pub mod multidomain;
pub mod solvers;

pub use error::{Error, Result};
