//! Desk-scale simulator for rate-independent elasto-plastic damage and its
//! vanishing-viscosity limits on a structured 2D grid.

#![allow(clippy::neg_cmp_op_on_partial_ord, clippy::needless_range_loop, clippy::too_many_arguments)]

pub mod config;
pub mod constitutive;
pub mod discretization;
pub mod dissipation;
pub mod driver;
pub mod error;
pub mod gronwall;
pub mod io;
pub mod oracles;
pub mod reparam;
pub mod solver;

pub use error::{Error, Result};
