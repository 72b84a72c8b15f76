//! Finite element solver and property checker for the prescribed mean
//! curvature equation div(∇u/√(1+|∇u|²)) = H with Neumann or Robin data on
//! convex domains.

pub mod axisym;
pub mod critical;
pub mod error;
pub mod geometry;
pub mod mc_operator;
pub mod nodal;
pub mod radial;
pub mod solver;
pub mod sparse;
pub mod verify;

pub use error::{Error, Result};
