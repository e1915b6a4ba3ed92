//! Path planning for a mobile target past a field of sensors on a triangular mesh.
//!
//! The scenario layer holds the mesh, sensors and agents and derives the
//! detection tables. [`formulation`] builds the 0-1 program and exports it as
//! LP text; [`engines`] solve it exactly, by enumeration, by a sensor-avoiding
//! search or through an external MIP solver, and [`heuristic`] gives a fast
//! path-cutting approximation.

pub mod cli;
pub mod engines;
pub mod error;
pub mod formulation;
pub mod heuristic;
pub mod mesh;
pub mod render;
pub mod report;
pub mod scenario;
pub mod service;

pub use error::{Error, Result};
