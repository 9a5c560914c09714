//! Immersed interface method for incompressible flow on a uniform MAC grid,
//! with flat, inverse-centroid-weighted and L2-projected surface normals.

pub mod bench;
pub mod controllers;
pub mod diagnostics;
pub mod error;
pub mod flow_solver;
pub mod iim_ops;
pub mod jump_model;
pub mod mac_grid;
pub mod normal_fields;
pub mod surface_mesh;
pub mod vector;

pub use error::{Error, Result};
