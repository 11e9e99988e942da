//! Fixed points, periodic orbits and the structure of fixed-point sets of
//! real-analytic maps that are nonexpansive under a polyhedral norm.

pub mod config;
pub mod dynamics;
pub mod error;
pub mod maps;
pub mod numerics;
pub mod polynorm;
pub mod sampling;
pub mod structure;

pub use error::{Error, Result};
pub use maps::{MapSpec, SelfMap};
pub use numerics::{Matrix, Subspace, Vector};
pub use polynorm::{DualFace, NormKind, PolyhedralNorm};
