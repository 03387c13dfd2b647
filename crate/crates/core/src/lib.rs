//! Exact workbench for polygonal subdivisions of planar point
//! configurations, their regularity, graphs with directions, and the
//! secondary operad built from them.

pub mod error;
pub mod exec;
pub mod geometry;
pub mod linalg;
pub mod lp;
pub mod operad;
pub mod rational;
pub mod regularity;
pub mod rigidity;
pub mod subdivision;

pub use error::{Error, Result};
