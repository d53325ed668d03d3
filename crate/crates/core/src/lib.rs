//! Three-body (n + n + core) bound states and n + dimer scattering in a
//! separable s-wave model, with Fano line-shape fitting of the cross sections.

pub mod error;
pub mod fanofit;
pub mod grid;
pub mod io;
pub mod kernel;
pub mod model;
pub mod pipeline;
pub mod roots;
pub mod scattering;
pub mod spectrum;

pub use error::{Error, Result};
