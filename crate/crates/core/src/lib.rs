//! Isogeometric (NURBS) finite element analysis of functionally graded
//! Reissner-Mindlin plates.
//!
//! The crate covers the full pipeline from through-thickness homogenisation
//! of a ceramic/metal mixture to the assembled plate operators and the five
//! solution regimes: static bending, free vibration, mechanical and thermal
//! buckling, and supersonic panel flutter under first-order piston theory.
//!
//! ```text
//! material -> plate_model -> nurbs -> assembly -> solvers -> analysis -> cli
//! ```

pub mod analysis;
pub mod assembly;
pub mod cli;
mod error;
pub mod linalg;
pub mod material;
pub mod nurbs;
pub mod plate_model;
pub mod quadrature;
pub mod solvers;

pub use error::{Error, Result};
