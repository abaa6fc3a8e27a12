pub mod error;
pub mod expr;
pub mod fields;
pub mod jet;

pub use error::{Error, Result};
pub mod extrap;
pub mod ode;
pub mod quad;
pub mod poly;
pub mod point_mass;
pub mod characteristics;
pub mod cheb;
pub mod cusp;
pub mod curve;
pub mod sticky;
pub mod validation;
