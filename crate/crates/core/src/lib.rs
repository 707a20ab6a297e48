//! Exact super-Virasoro algebra, Grassmann-valued Ito calculus and the
//! dictionary between supergroup random walks and stochastic evolutions of
//! superconformal maps, plus a Monte Carlo harness for classical SLE.

#[macro_use]
mod macros;

pub mod error;
pub mod scalar;
pub mod poly;
pub mod grassmann;
pub mod linalg;
pub mod superspace;
pub mod superalg;
pub mod itocalc;
pub mod linkmaps;
pub mod catalog;
pub mod sim;
pub mod suite;

pub use error::{Error, Result};
pub use grassmann::{Alphabet, GrassmannNumber, Parity};
pub use poly::Poly;
pub use scalar::Scalar;
