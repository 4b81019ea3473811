//! Numerical laboratory for singular stochastic integral operators at desk scale.
//!
//! The crate discretizes the operators
//!
//! ```text
//! S_K G(s) = ∫ K(s,t) G(t) dW_H(t)      (stochastic integral operator)
//! T_K f(s) = t ↦ K(s,t) f(t)            (gamma-integral operator)
//! ```
//!
//! on uniform grids over `(0,T)`, together with the surrounding machinery:
//! kernel regularity checkers (Hörmander / Dini / standard conditions),
//! weighted norms and Muckenhoupt characteristics, dyadic maximal operators,
//! the L² Calderón–Zygmund decomposition, sparse domination, and Monte Carlo
//! Itô simulation with reproducible counter-based substreams.

pub mod brownian;
pub mod cz;
pub mod dini;
pub mod dyadic;
pub mod error;
pub mod fractional;
pub mod gamma;
pub mod grid;
pub mod ito;
pub mod kernel;
pub mod kernel_checks;
pub mod maximal;
pub mod norms;
pub mod opnorm;
pub mod parabolic;
pub mod quad;
pub mod sector;
pub mod space;
pub mod sparse;
pub mod wedge;

pub use error::{Result, SioError};
pub use grid::{Grid, GridFunction, ScalarField, Weight};
pub use space::FiniteDimSpace;
