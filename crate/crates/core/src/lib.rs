//! Finite-dimensional Gaussian chaos calculus with a Monte Carlo lab.
//!
//! Functionals of a finite Gaussian vector `g = (g_1, ..., g_n)` with values in
//! `E = R^d` are stored exactly as expansions in the orthonormal generalized
//! Hermite basis. Derivatives, divergences, Ornstein-Uhlenbeck operators and
//! chaos projections act on the coefficients; norms in non-Hilbert `E` are
//! estimated by reproducible, parallel Monte Carlo.

pub mod chaos;
pub mod decoupling;
pub mod error;
pub mod experiment;
pub mod gaussian;
pub mod hermite;
pub mod integral;
pub mod malliavin;
pub mod mc;
pub mod multiindex;
pub mod ou;
pub mod quadrature;
pub mod random;
pub mod space;
pub mod tensor;

pub use error::{Error, Result};
