//! Numerical laboratory for half-line Dirac (Zakharov–Shabat) operators
//! `Λ = -i j ∂ₓ + Φ` with off-diagonal data `φ`.

pub mod config;
pub mod error;
pub mod martin;
pub mod operator;
pub mod oscillatory;
pub mod output;
pub mod propagation;
pub mod quadrature;
pub mod report;
pub mod series;
pub mod spectral;
pub mod weyl;
pub mod zeros;

pub use error::{Error, Result};
pub use num_complex::Complex64;
pub use operator::{Family, OperatorData};
