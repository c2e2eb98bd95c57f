//! Numerical toolkit for the elliptic form of the dispersionless DKP
//! hierarchy: theta and Eisenstein-type functions, the spectral curve,
//! elliptic Loewner (Goluzin-Komatu) flows, hodograph solutions of the
//! reduced hierarchy and the associated Painleve VI check.

pub mod cli;
pub mod curve;
pub mod elliptic;
pub mod error;
pub mod hodograph;
pub mod identities;
pub mod loewner;
pub mod quadrature;
pub mod report;
pub mod series;
pub mod theta;

pub use error::{Error, Result};
pub use num_complex::Complex64;
