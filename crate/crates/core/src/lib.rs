//! Dissipative abelian sandpile models built from sandpile Laurent
//! polynomials: exact finite-volume dynamics and groups, BTW-like product
//! models, homoclinic kernels of the associated algebraic actions, and
//! symbolic-dynamics entropy checks.

pub mod error;
pub mod exec;
pub mod group;
pub mod harmonic;
mod json;
pub mod laurent;
pub mod matrix;
pub mod product;
pub mod report;
pub mod subshift;
pub mod toppling;
pub mod window;

pub use error::{Error, Result};
pub use exec::Exec;
pub use laurent::{parse, Classification, LaurentPoly};
pub use matrix::IntMatrix;
pub use toppling::{Config, StabilizationResult, TopplingMatrix};
pub use window::Window;
