//! First-order dual-field electrodynamics: exact Green kernels, boundary identities
//! and quantum noise bookkeeping in the `[E; Z0 H]` representation.
//!
//! The algebra, quadrature and material models are generic over the real scalar
//! ([`scalar::Real`], implemented for `f32` and `f64`). Kernels, identity checks and
//! the quantum layer work in `f64`; the aliases below fix the scalar for them.

pub mod dual;
pub mod error;
pub mod green1d;
pub mod green3d;
pub mod identities;
pub mod kernel;
pub mod media;
pub mod quantum;
pub mod quadrature;
pub mod scalar;
pub mod units;

pub use error::{Error, Result};
pub use units::UnitsMode;

pub type C64 = num_complex::Complex<f64>;
pub type Point = [f64; 3];
pub type Mat6 = dual::Mat6<f64>;
pub type Vec6 = dual::Vec6<f64>;
pub type Mat3 = dual::Mat3<f64>;
pub type Mat4 = nalgebra::SMatrix<C64, 4, 4>;
pub type Mat2 = dual::Mat2<f64>;
pub type DualField = dual::DualField<f64>;
pub type DualSource = dual::DualSource<f64>;
pub type Grid = dual::Grid<f64>;
pub type Quadrature = quadrature::Quadrature<f64>;

/// Library version, recorded in run manifests.
pub const VERSION: &str = env!("CARGO_PKG_VERSION");
