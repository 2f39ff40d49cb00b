//! Boundary-element solver for time-harmonic scattering from perfect electric
//! conductors.
//!
//! The crate assembles the RWG-discretised EFIE and MFIE operators, the two
//! sparse Gram matrices of the weak-form combined-source condition, and
//! composes them into the EFIE, MFIE, CFIE and combined-source (CSIE-JM,
//! CSIE-J) systems. CSIE-J eliminates the magnetic unknowns by solving the
//! Gram system with conjugate gradients inside every operator application.
//! Far fields, bistatic RCS, a Mie-series reference and singular-value
//! diagnostics round out the validation tooling.
//!
//! The linear-algebra layer ([`linalg`], [`krylov`]) is generic over
//! [`Scalar`]; the electromagnetics is written for `f64` and [`Complex`].

pub mod basis;
pub mod constants;
pub mod context;
pub mod error;
pub mod excitation;
pub mod formulations;
pub mod krylov;
pub mod linalg;
pub mod mesh;
pub mod operators;
pub mod postproc;
pub mod quadrature;
pub mod scalar;

pub use context::PhysicalContext;
pub use error::{Error, Result};
pub use scalar::Scalar;

/// Real scalar used throughout the electromagnetics.
pub type Real = f64;
/// Complex scalar used throughout the electromagnetics.
pub type Complex = num_complex::Complex64;
/// Cartesian 3-vector in metres.
pub type Vec3 = nalgebra::Vector3<f64>;
/// Complex Cartesian 3-vector (field phasors).
pub type CVec3 = nalgebra::Vector3<Complex>;

/// Dense complex matrix holding the integral operators.
pub type DenseComplexMatrix = linalg::DenseMatrix<Complex>;
/// Dense real matrix.
pub type DenseRealMatrix = linalg::DenseMatrix<Real>;
/// Compressed sparse real matrix holding the Gram matrices.
pub type SparseRealMatrix = linalg::SparseMatrix<Real>;
