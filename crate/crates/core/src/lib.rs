//! Boundary control method for discrete dynamical systems governed by Jacobi matrices.
//!
//! The crate covers forward simulation of discrete wave and heat systems, exact
//! reconstruction of Jacobi coefficients from boundary response data, truncated
//! moment problems, the finite Toda lattice, Weyl functions, de Branges kernels,
//! continuous-time systems with Krein–Stieltjes strings, and discrete waves on graphs.

pub mod continuous_time;
pub mod dd;
pub mod discrete_wave;
pub mod error;
pub mod graph_wave;
pub mod heat;
pub mod inverse_bc;
pub mod jacobi;
pub mod linalg;
pub mod moments;
pub mod random;
pub mod scalar;
pub mod spectral;
pub mod toda;
pub mod tridiag;
pub mod verify;
pub mod weyl_debranges;

pub use error::{Error, Result};
pub use jacobi::{chebyshev_u, phi_eval, AnySpec, JacobiSpec, Mode};
pub use scalar::{Complex64, Scalar};
pub use spectral::{
    eig_spectral_data, moments_of_measure, spectral_measure, MomentSequence, SpectralData, SpectralMeasure,
};
