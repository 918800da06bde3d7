//! Scalar abstractions: real and complex modes, plus an arithmetic-only field
//! trait that also admits double-double numbers for the factorization kernels.

use std::fmt::Debug;

use nalgebra::ComplexField;
use num_traits::{One, Zero};
use serde::de::DeserializeOwned;
use serde::Serialize;
use std::ops::{Add, Div, Mul, Neg, Sub};

pub use num_complex::Complex64;

use crate::dd::Dd;

/// Minimal arithmetic needed by the determinant-ratio kernels.
pub trait Field:
    Copy
    + Debug
    + Add<Output = Self>
    + Sub<Output = Self>
    + Mul<Output = Self>
    + Div<Output = Self>
    + Neg<Output = Self>
    + Zero
    + One
{
    /// Unit roundoff of the underlying arithmetic.
    const UNIT_ROUNDOFF: f64;

    /// Relative singularity threshold for pivots: `1e−10` in double precision,
    /// scaled down with the unit roundoff for wider types.
    fn singular_rtol() -> f64 {
        1e-10 * Self::UNIT_ROUNDOFF / f64::UNIT_ROUNDOFF
    }

    fn lift(x: f64) -> Self;
    fn mag(&self) -> f64;
}

impl Field for f64 {
    const UNIT_ROUNDOFF: f64 = f64::EPSILON / 2.0;
    fn lift(x: f64) -> Self {
        x
    }
    fn mag(&self) -> f64 {
        self.abs()
    }
}

impl Field for Complex64 {
    const UNIT_ROUNDOFF: f64 = f64::EPSILON / 2.0;
    fn lift(x: f64) -> Self {
        Complex64::new(x, 0.0)
    }
    fn mag(&self) -> f64 {
        self.norm()
    }
}

impl Field for Dd {
    // 2⁻¹⁰⁴
    const UNIT_ROUNDOFF: f64 = 4.930380657631324e-32;
    fn lift(x: f64) -> Self {
        Dd::from(x)
    }
    fn mag(&self) -> f64 {
        self.to_f64().abs()
    }
}

/// Scalar type of a Jacobi system: `f64` (real mode) or `Complex64` (complex mode).
pub trait Scalar:
    ComplexField<RealField = f64> + Field + Copy + Default + Send + Sync + Serialize + DeserializeOwned + 'static
{
    const COMPLEX: bool;

    /// Narrowing from a complex value; real mode accepts only zero imaginary parts.
    fn from_c64(z: Complex64) -> Option<Self>;

    fn to_c64(&self) -> Complex64;

    fn re(x: f64) -> Self {
        <Self as Field>::lift(x)
    }

    /// Real part; exact for real mode.
    fn real_part(&self) -> f64;
}

impl Scalar for f64 {
    const COMPLEX: bool = false;
    fn from_c64(z: Complex64) -> Option<Self> {
        (z.im == 0.0).then_some(z.re)
    }
    fn to_c64(&self) -> Complex64 {
        Complex64::new(*self, 0.0)
    }
    fn real_part(&self) -> f64 {
        *self
    }
}

impl Scalar for Complex64 {
    const COMPLEX: bool = true;
    fn from_c64(z: Complex64) -> Option<Self> {
        Some(z)
    }
    fn to_c64(&self) -> Complex64 {
        *self
    }
    fn real_part(&self) -> f64 {
        self.re
    }
}
