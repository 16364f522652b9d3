//! Scalar abstraction for the numerical core.
//!
//! All tensor and statevector math is written against [`Scalar`] so the same
//! code instantiates at `f32` or `f64`. Production runs use `f64`; the
//! default tolerances quoted throughout the crate assume it.

use std::fmt::{Debug, Display};
use std::iter::{Product, Sum};

use num_complex::Complex;
use num_traits::{Float, FloatConst, FromPrimitive, NumAssign, ToPrimitive};

/// Real scalar type underlying all complex arithmetic in this crate.
pub trait Scalar:
    Float
    + FloatConst
    + FromPrimitive
    + ToPrimitive
    + NumAssign
    + Sum<Self>
    + Product<Self>
    + Debug
    + Display
    + Send
    + Sync
    + 'static
{
    /// Lossy conversion from `f64` (exact for `f64` itself).
    fn from_f64_lossy(x: f64) -> Self {
        Self::from_f64(x).expect("f64 conversion")
    }

    /// Lossy conversion to `f64`.
    fn to_f64_lossy(self) -> f64 {
        self.to_f64().expect("f64 conversion")
    }
}

impl Scalar for f32 {}
impl Scalar for f64 {}

/// Complex number over the crate scalar.
pub type C<T> = Complex<T>;

/// Default tolerance for identities that hold exactly in real arithmetic
/// (isometry conditions, stochasticity, unitarity). Assumes `f64` runs;
/// callers on `f32` should pass their own tolerance.
pub const EXACT_TOL: f64 = 1e-12;

/// Shorthand for `Complex::new(re, 0)`.
pub fn creal<T: Scalar>(re: T) -> C<T> {
    Complex::new(re, T::zero())
}

/// `sign(g)`: +1 for g > 0, -1 for g < 0, 0 for g = 0.
pub fn sign_of<T: Scalar>(g: T) -> T {
    if g > T::zero() {
        T::one()
    } else if g < T::zero() {
        -T::one()
    } else {
        T::zero()
    }
}
