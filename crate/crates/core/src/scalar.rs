//! Scalar abstraction shared by the linear-algebra layer.
//!
//! The Gram matrices are real, the integral operators complex, and the
//! Krylov solvers run on both. [`Scalar`] covers `f32`, `f64` and their
//! complex counterparts so that one solver implementation serves all of them.

use std::fmt::Debug;
use std::iter::Sum;

use num_complex::Complex;
use num_traits::{Float, FromPrimitive, NumAssign, Zero};

/// Real or complex field element.
pub trait Scalar:
    Copy
    + Debug
    + Default
    + PartialEq
    + NumAssign
    + std::ops::Neg<Output = Self>
    + Sum
    + Send
    + Sync
    + 'static
{
    /// Underlying real type.
    type Real: Float + FromPrimitive + Debug + Default + Send + Sync + Sum + NumAssign + 'static;

    fn from_real(r: Self::Real) -> Self;
    fn conj(self) -> Self;
    fn abs_sq(self) -> Self::Real;
    fn real_part(self) -> Self::Real;
    /// Multiply by a real factor.
    fn mul_real(self, r: Self::Real) -> Self;
    fn is_finite(self) -> bool;
}

macro_rules! impl_real {
    ($t:ty) => {
        impl Scalar for $t {
            type Real = $t;
            #[inline]
            fn from_real(r: $t) -> Self {
                r
            }
            #[inline]
            fn conj(self) -> Self {
                self
            }
            #[inline]
            fn abs_sq(self) -> $t {
                self * self
            }
            #[inline]
            fn real_part(self) -> $t {
                self
            }
            #[inline]
            fn mul_real(self, r: $t) -> Self {
                self * r
            }
            #[inline]
            fn is_finite(self) -> bool {
                <$t>::is_finite(self)
            }
        }
    };
}

macro_rules! impl_complex {
    ($t:ty) => {
        impl Scalar for Complex<$t> {
            type Real = $t;
            #[inline]
            fn from_real(r: $t) -> Self {
                Complex::new(r, 0.0)
            }
            #[inline]
            fn conj(self) -> Self {
                Complex::conj(&self)
            }
            #[inline]
            fn abs_sq(self) -> $t {
                self.norm_sqr()
            }
            #[inline]
            fn real_part(self) -> $t {
                self.re
            }
            #[inline]
            fn mul_real(self, r: $t) -> Self {
                Complex::new(self.re * r, self.im * r)
            }
            #[inline]
            fn is_finite(self) -> bool {
                self.re.is_finite() && self.im.is_finite()
            }
        }
    };
}

impl_real!(f32);
impl_real!(f64);
impl_complex!(f32);
impl_complex!(f64);

/// Hermitian inner product `Σ conj(a_i) b_i`, accumulated in index order.
pub fn dot<S: Scalar>(a: &[S], b: &[S]) -> S {
    debug_assert_eq!(a.len(), b.len());
    let mut acc = S::zero();
    for (x, y) in a.iter().zip(b) {
        acc += x.conj() * *y;
    }
    acc
}

pub fn norm<S: Scalar>(a: &[S]) -> S::Real {
    let mut acc = S::Real::zero();
    for x in a {
        acc += x.abs_sq();
    }
    acc.sqrt()
}

/// `y += a * x`
pub fn axpy<S: Scalar>(a: S, x: &[S], y: &mut [S]) {
    debug_assert_eq!(x.len(), y.len());
    for (yi, xi) in y.iter_mut().zip(x) {
        *yi += a * *xi;
    }
}

/// `‖a − b‖ / ‖b‖`, or `‖a‖` when `b` vanishes.
pub fn relative_difference<S: Scalar>(a: &[S], b: &[S]) -> S::Real {
    let diff: Vec<S> = a.iter().zip(b).map(|(x, y)| *x - *y).collect();
    let nb = norm(b);
    if nb == S::Real::zero() {
        norm(&diff)
    } else {
        norm(&diff) / nb
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use num_complex::Complex64;

    #[test]
    fn hermitian_dot_conjugates_left() {
        let a = [Complex64::new(0.0, 1.0)];
        let b = [Complex64::new(0.0, 1.0)];
        assert_eq!(dot(&a, &b), Complex64::new(1.0, 0.0));
    }

    #[test]
    fn real_and_complex_norms_agree() {
        let r = [3.0f64, 4.0];
        let c = [Complex64::new(3.0, 0.0), Complex64::new(0.0, 4.0)];
        assert_eq!(norm(&r), 5.0);
        assert_eq!(norm(&c), 5.0);
        assert_eq!(norm(&[3.0f32, 4.0]), 5.0f32);
    }

    #[test]
    fn scale_by_real() {
        let z = Complex64::new(1.0, -2.0).mul_real(2.0);
        assert_eq!(z, Complex64::new(2.0, -4.0));
    }
}
