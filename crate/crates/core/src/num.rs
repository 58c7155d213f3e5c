//! Scalar abstractions shared by the numeric core.
//!
//! Most of the crate is generic over [`Real`] (an IEEE float, `f32` or
//! `f64`); the spline/alignment machinery is additionally generic over
//! [`Scalar`] so the same code runs on plain floats and on reverse-mode
//! autodiff variables.

use std::fmt::{Debug, Display};
use std::iter::Sum;
use std::ops::{Add, Div, Mul, Neg, Sub};

use num_traits::{Float, NumAssign, NumCast};

/// Floating point scalar: f32 or f64.
pub trait Real:
    Float + NumAssign + Sum + Default + Debug + Display + Send + Sync + 'static
{
    /// Lossy conversion from f64; the only way constants enter generic code.
    fn from_f64(v: f64) -> Self {
        <Self as NumCast>::from(v).expect("f64 conversion")
    }
    /// Widening (f32) or identity (f64) conversion back to f64.
    fn as_f64(self) -> f64 {
        <f64 as NumCast>::from(self).expect("conversion to f64")
    }
}

impl<T> Real for T where
    T: Float + NumAssign + Sum + Default + Debug + Display + Send + Sync + 'static
{
}

/// Minimal arithmetic surface needed by the spline / trajectory-alignment
/// code. Implemented for plain floats here and for the autodiff variable in
/// [`crate::implicit::autodiff`], so one implementation of the geometry
/// serves both evaluation and differentiation.
pub trait Scalar:
    Clone
    + Add<Output = Self>
    + Sub<Output = Self>
    + Mul<Output = Self>
    + Div<Output = Self>
    + Neg<Output = Self>
{
    fn from_f64(v: f64) -> Self;
    /// Plain value of this scalar (the primal for autodiff variables).
    fn value(&self) -> f64;
    fn sqrt(&self) -> Self;
    fn abs(&self) -> Self;

    fn zero() -> Self {
        Self::from_f64(0.0)
    }
    /// Branch on the primal value; standard practice for autodiff control flow.
    fn lt(&self, other: &Self) -> bool {
        self.value() < other.value()
    }
}

macro_rules! impl_scalar_for_float {
    ($t:ty) => {
        impl Scalar for $t {
            fn from_f64(v: f64) -> Self {
                v as $t
            }
            fn value(&self) -> f64 {
                *self as f64
            }
            fn sqrt(&self) -> Self {
                <$t>::sqrt(*self)
            }
            fn abs(&self) -> Self {
                <$t>::abs(*self)
            }
        }
    };
}

impl_scalar_for_float!(f32);
impl_scalar_for_float!(f64);
