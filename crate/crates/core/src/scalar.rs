//! Scalar abstraction. Everything numeric is generic over `T: Real`
//! (f32 or f64); amplitudes are `Complex<T>`.

use num_complex::Complex;
use num_traits::{Float, FloatConst};
use std::fmt::{Debug, Display, LowerExp};

pub trait Real:
    Float + FloatConst + Debug + Display + LowerExp + Default + Send + Sync + 'static
{
    /// Lossy conversion from f64 literals and parameters.
    fn lit(x: f64) -> Self;
    fn to_f64(self) -> f64;
}

impl Real for f64 {
    #[inline]
    fn lit(x: f64) -> Self {
        x
    }
    #[inline]
    fn to_f64(self) -> f64 {
        self
    }
}

impl Real for f32 {
    #[inline]
    fn lit(x: f64) -> Self {
        x as f32
    }
    #[inline]
    fn to_f64(self) -> f64 {
        self as f64
    }
}

pub type C<T> = Complex<T>;

#[inline]
pub fn c<T: Real>(re: f64, im: f64) -> C<T> {
    Complex::new(T::lit(re), T::lit(im))
}

#[inline]
pub fn czero<T: Real>() -> C<T> {
    Complex::new(T::zero(), T::zero())
}

#[inline]
pub fn cone<T: Real>() -> C<T> {
    Complex::new(T::one(), T::zero())
}

/// e^{i phi}
#[inline]
pub fn cis<T: Real>(phi: T) -> C<T> {
    Complex::new(phi.cos(), phi.sin())
}
