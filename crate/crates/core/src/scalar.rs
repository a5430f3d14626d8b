//! Floating-point scalar abstraction shared by every numeric module.

use std::fmt::{Debug, Display};
use std::iter::Sum;

use num_traits::{Float, FromPrimitive, ToPrimitive};
use rand::Rng;
use serde::de::DeserializeOwned;
use serde::Serialize;

mod private {
    pub trait Sealed {}
    impl Sealed for f32 {}
    impl Sealed for f64 {}
}

/// Floating-point type usable for weights, values and probabilities.
///
/// Implemented for `f32` and `f64` only.
pub trait Scalar:
    private::Sealed
    + Float
    + FromPrimitive
    + ToPrimitive
    + Sum
    + Default
    + Debug
    + Display
    + Send
    + Sync
    + Serialize
    + DeserializeOwned
    + 'static
{
    /// Absolute tolerance for probability and support-point comparisons.
    fn prob_tol() -> Self;

    /// Uniform draw from `[0, 1)`.
    fn unit<R: Rng + ?Sized>(rng: &mut R) -> Self;

    /// Lossy conversion from an `f64` literal.
    #[inline]
    fn lit(v: f64) -> Self {
        Self::from_f64(v).expect("finite literal")
    }

    #[inline]
    fn from_count(n: usize) -> Self {
        Self::from_usize(n).expect("count fits in float")
    }

    #[inline]
    fn as_f64(self) -> f64 {
        self.to_f64().expect("float converts to f64")
    }
}

impl Scalar for f64 {
    fn prob_tol() -> Self {
        1e-12
    }

    fn unit<R: Rng + ?Sized>(rng: &mut R) -> Self {
        rng.random::<f64>()
    }
}

impl Scalar for f32 {
    fn prob_tol() -> Self {
        1e-5
    }

    fn unit<R: Rng + ?Sized>(rng: &mut R) -> Self {
        rng.random::<f32>()
    }
}

/// Neumaier compensated accumulator.
#[derive(Clone, Copy, Debug, Default)]
pub struct CompensatedSum<T> {
    sum: T,
    carry: T,
}

impl<T: Scalar> CompensatedSum<T> {
    pub fn new() -> Self {
        Self {
            sum: T::zero(),
            carry: T::zero(),
        }
    }

    pub fn add(&mut self, x: T) {
        let t = self.sum + x;
        if self.sum.abs() >= x.abs() {
            self.carry = self.carry + ((self.sum - t) + x);
        } else {
            self.carry = self.carry + ((x - t) + self.sum);
        }
        self.sum = t;
    }

    pub fn value(&self) -> T {
        self.sum + self.carry
    }
}

impl<T: Scalar> Extend<T> for CompensatedSum<T> {
    fn extend<I: IntoIterator<Item = T>>(&mut self, iter: I) {
        for x in iter {
            self.add(x);
        }
    }
}

/// Compensated sum of an iterator.
pub fn compensated_sum<T: Scalar, I: IntoIterator<Item = T>>(iter: I) -> T {
    let mut acc = CompensatedSum::new();
    acc.extend(iter);
    acc.value()
}
