//! Scalar abstractions.
//!
//! The exact-arithmetic parts of the crate (gamete algebra, cost arithmetic)
//! only need field operations and are generic over [`Field`], which admits
//! arbitrary-precision rationals as well as `f32`/`f64`. Anything involving
//! the normal distribution, quadrature or root finding needs transcendental
//! functions and is generic over [`Real`].

use std::fmt::{Debug, Display, LowerExp};

use num_traits::{Float, FloatConst, FromPrimitive, Num, ToPrimitive};

/// Ordered field: enough for the gamete-table algebra.
pub trait Field: Clone + PartialOrd + Num + FromPrimitive + ToPrimitive + Debug {}

impl<T> Field for T where T: Clone + PartialOrd + Num + FromPrimitive + ToPrimitive + Debug {}

/// Floating point scalar used by the analytic power engine and optimizer.
pub trait Real:
    Field + Float + FloatConst + Copy + Send + Sync + Display + LowerExp + Default + 'static
{
}

impl Real for f32 {}
impl Real for f64 {}

/// Converts an `f64` literal into the scalar type.
#[inline]
pub fn lit<T: FromPrimitive>(x: f64) -> T {
    T::from_f64(x).expect("literal not representable in scalar type")
}

/// Lossy conversion used for diagnostics and error messages.
#[inline]
pub fn to_f64<T: ToPrimitive>(x: &T) -> f64 {
    x.to_f64().unwrap_or(f64::NAN)
}

pub(crate) fn pmin<T: PartialOrd>(a: T, b: T) -> T {
    if b < a {
        b
    } else {
        a
    }
}

pub(crate) fn pmax<T: PartialOrd>(a: T, b: T) -> T {
    if b > a {
        b
    } else {
        a
    }
}
