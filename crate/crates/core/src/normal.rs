//! Standard normal distribution, accurate in both tails.
//!
//! The upper tail uses the positive-term series of Marsaglia for |x| <= 3 and
//! the Laplace continued fraction for the Mills ratio beyond that, so relative
//! accuracy is kept far into the tail where genome-wide thresholds live.

use crate::scalar::{lit, Real};

#[inline]
pub fn pdf<T: Real>(x: T) -> T {
    let half: T = lit(0.5);
    (-(half * x * x)).exp() / (T::TAU()).sqrt()
}

/// Upper tail probability `P(Z > x)`.
pub fn sf<T: Real>(x: T) -> T {
    if x.is_nan() {
        return x;
    }
    if x < T::zero() {
        return T::one() - sf(-x);
    }
    if x == T::infinity() {
        return T::zero();
    }
    let three: T = lit(3.0);
    if x <= three {
        lit::<T>(0.5) - pdf(x) * series(x)
    } else {
        pdf(x) / mills_denominator(x)
    }
}

/// Lower tail probability `P(Z <= x)`.
#[inline]
pub fn cdf<T: Real>(x: T) -> T {
    sf(-x)
}

// sum_{n>=0} x^(2n+1) / (1*3*...*(2n+1))
fn series<T: Real>(x: T) -> T {
    let x2 = x * x;
    let mut term = x;
    let mut sum = x;
    let mut k = T::one();
    for _ in 0..200 {
        k = k + lit(2.0);
        term = term * x2 / k;
        sum = sum + term;
        if term <= sum * T::epsilon() {
            break;
        }
    }
    sum
}

// x + 1/(x + 2/(x + 3/(x + ...))), evaluated with the modified Lentz method.
fn mills_denominator<T: Real>(x: T) -> T {
    let tiny = T::min_positive_value().sqrt();
    let mut f = x;
    let mut c = f;
    let mut d = T::zero();
    let mut n = T::zero();
    for _ in 0..2000 {
        n = n + T::one();
        d = x + n * d;
        if d.abs() < tiny {
            d = tiny;
        }
        c = x + n / c;
        if c.abs() < tiny {
            c = tiny;
        }
        d = d.recip();
        let delta = c * d;
        f = f * delta;
        if (delta - T::one()).abs() <= T::epsilon() {
            break;
        }
    }
    f
}

/// Inverse of the upper tail: returns `z` with `sf(z) = q`.
pub fn isf<T: Real>(q: T) -> T {
    if q.is_nan() || q < T::zero() || q > T::one() {
        return T::nan();
    }
    if q == T::zero() {
        return T::infinity();
    }
    if q == T::one() {
        return T::neg_infinity();
    }
    let half: T = lit(0.5);
    if q > half {
        return -isf(T::one() - q);
    }
    if q == half {
        return T::zero();
    }
    // Rational starting point, then Halley steps on sf(x) - q.
    let t = (lit::<T>(-2.0) * q.ln()).sqrt();
    let num = lit::<T>(2.515517) + t * (lit::<T>(0.802853) + t * lit::<T>(0.010328));
    let den = T::one() + t * (lit::<T>(1.432788) + t * (lit::<T>(0.189269) + t * lit::<T>(0.001308)));
    let mut x = t - num / den;
    for _ in 0..50 {
        let phi = pdf(x);
        if phi <= T::zero() {
            break;
        }
        let u = (sf(x) - q) / phi;
        let step = u / (T::one() - x * u * half);
        x = x + step;
        if step.abs() <= lit::<T>(4.0) * T::epsilon() * x.abs().max(T::one()) {
            break;
        }
    }
    x
}

/// Inverse of the lower tail.
#[inline]
pub fn quantile<T: Real>(p: T) -> T {
    -isf(p)
}

/// Two-sided critical value `z_{alpha/2}`; zero at `alpha = 1`.
#[inline]
pub fn two_sided_critical<T: Real>(alpha: T) -> T {
    isf(alpha * lit(0.5))
}

/// Two-sided p-value of a standard normal statistic.
#[inline]
pub fn two_sided_p<T: Real>(z: T) -> T {
    let p = lit::<T>(2.0) * sf(z.abs());
    p.min(T::one())
}
