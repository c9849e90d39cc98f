//! Orthant probabilities of the standard bivariate normal distribution.

use crate::error::Result;
use crate::normal;
use crate::quadrature::{integrate, Tolerance};
use crate::scalar::{lit, Real};

/// Absolute accuracy targeted for every rectangle probability.
pub const ABSOLUTE_TOLERANCE: f64 = 1e-14;
/// Relative accuracy, which dominates for the tiny null rates near genome-wide thresholds.
pub const RELATIVE_TOLERANCE: f64 = 1e-11;

/// `P(X > h, Y > k)` for standard normals with correlation `rho`.
///
/// Evaluated as `integral_h^inf phi(x) * sf((k - rho x) / sqrt(1 - rho^2)) dx`
/// by adaptive quadrature; `|rho| = 1` and `rho = 0` are closed form.
pub fn upper_orthant<T: Real>(h: T, k: T, rho: T) -> Result<T> {
    let one = T::one();
    if rho.abs() > one {
        return Ok(T::nan());
    }
    if rho == T::zero() {
        return Ok(normal::sf(h) * normal::sf(k));
    }
    let residual = one - rho * rho;
    if residual <= T::epsilon() * lit(16.0) {
        return Ok(if rho > T::zero() {
            normal::sf(h.max(k))
        } else {
            // X > h and -X > k
            (normal::cdf(-k) - normal::cdf(h)).max(T::zero())
        });
    }
    if h == T::infinity() || k == T::infinity() {
        return Ok(T::zero());
    }
    let scale = residual.sqrt();
    let reach: T = lit(12.0);
    let lower = h.max(-reach);
    let upper = lower.max(T::zero()) + reach;
    let tol = Tolerance {
        absolute: lit::<T>(ABSOLUTE_TOLERANCE).max(T::epsilon() * T::epsilon()),
        relative: lit::<T>(RELATIVE_TOLERANCE).max(T::epsilon() * lit(64.0)),
        max_intervals: 2000,
    };
    let integrand = |x: T| normal::pdf(x) * normal::sf((k - rho * x) / scale);
    let est = integrate(integrand, lower, upper, 8, tol)?;
    Ok(est.value.max(T::zero()).min(normal::sf(h).min(normal::sf(k))))
}

/// `P(X <= h, Y <= k)`.
pub fn cdf<T: Real>(h: T, k: T, rho: T) -> Result<T> {
    upper_orthant(-h, -k, rho)
}
