//! Normal tails and the truncated normal distribution.
//!
//! Probabilities of intervals are formed in log space from upper-tail
//! evaluations, so intervals far out in either tail keep full relative
//! precision instead of cancelling to `0/0`.

use core::f64::consts::{FRAC_1_SQRT_2, PI};

use crate::error::{Error, Result};

/// `Φ̄(z) = P(Z > z)`.
pub fn normal_sf(z: f64) -> f64 {
    0.5 * libm::erfc(z * FRAC_1_SQRT_2)
}

/// `Φ(z) = P(Z ≤ z)`.
pub fn normal_cdf(z: f64) -> f64 {
    normal_sf(-z)
}

/// Beyond this the Mills-ratio continued fraction is used for `ln Φ̄`.
const CF_SWITCH: f64 = 8.0;
const CF_TERMS: u32 = 60;

/// `ln Φ̄(z)`, accurate far into the upper tail.
pub fn log_normal_sf(z: f64) -> f64 {
    if z == f64::INFINITY {
        return f64::NEG_INFINITY;
    }
    if z < CF_SWITCH {
        return libm::log(normal_sf(z));
    }
    // Φ̄(z) = φ(z) / (z + 1/(z + 2/(z + 3/(z + …)))).
    let mut t = z;
    for k in (1..=CF_TERMS).rev() {
        t = z + f64::from(k) / t;
    }
    -0.5 * z * z - 0.5 * libm::log(2.0 * PI) - libm::log(t)
}

/// `ln(Φ̄(p) − Φ̄(q))` for `p ≤ q`, i.e. the log-probability of `(p, q]`.
pub fn log_normal_mass(p: f64, q: f64) -> f64 {
    if p >= q {
        return f64::NEG_INFINITY;
    }
    if p >= 0.0 {
        let lp = log_normal_sf(p);
        let lq = log_normal_sf(q);
        lp + libm::log(-libm::expm1(lq - lp))
    } else if q <= 0.0 {
        log_normal_mass(-q, -p)
    } else {
        libm::log(0.5 * (libm::erf(q * FRAC_1_SQRT_2) - libm::erf(p * FRAC_1_SQRT_2)))
    }
}

/// `N(mean, sd²)` restricted to `[lower, upper]`.
#[derive(Debug, Clone, Copy, PartialEq)]
#[cfg_attr(feature = "serde", derive(serde::Serialize, serde::Deserialize))]
pub struct TruncatedNormal {
    pub mean: f64,
    pub sd: f64,
    pub lower: f64,
    pub upper: f64,
}

impl TruncatedNormal {
    pub fn new(mean: f64, sd: f64, lower: f64, upper: f64) -> Result<Self> {
        if !(sd > 0.0 && sd.is_finite()) {
            return Err(Error::InvalidArgument(alloc::format!(
                "standard deviation must be positive, got {sd}"
            )));
        }
        if lower.is_nan() || upper.is_nan() || lower >= upper {
            return Err(Error::InvalidInterval { lower, upper });
        }
        Ok(Self {
            mean,
            sd,
            lower,
            upper,
        })
    }

    fn standardized(&self, x: f64) -> (f64, f64, f64) {
        let a = (self.lower - self.mean) / self.sd;
        let b = (self.upper - self.mean) / self.sd;
        let mut z = (x - self.mean) / self.sd;
        if z < a || z > b {
            log::warn!(
                "{x} lies outside [{}, {}]; clamping",
                self.lower,
                self.upper
            );
            z = z.clamp(a, b);
        }
        (a, z, b)
    }

    /// `P(X > x)`.
    pub fn sf(&self, x: f64) -> f64 {
        let (a, z, b) = self.standardized(x);
        let v = libm::exp(log_normal_mass(z, b) - log_normal_mass(a, b));
        v.clamp(0.0, 1.0)
    }

    /// `P(X ≤ x)`.
    pub fn cdf(&self, x: f64) -> f64 {
        let (a, z, b) = self.standardized(x);
        let v = libm::exp(log_normal_mass(a, z) - log_normal_mass(a, b));
        v.clamp(0.0, 1.0)
    }
}
