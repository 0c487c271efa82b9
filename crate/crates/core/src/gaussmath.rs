//! Gaussian and lognormal special functions.
//!
//! `std_normal_cdf` follows the Cephes `ndtr` construction: a rational
//! approximation of `erf` on `|x| < 1` and of `erfc` beyond, with `exp(-x²)`
//! evaluated in split form so the tails keep full relative accuracy.
//! `std_normal_quantile` starts from Acklam's rational approximation and
//! polishes it with one Newton step on the cdf.

#![allow(clippy::excessive_precision, clippy::unreadable_literal)]

use crate::error::{Error, Result};
use crate::num::Real;

const ERF_T: [f64; 5] = [
    9.60497373987051638749e0,
    9.00260197203842689217e1,
    2.23200534594684319226e3,
    7.00332514112805075473e3,
    5.55923013010394962768e4,
];
const ERF_U: [f64; 5] = [
    3.35617141647503099647e1,
    5.21357949780152679795e2,
    4.59432382970980127987e3,
    2.26290000613890934246e4,
    4.92673942608635921086e4,
];
const ERFC_P: [f64; 9] = [
    2.46196981473530512524e-10,
    5.64189564831068821977e-1,
    7.46321056442269912687e0,
    4.86371970985681366614e1,
    1.96520832956077098242e2,
    5.26445194995477358631e2,
    9.34528527171957607540e2,
    1.02755188689515710272e3,
    5.57535335369399327526e2,
];
const ERFC_Q: [f64; 8] = [
    1.32281951154744992508e1,
    8.67072140885989742329e1,
    3.54937778887819891062e2,
    9.75708501743205489753e2,
    1.82390916687909736289e3,
    2.24633760818710981792e3,
    1.65666309194161350182e3,
    5.57535340817727675546e2,
];
const ERFC_R: [f64; 6] = [
    5.64189583547755073984e-1,
    1.27536670759978104416e0,
    5.01905042251180477414e0,
    6.16021097993053585195e0,
    7.40974269950448939160e0,
    2.97886665372100240670e0,
];
const ERFC_S: [f64; 6] = [
    2.26052863220117276590e0,
    9.39603524938001434673e0,
    1.20489539808096656605e1,
    1.70814450747565897222e1,
    9.60896809063285878198e0,
    3.36907645100081516050e0,
];

// Acklam's inverse-normal coefficients.
const ACKLAM_A: [f64; 6] = [
    -3.969683028665376e+01,
    2.209460984245205e+02,
    -2.759285104469687e+02,
    1.383577518672690e+02,
    -3.066479806614716e+01,
    2.506628277459239e+00,
];
const ACKLAM_B: [f64; 6] = [
    -5.447609879822406e+01,
    1.615858368580409e+02,
    -1.556989798598866e+02,
    6.680131188771972e+01,
    -1.328068155288572e+01,
    1.0,
];
const ACKLAM_C: [f64; 6] = [
    -7.784894002430293e-03,
    -3.223964580411365e-01,
    -2.400758277161838e+00,
    -2.549732539343734e+00,
    4.374664141464968e+00,
    2.938163982698783e+00,
];
const ACKLAM_D: [f64; 5] = [
    7.784695709041462e-03,
    3.224671290700398e-01,
    2.445134137142996e+00,
    3.754408661907416e+00,
    1.0,
];
const ACKLAM_P_LOW: f64 = 0.02425;

const MAXLOG: f64 = 7.09782712893383996843e2;

/// Horner evaluation, coefficients in descending powers.
#[inline]
fn polevl<T: Real>(x: T, coeffs: &[f64]) -> T {
    coeffs.iter().fold(T::zero(), |acc, &c| acc * x + T::lit(c))
}

/// Same as [`polevl`] with an implicit leading coefficient of one.
#[inline]
fn p1evl<T: Real>(x: T, coeffs: &[f64]) -> T {
    coeffs.iter().fold(T::one(), |acc, &c| acc * x + T::lit(c))
}

/// `exp(-x²)` with the square split as `m² + (2mf + f²)`, `m` a multiple of 1/128.
fn exp_neg_square<T: Real>(x: T) -> T {
    let x = x.abs();
    let scale = T::lit(128.0);
    let m = (scale * x + T::lit(0.5)).floor() / scale;
    let f = x - m;
    let u = m * m;
    let u1 = T::lit(2.0) * m * f + f * f;
    if u + u1 > T::lit(MAXLOG) {
        return T::zero();
    }
    (-u).exp() * (-u1).exp()
}

/// Error function.
pub fn erf<T: Real>(x: T) -> T {
    if x.abs() > T::one() {
        return T::one() - erfc(x);
    }
    let z = x * x;
    x * polevl(z, &ERF_T) / p1evl(z, &ERF_U)
}

/// Complementary error function, accurate in relative terms for large `x`.
pub fn erfc<T: Real>(a: T) -> T {
    let x = a.abs();
    if x < T::one() {
        return T::one() - erf(a);
    }
    if a * a > T::lit(MAXLOG) {
        return if a < T::zero() {
            T::lit(2.0)
        } else {
            T::zero()
        };
    }
    let z = exp_neg_square(a);
    let (p, q) = if x < T::lit(8.0) {
        (polevl(x, &ERFC_P), p1evl(x, &ERFC_Q))
    } else {
        (polevl(x, &ERFC_R), p1evl(x, &ERFC_S))
    };
    let y = z * p / q;
    if a < T::zero() {
        T::lit(2.0) - y
    } else {
        y
    }
}

/// Standard normal density.
#[inline]
pub fn std_normal_pdf<T: Real>(x: T) -> T {
    let inv_sqrt_2pi = T::FRAC_1_SQRT_2() * T::FRAC_2_SQRT_PI() * T::lit(0.5);
    inv_sqrt_2pi * (T::lit(-0.5) * x * x).exp()
}

/// Standard normal distribution function Φ.
///
/// Absolute error stays below 1e-15 on `|x| ≤ 8`; the lower tail keeps
/// relative accuracy down to the subnormal range.
pub fn std_normal_cdf<T: Real>(x: T) -> T {
    let half = T::lit(0.5);
    let u = x * T::FRAC_1_SQRT_2();
    if u.abs() < T::FRAC_1_SQRT_2() {
        half + half * erf(u)
    } else {
        let tail = half * erfc(u.abs());
        if u > T::zero() {
            T::one() - tail
        } else {
            tail
        }
    }
}

/// Inverse of [`std_normal_cdf`]; `p` must lie strictly inside (0, 1).
pub fn std_normal_quantile<T: Real>(p: T) -> Result<T> {
    if !(p > T::zero() && p < T::one()) {
        return Err(Error::Domain(format!(
            "normal quantile needs 0 < p < 1, got {p}"
        )));
    }
    let half = T::lit(0.5);
    if p == half {
        return Ok(T::zero());
    }
    // 1 - p is exact for p >= 0.5, so the upper half mirrors the lower one.
    if p > half {
        return Ok(-lower_quantile(T::one() - p));
    }
    Ok(lower_quantile(p))
}

/// Quantile for `0 < p < 0.5`, where Φ is evaluated without cancellation.
fn lower_quantile<T: Real>(p: T) -> T {
    let z = if p < T::lit(ACKLAM_P_LOW) {
        let q = (T::lit(-2.0) * p.ln()).sqrt();
        polevl(q, &ACKLAM_C) / polevl(q, &ACKLAM_D)
    } else {
        let q = p - T::lit(0.5);
        let r = q * q;
        polevl(r, &ACKLAM_A) * q / polevl(r, &ACKLAM_B)
    };
    // One Newton step on Φ(z) - p.
    let cdf = std_normal_cdf(z);
    let pdf = std_normal_pdf(z);
    if pdf > T::zero() && cdf.is_finite() {
        let step = (cdf - p) / pdf;
        if step.is_finite() {
            return z - step;
        }
    }
    z
}

/// Jump-size law: `Λ + 1` is lognormal with the given mean and standard deviation.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct JumpSizeParams<T: Real = f64> {
    /// Mean of `Λ + 1`.
    pub mean_shifted: T,
    /// Standard deviation of `Λ + 1`.
    pub sd_shifted: T,
    pub mu_log: T,
    pub sigma_log: T,
}

impl<T: Real> JumpSizeParams<T> {
    /// Builds the law from its log-space location and scale.
    pub fn from_log_params(mu_log: T, sigma_log: T) -> Result<Self> {
        if !mu_log.is_finite() || !(sigma_log >= T::zero()) || !sigma_log.is_finite() {
            return Err(Error::Domain(format!(
                "lognormal needs finite mu and sigma >= 0, got ({mu_log}, {sigma_log})"
            )));
        }
        let s2 = sigma_log * sigma_log;
        let mean_shifted = (mu_log + s2 / T::lit(2.0)).exp();
        let sd_shifted = mean_shifted * s2.exp_m1().sqrt();
        Ok(Self {
            mean_shifted,
            sd_shifted,
            mu_log,
            sigma_log,
        })
    }

    /// Mean of a single jump `Λ`.
    pub fn mean_jump(&self) -> T {
        self.mean_shifted - T::one()
    }
}

/// Moment inversion: log-space parameters of a lognormal with the given mean and sd.
pub fn shifted_lognormal_params<T: Real>(
    mean_shifted: T,
    sd_shifted: T,
) -> Result<JumpSizeParams<T>> {
    if !(mean_shifted > T::zero()) || !mean_shifted.is_finite() {
        return Err(Error::Domain(format!(
            "jump size mean must be positive, got {mean_shifted}"
        )));
    }
    if !(sd_shifted >= T::zero()) || !sd_shifted.is_finite() {
        return Err(Error::Domain(format!(
            "jump size standard deviation must be nonnegative, got {sd_shifted}"
        )));
    }
    let ratio = sd_shifted / mean_shifted;
    let s2 = (ratio * ratio).ln_1p();
    Ok(JumpSizeParams {
        mean_shifted,
        sd_shifted,
        mu_log: mean_shifted.ln() - s2 / T::lit(2.0),
        sigma_log: s2.sqrt(),
    })
}
