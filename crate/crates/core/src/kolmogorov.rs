//! Distribution of `sup |B(p)|` for a standard Brownian bridge and its
//! quantiles, which serve as critical values of the simultaneous bands.
//!
//! The CDF is the two-sided alternating series
//! `sum_{k in Z} (-1)^k exp(-2 k^2 c^2)`. Below `c = 0.5` the series loses
//! all relative precision to cancellation, so the equivalent theta-function
//! form `sqrt(2 pi)/c sum_{k>=1} exp(-(2k-1)^2 pi^2 / (8 c^2))` is used there.

use std::f64::consts::PI;

use crate::error::{Error, Result};

/// Truncation controls for the series.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct KolmogorovSeriesParams {
    tolerance: f64,
    max_terms: usize,
}

impl KolmogorovSeriesParams {
    pub fn new(tolerance: f64, max_terms: usize) -> Result<Self> {
        if !(tolerance > 0.0) {
            return Err(Error::domain("series tolerance must be positive"));
        }
        if max_terms < 10 {
            return Err(Error::domain("max_terms must be at least 10"));
        }
        Ok(Self {
            tolerance,
            max_terms,
        })
    }

    pub fn tolerance(&self) -> f64 {
        self.tolerance
    }

    pub fn max_terms(&self) -> usize {
        self.max_terms
    }
}

impl Default for KolmogorovSeriesParams {
    fn default() -> Self {
        Self {
            tolerance: 1e-12,
            max_terms: 1000,
        }
    }
}

/// Below this the CDF is < 1e-300 and reported as 0.
const CDF_ZERO_BELOW: f64 = 0.04;
/// Switch point between the theta form and the alternating series.
const SERIES_FROM: f64 = 0.5;

/// `P(sup_{[0,1]} |B| <= c)`.
pub fn kolmogorov_cdf(c: f64, params: KolmogorovSeriesParams) -> Result<f64> {
    if !(c >= 0.0) {
        return Err(Error::domain(format!("critical value {c} must be >= 0")));
    }
    if c < CDF_ZERO_BELOW {
        return Ok(0.0);
    }
    if c.is_infinite() {
        return Ok(1.0);
    }
    let value = if c < SERIES_FROM {
        theta_cdf(c, params)?
    } else {
        alternating_cdf(c, params)?
    };
    Ok(value.clamp(0.0, 1.0))
}

fn alternating_cdf(c: f64, params: KolmogorovSeriesParams) -> Result<f64> {
    let mut sum = 1.0;
    for k in 1..=params.max_terms {
        let kf = k as f64;
        // terms k and -k together
        let term = 2.0 * (-2.0 * kf * kf * c * c).exp();
        if k % 2 == 1 {
            sum -= term;
        } else {
            sum += term;
        }
        if term < params.tolerance {
            return Ok(sum);
        }
    }
    Err(Error::Numerical(format!(
        "Kolmogorov series at c = {c} did not reach tolerance {} in {} terms",
        params.tolerance, params.max_terms
    )))
}

fn theta_cdf(c: f64, params: KolmogorovSeriesParams) -> Result<f64> {
    let lead = (2.0 * PI).sqrt() / c;
    let mut sum = 0.0;
    for k in 1..=params.max_terms {
        let odd = (2 * k - 1) as f64;
        let term = (-odd * odd * PI * PI / (8.0 * c * c)).exp();
        sum += term;
        if lead * term < params.tolerance * sum.max(f64::MIN_POSITIVE) || term == 0.0 {
            return Ok(lead * sum);
        }
    }
    Err(Error::Numerical(format!(
        "Kolmogorov theta series at c = {c} did not converge"
    )))
}

/// Density of `sup |B|`.
pub fn kolmogorov_pdf(c: f64, params: KolmogorovSeriesParams) -> Result<f64> {
    if !(c >= 0.0) {
        return Err(Error::domain(format!("critical value {c} must be >= 0")));
    }
    if c < CDF_ZERO_BELOW {
        return Ok(0.0);
    }
    if c < SERIES_FROM {
        let mut sum = 0.0;
        for k in 1..=params.max_terms {
            let odd = (2 * k - 1) as f64;
            let a = odd * odd * PI * PI / 8.0;
            let term = (-a / (c * c)).exp() * (2.0 * a / c.powi(4) - 1.0 / (c * c));
            sum += term;
            if term.abs() < params.tolerance * sum.abs() || term == 0.0 {
                break;
            }
        }
        return Ok((2.0 * PI).sqrt() * sum);
    }
    let mut sum = 0.0;
    for k in 1..=params.max_terms {
        let kf = k as f64;
        let term = kf * kf * (-2.0 * kf * kf * c * c).exp();
        if k % 2 == 1 {
            sum += term;
        } else {
            sum -= term;
        }
        if term < params.tolerance {
            break;
        }
    }
    Ok(8.0 * c * sum)
}

/// Critical value `c` with `P(sup |B| <= c) = level`.
///
/// Bisection on `[0.1, 5]` (widened when the level lies outside it)
/// followed by Newton polishing; `|cdf(c) - level| < 1e-10` is checked.
pub fn kolmogorov_quantile(level: f64, params: KolmogorovSeriesParams) -> Result<f64> {
    if !(level > 0.0 && level < 1.0) {
        return Err(Error::domain(format!("level {level} outside (0, 1)")));
    }
    let cdf = |c: f64| kolmogorov_cdf(c, params);
    let (mut lo, mut hi) = (0.1, 5.0);
    if cdf(lo)? > level {
        lo = CDF_ZERO_BELOW;
    }
    if cdf(hi)? < level {
        hi = 10.0;
    }
    for _ in 0..60 {
        let mid = 0.5 * (lo + hi);
        if cdf(mid)? < level {
            lo = mid;
        } else {
            hi = mid;
        }
    }
    let mut c = 0.5 * (lo + hi);
    for _ in 0..20 {
        let f = cdf(c)? - level;
        if f.abs() < 1e-15 {
            break;
        }
        let d = kolmogorov_pdf(c, params)?;
        if !(d > 0.0) {
            break;
        }
        let next = c - f / d;
        if !(next > lo && next < hi) || (next - c).abs() < 1e-16 * c {
            break;
        }
        c = next;
    }
    let err = (cdf(c)? - level).abs();
    if err >= 1e-10 {
        return Err(Error::Numerical(format!(
            "Kolmogorov quantile for level {level} converged to c = {c} with error {err:e}"
        )));
    }
    Ok(c)
}
