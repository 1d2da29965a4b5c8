//! Order statistics, the empirical quantile function and the two-sample
//! point estimators built on it: the quantile ratio `g(p) = Q2(p)/Q1(p)`,
//! the growth incidence curve `G(p) = g(p)^m - 1` and the log-scale
//! quantile treatment effect `log g(p)`.
//!
//! The empirical quantile is the left-continuous inverse of the empirical
//! distribution function: `Q(p) = X_(k)` for `(k-1)/n < p <= k/n`. It is
//! equivariant under strictly increasing maps, so quantiles of the log data
//! are the logs of the quantiles and every curve here can be computed on
//! the log scale without loss.

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

/// One strictly positive i.i.d. sample with cached order statistics.
#[derive(Debug, Clone, PartialEq)]
pub struct Sample {
    values: Vec<f64>,
    sorted: Vec<f64>,
    log_sorted: Vec<f64>,
}

impl Sample {
    /// Validates positivity and size (`n >= 2`) and caches the order
    /// statistics of the data and of its log transform.
    pub fn new(values: Vec<f64>) -> Result<Self> {
        if values.len() < 2 {
            return Err(Error::InvalidSample(format!(
                "need at least 2 observations, got {}",
                values.len()
            )));
        }
        if let Some((i, v)) = values
            .iter()
            .enumerate()
            .find(|(_, v)| !(v.is_finite() && **v > 0.0))
        {
            return Err(Error::InvalidSample(format!(
                "observation {i} is {v}; all values must be finite and > 0"
            )));
        }
        let mut sorted = values.clone();
        sorted.sort_by(f64::total_cmp);
        let log_sorted = sorted.iter().map(|v| v.ln()).collect();
        Ok(Self {
            values,
            sorted,
            log_sorted,
        })
    }

    /// Builds a sample from values given on the log scale.
    pub fn from_logs(logs: &[f64]) -> Result<Self> {
        Self::new(logs.iter().map(|l| l.exp()).collect())
    }

    pub fn n(&self) -> usize {
        self.values.len()
    }

    pub fn values(&self) -> &[f64] {
        &self.values
    }

    /// Ascending order statistics `X_(1) <= ... <= X_(n)`.
    pub fn sorted(&self) -> &[f64] {
        &self.sorted
    }

    /// Ascending order statistics of `log X`.
    pub fn log_sorted(&self) -> &[f64] {
        &self.log_sorted
    }

    /// Empirical quantile of the raw data.
    pub fn quantile(&self, p: f64) -> Result<f64> {
        Ok(self.sorted[order_index(self.n(), p)? - 1])
    }

    /// Empirical quantile of the log-transformed data.
    pub fn log_quantile(&self, p: f64) -> Result<f64> {
        Ok(self.log_sorted[order_index(self.n(), p)? - 1])
    }

    /// Mean and standard deviation (n - 1 denominator) of the log data.
    pub fn log_moments(&self) -> (f64, f64) {
        mean_sd(&self.log_sorted)
    }

    /// Applies `f` to every value, keeping the observation order.
    pub fn map(&self, f: impl Fn(f64) -> f64) -> Result<Self> {
        Self::new(self.values.iter().map(|&v| f(v)).collect())
    }
}

pub(crate) fn mean_sd(xs: &[f64]) -> (f64, f64) {
    let n = xs.len() as f64;
    let mean = xs.iter().sum::<f64>() / n;
    let ss: f64 = xs.iter().map(|x| (x - mean).powi(2)).sum();
    (mean, (ss / (n - 1.0)).sqrt())
}

/// The 1-based order `k` with `(k-1)/n < p <= k/n`.
///
/// Computed from `ceil(n p)` and corrected against the defining inequality
/// so that probabilities lying exactly on a breakpoint `k/n` resolve the
/// same way as a direct scan.
pub fn order_index(n: usize, p: f64) -> Result<usize> {
    if !(p > 0.0 && p <= 1.0) {
        return Err(Error::domain(format!(
            "probability {p} outside (0, 1]"
        )));
    }
    let nf = n as f64;
    let mut k = ((nf * p).ceil() as usize).clamp(1, n);
    while k > 1 && p <= (k - 1) as f64 / nf {
        k -= 1;
    }
    while k < n && p > k as f64 / nf {
        k += 1;
    }
    Ok(k)
}

/// Empirical quantile `Q(p) = X_(k)` for `(k-1)/n < p <= k/n`.
pub fn empirical_quantile(sample: &Sample, p: f64) -> Result<f64> {
    sample.quantile(p)
}

/// Evaluation points in `(0, 1)` with the trimming bounds that produced them.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ProbabilityGrid {
    points: Vec<f64>,
    trim_lo: f64,
    trim_hi: f64,
}

/// Grid length used when none is configured.
pub const DEFAULT_GRID_LEN: usize = 100;

impl ProbabilityGrid {
    pub fn new(points: Vec<f64>, trim_lo: f64, trim_hi: f64) -> Result<Self> {
        if points.is_empty() {
            return Err(Error::domain("probability grid is empty"));
        }
        if points.windows(2).any(|w| w[0] >= w[1]) {
            return Err(Error::domain("grid points must be strictly increasing"));
        }
        let (first, last) = (points[0], points[points.len() - 1]);
        if !(trim_lo > 0.0 && trim_lo <= first && last <= trim_hi && trim_hi < 1.0) {
            return Err(Error::domain(format!(
                "grid [{first}, {last}] incompatible with trimming [{trim_lo}, {trim_hi}] in (0, 1)"
            )));
        }
        Ok(Self {
            points,
            trim_lo,
            trim_hi,
        })
    }

    /// `len` equidistant points `i / (len + 1)`, `i = 1..=len`, untrimmed.
    pub fn equidistant(len: usize) -> Result<Self> {
        if len == 0 {
            return Err(Error::domain("grid length must be positive"));
        }
        let step = 1.0 / (len + 1) as f64;
        let points: Vec<f64> = (1..=len).map(|i| i as f64 * step).collect();
        let (lo, hi) = (points[0], points[len - 1]);
        Self::new(points, lo, hi)
    }

    /// Equidistant grid of length `len` clipped to `[eps, 1 - eps]`.
    pub fn trimmed(len: usize, eps: f64) -> Result<Self> {
        Self::equidistant(len)?.clip(eps, 1.0 - eps)
    }

    /// Keeps only the points inside `[lo, hi]`.
    pub fn clip(&self, lo: f64, hi: f64) -> Result<Self> {
        if !(lo > 0.0 && lo < hi && hi < 1.0) {
            return Err(Error::domain(format!(
                "trimming interval [{lo}, {hi}] must be a non-empty subset of (0, 1)"
            )));
        }
        let points: Vec<f64> = self
            .points
            .iter()
            .copied()
            .filter(|p| (lo..=hi).contains(p))
            .collect();
        if points.is_empty() {
            return Err(Error::domain(format!(
                "no grid points remain inside [{lo}, {hi}]"
            )));
        }
        Self::new(points, lo, hi)
    }

    pub fn points(&self) -> &[f64] {
        &self.points
    }

    pub fn len(&self) -> usize {
        self.points.len()
    }

    pub fn is_empty(&self) -> bool {
        self.points.is_empty()
    }

    pub fn trim_lo(&self) -> f64 {
        self.trim_lo
    }

    pub fn trim_hi(&self) -> f64 {
        self.trim_hi
    }
}

/// Annualisation exponent `m = 1 / (t2 - t1)` of a growth incidence curve.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct GicParams {
    m: f64,
}

impl GicParams {
    pub fn new(m: f64) -> Result<Self> {
        if !(m > 0.0 && m <= 1.0) {
            return Err(Error::domain(format!("m = {m} outside (0, 1]")));
        }
        Ok(Self { m })
    }

    /// `m = 1 / (t2 - t1)` for survey years `t1 < t2` at least one year apart.
    pub fn from_periods(t1: f64, t2: f64) -> Result<Self> {
        Self::new(1.0 / (t2 - t1))
    }

    pub fn m(&self) -> f64 {
        self.m
    }
}

impl Default for GicParams {
    fn default() -> Self {
        Self { m: 1.0 }
    }
}

/// `log g(p) = Qlog2(p) - Qlog1(p)` at every grid point.
pub fn log_qte_curve(s1: &Sample, s2: &Sample, grid: &ProbabilityGrid) -> Result<Vec<f64>> {
    grid.points()
        .iter()
        .map(|&p| Ok(s2.log_quantile(p)? - s1.log_quantile(p)?))
        .collect()
}

/// `g(p) = Q2(p) / Q1(p)` at every grid point.
pub fn quantile_ratio(s1: &Sample, s2: &Sample, grid: &ProbabilityGrid) -> Result<Vec<f64>> {
    grid.points()
        .iter()
        .map(|&p| Ok(s2.quantile(p)? / s1.quantile(p)?))
        .collect()
}

/// `G(p) = g(p)^m - 1` at every grid point.
pub fn gic_curve(
    s1: &Sample,
    s2: &Sample,
    grid: &ProbabilityGrid,
    params: GicParams,
) -> Result<Vec<f64>> {
    let m = params.m();
    Ok(quantile_ratio(s1, s2, grid)?
        .into_iter()
        .map(|g| g.powf(m) - 1.0)
        .collect())
}

/// Average treatment effect `E X1 - E X2 = \int Q1(p) (1 - g(p)) dp`,
/// integrated with the trapezoid rule over the grid points.
pub fn ate_from_curve(s1: &Sample, s2: &Sample, grid: &ProbabilityGrid) -> Result<f64> {
    let integrand: Vec<f64> = grid
        .points()
        .iter()
        .map(|&p| {
            let q1 = s1.quantile(p)?;
            let g = s2.quantile(p)? / q1;
            Ok(q1 * (1.0 - g))
        })
        .collect::<Result<_>>()?;
    Ok(grid
        .points()
        .windows(2)
        .zip(integrand.windows(2))
        .map(|(p, f)| 0.5 * (p[1] - p[0]) * (f[0] + f[1]))
        .sum())
}
