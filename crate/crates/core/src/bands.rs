//! Confidence bands for the log quantile treatment effect
//! `log g(p) = Qlog2(p) - Qlog1(p)` and their images on the ratio, growth
//! incidence and raw-QTE scales.
//!
//! Two simultaneous constructions are provided:
//!
//! * [`plugin_band`]: half-width
//!   `(c_alpha + c_s) sqrt((n1 + s^2 n2)/(n1 n2)) (q1(p)/s + q2(p))/2`
//!   from kernel quantile-density estimates, with `c_alpha` the Kolmogorov
//!   critical value.
//! * [`direct_band`]: empirical quantiles evaluated at probability-shifted
//!   arguments `p -/+ c_alpha / sqrt(2 n_j)`; no smoothing involved.
//!
//! Two point-wise baselines are kept for comparison: the log-normal
//! asymptotic interval ([`pointwise_band`]) and a bootstrap/t interval in the
//! style of the World Bank poverty toolkit ([`worldbank_band`]).

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};
use statrs::distribution::{ContinuousCDF, Normal, StudentsT};

use crate::density::{
    cs_bound, estimate_scale_s, kernel_quantile_density, Kernel, QuantileDensityEstimate,
    RateParams,
};
use crate::error::{Error, Result};
use crate::kolmogorov::{kolmogorov_quantile, KolmogorovSeriesParams};
use crate::quantile::{log_qte_curve, order_index, GicParams, ProbabilityGrid, Sample};

/// Scale on which band values are expressed.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum BandScale {
    /// `log g(p)`, the QTE of the log data.
    LogQte,
    /// `g(p) = Q2(p)/Q1(p)`.
    Ratio,
    /// `G(p) = g(p)^m - 1`.
    Gic,
    /// `Q2(p) - Q1(p)` on the raw data scale.
    Qte,
}

impl BandScale {
    pub fn as_str(self) -> &'static str {
        match self {
            BandScale::LogQte => "log_qte",
            BandScale::Ratio => "ratio",
            BandScale::Gic => "gic",
            BandScale::Qte => "qte",
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum BandMethod {
    Plugin,
    Direct,
    PointwiseLognormal,
    PointwiseNormal,
    WorldbankBootstrap,
}

impl BandMethod {
    pub fn as_str(self) -> &'static str {
        match self {
            BandMethod::Plugin => "plugin",
            BandMethod::Direct => "direct",
            BandMethod::PointwiseLognormal => "pointwise_lognormal",
            BandMethod::PointwiseNormal => "pointwise_normal",
            BandMethod::WorldbankBootstrap => "worldbank_bootstrap",
        }
    }

    pub fn is_simultaneous(self) -> bool {
        matches!(self, BandMethod::Plugin | BandMethod::Direct)
    }
}

/// How the scale parameter `s` and the correction `c_s` enter the plug-in band.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum ScalePolicy {
    /// Log data differ only in location and scale: `s` from the ratio of
    /// integrated squared densities, `c_s = 0`.
    AssumeLocationScale,
    /// Estimate `s` as above and add the iterated-log bound `c_s`.
    EstimateCs,
    /// Known `s`, `c_s = 0`.
    FixedS(f64),
}

/// Normal-theory approximation used by [`pointwise_band`].
#[derive(Debug, Clone, Copy, Default, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum PointwiseApprox {
    #[default]
    LogNormal,
    Normal,
}

#[derive(Debug, Clone, PartialEq)]
pub struct BandConfig {
    /// Nominal coverage `1 - alpha`.
    pub level: f64,
    pub rates: RateParams,
    pub kernel: Kernel,
    pub scale_policy: ScalePolicy,
    pub bootstrap_reps: usize,
    pub pointwise: PointwiseApprox,
    pub series: KolmogorovSeriesParams,
}

impl Default for BandConfig {
    fn default() -> Self {
        Self {
            level: 0.95,
            rates: RateParams::default(),
            kernel: Kernel::Epanechnikov,
            scale_policy: ScalePolicy::AssumeLocationScale,
            bootstrap_reps: 100,
            pointwise: PointwiseApprox::LogNormal,
            series: KolmogorovSeriesParams::default(),
        }
    }
}

impl BandConfig {
    pub fn with_level(mut self, level: f64) -> Self {
        self.level = level;
        self
    }

    pub fn with_scale_policy(mut self, policy: ScalePolicy) -> Self {
        self.scale_policy = policy;
        self
    }

    fn check_level(&self) -> Result<()> {
        if !(self.level > 0.0 && self.level < 1.0) {
            return Err(Error::domain(format!("level {} outside (0, 1)", self.level)));
        }
        Ok(())
    }

    /// Kolmogorov critical value for the configured level.
    pub fn critical_value(&self) -> Result<f64> {
        self.check_level()?;
        kolmogorov_quantile(self.level, self.series)
    }
}

/// Quantities produced along the way that are useful for reporting.
#[derive(Debug, Clone, Default, PartialEq)]
pub struct BandDetails {
    pub critical_value: Option<f64>,
    pub scale_s: Option<f64>,
    pub cs: Option<f64>,
    pub bootstrap_reps: Option<usize>,
}

/// Lower, center and upper curve on a probability grid.
#[derive(Debug, Clone, PartialEq)]
pub struct Band {
    pub grid: ProbabilityGrid,
    pub lower: Vec<f64>,
    pub center: Vec<f64>,
    pub upper: Vec<f64>,
    pub scale: BandScale,
    pub method: BandMethod,
    pub level: f64,
    /// Annualisation used when `scale` is [`BandScale::Gic`].
    pub m: Option<GicParams>,
    pub warnings: Vec<String>,
    pub details: BandDetails,
}

impl Band {
    /// Checks lengths, ordering and the positivity constraints of the scale.
    pub fn validate(&self) -> Result<()> {
        let n = self.grid.len();
        if self.lower.len() != n || self.center.len() != n || self.upper.len() != n {
            return Err(Error::domain("band curves and grid differ in length"));
        }
        if self.scale == BandScale::Gic && self.m.is_none() {
            return Err(Error::domain("growth incidence band without m"));
        }
        for (i, &p) in self.grid.points().iter().enumerate() {
            let (l, c, u) = (self.lower[i], self.center[i], self.upper[i]);
            if !(l <= c && c <= u) {
                return Err(Error::Numerical(format!(
                    "band ordering violated at p = {p}: {l} <= {c} <= {u}"
                )));
            }
            let floor = match self.scale {
                BandScale::Ratio => Some(0.0),
                BandScale::Gic => Some(-1.0),
                _ => None,
            };
            if let Some(f) = floor {
                if !(l > f) {
                    return Err(Error::Numerical(format!(
                        "{} band lower curve {l} not above {f} at p = {p}",
                        self.scale.as_str()
                    )));
                }
            }
        }
        Ok(())
    }

    fn m_value(&self) -> f64 {
        self.m.map_or(1.0, |m| m.m())
    }

    /// Whether the true curve, given as `log g` on `self.grid`, lies inside
    /// the band at every grid point.
    pub fn covers(&self, true_log_g: &[f64]) -> Result<bool> {
        if true_log_g.len() != self.grid.len() {
            return Err(Error::domain("true curve and band grid differ in length"));
        }
        let m = self.m_value();
        let map: Box<dyn Fn(f64) -> f64> = match self.scale {
            BandScale::LogQte => Box::new(|x| x),
            BandScale::Ratio => Box::new(f64::exp),
            BandScale::Gic => Box::new(move |x: f64| (m * x).exp() - 1.0),
            BandScale::Qte => {
                return Err(Error::domain(
                    "coverage of a raw QTE band needs the true Q1; convert to log_qte first",
                ))
            }
        };
        Ok(true_log_g
            .iter()
            .zip(self.lower.iter().zip(&self.upper))
            .all(|(&t, (&l, &u))| {
                let v = map(t);
                l <= v && v <= u
            }))
    }

    /// Mean of `upper - lower` over the grid.
    pub fn mean_width(&self) -> f64 {
        let n = self.lower.len() as f64;
        self.upper
            .iter()
            .zip(&self.lower)
            .map(|(u, l)| u - l)
            .sum::<f64>()
            / n
    }
}

/// Trimming `n^(-1/2 + delta)` with `n = min(n1, n2)` for the direct band.
pub fn direct_epsilon(n1: usize, n2: usize, rates: RateParams) -> f64 {
    (n1.min(n2) as f64).powf(-0.5 + rates.delta())
}

/// Trimming for bands that need quantile densities: the direct-band
/// trimming, widened when needed so every kernel window stays in `(0, 1)`.
pub fn plugin_epsilon(n1: usize, n2: usize, rates: RateParams) -> f64 {
    let n = n1.min(n2);
    let window = 0.5 * rates.bandwidth(n) + 1.0 / n as f64;
    direct_epsilon(n1, n2, rates).max(window)
}

/// Default evaluation grid of `len` equidistant points for a method,
/// clipped to that method's trimming interval.
pub fn default_grid(
    method: BandMethod,
    n1: usize,
    n2: usize,
    rates: RateParams,
    len: usize,
) -> Result<ProbabilityGrid> {
    match method {
        BandMethod::Plugin | BandMethod::PointwiseLognormal | BandMethod::PointwiseNormal => {
            ProbabilityGrid::trimmed(len, plugin_epsilon(n1, n2, rates))
        }
        BandMethod::Direct => ProbabilityGrid::trimmed(len, direct_epsilon(n1, n2, rates)),
        BandMethod::WorldbankBootstrap => ProbabilityGrid::equidistant(len),
    }
}

fn density_warnings(q: &QuantileDensityEstimate, which: &str, warnings: &mut Vec<String>) {
    if q.is_degenerate() {
        warnings.push(format!(
            "quantile density of sample {which} floored at {} grid point(s)",
            q.floored_points
        ));
    }
}

/// Plug-in simultaneous band on the log-QTE scale.
pub fn plugin_band(
    s1: &Sample,
    s2: &Sample,
    grid: &ProbabilityGrid,
    cfg: &BandConfig,
) -> Result<Band> {
    let c_alpha = cfg.critical_value()?;
    let q1 = kernel_quantile_density(s1, grid, cfg.kernel, cfg.rates)?;
    let q2 = kernel_quantile_density(s2, grid, cfg.kernel, cfg.rates)?;
    let (n1, n2) = (s1.n(), s2.n());

    let (s, cs) = match cfg.scale_policy {
        ScalePolicy::AssumeLocationScale => (estimate_scale_s(s1, s2)?, 0.0),
        ScalePolicy::EstimateCs => {
            let s = estimate_scale_s(s1, s2)?;
            let cs = cs_bound(&q1, &q2, s, n1, n2, cfg.rates).map_err(|e| {
                Error::Domain(format!(
                    "{e}; use the location-scale policy or larger samples"
                ))
            })?;
            (s, cs)
        }
        ScalePolicy::FixedS(s) => {
            if !(s > 0.0 && s.is_finite()) {
                return Err(Error::domain(format!("fixed scale s = {s} must be positive")));
            }
            (s, 0.0)
        }
    };

    let (n1f, n2f) = (n1 as f64, n2 as f64);
    let rate = ((n1f + s * s * n2f) / (n1f * n2f)).sqrt();
    let center = log_qte_curve(s1, s2, grid)?;
    let mut lower = Vec::with_capacity(grid.len());
    let mut upper = Vec::with_capacity(grid.len());
    for ((&c, &a), &b) in center.iter().zip(&q1.values).zip(&q2.values) {
        let half = (c_alpha + cs) * rate * (a / s + b) / 2.0;
        lower.push(c - half);
        upper.push(c + half);
    }

    let mut warnings = Vec::new();
    density_warnings(&q1, "1", &mut warnings);
    density_warnings(&q2, "2", &mut warnings);
    let band = Band {
        grid: grid.clone(),
        lower,
        center,
        upper,
        scale: BandScale::LogQte,
        method: BandMethod::Plugin,
        level: cfg.level,
        m: None,
        warnings,
        details: BandDetails {
            critical_value: Some(c_alpha),
            scale_s: Some(s),
            cs: Some(cs),
            bootstrap_reps: None,
        },
    };
    band.validate()?;
    Ok(band)
}

/// Direct simultaneous band on the log-QTE scale.
///
/// Grid points whose shifted probabilities leave `(0, 1]` are dropped and
/// the reduced grid is reported in the band.
pub fn direct_band(
    s1: &Sample,
    s2: &Sample,
    grid: &ProbabilityGrid,
    cfg: &BandConfig,
) -> Result<Band> {
    let c_alpha = cfg.critical_value()?;
    direct_band_with_critical(s1, s2, grid, c_alpha, cfg.level)
}

/// [`direct_band`] with an explicit critical value.
pub fn direct_band_with_critical(
    s1: &Sample,
    s2: &Sample,
    grid: &ProbabilityGrid,
    c_alpha: f64,
    level: f64,
) -> Result<Band> {
    if !(c_alpha >= 0.0 && c_alpha.is_finite()) {
        return Err(Error::domain(format!("critical value {c_alpha} must be >= 0")));
    }
    let d1 = c_alpha / (2.0 * s1.n() as f64).sqrt();
    let d2 = c_alpha / (2.0 * s2.n() as f64).sqrt();
    let admissible = |p: f64| p - d1 > 0.0 && p - d2 > 0.0 && p + d1 <= 1.0 && p + d2 <= 1.0;

    let mut points = Vec::new();
    let (mut lower, mut center, mut upper) = (Vec::new(), Vec::new(), Vec::new());
    for &p in grid.points() {
        if !admissible(p) {
            continue;
        }
        points.push(p);
        lower.push(s2.log_quantile(p - d2)? - s1.log_quantile(p + d1)?);
        center.push(s2.log_quantile(p)? - s1.log_quantile(p)?);
        upper.push(s2.log_quantile(p + d2)? - s1.log_quantile(p - d1)?);
    }
    if points.is_empty() {
        return Err(Error::Precondition {
            p: grid.points()[0],
            reason: format!(
                "no grid point admits the probability shifts ({d1:.4}, {d2:.4}); samples too small"
            ),
        });
    }

    let mut warnings = Vec::new();
    let dropped = grid.len() - points.len();
    let effective = if dropped > 0 {
        warnings.push(format!(
            "{dropped} grid point(s) dropped: shifted probabilities leave (0, 1]"
        ));
        let first = points[0];
        let last = points[points.len() - 1];
        let lo = if first > grid.points()[0] { first } else { grid.trim_lo() };
        let hi = if last < grid.points()[grid.len() - 1] {
            last
        } else {
            grid.trim_hi()
        };
        ProbabilityGrid::new(points, lo, hi)?
    } else {
        grid.clone()
    };

    let band = Band {
        grid: effective,
        lower,
        center,
        upper,
        scale: BandScale::LogQte,
        method: BandMethod::Direct,
        level,
        m: None,
        warnings,
        details: BandDetails {
            critical_value: Some(c_alpha),
            ..Default::default()
        },
    };
    band.validate()?;
    Ok(band)
}

/// Standard deviation `sigma(p)` of `log(G(p) + 1)`:
/// `sqrt(m^2 p (1-p) (q1^2/n1 + q2^2/n2))`.
pub fn lognormal_sigma(p: f64, q1: f64, q2: f64, n1: usize, n2: usize, m: GicParams) -> f64 {
    lognormal_covariance(p, p, (q1, q1), (q2, q2), n1, n2, m)
        .expect("p <= p")
        .sqrt()
}

/// Asymptotic covariance of `log(G(p) + 1)` and `log(G(pt) + 1)` for `p <= pt`:
/// `m^2 p (1 - pt) (q1(p) q1(pt)/n1 + q2(p) q2(pt)/n2)`.
///
/// `q1` and `q2` hold the quantile densities at `(p, pt)`.
pub fn lognormal_covariance(
    p: f64,
    pt: f64,
    q1: (f64, f64),
    q2: (f64, f64),
    n1: usize,
    n2: usize,
    m: GicParams,
) -> Result<f64> {
    if !(0.0 < p && p <= pt && pt < 1.0) {
        return Err(Error::domain(format!("need 0 < p <= pt < 1, got p={p}, pt={pt}")));
    }
    let m = m.m();
    Ok(m * m * p * (1.0 - pt) * (q1.0 * q1.1 / n1 as f64 + q2.0 * q2.1 / n2 as f64))
}

fn normal_quantile(prob: f64) -> f64 {
    Normal::standard().inverse_cdf(prob)
}

/// Lowest representable value strictly above -1 used to truncate
/// growth-rate intervals.
const GIC_FLOOR: f64 = -1.0 + 1e-15;

/// Point-wise asymptotic intervals for `G(p)` (log-normal by default).
pub fn pointwise_band(
    s1: &Sample,
    s2: &Sample,
    grid: &ProbabilityGrid,
    cfg: &BandConfig,
    m: GicParams,
) -> Result<Band> {
    cfg.check_level()?;
    let z = normal_quantile(1.0 - (1.0 - cfg.level) / 2.0);
    let q1 = kernel_quantile_density(s1, grid, cfg.kernel, cfg.rates)?;
    let q2 = kernel_quantile_density(s2, grid, cfg.kernel, cfg.rates)?;
    let lq = log_qte_curve(s1, s2, grid)?;
    let (n1, n2) = (s1.n(), s2.n());
    let mm = m.m();

    let mut warnings = vec!["point-wise intervals: no simultaneous coverage".to_string()];
    density_warnings(&q1, "1", &mut warnings);
    density_warnings(&q2, "2", &mut warnings);
    let (mut lower, mut center, mut upper) = (Vec::new(), Vec::new(), Vec::new());
    let mut truncated = 0;
    for (i, &p) in grid.points().iter().enumerate() {
        let sigma = lognormal_sigma(p, q1.values[i], q2.values[i], n1, n2, m);
        let mu = mm * lq[i];
        let (l, u) = match cfg.pointwise {
            PointwiseApprox::LogNormal => ((mu - z * sigma).exp() - 1.0, (mu + z * sigma).exp() - 1.0),
            PointwiseApprox::Normal => {
                let g = mu.exp();
                (g * (1.0 - z * sigma) - 1.0, g * (1.0 + z * sigma) - 1.0)
            }
        };
        let l = if l > GIC_FLOOR {
            l
        } else {
            truncated += 1;
            GIC_FLOOR
        };
        lower.push(l);
        center.push(mu.exp() - 1.0);
        upper.push(u);
    }
    if truncated > 0 {
        warnings.push(format!("lower bound truncated at -1 at {truncated} grid point(s)"));
    }

    let method = match cfg.pointwise {
        PointwiseApprox::LogNormal => BandMethod::PointwiseLognormal,
        PointwiseApprox::Normal => BandMethod::PointwiseNormal,
    };
    let band = Band {
        grid: grid.clone(),
        lower,
        center,
        upper,
        scale: BandScale::Gic,
        method,
        level: cfg.level,
        m: Some(m),
        warnings,
        details: BandDetails::default(),
    };
    band.validate()?;
    Ok(band)
}

/// Log empirical quantiles of a with-replacement resample at every grid
/// point, without materialising the resample: multiplicities are drawn and
/// the order statistics are read off their running sum.
fn resampled_log_quantiles(sample: &Sample, grid: &ProbabilityGrid, rng: &mut impl Rng) -> Vec<f64> {
    let n = sample.n();
    let logs = sample.log_sorted();
    let mut counts = vec![0u32; n];
    for _ in 0..n {
        counts[rng.random_range(0..n)] += 1;
    }
    let mut out = Vec::with_capacity(grid.len());
    let (mut j, mut cum) = (0usize, counts[0] as usize);
    for &p in grid.points() {
        let k = order_index(n, p).expect("grid points lie in (0, 1)");
        while cum < k {
            j += 1;
            cum += counts[j] as usize;
        }
        out.push(logs[j]);
    }
    out
}

/// World Bank style point-wise band for `G(p)`: at every grid point the
/// bootstrap mean and standard deviation of `G(p)` give the interval
/// `mean -/+ t_{B-1, 1-alpha/2} sd`.
///
/// Resample `b` uses ChaCha8 stream `b` under `seed`, so the result does
/// not depend on the number of threads.
pub fn worldbank_band(
    s1: &Sample,
    s2: &Sample,
    grid: &ProbabilityGrid,
    cfg: &BandConfig,
    m: GicParams,
    seed: u64,
) -> Result<Band> {
    cfg.check_level()?;
    let reps = cfg.bootstrap_reps;
    if reps < 50 {
        return Err(Error::domain(format!(
            "bootstrap_reps = {reps}; the bootstrap baseline needs at least 50"
        )));
    }
    let mm = m.m();
    let draws: Vec<Vec<f64>> = (0..reps)
        .into_par_iter()
        .map(|b| {
            let mut rng = ChaCha8Rng::seed_from_u64(seed);
            rng.set_stream(b as u64);
            let l1 = resampled_log_quantiles(s1, grid, &mut rng);
            let l2 = resampled_log_quantiles(s2, grid, &mut rng);
            l1.iter()
                .zip(&l2)
                .map(|(a, b)| (mm * (b - a)).exp() - 1.0)
                .collect()
        })
        .collect();

    let t = StudentsT::new(0.0, 1.0, (reps - 1) as f64)
        .map_err(|e| Error::Numerical(e.to_string()))?
        .inverse_cdf(1.0 - (1.0 - cfg.level) / 2.0);

    let b = reps as f64;
    let mut warnings = vec!["point-wise intervals: no simultaneous coverage".to_string()];
    let (mut lower, mut center, mut upper) = (Vec::new(), Vec::new(), Vec::new());
    let (mut collapsed, mut truncated) = (0, 0);
    for i in 0..grid.len() {
        let mean = draws.iter().map(|d| d[i]).sum::<f64>() / b;
        let var = draws.iter().map(|d| (d[i] - mean).powi(2)).sum::<f64>() / (b - 1.0);
        let sd = var.sqrt();
        if sd == 0.0 {
            collapsed += 1;
        }
        let mut l = mean - t * sd;
        if !(l > GIC_FLOOR) {
            truncated += 1;
            l = GIC_FLOOR.min(mean);
        }
        lower.push(l);
        center.push(mean);
        upper.push(mean + t * sd);
    }
    if collapsed > 0 {
        warnings.push(format!(
            "bootstrap sd is zero at {collapsed} grid point(s); interval collapsed to a point"
        ));
    }
    if truncated > 0 {
        warnings.push(format!("lower bound truncated at -1 at {truncated} grid point(s)"));
    }

    let band = Band {
        grid: grid.clone(),
        lower,
        center,
        upper,
        scale: BandScale::Gic,
        method: BandMethod::WorldbankBootstrap,
        level: cfg.level,
        m: Some(m),
        warnings,
        details: BandDetails {
            bootstrap_reps: Some(reps),
            ..Default::default()
        },
    };
    band.validate()?;
    Ok(band)
}

fn to_log(band: &Band) -> Result<Vec<[f64; 3]>> {
    let m = band.m_value();
    let f: Box<dyn Fn(f64) -> f64> = match band.scale {
        BandScale::LogQte => Box::new(|x| x),
        BandScale::Ratio => Box::new(f64::ln),
        BandScale::Gic => Box::new(move |x: f64| x.ln_1p() / m),
        BandScale::Qte => {
            return Err(Error::domain(
                "a raw QTE band cannot be mapped back to the log scale",
            ))
        }
    };
    Ok((0..band.grid.len())
        .map(|i| [f(band.lower[i]), f(band.center[i]), f(band.upper[i])])
        .collect())
}

/// Maps a band between the log-QTE, ratio and growth-incidence scales.
///
/// `m` is the annualisation of the target when it is [`BandScale::Gic`].
/// Raw-QTE targets need the first sample; see [`transform_band_to_qte`].
pub fn transform_band(band: &Band, target: BandScale, m: GicParams) -> Result<Band> {
    let logs = to_log(band)?;
    let mm = m.m();
    let f: Box<dyn Fn(f64) -> f64> = match target {
        BandScale::LogQte => Box::new(|x| x),
        BandScale::Ratio => Box::new(f64::exp),
        BandScale::Gic => Box::new(move |x: f64| (mm * x).exp_m1()),
        BandScale::Qte => {
            return Err(Error::domain(
                "raw QTE target requires the first sample; use transform_band_to_qte",
            ))
        }
    };
    let mut out = band.clone();
    out.lower = logs.iter().map(|v| f(v[0])).collect();
    out.center = logs.iter().map(|v| f(v[1])).collect();
    out.upper = logs.iter().map(|v| f(v[2])).collect();
    out.scale = target;
    out.m = (target == BandScale::Gic).then_some(m);
    out.validate()?;
    Ok(out)
}

/// Band for the raw QTE `Q2(p) - Q1(p) = Q1(p) (g(p) - 1)`, scaling the
/// ratio band by the empirical quantiles of the first sample.
pub fn transform_band_to_qte(band: &Band, s1: &Sample) -> Result<Band> {
    let logs = to_log(band)?;
    let mut out = band.clone();
    let q1: Vec<f64> = band
        .grid
        .points()
        .iter()
        .map(|&p| s1.quantile(p))
        .collect::<Result<_>>()?;
    out.lower = logs.iter().zip(&q1).map(|(v, q)| q * v[0].exp_m1()).collect();
    out.center = logs.iter().zip(&q1).map(|(v, q)| q * v[1].exp_m1()).collect();
    out.upper = logs.iter().zip(&q1).map(|(v, q)| q * v[2].exp_m1()).collect();
    out.scale = BandScale::Qte;
    out.m = None;
    out.validate()?;
    Ok(out)
}

#[cfg(test)]
mod tests {
    use super::*;
    use rand_distr::{Distribution, StandardNormal};

    fn lognormal(n: usize, mu: f64, sd: f64, seed: u64) -> Sample {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let logs: Vec<f64> = (0..n)
            .map(|_| {
                let z: f64 = StandardNormal.sample(&mut rng);
                mu + sd * z
            })
            .collect();
        Sample::from_logs(&logs).unwrap()
    }

    fn manual_band(lower: Vec<f64>, center: Vec<f64>, upper: Vec<f64>) -> Band {
        let n = lower.len();
        let pts: Vec<f64> = (1..=n).map(|i| i as f64 / (n + 1) as f64).collect();
        let (lo, hi) = (pts[0], pts[n - 1]);
        Band {
            grid: ProbabilityGrid::new(pts, lo, hi).unwrap(),
            lower,
            center,
            upper,
            scale: BandScale::LogQte,
            method: BandMethod::Plugin,
            level: 0.95,
            m: None,
            warnings: vec![],
            details: BandDetails::default(),
        }
    }

    #[test]
    fn plugin_half_width_reduces_for_equal_densities() {
        let s = lognormal(400, 0.0, 1.0, 1);
        let cfg = BandConfig::default().with_scale_policy(ScalePolicy::FixedS(1.0));
        let grid = default_grid(BandMethod::Plugin, 400, 400, cfg.rates, 50).unwrap();
        let band = plugin_band(&s, &s, &grid, &cfg).unwrap();
        let q = kernel_quantile_density(&s, &grid, cfg.kernel, cfg.rates).unwrap();
        let c = cfg.critical_value().unwrap();
        for i in 0..grid.len() {
            let expect = c * (2.0f64 / 400.0).sqrt() * q.values[i];
            assert!((band.upper[i] - band.center[i] - expect).abs() < 1e-12);
            assert_eq!(band.center[i], 0.0);
            assert!(band.lower[i] <= 0.0 && 0.0 <= band.upper[i]);
        }
    }

    #[test]
    fn identical_samples_cover_zero() {
        let s = lognormal(300, 1.0, 0.5, 2);
        let cfg = BandConfig::default();
        for method in [BandMethod::Plugin, BandMethod::Direct] {
            let grid = default_grid(method, 300, 300, cfg.rates, 100).unwrap();
            let band = match method {
                BandMethod::Plugin => plugin_band(&s, &s, &grid, &cfg).unwrap(),
                _ => direct_band(&s, &s, &grid, &cfg).unwrap(),
            };
            assert!(band.center.iter().all(|&c| c == 0.0));
            assert!(band.covers(&vec![0.0; band.grid.len()]).unwrap());
        }
    }

    #[test]
    fn direct_band_collapses_without_shift() {
        let a = lognormal(200, 0.0, 1.0, 3);
        let b = lognormal(250, 0.5, 1.0, 4);
        let grid = ProbabilityGrid::trimmed(60, 0.05).unwrap();
        let band = direct_band_with_critical(&a, &b, &grid, 0.0, 0.0).unwrap();
        assert_eq!(band.lower, band.center);
        assert_eq!(band.upper, band.center);
    }

    #[test]
    fn direct_band_drops_points_it_cannot_shift() {
        let a = lognormal(100, 0.0, 1.0, 5);
        let b = lognormal(100, 0.0, 1.0, 6);
        let grid = ProbabilityGrid::equidistant(100).unwrap();
        let band = direct_band(&a, &b, &grid, &BandConfig::default()).unwrap();
        assert!(band.grid.len() < 100);
        let d = band.details.critical_value.unwrap() / 200f64.sqrt();
        assert!(band.grid.points().iter().all(|p| p - d > 0.0 && p + d <= 1.0));
        assert_eq!(band.grid.trim_lo(), band.grid.points()[0]);
        assert!(!band.warnings.is_empty());
    }

    #[test]
    fn pointwise_sigma_and_covariance() {
        let m = GicParams::default();
        let (q, n) = (2.0, 500);
        let sigma = lognormal_sigma(0.5, q, q, n, n, m);
        assert!((sigma * sigma - q * q / (2.0 * n as f64)).abs() < 1e-15);
        let cov = lognormal_covariance(0.3, 0.3, (1.5, 1.5), (2.5, 2.5), 100, 200, m).unwrap();
        let s = lognormal_sigma(0.3, 1.5, 2.5, 100, 200, m);
        assert!((cov - s * s).abs() < 1e-15);
        assert!(lognormal_covariance(0.6, 0.3, (1.0, 1.0), (1.0, 1.0), 10, 10, m).is_err());
        let half = GicParams::new(0.5).unwrap();
        assert!((lognormal_sigma(0.5, q, q, n, n, half) - 0.5 * sigma).abs() < 1e-15);
    }

    #[test]
    fn pointwise_band_contains_estimate() {
        let a = lognormal(500, 0.0, 0.7, 7);
        let b = lognormal(500, 0.8, 1.0, 8);
        let cfg = BandConfig::default();
        let grid = default_grid(BandMethod::PointwiseLognormal, 500, 500, cfg.rates, 100).unwrap();
        let m = GicParams::new(0.5).unwrap();
        let band = pointwise_band(&a, &b, &grid, &cfg, m).unwrap();
        assert_eq!(band.scale, BandScale::Gic);
        assert!(band.lower.iter().all(|&l| l > -1.0));
        let normal = pointwise_band(
            &a,
            &b,
            &grid,
            &BandConfig {
                pointwise: PointwiseApprox::Normal,
                ..cfg
            },
            m,
        )
        .unwrap();
        assert_eq!(normal.method, BandMethod::PointwiseNormal);
        assert_eq!(normal.center, band.center);
    }

    #[test]
    fn worldbank_is_reproducible_and_validated() {
        let a = lognormal(200, 0.0, 0.7, 9);
        let b = lognormal(200, 0.8, 1.0, 10);
        let grid = ProbabilityGrid::equidistant(100).unwrap();
        let cfg = BandConfig::default();
        let m = GicParams::default();
        let x = worldbank_band(&a, &b, &grid, &cfg, m, 42).unwrap();
        let y = worldbank_band(&a, &b, &grid, &cfg, m, 42).unwrap();
        assert_eq!(x, y);
        let z = worldbank_band(&a, &b, &grid, &cfg, m, 43).unwrap();
        assert_ne!(x.center, z.center);
        let few = BandConfig {
            bootstrap_reps: 49,
            ..BandConfig::default()
        };
        assert!(worldbank_band(&a, &b, &grid, &few, m, 1).is_err());
    }

    #[test]
    fn worldbank_identical_large_samples_near_zero() {
        let a = lognormal(20_000, 0.0, 1.0, 11);
        let grid = ProbabilityGrid::equidistant(20).unwrap();
        let band =
            worldbank_band(&a, &a, &grid, &BandConfig::default(), GicParams::default(), 1).unwrap();
        for i in 0..grid.len() {
            assert!(band.lower[i] <= 0.0 && band.upper[i] >= 0.0);
            assert!(band.upper[i] - band.lower[i] < 0.2);
        }
    }

    #[test]
    fn worldbank_collapses_for_constant_data() {
        let c = Sample::new(vec![2.0; 60]).unwrap();
        let grid = ProbabilityGrid::equidistant(10).unwrap();
        let band =
            worldbank_band(&c, &c, &grid, &BandConfig::default(), GicParams::default(), 5).unwrap();
        assert!(band.lower.iter().zip(&band.upper).all(|(l, u)| l == u));
        assert!(band.warnings.iter().any(|w| w.contains("collapsed")));
    }

    #[test]
    fn transform_examples() {
        let band = manual_band(vec![-0.1], vec![0.0], vec![0.1]);
        let r = transform_band(&band, BandScale::Ratio, GicParams::default()).unwrap();
        assert!((r.lower[0] - (-0.1f64).exp()).abs() < 1e-15);
        assert_eq!(r.center[0], 1.0);
        assert!((r.upper[0] - 0.1f64.exp()).abs() < 1e-15);

        let half = GicParams::new(0.5).unwrap();
        let g = transform_band(&band, BandScale::Gic, half).unwrap();
        assert!((g.lower[0] - ((-0.05f64).exp() - 1.0)).abs() < 1e-15);
        assert_eq!(g.center[0], 0.0);
        assert!((g.upper[0] - (0.05f64.exp() - 1.0)).abs() < 1e-15);

        let back = transform_band(&g, BandScale::LogQte, GicParams::default()).unwrap();
        for (a, b) in back.lower.iter().zip(&band.lower) {
            assert!((a - b).abs() < 1e-12);
        }
        let rr = transform_band(
            &transform_band(&r, BandScale::LogQte, GicParams::default()).unwrap(),
            BandScale::Ratio,
            GicParams::default(),
        )
        .unwrap();
        assert!((rr.upper[0] - r.upper[0]).abs() < 1e-12);

        assert!(transform_band(&band, BandScale::Qte, GicParams::default()).is_err());
    }

    #[test]
    fn qte_transform_uses_first_sample_quantiles() {
        let s1 = Sample::new(vec![1.0, 2.0, 3.0, 4.0]).unwrap();
        let band = manual_band(vec![-0.1, 0.0], vec![0.0, 0.1], vec![0.1, 0.2]);
        let q = transform_band_to_qte(&band, &s1).unwrap();
        for (i, &p) in band.grid.points().iter().enumerate() {
            let q1 = s1.quantile(p).unwrap();
            assert!((q.center[i] - q1 * (band.center[i].exp() - 1.0)).abs() < 1e-12);
        }
        assert!(transform_band(&q, BandScale::Ratio, GicParams::default()).is_err());
        assert!(q.covers(&[0.0, 0.0]).is_err());
    }

    #[test]
    fn level_nesting_of_plugin_bands() {
        let a = lognormal(600, 0.0, 0.7, 12);
        let b = lognormal(700, 0.8, 1.0, 13);
        let cfg = BandConfig::default();
        let grid = default_grid(BandMethod::Plugin, 600, 700, cfg.rates, 100).unwrap();
        let narrow = plugin_band(&a, &b, &grid, &cfg).unwrap();
        let wide = plugin_band(&a, &b, &grid, &cfg.clone().with_level(0.99)).unwrap();
        for i in 0..grid.len() {
            assert!(wide.lower[i] <= narrow.lower[i] && narrow.upper[i] <= wide.upper[i]);
        }
    }

    #[test]
    fn estimate_cs_widens_the_band() {
        let a = lognormal(1000, 0.0, 0.7, 14);
        let b = lognormal(1000, 0.8, 1.0, 15);
        let cfg = BandConfig::default();
        let grid = default_grid(BandMethod::Plugin, 1000, 1000, cfg.rates, 100).unwrap();
        let base = plugin_band(&a, &b, &grid, &cfg).unwrap();
        let corrected =
            plugin_band(&a, &b, &grid, &cfg.clone().with_scale_policy(ScalePolicy::EstimateCs))
                .unwrap();
        assert!(corrected.details.cs.unwrap() > 0.0);
        assert!(corrected.mean_width() > base.mean_width());
    }

    #[test]
    fn plugin_width_follows_rate_formula() {
        let a = lognormal(400, 0.0, 1.0, 16);
        let cfg = BandConfig::default().with_scale_policy(ScalePolicy::FixedS(0.8));
        let grid = ProbabilityGrid::trimmed(30, 0.2).unwrap();
        let band = plugin_band(&a, &a, &grid, &cfg).unwrap();
        let q = kernel_quantile_density(&a, &grid, cfg.kernel, cfg.rates).unwrap();
        let c = cfg.critical_value().unwrap();
        let n = 400.0f64;
        let rate = ((n + 0.64 * n) / (n * n)).sqrt();
        for i in 0..grid.len() {
            let expect = c * rate * (q.values[i] / 0.8 + q.values[i]) / 2.0;
            assert!((band.upper[i] - band.center[i] - expect).abs() < 1e-12);
        }
    }

    #[test]
    fn bad_configuration_is_rejected() {
        let a = lognormal(300, 0.0, 1.0, 17);
        let grid = ProbabilityGrid::trimmed(20, 0.2).unwrap();
        let cfg = BandConfig::default().with_level(1.0);
        assert!(matches!(plugin_band(&a, &a, &grid, &cfg), Err(Error::Domain(_))));
        let cfg = BandConfig::default().with_scale_policy(ScalePolicy::FixedS(-1.0));
        assert!(plugin_band(&a, &a, &grid, &cfg).is_err());
    }

    #[test]
    fn trimming_rules() {
        let r = RateParams::default();
        assert!((direct_epsilon(1000, 5000, r) - 1000f64.powf(-0.45)).abs() < 1e-15);
        for n in [50, 100, 1000, 10_000] {
            let eps = plugin_epsilon(n, n, r);
            assert!(eps >= direct_epsilon(n, n, r));
            assert!(eps > 0.5 * r.bandwidth(n));
        }
    }
}
