//! Monte Carlo coverage study for the band constructions.
//!
//! Replicate `r` draws from ChaCha8 stream `r` under the master seed, so a
//! report depends only on the setting and seed, never on thread count.

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, Gamma, StandardNormal};
use rayon::prelude::*;
use serde::{Deserialize, Serialize};
use statrs::distribution::{ContinuousCDF, Normal};
use statrs::function::gamma::gamma_lr;

use crate::bands::{
    default_grid, direct_band, plugin_band, pointwise_band, transform_band, worldbank_band, Band,
    BandConfig, BandMethod, BandScale,
};
use crate::error::{Error, Result};
use crate::quantile::{GicParams, ProbabilityGrid, Sample, DEFAULT_GRID_LEN};

/// Data-generating distribution of a positive variable.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(tag = "family", rename_all = "snake_case")]
pub enum DistSpec {
    /// `exp(location + scale Z)` with `Z` standard normal.
    LogNormal { location: f64, scale: f64 },
    Gamma { shape: f64, scale: f64 },
}

const GAMMA_QUANTILE_TOL: f64 = 1e-12;

impl DistSpec {
    pub fn validate(&self) -> Result<()> {
        let ok = match *self {
            DistSpec::LogNormal { location, scale } => location.is_finite() && scale > 0.0,
            DistSpec::Gamma { shape, scale } => shape > 0.0 && scale > 0.0,
        };
        if ok && self.params_finite() {
            Ok(())
        } else {
            Err(Error::domain(format!("invalid distribution parameters {self:?}")))
        }
    }

    fn params_finite(&self) -> bool {
        match *self {
            DistSpec::LogNormal { location, scale } => location.is_finite() && scale.is_finite(),
            DistSpec::Gamma { shape, scale } => shape.is_finite() && scale.is_finite(),
        }
    }

    /// Draws a sample of size `n`.
    pub fn sample(&self, n: usize, rng: &mut impl Rng) -> Result<Sample> {
        self.validate()?;
        match *self {
            DistSpec::LogNormal { location, scale } => {
                let logs: Vec<f64> = (0..n)
                    .map(|_| {
                        let z: f64 = StandardNormal.sample(rng);
                        location + scale * z
                    })
                    .collect();
                Sample::from_logs(&logs)
            }
            DistSpec::Gamma { shape, scale } => {
                let dist = Gamma::new(shape, scale).map_err(|e| Error::domain(e.to_string()))?;
                Sample::new((0..n).map(|_| dist.sample(rng)).collect())
            }
        }
    }

    /// Quantile of the log variable at `p`.
    pub fn log_quantile(&self, p: f64) -> Result<f64> {
        self.validate()?;
        if !(p > 0.0 && p < 1.0) {
            return Err(Error::domain(format!("probability {p} outside (0, 1)")));
        }
        match *self {
            DistSpec::LogNormal { location, scale } => {
                Ok(location + scale * Normal::standard().inverse_cdf(p))
            }
            DistSpec::Gamma { shape, scale } => Ok((scale * gamma_quantile(shape, p)?).ln()),
        }
    }
}

/// Quantile of the unit-scale gamma distribution by bisection on the
/// regularised lower incomplete gamma function, to relative width 1e-12.
pub fn gamma_quantile(shape: f64, p: f64) -> Result<f64> {
    let cdf = |x: f64| gamma_lr(shape, x);
    let mut hi = shape.max(1.0);
    let mut expansions = 0;
    while cdf(hi) < p {
        hi *= 2.0;
        expansions += 1;
        if expansions > 1100 {
            return Err(Error::Numerical(format!(
                "gamma quantile bracket failed at p = {p}"
            )));
        }
    }
    let mut lo = 0.0;
    for _ in 0..2000 {
        if hi - lo <= GAMMA_QUANTILE_TOL * hi {
            return Ok(0.5 * (lo + hi));
        }
        let mid = 0.5 * (lo + hi);
        if cdf(mid) < p {
            lo = mid;
        } else {
            hi = mid;
        }
    }
    Err(Error::Numerical(format!(
        "gamma quantile root-finding did not converge at p = {p}"
    )))
}

/// One Monte Carlo design.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SimSetting {
    pub name: String,
    pub dist1: DistSpec,
    pub dist2: DistSpec,
    /// Size of each of the two samples.
    pub n: usize,
    pub reps: usize,
    pub level: f64,
    pub seed: u64,
    pub m: GicParams,
    pub grid_len: usize,
}

impl SimSetting {
    /// Log-normal(0, 0.7) against log-normal(0.8, 1).
    pub fn setting1(n: usize, reps: usize, seed: u64) -> Self {
        Self {
            name: "setting1".into(),
            dist1: DistSpec::LogNormal {
                location: 0.0,
                scale: 0.7,
            },
            dist2: DistSpec::LogNormal {
                location: 0.8,
                scale: 1.0,
            },
            n,
            reps,
            level: 0.95,
            seed,
            m: GicParams::default(),
            grid_len: DEFAULT_GRID_LEN,
        }
    }

    /// Log-normal(0, 0.7) against gamma(2, 1).
    pub fn setting2(n: usize, reps: usize, seed: u64) -> Self {
        Self {
            name: "setting2".into(),
            dist2: DistSpec::Gamma {
                shape: 2.0,
                scale: 1.0,
            },
            ..Self::setting1(n, reps, seed)
        }
    }

    pub fn validate(&self) -> Result<()> {
        self.dist1.validate()?;
        self.dist2.validate()?;
        if self.reps < 1 {
            return Err(Error::domain("reps must be at least 1"));
        }
        if self.n < 50 {
            return Err(Error::domain(format!("n = {} below the minimum of 50", self.n)));
        }
        if !(self.level > 0.0 && self.level < 1.0) {
            return Err(Error::domain(format!("level {} outside (0, 1)", self.level)));
        }
        if self.grid_len < 10 {
            return Err(Error::domain("grid_len must be at least 10"));
        }
        Ok(())
    }

    /// Generator for replicate `rep`.
    pub fn replicate_rng(&self, rep: usize) -> ChaCha8Rng {
        let mut rng = ChaCha8Rng::seed_from_u64(self.seed);
        rng.set_stream(rep as u64);
        rng
    }

    /// Both samples of replicate `rep`.
    pub fn draw(&self, rep: usize) -> Result<(Sample, Sample)> {
        let mut rng = self.replicate_rng(rep);
        let s1 = self.dist1.sample(self.n, &mut rng)?;
        let s2 = self.dist2.sample(self.n, &mut rng)?;
        Ok((s1, s2))
    }
}

/// `log g(p) = Qlog2(p) - Qlog1(p)` of the population distributions.
pub fn true_log_g(setting: &SimSetting, grid: &ProbabilityGrid) -> Result<Vec<f64>> {
    grid.points()
        .iter()
        .map(|&p| Ok(setting.dist2.log_quantile(p)? - setting.dist1.log_quantile(p)?))
        .collect()
}

/// Results of one method over all replicates.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct MethodCoverage {
    pub method: BandMethod,
    /// Replicates whose band contains the true curve at every grid point.
    pub covered: usize,
    /// `covered / reps`; failed constructions count as not covered.
    pub coverage: f64,
    /// Fraction of (replicate, grid point) pairs covered, over successful replicates.
    pub pointwise_coverage: f64,
    /// Mean of the log-scale band width over successful replicates.
    pub mean_width: f64,
    pub failures: usize,
    /// First construction error, if any.
    pub first_error: Option<String>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CoverageReport {
    pub setting: String,
    pub n: usize,
    pub reps: usize,
    pub seed: u64,
    pub level: f64,
    pub methods: Vec<MethodCoverage>,
}

impl CoverageReport {
    pub fn get(&self, method: BandMethod) -> Option<&MethodCoverage> {
        self.methods.iter().find(|m| m.method == method)
    }
}

struct Outcome {
    covered: bool,
    points_covered: usize,
    points: usize,
    width: f64,
}

fn build_band(
    method: BandMethod,
    s1: &Sample,
    s2: &Sample,
    cfg: &BandConfig,
    m: GicParams,
    grid_len: usize,
    boot_seed: u64,
) -> Result<Band> {
    let grid = default_grid(method, s1.n(), s2.n(), cfg.rates, grid_len)?;
    match method {
        BandMethod::Plugin => plugin_band(s1, s2, &grid, cfg),
        BandMethod::Direct => direct_band(s1, s2, &grid, cfg),
        BandMethod::PointwiseLognormal | BandMethod::PointwiseNormal => {
            pointwise_band(s1, s2, &grid, cfg, m)
        }
        BandMethod::WorldbankBootstrap => worldbank_band(s1, s2, &grid, cfg, m, boot_seed),
    }
}

fn evaluate(band: &Band, setting: &SimSetting) -> Result<Outcome> {
    let log_band = transform_band(band, BandScale::LogQte, GicParams::default())?;
    let truth = true_log_g(setting, &log_band.grid)?;
    let points_covered = truth
        .iter()
        .zip(log_band.lower.iter().zip(&log_band.upper))
        .filter(|(t, (l, u))| l <= t && t <= u)
        .count();
    Ok(Outcome {
        covered: band.covers(&truth)?,
        points_covered,
        points: truth.len(),
        width: log_band.mean_width(),
    })
}

/// Simultaneous coverage of the true `log g` for each method.
///
/// `cfg` supplies rates, kernel, scale policy and bootstrap size; its level
/// is replaced by `setting.level`. Construction errors are tallied as
/// failures.
pub fn run_coverage(
    setting: &SimSetting,
    methods: &[BandMethod],
    cfg: &BandConfig,
) -> Result<CoverageReport> {
    setting.validate()?;
    if methods.is_empty() {
        return Err(Error::domain("no methods requested"));
    }
    let cfg = BandConfig {
        level: setting.level,
        ..cfg.clone()
    };

    let outcomes: Vec<Vec<Result<Outcome>>> = (0..setting.reps)
        .into_par_iter()
        .map(|rep| {
            let mut rng = setting.replicate_rng(rep);
            let drawn = setting
                .dist1
                .sample(setting.n, &mut rng)
                .and_then(|s1| Ok((s1, setting.dist2.sample(setting.n, &mut rng)?)));
            let boot_seed: u64 = rng.random();
            methods
                .iter()
                .map(|&method| {
                    let (s1, s2) = drawn.as_ref().map_err(Clone::clone)?;
                    let band =
                        build_band(method, s1, s2, &cfg, setting.m, setting.grid_len, boot_seed)?;
                    evaluate(&band, setting)
                })
                .collect()
        })
        .collect();

    let methods = methods
        .iter()
        .enumerate()
        .map(|(j, &method)| {
            let (mut covered, mut failures) = (0, 0);
            let (mut pts_cov, mut pts, mut width) = (0usize, 0usize, 0.0);
            let mut first_error = None;
            for rep in &outcomes {
                match &rep[j] {
                    Ok(o) => {
                        covered += o.covered as usize;
                        pts_cov += o.points_covered;
                        pts += o.points;
                        width += o.width;
                    }
                    Err(e) => {
                        failures += 1;
                        first_error.get_or_insert_with(|| e.to_string());
                    }
                }
            }
            let ok = setting.reps - failures;
            MethodCoverage {
                method,
                covered,
                coverage: covered as f64 / setting.reps as f64,
                pointwise_coverage: if pts > 0 { pts_cov as f64 / pts as f64 } else { f64::NAN },
                mean_width: if ok > 0 { width / ok as f64 } else { f64::NAN },
                failures,
                first_error,
            }
        })
        .collect();

    Ok(CoverageReport {
        setting: setting.name.clone(),
        n: setting.n,
        reps: setting.reps,
        seed: setting.seed,
        level: setting.level,
        methods,
    })
}

/// Aligned text table: one row per report, one coverage column per method.
pub fn format_coverage_table(reports: &[CoverageReport]) -> String {
    let mut methods: Vec<BandMethod> = Vec::new();
    for r in reports {
        for m in &r.methods {
            if !methods.contains(&m.method) {
                methods.push(m.method);
            }
        }
    }
    let mut header = format!("{:<12} {:>6} {:>6}", "setting", "n", "reps");
    for m in &methods {
        header.push_str(&format!(" {:>20}", m.as_str()));
    }
    let mut out = header;
    out.push('\n');
    for r in reports {
        out.push_str(&format!("{:<12} {:>6} {:>6}", r.setting, r.n, r.reps));
        for m in &methods {
            match r.get(*m) {
                Some(c) if c.failures > 0 => {
                    out.push_str(&format!(" {:>20}", format!("{:.3} ({} failed)", c.coverage, c.failures)))
                }
                Some(c) => out.push_str(&format!(" {:>20.3}", c.coverage)),
                None => out.push_str(&format!(" {:>20}", "-")),
            }
        }
        out.push('\n');
    }
    out
}
