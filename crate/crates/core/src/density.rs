//! Quantile-density estimation on the log scale and the two nuisance
//! quantities of the plug-in band: the scale parameter `s` and the
//! almost-sure correction bound `c_s`.

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::quantile::{ProbabilityGrid, Sample};

/// Second-order kernels supported on `[-1/2, 1/2]`.
#[derive(Debug, Clone, Copy, Default, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Kernel {
    /// `K(u) = 3/2 (1 - 4u^2)`.
    #[default]
    Epanechnikov,
    /// `K(u) = 1`.
    Uniform,
}

impl Kernel {
    #[inline]
    pub fn eval(self, u: f64) -> f64 {
        if u.abs() > 0.5 {
            return 0.0;
        }
        match self {
            Kernel::Epanechnikov => 1.5 * (1.0 - 4.0 * u * u),
            Kernel::Uniform => 1.0,
        }
    }
}

/// Rate exponents tying bandwidth and trimming to the sample size:
/// bandwidth `h = n^-eta`, trimming `n^-beta`, and slack `delta`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct RateParams {
    eta: f64,
    beta: f64,
    delta: f64,
}

impl RateParams {
    /// Requires `3 beta + delta < eta < 1/2` and `eta/2 + delta + 2 beta < 1/2`.
    pub fn new(eta: f64, beta: f64, delta: f64) -> Result<Self> {
        if !(eta > 0.0 && beta > 0.0 && delta > 0.0) {
            return Err(Error::domain("rate exponents must be positive"));
        }
        if !(3.0 * beta + delta < eta && eta < 0.5) {
            return Err(Error::domain(format!(
                "need 3*beta + delta < eta < 1/2, got beta={beta}, delta={delta}, eta={eta}"
            )));
        }
        if !(eta / 2.0 + delta + 2.0 * beta < 0.5) {
            return Err(Error::domain(format!(
                "need eta/2 + delta + 2*beta < 1/2, got {}",
                eta / 2.0 + delta + 2.0 * beta
            )));
        }
        Ok(Self { eta, beta, delta })
    }

    pub fn eta(&self) -> f64 {
        self.eta
    }

    pub fn beta(&self) -> f64 {
        self.beta
    }

    pub fn delta(&self) -> f64 {
        self.delta
    }

    /// Bandwidth `n^-eta` for a sample of size `n`.
    pub fn bandwidth(&self, n: usize) -> f64 {
        (n as f64).powf(-self.eta)
    }
}

impl Default for RateParams {
    fn default() -> Self {
        Self::new(0.4, 0.1, 0.05).expect("default rates satisfy the constraints")
    }
}

/// Estimated quantile density of the log data on a grid.
#[derive(Debug, Clone, PartialEq)]
pub struct QuantileDensityEstimate {
    pub grid: ProbabilityGrid,
    pub values: Vec<f64>,
    pub bandwidth: f64,
    pub eta: f64,
    pub kernel: Kernel,
    /// Number of grid points raised to the positivity floor.
    pub floored_points: usize,
}

impl QuantileDensityEstimate {
    /// True when any value sits at the positivity floor (tied or constant data).
    pub fn is_degenerate(&self) -> bool {
        self.floored_points > 0
    }
}

/// Relative floor applied to quantile-density values.
pub const DENSITY_FLOOR: f64 = 1e-12;

/// Kernel estimate `q(p) = h^-1 \int K((p - z)/h) dQlog(z)` as a sum over
/// the jumps of the empirical log-quantile function:
/// `h^-1 sum_k K((p - k/n)/h) (Xlog_(k+1) - Xlog_(k))`.
///
/// Every window `[p - h/2, p + h/2]` must lie inside `(0, 1)`.
pub fn kernel_quantile_density(
    sample: &Sample,
    grid: &ProbabilityGrid,
    kernel: Kernel,
    rates: RateParams,
) -> Result<QuantileDensityEstimate> {
    let n = sample.n();
    let h = rates.bandwidth(n);
    let logs = sample.log_sorted();
    let nf = n as f64;
    let range = logs[n - 1] - logs[0];
    let floor = if range > 0.0 {
        DENSITY_FLOOR * range
    } else {
        DENSITY_FLOOR
    };

    let mut floored_points = 0;
    let mut values = Vec::with_capacity(grid.len());
    for &p in grid.points() {
        let (lo, hi) = (p - 0.5 * h, p + 0.5 * h);
        if !(lo > 0.0 && hi < 1.0) {
            return Err(Error::Precondition {
                p,
                reason: format!(
                    "kernel window [{lo:.6}, {hi:.6}] (h = {h:.6}) leaves (0, 1); trim the grid"
                ),
            });
        }
        // jumps of the empirical quantile sit at z = k/n, k = 1..n-1
        let k_lo = ((lo * nf).floor() as usize).max(1);
        let k_hi = ((hi * nf).ceil() as usize).min(n - 1);
        let mut acc = 0.0;
        for k in k_lo..=k_hi {
            let w = kernel.eval((p - k as f64 / nf) / h);
            if w != 0.0 {
                acc += w * (logs[k] - logs[k - 1]);
            }
        }
        let q = acc / h;
        if q < floor {
            floored_points += 1;
            values.push(floor);
        } else {
            values.push(q);
        }
    }

    Ok(QuantileDensityEstimate {
        grid: grid.clone(),
        values,
        bandwidth: h,
        eta: rates.eta(),
        kernel,
        floored_points,
    })
}

/// Gaussian kernel estimate of `\int f^2` for the log data via the
/// leave-one-out identity `\int f^2 = E f(X)`, with the normal-reference
/// bandwidth `1.06 sd n^-1/5`.
pub fn integrated_squared_density(sample: &Sample) -> Result<f64> {
    let logs = sample.log_sorted();
    let n = logs.len();
    let (_, sd) = sample.log_moments();
    if logs[n - 1] == logs[0] || !(sd > 0.0 && sd.is_finite()) {
        return Err(Error::Degenerate(
            "log data have zero variance; the scale parameter is undefined".into(),
        ));
    }
    let h = 1.06 * sd * (n as f64).powf(-0.2);
    // exp(-u^2/2) < 3e-18 beyond u = 9
    let reach = 9.0 * h;
    let row_sums: Vec<f64> = (0..n)
        .into_par_iter()
        .map(|i| {
            let xi = logs[i];
            let mut acc = 0.0;
            for &xj in &logs[i + 1..] {
                let d = xj - xi;
                if d > reach {
                    break;
                }
                let u = d / h;
                acc += (-0.5 * u * u).exp();
            }
            acc
        })
        .collect();
    let total = 2.0 * row_sums.iter().sum::<f64>();
    let nf = n as f64;
    Ok(total / (nf * (nf - 1.0) * h * (2.0 * std::f64::consts::PI).sqrt()))
}

/// Scale parameter `s = \int f2^2 / \int f1^2` of the log densities.
pub fn estimate_scale_s(s1: &Sample, s2: &Sample) -> Result<f64> {
    let a1 = integrated_squared_density(s1)?;
    let a2 = integrated_squared_density(s2)?;
    let s = a2 / a1;
    if !(s > 0.0 && s.is_finite()) {
        return Err(Error::Numerical(format!("scale estimate {s} is not positive")));
    }
    Ok(s)
}

/// Points in the grid over `nu` searched by [`cs_bound`].
pub const CS_NU_POINTS: usize = 181;

/// Plug-in version of the iterated-logarithm bound used as `c_s`:
///
/// `inf_nu (log log sqrt(N))^1/2 4^nu / sqrt(2) sup_p |(q1 - s q2)/(q1 + s q2)| (p(1-p))^nu`
///
/// with `N = n1 n2 / (n1 + s^2 n2)` and `nu` on a grid of `[0, 1/2 - delta]`.
pub fn cs_bound(
    q1: &QuantileDensityEstimate,
    q2: &QuantileDensityEstimate,
    s: f64,
    n1: usize,
    n2: usize,
    rates: RateParams,
) -> Result<f64> {
    if q1.grid.points() != q2.grid.points() {
        return Err(Error::domain("quantile densities are on different grids"));
    }
    if !(s > 0.0 && s.is_finite()) {
        return Err(Error::domain(format!("scale s = {s} must be positive")));
    }
    let (n1f, n2f) = (n1 as f64, n2 as f64);
    let eff = n1f * n2f / (n1f + s * s * n2f);
    let loglog = eff.sqrt().ln().ln();
    if !(loglog > 0.0) {
        return Err(Error::Domain(format!(
            "n1 n2 / (n1 + s^2 n2) = {eff:.3} must exceed e^2 for the iterated-log bound; use larger samples"
        )));
    }
    let lead = loglog.sqrt() / std::f64::consts::SQRT_2;

    let terms: Vec<(f64, f64)> = q1
        .grid
        .points()
        .iter()
        .zip(q1.values.iter().zip(&q2.values))
        .map(|(&p, (&a, &b))| (((a - s * b) / (a + s * b)).abs(), p * (1.0 - p)))
        .collect();

    let nu_max = 0.5 - rates.delta();
    let best = (0..CS_NU_POINTS)
        .map(|i| {
            let nu = nu_max * i as f64 / (CS_NU_POINTS - 1) as f64;
            let sup = terms
                .iter()
                .map(|&(r, v)| r * v.powf(nu))
                .fold(0.0_f64, f64::max);
            lead * 4f64.powf(nu) * sup
        })
        .fold(f64::INFINITY, f64::min);
    Ok(best)
}
