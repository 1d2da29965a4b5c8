//! Simultaneous confidence bands for quantile ratios, growth incidence
//! curves and quantile treatment effects of two independent samples of
//! positive data.
//!
//! All estimation happens on the log scale, where the quantile treatment
//! effect is `log g(p) = Qlog2(p) - Qlog1(p)`; bands on the ratio, growth
//! incidence and raw scales are monotone images of log-scale bands.

pub mod bands;
pub mod density;
pub mod error;
pub mod kolmogorov;
pub mod quantile;
pub mod simulation;

pub use bands::{
    default_grid, direct_band, direct_band_with_critical, direct_epsilon, lognormal_covariance,
    lognormal_sigma, plugin_band, plugin_epsilon, pointwise_band, transform_band,
    transform_band_to_qte, worldbank_band, Band, BandConfig, BandDetails, BandMethod, BandScale,
    PointwiseApprox, ScalePolicy,
};
pub use density::{
    cs_bound, estimate_scale_s, integrated_squared_density, kernel_quantile_density, Kernel,
    QuantileDensityEstimate, RateParams,
};
pub use error::{Error, Result};
pub use kolmogorov::{kolmogorov_cdf, kolmogorov_pdf, kolmogorov_quantile, KolmogorovSeriesParams};
pub use quantile::{
    ate_from_curve, empirical_quantile, gic_curve, log_qte_curve, quantile_ratio, GicParams,
    ProbabilityGrid, Sample, DEFAULT_GRID_LEN,
};
pub use simulation::{
    format_coverage_table, run_coverage, true_log_g, CoverageReport, DistSpec, MethodCoverage,
    SimSetting,
};
