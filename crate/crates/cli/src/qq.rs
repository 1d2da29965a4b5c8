//! QQ diagnostics for the location-scale assumption on the log data.
//!
//! Each log sample is standardised by its mean and standard deviation.
//! If the two log distributions differ only in location and scale, the
//! standardised quantiles of one plotted against those of the other fall
//! on the diagonal. The summary flag is the squared correlation of those
//! pairs (the R^2 of a least-squares line), computed over probabilities in
//! `[tail_trim, 1 - tail_trim]` so a handful of extreme order statistics
//! cannot decide it.

use std::fmt::Write as _;

use gicband_core::{Error, Sample};
use serde::Serialize;
use statrs::distribution::{ContinuousCDF, Normal};

use crate::error::CliResult;

pub const DEFAULT_R2_THRESHOLD: f64 = 0.99;
pub const DEFAULT_TAIL_TRIM: f64 = 0.01;

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct NormalQq {
    /// Standard normal quantiles at `(i - 0.5)/n`.
    pub theoretical: Vec<f64>,
    /// Sorted standardised log data.
    pub standardized: Vec<f64>,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct CrossQq {
    pub probabilities: Vec<f64>,
    pub sample1: Vec<f64>,
    pub sample2: Vec<f64>,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct QqDiagnostic {
    pub sample1: NormalQq,
    pub sample2: NormalQq,
    pub cross: CrossQq,
    pub r_squared: f64,
    pub r_squared_threshold: f64,
    pub tail_trim: f64,
    pub location_scale_plausible: bool,
}

fn standardizer(s: &Sample, which: usize) -> CliResult<(f64, f64)> {
    let (mean, sd) = s.log_moments();
    let logs = s.log_sorted();
    if logs[0] == logs[logs.len() - 1] || !(sd > 0.0) {
        return Err(Error::Degenerate(format!("log data of sample {which} have zero variance")).into());
    }
    Ok((mean, sd))
}

fn normal_qq(s: &Sample, mean: f64, sd: f64) -> NormalQq {
    let n = s.n() as f64;
    let z = Normal::standard();
    NormalQq {
        theoretical: (1..=s.n())
            .map(|i| z.inverse_cdf((i as f64 - 0.5) / n))
            .collect(),
        standardized: s.log_sorted().iter().map(|x| (x - mean) / sd).collect(),
    }
}

/// Squared Pearson correlation of the pairs.
pub fn r_squared(x: &[f64], y: &[f64]) -> f64 {
    let n = x.len() as f64;
    let mx = x.iter().sum::<f64>() / n;
    let my = y.iter().sum::<f64>() / n;
    let (mut sxy, mut sxx, mut syy) = (0.0, 0.0, 0.0);
    for (a, b) in x.iter().zip(y) {
        sxy += (a - mx) * (b - my);
        sxx += (a - mx) * (a - mx);
        syy += (b - my) * (b - my);
    }
    sxy * sxy / (sxx * syy)
}

/// QQ diagnostic with an explicit R^2 threshold and tail trim.
pub fn qq_diagnostic_with(
    s1: &Sample,
    s2: &Sample,
    threshold: f64,
    tail_trim: f64,
) -> CliResult<QqDiagnostic> {
    let (m1, sd1) = standardizer(s1, 1)?;
    let (m2, sd2) = standardizer(s2, 2)?;
    let k = s1.n().min(s2.n());
    let probabilities: Vec<f64> = (1..=k).map(|i| (i as f64 - 0.5) / k as f64).collect();
    let x: Vec<f64> = probabilities
        .iter()
        .map(|&p| Ok((s1.log_quantile(p)? - m1) / sd1))
        .collect::<Result<_, Error>>()?;
    let y: Vec<f64> = probabilities
        .iter()
        .map(|&p| Ok((s2.log_quantile(p)? - m2) / sd2))
        .collect::<Result<_, Error>>()?;

    let inner: Vec<usize> = (0..k)
        .filter(|&i| (tail_trim..=1.0 - tail_trim).contains(&probabilities[i]))
        .collect();
    let keep: Vec<usize> = if inner.len() >= 3 { inner } else { (0..k).collect() };
    let xs: Vec<f64> = keep.iter().map(|&i| x[i]).collect();
    let ys: Vec<f64> = keep.iter().map(|&i| y[i]).collect();
    let r2 = r_squared(&xs, &ys);

    Ok(QqDiagnostic {
        sample1: normal_qq(s1, m1, sd1),
        sample2: normal_qq(s2, m2, sd2),
        cross: CrossQq {
            probabilities,
            sample1: x,
            sample2: y,
        },
        r_squared: r2,
        r_squared_threshold: threshold,
        tail_trim,
        location_scale_plausible: r2 > threshold,
    })
}

pub fn qq_diagnostic(s1: &Sample, s2: &Sample) -> CliResult<QqDiagnostic> {
    qq_diagnostic_with(s1, s2, DEFAULT_R2_THRESHOLD, DEFAULT_TAIL_TRIM)
}

/// Long-format CSV `series,p,x,y`: `normal1`, `normal2` and `cross` series.
pub fn qq_csv(d: &QqDiagnostic) -> String {
    use crate::output::fmt_num;
    let mut s = String::from("series,p,x,y\n");
    for (name, qq) in [("normal1", &d.sample1), ("normal2", &d.sample2)] {
        let n = qq.theoretical.len() as f64;
        for (i, (t, v)) in qq.theoretical.iter().zip(&qq.standardized).enumerate() {
            let p = (i as f64 + 0.5) / n;
            let _ = writeln!(s, "{name},{},{},{}", fmt_num(p), fmt_num(*t), fmt_num(*v));
        }
    }
    for i in 0..d.cross.probabilities.len() {
        let _ = writeln!(
            s,
            "cross,{},{},{}",
            fmt_num(d.cross.probabilities[i]),
            fmt_num(d.cross.sample1[i]),
            fmt_num(d.cross.sample2[i])
        );
    }
    s
}

#[cfg(test)]
mod tests {
    use super::*;

    fn logs(n: usize, f: impl Fn(f64) -> f64) -> Sample {
        Sample::from_logs(&(1..=n).map(|i| f(i as f64 / (n + 1) as f64)).collect::<Vec<_>>())
            .unwrap()
    }

    #[test]
    fn sample_against_itself_is_diagonal() {
        let s = logs(500, |u| (u / (1.0 - u)).ln());
        let d = qq_diagnostic(&s, &s).unwrap();
        assert_eq!(d.cross.sample1, d.cross.sample2);
        assert!(d.location_scale_plausible);
        assert!((d.r_squared - 1.0).abs() < 1e-12);
    }

    #[test]
    fn affine_log_transform_is_plausible() {
        let a = logs(400, |u| (u / (1.0 - u)).ln());
        let b = logs(300, |u| 3.0 + 0.5 * (u / (1.0 - u)).ln());
        assert!(qq_diagnostic(&a, &b).unwrap().r_squared > 0.999);
    }

    #[test]
    fn coordinates_are_sorted_and_paired() {
        let a = logs(100, |u| u * u);
        let b = logs(80, |u| u.sqrt());
        let d = qq_diagnostic(&a, &b).unwrap();
        assert_eq!(d.cross.sample1.len(), 80);
        for v in [&d.cross.sample1, &d.cross.sample2, &d.sample1.standardized, &d.sample1.theoretical] {
            assert!(v.windows(2).all(|w| w[0] <= w[1]));
        }
        assert_eq!(d.sample1.theoretical.len(), d.sample1.standardized.len());
        assert!(qq_csv(&d).lines().count() == 1 + 100 + 80 + 80);
    }

    #[test]
    fn zero_variance_is_rejected() {
        let c = Sample::new(vec![3.0; 20]).unwrap();
        let s = logs(20, |u| u);
        let e = qq_diagnostic(&c, &s).unwrap_err();
        assert_eq!(e.exit_code(), 2);
    }
}
