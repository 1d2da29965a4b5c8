//! Flat TOML configuration for simulation campaigns and the shared
//! parsers for method and scale-policy names.

use std::path::Path;

use gicband_core::{
    BandConfig, BandMethod, DistSpec, GicParams, Kernel, RateParams, ScalePolicy, SimSetting,
    DEFAULT_GRID_LEN,
};
use serde::Deserialize;

use crate::error::{CliError, CliResult};

/// Expands a method name; `all` yields plug-in, direct, point-wise and bootstrap.
pub fn parse_methods(name: &str) -> CliResult<Vec<BandMethod>> {
    Ok(match name.trim().to_ascii_lowercase().replace('-', "_").as_str() {
        "plugin" => vec![BandMethod::Plugin],
        "direct" => vec![BandMethod::Direct],
        "pointwise" | "pointwise_lognormal" => vec![BandMethod::PointwiseLognormal],
        "pointwise_normal" => vec![BandMethod::PointwiseNormal],
        "worldbank" | "worldbank_bootstrap" => vec![BandMethod::WorldbankBootstrap],
        "all" => vec![
            BandMethod::Plugin,
            BandMethod::Direct,
            BandMethod::PointwiseLognormal,
            BandMethod::WorldbankBootstrap,
        ],
        other => {
            return Err(CliError::Input(format!(
                "unknown method '{other}' (plugin, direct, pointwise, pointwise_normal, worldbank, all)"
            )))
        }
    })
}

/// `location_scale`, `estimate_cs`, or `fixed:<s>`.
pub fn parse_scale_policy(spec: &str) -> CliResult<ScalePolicy> {
    let norm = spec.trim().to_ascii_lowercase().replace('-', "_");
    match norm.as_str() {
        "location_scale" | "assume_location_scale" => Ok(ScalePolicy::AssumeLocationScale),
        "estimate_cs" => Ok(ScalePolicy::EstimateCs),
        _ => {
            let value = norm.strip_prefix("fixed:").or_else(|| norm.strip_prefix("fixed_s:"));
            match value.map(str::parse::<f64>) {
                Some(Ok(s)) if s > 0.0 && s.is_finite() => Ok(ScalePolicy::FixedS(s)),
                _ => Err(CliError::Input(format!(
                    "invalid scale policy '{spec}' (location_scale, estimate_cs, fixed:<s>)"
                ))),
            }
        }
    }
}

/// `lognormal(location, scale)` or `gamma(shape, scale)`.
pub fn parse_dist(spec: &str) -> CliResult<DistSpec> {
    let bad = || {
        CliError::Input(format!(
            "invalid distribution '{spec}' (lognormal(location, scale) or gamma(shape, scale))"
        ))
    };
    let s = spec.trim();
    let open = s.find('(').ok_or_else(bad)?;
    let inner = s[open + 1..].strip_suffix(')').ok_or_else(bad)?;
    let args: Vec<f64> = inner
        .split(',')
        .map(|a| a.trim().parse::<f64>())
        .collect::<Result<_, _>>()
        .map_err(|_| bad())?;
    let [a, b] = args[..] else { return Err(bad()) };
    let dist = match s[..open].trim().to_ascii_lowercase().replace(['-', '_'], "").as_str() {
        "lognormal" => DistSpec::LogNormal {
            location: a,
            scale: b,
        },
        "gamma" => DistSpec::Gamma { shape: a, scale: b },
        _ => return Err(bad()),
    };
    dist.validate().map_err(|_| bad())?;
    Ok(dist)
}

#[derive(Debug, Clone, PartialEq, Deserialize)]
#[serde(untagged)]
pub enum OneOrMany {
    One(usize),
    Many(Vec<usize>),
}

/// Simulation campaign; see the README for the key reference.
#[derive(Debug, Clone, PartialEq, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct SimConfig {
    /// `setting1`, `setting2` or `custom` (then `dist1` and `dist2` are required).
    #[serde(default = "default_setting")]
    pub setting: String,
    pub dist1: Option<String>,
    pub dist2: Option<String>,
    /// Per-sample size, or a list of sizes run in turn.
    pub n: OneOrMany,
    #[serde(default = "default_reps")]
    pub reps: usize,
    #[serde(default = "default_level")]
    pub level: f64,
    #[serde(default = "default_seed")]
    pub seed: u64,
    #[serde(default = "default_m")]
    pub m: f64,
    #[serde(default = "default_grid")]
    pub grid: usize,
    #[serde(default = "default_methods")]
    pub methods: Vec<String>,
    #[serde(default = "default_policy")]
    pub scale_policy: String,
    #[serde(default = "default_boot")]
    pub bootstrap_reps: usize,
    pub eta: Option<f64>,
    pub beta: Option<f64>,
    pub delta: Option<f64>,
}

fn default_setting() -> String {
    "setting1".into()
}
fn default_reps() -> usize {
    500
}
fn default_level() -> f64 {
    0.95
}
fn default_seed() -> u64 {
    1
}
fn default_m() -> f64 {
    1.0
}
fn default_grid() -> usize {
    DEFAULT_GRID_LEN
}
fn default_methods() -> Vec<String> {
    vec!["plugin".into(), "direct".into(), "worldbank".into()]
}
fn default_policy() -> String {
    "location_scale".into()
}
fn default_boot() -> usize {
    100
}

impl SimConfig {
    pub fn from_toml(text: &str) -> CliResult<Self> {
        toml::from_str(text).map_err(|e| CliError::Input(format!("invalid config: {e}")))
    }

    pub fn load(path: &Path) -> CliResult<Self> {
        let text = std::fs::read_to_string(path)
            .map_err(|e| CliError::Input(format!("cannot read {}: {e}", path.display())))?;
        Self::from_toml(&text)
    }

    pub fn sizes(&self) -> Vec<usize> {
        match &self.n {
            OneOrMany::One(n) => vec![*n],
            OneOrMany::Many(v) => v.clone(),
        }
    }

    pub fn settings(&self) -> CliResult<Vec<SimSetting>> {
        let m = GicParams::new(self.m)?;
        let sizes = self.sizes();
        if sizes.is_empty() {
            return Err(CliError::Input("n must name at least one sample size".into()));
        }
        sizes
            .into_iter()
            .map(|n| {
                let mut s = match self.setting.as_str() {
                    "setting1" => SimSetting::setting1(n, self.reps, self.seed),
                    "setting2" => SimSetting::setting2(n, self.reps, self.seed),
                    "custom" => {
                        let (Some(d1), Some(d2)) = (&self.dist1, &self.dist2) else {
                            return Err(CliError::Input(
                                "custom setting needs dist1 and dist2".into(),
                            ));
                        };
                        SimSetting {
                            name: "custom".into(),
                            dist1: parse_dist(d1)?,
                            dist2: parse_dist(d2)?,
                            ..SimSetting::setting1(n, self.reps, self.seed)
                        }
                    }
                    other => {
                        return Err(CliError::Input(format!(
                            "unknown setting '{other}' (setting1, setting2, custom)"
                        )))
                    }
                };
                if self.setting != "custom" {
                    if let Some(d) = &self.dist1 {
                        s.dist1 = parse_dist(d)?;
                    }
                    if let Some(d) = &self.dist2 {
                        s.dist2 = parse_dist(d)?;
                    }
                }
                s.level = self.level;
                s.m = m;
                s.grid_len = self.grid;
                s.validate()?;
                Ok(s)
            })
            .collect()
    }

    pub fn methods(&self) -> CliResult<Vec<BandMethod>> {
        let mut out = Vec::new();
        for name in &self.methods {
            for m in parse_methods(name)? {
                if !out.contains(&m) {
                    out.push(m);
                }
            }
        }
        if out.is_empty() {
            return Err(CliError::Input("methods must not be empty".into()));
        }
        Ok(out)
    }

    pub fn band_config(&self) -> CliResult<BandConfig> {
        let d = RateParams::default();
        let rates = RateParams::new(
            self.eta.unwrap_or(d.eta()),
            self.beta.unwrap_or(d.beta()),
            self.delta.unwrap_or(d.delta()),
        )?;
        Ok(BandConfig {
            level: self.level,
            rates,
            kernel: Kernel::Epanechnikov,
            scale_policy: parse_scale_policy(&self.scale_policy)?,
            bootstrap_reps: self.bootstrap_reps,
            ..BandConfig::default()
        })
    }
}
