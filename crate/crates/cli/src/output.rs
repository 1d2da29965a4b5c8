//! Band serialization.
//!
//! Numbers are written with 17 significant digits so that parsing the
//! output reproduces every value bit for bit.

use std::fmt::Write as _;
use std::path::{Path, PathBuf};

use gicband_core::Band;

use crate::error::{CliError, CliResult};

#[derive(Debug, Clone, Copy, PartialEq, Eq, clap::ValueEnum)]
pub enum Format {
    Json,
    Csv,
}

impl Format {
    pub fn extension(self) -> &'static str {
        match self {
            Format::Json => "json",
            Format::Csv => "csv",
        }
    }
}

/// `x` in scientific notation with 17 significant digits.
pub fn fmt_num(x: f64) -> String {
    format!("{x:.16e}")
}

fn json_array(xs: &[f64]) -> String {
    let items: Vec<String> = xs.iter().map(|&x| fmt_num(x)).collect();
    format!("[{}]", items.join(", "))
}

fn json_opt(x: Option<f64>) -> String {
    x.map_or_else(|| "null".to_string(), fmt_num)
}

fn json_str(s: &str) -> String {
    serde_json::to_string(s).expect("strings always serialize")
}

/// JSON document for one band.
pub fn band_json(band: &Band) -> String {
    let warnings: Vec<String> = band.warnings.iter().map(|w| json_str(w)).collect();
    let d = &band.details;
    let mut s = String::from("{\n");
    let _ = writeln!(s, "  \"method\": {},", json_str(band.method.as_str()));
    let _ = writeln!(s, "  \"scale\": {},", json_str(band.scale.as_str()));
    let _ = writeln!(s, "  \"level\": {},", fmt_num(band.level));
    let _ = writeln!(s, "  \"m\": {},", json_opt(band.m.map(|m| m.m())));
    let _ = writeln!(s, "  \"simultaneous\": {},", band.method.is_simultaneous());
    let _ = writeln!(s, "  \"grid\": {},", json_array(band.grid.points()));
    let _ = writeln!(s, "  \"lower\": {},", json_array(&band.lower));
    let _ = writeln!(s, "  \"center\": {},", json_array(&band.center));
    let _ = writeln!(s, "  \"upper\": {},", json_array(&band.upper));
    let _ = writeln!(
        s,
        "  \"effective_trim\": {},",
        json_array(&[band.grid.trim_lo(), band.grid.trim_hi()])
    );
    let _ = writeln!(s, "  \"warnings\": [{}],", warnings.join(", "));
    let _ = writeln!(
        s,
        "  \"details\": {{\"critical_value\": {}, \"scale_s\": {}, \"c_s\": {}, \"bootstrap_reps\": {}}}",
        json_opt(d.critical_value),
        json_opt(d.scale_s),
        json_opt(d.cs),
        d.bootstrap_reps
            .map_or_else(|| "null".to_string(), |b| b.to_string())
    );
    s.push('}');
    s
}

/// CSV table `p,lower,center,upper`.
pub fn band_csv(band: &Band) -> String {
    let mut s = String::from("p,lower,center,upper\n");
    for (i, &p) in band.grid.points().iter().enumerate() {
        let _ = writeln!(
            s,
            "{},{},{},{}",
            fmt_num(p),
            fmt_num(band.lower[i]),
            fmt_num(band.center[i]),
            fmt_num(band.upper[i])
        );
    }
    s
}

pub fn render(band: &Band, format: Format) -> String {
    match format {
        Format::Json => band_json(band) + "\n",
        Format::Csv => band_csv(band),
    }
}

/// `results/band.json` with method `direct` becomes `results/band.direct.json`.
pub fn per_method_path(out: &Path, band: &Band, format: Format) -> PathBuf {
    let stem = out
        .file_stem()
        .map_or_else(|| "band".into(), |s| s.to_string_lossy().into_owned());
    out.with_file_name(format!(
        "{stem}.{}.{}",
        band.method.as_str(),
        format.extension()
    ))
}

pub fn write_file(path: &Path, content: &str) -> CliResult<()> {
    std::fs::write(path, content)
        .map_err(|e| CliError::Input(format!("cannot write {}: {e}", path.display())))
}

/// Writes bands to `out` (one file per band when there are several) or
/// returns the text destined for standard output.
pub fn emit_bands(bands: &[Band], format: Format, out: Option<&Path>) -> CliResult<Option<String>> {
    match (out, bands) {
        (Some(path), [band]) => write_file(path, &render(band, format)).map(|_| None),
        (Some(path), _) => {
            for band in bands {
                write_file(&per_method_path(path, band, format), &render(band, format))?;
            }
            Ok(None)
        }
        (None, [band]) => Ok(Some(render(band, format))),
        (None, _) => Ok(Some(match format {
            Format::Json => {
                let docs: Vec<String> = bands.iter().map(band_json).collect();
                format!("[\n{}\n]\n", docs.join(",\n"))
            }
            Format::Csv => bands
                .iter()
                .map(|b| format!("# {}\n{}", b.method.as_str(), band_csv(b)))
                .collect::<Vec<_>>()
                .join("\n"),
        })),
    }
}
