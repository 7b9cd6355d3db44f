//! CSV/JSON writers and the run manifest.

use std::fmt::Write as _;
use std::path::{Path, PathBuf};
use std::time::{SystemTime, UNIX_EPOCH};

use qdka_core::scan::{Flank, PeakReport, ScanResult, ThermometryCurve};
use serde::ser::{Serialize, SerializeMap, Serializer};
use serde::Serialize as DeriveSerialize;
use serde_json::value::RawValue;

use crate::config::{json_number, Format, Settings};
use crate::error::CliError;

pub const SCAN_HEADER: &str = "eta,g_mps2,fidelity,std_error";

fn csv_number(x: f64) -> String {
    format!("{x:.16e}")
}

fn opt_csv(x: Option<f64>) -> String {
    x.map(csv_number).unwrap_or_default()
}

fn opt_json(x: Option<f64>) -> String {
    x.map_or_else(|| "null".to_string(), json_number)
}

pub fn scan_table(result: &ScanResult<f64>, format: Format) -> String {
    let mut out = String::new();
    match format {
        Format::Csv => {
            out.push_str(SCAN_HEADER);
            out.push('\n');
            for (axis, f) in result.axis.iter().zip(&result.fidelity) {
                let _ = writeln!(
                    out,
                    "{},{},{},{}",
                    csv_number(axis.eta),
                    csv_number(axis.g),
                    csv_number(f.mean),
                    opt_csv(f.std_error)
                );
            }
        }
        Format::Json => {
            let _ = write!(out, "{{\"engine\":\"{}\",\"records\":[", result.engine.tag());
            for (i, (axis, f)) in result.axis.iter().zip(&result.fidelity).enumerate() {
                if i > 0 {
                    out.push(',');
                }
                let _ = write!(
                    out,
                    "\n{{\"eta\":{},\"g_mps2\":{},\"fidelity\":{},\"std_error\":{}}}",
                    json_number(axis.eta),
                    json_number(axis.g),
                    json_number(f.mean),
                    opt_json(f.std_error)
                );
            }
            out.push_str("\n]}\n");
        }
    }
    out
}

fn flanks(report: &PeakReport<f64>) -> Vec<&'static str> {
    report
        .missing_flanks
        .iter()
        .map(|f| match f {
            Flank::Left => "left",
            Flank::Right => "right",
        })
        .collect()
}

pub fn peak_table(reports: &[(u32, PeakReport<f64>)], format: Format) -> String {
    let mut out = String::new();
    match format {
        Format::Csv => {
            out.push_str("ell,center_eta,height,fwhm_eta,fwhm_g,side_peaks,missing_flanks\n");
            for (ell, r) in reports {
                let _ = writeln!(
                    out,
                    "{ell},{},{},{},{},{},{}",
                    csv_number(r.center_eta),
                    csv_number(r.height),
                    opt_csv(r.fwhm_eta),
                    opt_csv(r.fwhm_g),
                    r.side_peaks.len(),
                    flanks(r).join(";")
                );
            }
        }
        Format::Json => {
            out.push_str("{\"peaks\":[");
            for (i, (ell, r)) in reports.iter().enumerate() {
                if i > 0 {
                    out.push(',');
                }
                let side: Vec<String> = r
                    .side_peaks
                    .iter()
                    .map(|p| {
                        format!(
                            "{{\"center\":{},\"height\":{},\"prominence\":{}}}",
                            json_number(p.center),
                            json_number(p.height),
                            json_number(p.prominence)
                        )
                    })
                    .collect();
                let missing: Vec<String> = flanks(r).iter().map(|f| format!("\"{f}\"")).collect();
                let _ = write!(
                    out,
                    "\n{{\"ell\":{ell},\"center_eta\":{},\"height\":{},\"left_half_max\":{},\"right_half_max\":{},\
                     \"fwhm_eta\":{},\"fwhm_g\":{},\"missing_flanks\":[{}],\"side_peaks\":[{}]}}",
                    json_number(r.center_eta),
                    json_number(r.height),
                    opt_json(r.left_half_max),
                    opt_json(r.right_half_max),
                    opt_json(r.fwhm_eta),
                    opt_json(r.fwhm_g),
                    missing.join(","),
                    side.join(",")
                );
            }
            out.push_str("\n]}\n");
        }
    }
    out
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct AsymmetryRecord {
    pub beta0: f64,
    pub fwhm: f64,
    pub eta_star: f64,
    pub f_minus: f64,
    pub f_plus: f64,
    pub visibility: f64,
}

pub fn asymmetry_table(r: &AsymmetryRecord, format: Format) -> String {
    let values = [r.beta0, r.fwhm, r.eta_star, r.f_minus, r.f_plus, r.visibility];
    let names = ["beta0", "fwhm", "eta_star", "f_minus", "f_plus", "visibility"];
    match format {
        Format::Csv => format!(
            "{}\n{}\n",
            names.join(","),
            values.iter().map(|&v| csv_number(v)).collect::<Vec<_>>().join(",")
        ),
        Format::Json => {
            let fields: Vec<String> = names
                .iter()
                .zip(values)
                .map(|(n, v)| format!("\"{n}\":{}", json_number(v)))
                .collect();
            format!("{{{}}}\n", fields.join(","))
        }
    }
}

pub fn thermometry_table(curve: &ThermometryCurve<f64>, format: Format) -> String {
    let mut out = String::new();
    match format {
        Format::Csv => {
            out.push_str("fwhm,visibility\n");
            for p in &curve.points {
                let _ = writeln!(out, "{},{}", csv_number(p.fwhm), csv_number(p.visibility));
            }
        }
        Format::Json => {
            let _ = write!(
                out,
                "{{\"eta_star\":{},\"slope\":{},\"intercept\":{},\"r_squared\":{},\"fit_points\":{},\"monotone\":{},\"points\":[",
                json_number(curve.eta_star),
                json_number(curve.fit.slope),
                json_number(curve.fit.intercept),
                json_number(curve.fit.r_squared),
                curve.fit.points,
                curve.monotone
            );
            for (i, p) in curve.points.iter().enumerate() {
                if i > 0 {
                    out.push(',');
                }
                let _ = write!(
                    out,
                    "\n{{\"fwhm\":{},\"visibility\":{}}}",
                    json_number(p.fwhm),
                    json_number(p.visibility)
                );
            }
            out.push_str("\n]}\n");
        }
    }
    out
}

/// JSON object whose values are pre-rendered JSON text, kept in order.
struct RawMap(Vec<(String, Box<RawValue>)>);

impl Serialize for RawMap {
    fn serialize<S: Serializer>(&self, serializer: S) -> Result<S::Ok, S::Error> {
        let mut map = serializer.serialize_map(Some(self.0.len()))?;
        for (k, v) in &self.0 {
            map.serialize_entry(k, v)?;
        }
        map.end()
    }
}

fn raw_map(entries: &[(&str, String)]) -> RawMap {
    RawMap(
        entries
            .iter()
            .map(|(k, v)| {
                let raw = RawValue::from_string(v.clone()).expect("manifest values are rendered as JSON");
                (k.to_string(), raw)
            })
            .collect(),
    )
}

#[derive(DeriveSerialize)]
struct Manifest<'a> {
    tool: &'static str,
    version: &'static str,
    timestamp: u64,
    subcommand: &'a str,
    engine: &'a str,
    seed: u64,
    config_digest: Option<&'a str>,
    config: RawMap,
    summary: RawMap,
}

/// Everything a finished command hands to the writer.
#[derive(Debug, Clone, Default)]
pub struct Emission {
    pub body: String,
    /// Extra tables written next to `--out`, keyed by file-name suffix.
    pub extras: Vec<(String, String)>,
    pub summary: Vec<(&'static str, String)>,
}

pub fn manifest_text(
    subcommand: &str,
    engine: &str,
    settings: &Settings,
    digest: Option<&str>,
    summary: &[(&'static str, String)],
) -> String {
    let timestamp = SystemTime::now().duration_since(UNIX_EPOCH).map(|d| d.as_secs()).unwrap_or(0);
    let manifest = Manifest {
        tool: "qdka",
        version: env!("CARGO_PKG_VERSION"),
        timestamp,
        subcommand,
        engine,
        seed: settings.seed,
        config_digest: digest,
        config: raw_map(&settings.manifest_entries()),
        summary: raw_map(summary),
    };
    let mut text = serde_json::to_string_pretty(&manifest).expect("manifest serializes");
    text.push('\n');
    text
}

pub fn manifest_path(out: &Path) -> PathBuf {
    let mut name = out.as_os_str().to_owned();
    name.push(".manifest.json");
    PathBuf::from(name)
}

/// `runs/scan.csv` + `ell2` -> `runs/scan.ell2.csv`.
pub fn sibling_path(out: &Path, tag: &str) -> PathBuf {
    let stem = out.file_stem().map(|s| s.to_string_lossy().into_owned()).unwrap_or_default();
    let name = match out.extension() {
        Some(ext) => format!("{stem}.{tag}.{}", ext.to_string_lossy()),
        None => format!("{stem}.{tag}"),
    };
    out.with_file_name(name)
}

pub fn write_file(path: &Path, text: &str) -> Result<(), CliError> {
    std::fs::write(path, text).map_err(|e| CliError::io(path, e))
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn sidecar_names() {
        assert_eq!(manifest_path(Path::new("a/b.csv")), PathBuf::from("a/b.csv.manifest.json"));
        assert_eq!(sibling_path(Path::new("a/b.csv"), "ell2"), PathBuf::from("a/b.ell2.csv"));
        assert_eq!(sibling_path(Path::new("b"), "ell3"), PathBuf::from("b.ell3"));
    }

    #[test]
    fn manifest_is_valid_json_with_exact_numbers() {
        let settings = Settings { phi_d: 0.1 + 0.2, ..Settings::default() };
        let text = manifest_text("scan-eta", "analytic", &settings, None, &[("peaks", "3".into())]);
        let v: serde_json::Value = serde_json::from_str(&text).unwrap();
        assert_eq!(v["subcommand"], "scan-eta");
        assert_eq!(v["config"]["ell"], 1);
        assert_eq!(v["summary"]["peaks"], 3);
        assert!(text.contains("3.0000000000000004e-1"));
        assert!(v["config"]["eta_star"].is_null());
    }
}
