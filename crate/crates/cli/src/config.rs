//! Layered run configuration: built-in defaults, then a config file, then
//! `QDKA_SEED`, then command-line flags.

use std::collections::HashMap;
use std::fmt;
use std::path::{Path, PathBuf};
use std::str::FromStr;

use qdka_core::model::{
    self, Averaging, BetaEnsemble, JitterMode, KickConfig, NoiseConfig, DEFAULT_QUADRATURE_NODES,
};
use qdka_core::scan::{uniform_grid, Engine};
use qdka_core::{BundleF64, PhysicalSetupF64};
use serde::Deserialize;
use serde_json::value::RawValue;
use sha2::{Digest, Sha256};

use crate::error::CliError;

pub const SEED_ENV: &str = "QDKA_SEED";

/// Noise applied by the noisy engine when the run does not set it.
pub const DEFAULT_AMP_FRACTION: f64 = 0.07;
pub const DEFAULT_PHASE_JITTER: f64 = 0.02 * std::f64::consts::PI;
pub const DEFAULT_REALIZATIONS: u32 = 200;
pub const DEFAULT_SEED: u64 = 1;

pub const KEYS: [&str; 24] = [
    "ell",
    "phi_d",
    "kicks",
    "reversal",
    "n0",
    "beta0",
    "fwhm",
    "nodes",
    "averaging",
    "eta_min",
    "eta_max",
    "eta_points",
    "eta_star",
    "ells",
    "dbeta_grid",
    "engine",
    "realizations",
    "seed",
    "amp_frac",
    "phase_jitter",
    "jitter_mode",
    "workers",
    "format",
    "t_half_override",
];

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum EngineChoice {
    Analytic,
    Propagator,
    Noisy,
}

impl EngineChoice {
    pub fn engine(self) -> Engine {
        match self {
            EngineChoice::Analytic => Engine::Analytic,
            EngineChoice::Propagator => Engine::Propagator,
            EngineChoice::Noisy => Engine::NoisyPropagator,
        }
    }

    fn name(self) -> &'static str {
        match self {
            EngineChoice::Analytic => "analytic",
            EngineChoice::Propagator => "propagator",
            EngineChoice::Noisy => "noisy",
        }
    }
}

impl FromStr for EngineChoice {
    type Err = String;
    fn from_str(s: &str) -> Result<Self, String> {
        match s {
            "analytic" => Ok(EngineChoice::Analytic),
            "propagator" => Ok(EngineChoice::Propagator),
            "noisy" | "propagator+noise" => Ok(EngineChoice::Noisy),
            _ => Err("expected analytic, propagator or noisy".into()),
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Format {
    Csv,
    Json,
}

impl FromStr for Format {
    type Err = String;
    fn from_str(s: &str) -> Result<Self, String> {
        match s {
            "csv" => Ok(Format::Csv),
            "json" => Ok(Format::Json),
            _ => Err("expected csv or json".into()),
        }
    }
}

/// Where a configuration value came from.
#[derive(Debug, Clone, PartialEq)]
pub enum Origin {
    File(PathBuf),
    Env,
    Flag,
}

impl fmt::Display for Origin {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Origin::File(p) => write!(f, "{}", p.display()),
            Origin::Env => write!(f, "${SEED_ENV}"),
            Origin::Flag => f.write_str("command line"),
        }
    }
}

/// Unparsed `key = value` entries; later entries win.
#[derive(Debug, Clone, Default)]
pub struct RawConfig {
    entries: Vec<(String, String, Origin)>,
    /// SHA-256 of the config file, when one was read.
    pub digest: Option<String>,
}

impl RawConfig {
    pub fn push(&mut self, key: &str, value: impl Into<String>, origin: Origin) {
        self.entries.push((key.replace('-', "_"), value.into(), origin));
    }

    pub fn entries(&self) -> impl Iterator<Item = (&str, &str, &Origin)> {
        self.entries.iter().map(|(k, v, o)| (k.as_str(), v.as_str(), o))
    }

    /// Reads a flat `key=value` file or a run manifest.
    pub fn load_file(&mut self, path: &Path) -> Result<(), CliError> {
        let bytes = std::fs::read(path).map_err(|e| CliError::io(path, e))?;
        self.digest = Some(hex::encode(Sha256::digest(&bytes)));
        let text = String::from_utf8(bytes)
            .map_err(|_| CliError::config(format!("{}: config file is not UTF-8", path.display())))?;
        let origin = Origin::File(path.to_path_buf());
        if text.trim_start().starts_with('{') {
            for (key, value) in manifest_entries(&text, path)? {
                self.push(&key, value, origin.clone());
            }
            return Ok(());
        }
        for (lineno, line) in text.lines().enumerate() {
            let line = match line.find('#') {
                Some(i) => &line[..i],
                None => line,
            }
            .trim();
            if line.is_empty() {
                continue;
            }
            let (key, value) = line.split_once('=').ok_or_else(|| {
                CliError::config(format!("{}:{}: expected key=value", path.display(), lineno + 1))
            })?;
            self.push(key.trim(), value.trim(), origin.clone());
        }
        Ok(())
    }
}

#[derive(Deserialize)]
struct ManifestIn {
    config: HashMap<String, Box<RawValue>>,
}

fn manifest_entries(text: &str, path: &Path) -> Result<Vec<(String, String)>, CliError> {
    let manifest: ManifestIn = serde_json::from_str(text)
        .map_err(|e| CliError::config(format!("{}: invalid manifest: {e}", path.display())))?;
    let mut out = Vec::new();
    for (key, raw) in manifest.config {
        let text = raw.get().trim();
        if text == "null" {
            continue;
        }
        let value = if text.starts_with('"') {
            serde_json::from_str::<String>(text)
                .map_err(|e| CliError::config(format!("{}: key `{key}`: {e}", path.display())))?
        } else {
            text.to_string()
        };
        out.push((key, value));
    }
    out.sort();
    Ok(out)
}

/// Fully typed run settings. `None` means "derive from the rest".
#[derive(Debug, Clone, PartialEq)]
pub struct Settings {
    pub ell: u32,
    pub phi_d: f64,
    pub kicks: u32,
    pub reversal: Option<f64>,
    pub n0: i64,
    pub beta0: f64,
    pub fwhm: f64,
    pub nodes: usize,
    pub averaging: Averaging,
    pub eta_min: f64,
    pub eta_max: f64,
    pub eta_points: usize,
    pub eta_star: Option<f64>,
    pub ells: Vec<u32>,
    pub dbeta_grid: Vec<f64>,
    pub engine: EngineChoice,
    pub realizations: Option<u32>,
    pub seed: u64,
    pub amp_frac: Option<f64>,
    pub phase_jitter: Option<f64>,
    pub jitter_mode: JitterMode,
    pub workers: Option<usize>,
    pub format: Format,
    pub t_half_override: Option<f64>,
}

impl Default for Settings {
    fn default() -> Self {
        Self {
            ell: 1,
            phi_d: 0.6,
            kicks: 4,
            reversal: None,
            n0: 0,
            beta0: 0.5,
            fwhm: 0.06,
            nodes: DEFAULT_QUADRATURE_NODES,
            averaging: Averaging::Coherent,
            eta_min: -1.5,
            eta_max: 1.5,
            eta_points: 301,
            eta_star: None,
            ells: vec![1, 2, 3],
            dbeta_grid: (1..=8).map(|i| i as f64 / 100.0).collect(),
            engine: EngineChoice::Analytic,
            realizations: None,
            seed: DEFAULT_SEED,
            amp_frac: None,
            phase_jitter: None,
            jitter_mode: JitterMode::RandomWalk,
            workers: None,
            format: Format::Csv,
            t_half_override: None,
        }
    }
}

fn parse<T: FromStr>(key: &str, value: &str, origin: &Origin, expected: &str) -> Result<T, CliError> {
    value.parse::<T>().map_err(|_| {
        CliError::config(format!("{origin}: key `{key}`: expected {expected}, got `{value}`"))
    })
}

fn parse_real(key: &str, value: &str, origin: &Origin) -> Result<f64, CliError> {
    let v: f64 = parse(key, value, origin, "a number")?;
    if !v.is_finite() {
        return Err(CliError::config(format!("{origin}: key `{key}`: must be finite, got `{value}`")));
    }
    Ok(v)
}

fn parse_list<T: FromStr>(key: &str, value: &str, origin: &Origin, expected: &str) -> Result<Vec<T>, CliError> {
    let inner = value.trim().trim_start_matches('[').trim_end_matches(']');
    if inner.trim().is_empty() {
        return Err(CliError::config(format!("{origin}: key `{key}`: list is empty")));
    }
    inner
        .split(',')
        .map(|item| parse(key, item.trim(), origin, expected))
        .collect()
}

impl Settings {
    /// Applies every entry over the defaults.
    pub fn from_raw(raw: &RawConfig) -> Result<Self, CliError> {
        let mut s = Settings::default();
        for (key, value, origin) in raw.entries() {
            s.set(key, value, origin)?;
        }
        Ok(s)
    }

    fn set(&mut self, key: &str, value: &str, origin: &Origin) -> Result<(), CliError> {
        match key {
            "ell" => self.ell = parse(key, value, origin, "a non-negative integer")?,
            "phi_d" => self.phi_d = parse_real(key, value, origin)?,
            "kicks" => self.kicks = parse(key, value, origin, "a non-negative integer")?,
            "reversal" => self.reversal = Some(parse_real(key, value, origin)?),
            "n0" => self.n0 = parse(key, value, origin, "an integer")?,
            "beta0" => self.beta0 = parse_real(key, value, origin)?,
            "fwhm" => self.fwhm = parse_real(key, value, origin)?,
            "nodes" => self.nodes = parse(key, value, origin, "a non-negative integer")?,
            "averaging" => {
                self.averaging = match value {
                    "coherent" => Averaging::Coherent,
                    "incoherent" => Averaging::Incoherent,
                    _ => return Err(CliError::config(format!(
                        "{origin}: key `{key}`: expected coherent or incoherent, got `{value}`"
                    ))),
                }
            }
            "eta_min" => self.eta_min = parse_real(key, value, origin)?,
            "eta_max" => self.eta_max = parse_real(key, value, origin)?,
            "eta_points" => self.eta_points = parse(key, value, origin, "a non-negative integer")?,
            "eta_star" => self.eta_star = Some(parse_real(key, value, origin)?),
            "ells" => self.ells = parse_list(key, value, origin, "a list of integers")?,
            "dbeta_grid" => {
                let list: Vec<f64> = parse_list(key, value, origin, "a list of numbers")?;
                if list.iter().any(|v| !v.is_finite()) {
                    return Err(CliError::config(format!("{origin}: key `{key}`: values must be finite")));
                }
                self.dbeta_grid = list;
            }
            "engine" => self.engine = parse_enum(key, value, origin)?,
            "realizations" => self.realizations = Some(parse(key, value, origin, "a non-negative integer")?),
            "seed" => self.seed = parse(key, value, origin, "an unsigned 64-bit integer")?,
            "amp_frac" => self.amp_frac = Some(parse_real(key, value, origin)?),
            "phase_jitter" => self.phase_jitter = Some(parse_real(key, value, origin)?),
            "jitter_mode" => {
                self.jitter_mode = match value {
                    "walk" => JitterMode::RandomWalk,
                    "independent" => JitterMode::Independent,
                    _ => return Err(CliError::config(format!(
                        "{origin}: key `{key}`: expected walk or independent, got `{value}`"
                    ))),
                }
            }
            "workers" => {
                let n: usize = parse(key, value, origin, "a positive integer")?;
                if n == 0 {
                    return Err(CliError::config(format!("{origin}: key `{key}`: workers must be ≥ 1")));
                }
                self.workers = Some(n);
            }
            "format" => self.format = parse_enum(key, value, origin)?,
            "t_half_override" => {
                let t = parse_real(key, value, origin)?;
                if t <= 0.0 {
                    return Err(CliError::config(format!(
                        "{origin}: key `{key}`: half-Talbot override must be positive"
                    )));
                }
                self.t_half_override = Some(t);
            }
            _ => return Err(CliError::config(format!("{origin}: unknown key `{key}`"))),
        }
        Ok(())
    }

    pub fn reversal_strength(&self) -> f64 {
        self.reversal.unwrap_or(self.kicks as f64 * self.phi_d)
    }

    pub fn noise(&self) -> NoiseConfig<f64> {
        let noisy = self.engine == EngineChoice::Noisy;
        NoiseConfig {
            reversal_amp_fraction: self.amp_frac.unwrap_or(if noisy { DEFAULT_AMP_FRACTION } else { 0.0 }),
            phase_jitter: self.phase_jitter.unwrap_or(if noisy { DEFAULT_PHASE_JITTER } else { 0.0 }),
            jitter_mode: self.jitter_mode,
            num_realizations: self.realizations.unwrap_or(if noisy { DEFAULT_REALIZATIONS } else { 1 }),
            seed: self.seed,
        }
    }

    pub fn kick_config(&self) -> KickConfig<f64> {
        KickConfig::new(self.ell, self.phi_d, self.kicks)
            .with_n0(self.n0)
            .with_reversal(self.reversal_strength())
    }

    pub fn ensemble(&self) -> BetaEnsemble<f64> {
        BetaEnsemble::new(self.beta0, self.fwhm)
            .with_nodes(self.nodes)
            .with_averaging(self.averaging)
    }

    pub fn bundle(&self) -> Result<BundleF64, CliError> {
        Ok(model::validate(self.kick_config(), self.ensemble(), self.noise())?)
    }

    pub fn setup(&self) -> PhysicalSetupF64 {
        PhysicalSetupF64::rb87().with_half_talbot_override(self.t_half_override)
    }

    pub fn grid(&self) -> Result<Vec<f64>, CliError> {
        if self.eta_points == 0 {
            return Err(CliError::config("key `eta_points`: must be ≥ 1"));
        }
        if self.eta_points > 1 && !(self.eta_max > self.eta_min) {
            return Err(CliError::config("key `eta_max`: must exceed eta_min"));
        }
        Ok(uniform_grid(self.eta_min, self.eta_max, self.eta_points))
    }

    /// Resolved values for the run manifest, as JSON text, in key order.
    pub fn manifest_entries(&self) -> Vec<(&'static str, String)> {
        let noise = self.noise();
        let opt = |v: Option<f64>| v.map_or_else(|| "null".to_string(), json_number);
        let string = |s: &str| format!("\"{s}\"");
        let list_f = |v: &[f64]| format!("[{}]", v.iter().map(|&x| json_number(x)).collect::<Vec<_>>().join(","));
        vec![
            ("ell", self.ell.to_string()),
            ("phi_d", json_number(self.phi_d)),
            ("kicks", self.kicks.to_string()),
            ("reversal", json_number(self.reversal_strength())),
            ("n0", self.n0.to_string()),
            ("beta0", json_number(self.beta0)),
            ("fwhm", json_number(self.fwhm)),
            ("nodes", self.nodes.to_string()),
            (
                "averaging",
                string(match self.averaging {
                    Averaging::Coherent => "coherent",
                    Averaging::Incoherent => "incoherent",
                }),
            ),
            ("eta_min", json_number(self.eta_min)),
            ("eta_max", json_number(self.eta_max)),
            ("eta_points", self.eta_points.to_string()),
            ("eta_star", opt(self.eta_star)),
            (
                "ells",
                format!("[{}]", self.ells.iter().map(u32::to_string).collect::<Vec<_>>().join(",")),
            ),
            ("dbeta_grid", list_f(&self.dbeta_grid)),
            ("engine", string(self.engine.name())),
            ("realizations", noise.num_realizations.to_string()),
            ("seed", self.seed.to_string()),
            ("amp_frac", json_number(noise.reversal_amp_fraction)),
            ("phase_jitter", json_number(noise.phase_jitter)),
            (
                "jitter_mode",
                string(match self.jitter_mode {
                    JitterMode::RandomWalk => "walk",
                    JitterMode::Independent => "independent",
                }),
            ),
            ("workers", self.workers.map_or_else(|| "null".to_string(), |w| w.to_string())),
            ("format", string(match self.format {
                Format::Csv => "csv",
                Format::Json => "json",
            })),
            ("t_half_override", opt(self.t_half_override)),
        ]
    }
}

fn parse_enum<T: FromStr<Err = String>>(key: &str, value: &str, origin: &Origin) -> Result<T, CliError> {
    value
        .parse::<T>()
        .map_err(|e| CliError::config(format!("{origin}: key `{key}`: {e}, got `{value}`")))
}

/// 17 significant digits, enough to round-trip any `f64`.
pub fn json_number(x: f64) -> String {
    if x.is_finite() {
        format!("{x:.16e}")
    } else {
        "null".to_string()
    }
}

/// Builds the layered configuration for one run.
pub fn gather(
    config_file: Option<&Path>,
    env_seed: Option<&str>,
    flags: &[(&'static str, String)],
) -> Result<RawConfig, CliError> {
    let mut raw = RawConfig::default();
    if let Some(path) = config_file {
        raw.load_file(path)?;
    }
    if let Some(seed) = env_seed {
        raw.push("seed", seed.trim(), Origin::Env);
    }
    for (key, value) in flags {
        raw.push(key, value.clone(), Origin::Flag);
    }
    Ok(raw)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn defaults_are_reference_parameters() {
        let s = Settings::from_raw(&RawConfig::default()).unwrap();
        assert_eq!((s.ell, s.phi_d, s.kicks), (1, 0.6, 4));
        assert_eq!(s.reversal_strength(), 2.4);
        assert_eq!((s.beta0, s.fwhm), (0.5, 0.06));
        assert!(s.noise().is_silent());
    }

    #[test]
    fn every_manifest_key_is_known() {
        let s = Settings::default();
        let keys: Vec<&str> = s.manifest_entries().iter().map(|(k, _)| *k).collect();
        assert_eq!(keys, KEYS.to_vec());
    }

    #[test]
    fn unknown_key_is_named() {
        let mut raw = RawConfig::default();
        raw.push("kick_count", "4", Origin::Flag);
        let err = Settings::from_raw(&raw).unwrap_err();
        assert!(err.to_string().contains("`kick_count`"));
        assert_eq!(err.exit_code(), 2);
    }

    #[test]
    fn type_mismatch_is_named() {
        let mut raw = RawConfig::default();
        raw.push("phi-d", "strong", Origin::Flag);
        let err = Settings::from_raw(&raw).unwrap_err().to_string();
        assert!(err.contains("`phi_d`") && err.contains("strong"), "{err}");
    }

    #[test]
    fn noisy_engine_picks_up_noise_defaults() {
        let mut raw = RawConfig::default();
        raw.push("engine", "noisy", Origin::Flag);
        let s = Settings::from_raw(&raw).unwrap();
        let n = s.noise();
        assert_eq!(n.reversal_amp_fraction, 0.07);
        assert_eq!(n.num_realizations, 200);
        assert!((n.phase_jitter - 0.02 * std::f64::consts::PI).abs() < 1e-16);
    }

    #[test]
    fn numbers_round_trip_through_text() {
        for x in [0.1, -1.5, 2.4, 1.0 / 3.0, 6.02e23, -1e-300] {
            assert_eq!(json_number(x).parse::<f64>().unwrap().to_bits(), x.to_bits());
        }
    }
}
