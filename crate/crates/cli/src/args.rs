use std::path::PathBuf;

use clap::{Args, Parser, Subcommand};

#[derive(Debug, Clone, Parser)]
#[command(name = "qdka", version, about = "Fidelity scans of the quantum delta-kicked accelerator")]
pub struct Cli {
    #[command(subcommand)]
    pub command: Command,
}

#[derive(Debug, Clone, Subcommand)]
pub enum Command {
    /// Fidelity against acceleration at one Talbot order.
    ScanEta(RunArgs),
    /// Central-peak widths across several Talbot orders.
    ScanEll(RunArgs),
    /// Asymmetry visibility at ±eta*.
    Asymmetry(RunArgs),
    /// Visibility against ensemble width.
    Thermometry(RunArgs),
    /// Reduced cross-engine, revival, symmetry and Bessel checks.
    Selftest(SelftestArgs),
}

impl Command {
    pub fn name(&self) -> &'static str {
        match self {
            Command::ScanEta(_) => "scan-eta",
            Command::ScanEll(_) => "scan-ell",
            Command::Asymmetry(_) => "asymmetry",
            Command::Thermometry(_) => "thermometry",
            Command::Selftest(_) => "selftest",
        }
    }
}

/// Every value flag is taken as text and parsed together with the config
/// file, so both report bad values the same way.
#[derive(Debug, Clone, Default, Args)]
pub struct RunArgs {
    /// key=value file, or a run manifest to replay.
    #[arg(long, value_name = "FILE")]
    pub config: Option<PathBuf>,
    #[arg(long, value_name = "FILE")]
    pub out: Option<PathBuf>,

    #[arg(long, value_name = "L")]
    pub ell: Option<String>,
    #[arg(long = "phi-d", value_name = "PHI")]
    pub phi_d: Option<String>,
    #[arg(long, value_name = "T")]
    pub kicks: Option<String>,
    #[arg(long, value_name = "STRENGTH")]
    pub reversal: Option<String>,
    #[arg(long, value_name = "N", allow_hyphen_values = true)]
    pub n0: Option<String>,
    #[arg(long, value_name = "BETA", allow_hyphen_values = true)]
    pub beta0: Option<String>,
    #[arg(long, value_name = "DBETA", allow_hyphen_values = true)]
    pub fwhm: Option<String>,
    #[arg(long, value_name = "N")]
    pub nodes: Option<String>,
    #[arg(long = "eta-min", value_name = "ETA", allow_hyphen_values = true)]
    pub eta_min: Option<String>,
    #[arg(long = "eta-max", value_name = "ETA", allow_hyphen_values = true)]
    pub eta_max: Option<String>,
    #[arg(long = "eta-points", value_name = "N")]
    pub eta_points: Option<String>,
    #[arg(long = "eta-star", value_name = "ETA")]
    pub eta_star: Option<String>,
    #[arg(long, value_name = "LIST")]
    pub ells: Option<String>,
    #[arg(long = "dbeta-grid", value_name = "LIST")]
    pub dbeta_grid: Option<String>,
    /// analytic, propagator or noisy.
    #[arg(long, value_name = "ENGINE")]
    pub engine: Option<String>,
    #[arg(long, value_name = "N")]
    pub realizations: Option<String>,
    #[arg(long, value_name = "SEED")]
    pub seed: Option<String>,
    #[arg(long = "amp-frac", value_name = "F")]
    pub amp_frac: Option<String>,
    #[arg(long = "phase-jitter", value_name = "RAD")]
    pub phase_jitter: Option<String>,
    /// walk or independent.
    #[arg(long = "jitter-mode", value_name = "MODE")]
    pub jitter_mode: Option<String>,
    #[arg(long, conflicts_with = "incoherent")]
    pub coherent: bool,
    #[arg(long)]
    pub incoherent: bool,
    #[arg(long, value_name = "N")]
    pub workers: Option<String>,
    /// csv or json.
    #[arg(long, value_name = "FORMAT")]
    pub format: Option<String>,
    #[arg(long = "t-half-override", value_name = "SECONDS")]
    pub t_half_override: Option<String>,
}

impl RunArgs {
    /// Flag values as config entries, in a fixed order.
    pub fn entries(&self) -> Vec<(&'static str, String)> {
        let mut out = Vec::new();
        let fields: [(&'static str, &Option<String>); 23] = [
            ("ell", &self.ell),
            ("phi_d", &self.phi_d),
            ("kicks", &self.kicks),
            ("reversal", &self.reversal),
            ("n0", &self.n0),
            ("beta0", &self.beta0),
            ("fwhm", &self.fwhm),
            ("nodes", &self.nodes),
            ("eta_min", &self.eta_min),
            ("eta_max", &self.eta_max),
            ("eta_points", &self.eta_points),
            ("eta_star", &self.eta_star),
            ("ells", &self.ells),
            ("dbeta_grid", &self.dbeta_grid),
            ("engine", &self.engine),
            ("realizations", &self.realizations),
            ("seed", &self.seed),
            ("amp_frac", &self.amp_frac),
            ("phase_jitter", &self.phase_jitter),
            ("jitter_mode", &self.jitter_mode),
            ("workers", &self.workers),
            ("format", &self.format),
            ("t_half_override", &self.t_half_override),
        ];
        for (key, value) in fields {
            if let Some(v) = value {
                out.push((key, v.clone()));
            }
        }
        if self.coherent {
            out.push(("averaging", "coherent".into()));
        }
        if self.incoherent {
            out.push(("averaging", "incoherent".into()));
        }
        out
    }
}

#[derive(Debug, Clone, Default, Args)]
pub struct SelftestArgs {
    #[arg(long, value_name = "N")]
    pub workers: Option<usize>,
    /// Accepted for symmetry with the scan commands; the checks are noiseless.
    #[arg(long, value_name = "SEED")]
    pub seed: Option<u64>,
    /// Scales every Bessel band value by `1 + EPS`.
    #[arg(long = "perturb-bessel", value_name = "EPS", hide = true, allow_hyphen_values = true)]
    pub perturb_bessel: Option<f64>,
}
