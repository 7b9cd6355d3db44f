//! Release gate: reduced cross-engine, revival, symmetry and Bessel checks.

use std::fmt;

use qdka_core::analytic;
use qdka_core::model::{validate, BetaEnsemble, KickConfig, NoiseConfig};
use qdka_core::propagator;
use qdka_core::scan::uniform_grid;
use qdka_core::specfun::{bessel_j, bessel_j_band};
use rayon::prelude::*;

pub const CROSS_ENGINE_TOLERANCE: f64 = 1e-8;
pub const REVIVAL_TOLERANCE: f64 = 1e-12;
pub const SYMMETRY_TOLERANCE: f64 = 1e-9;
pub const NORMALIZATION_TOLERANCE: f64 = 1e-10;
pub const RECURRENCE_TOLERANCE: f64 = 1e-9;

#[derive(Debug, Clone, PartialEq)]
pub struct Check {
    pub name: &'static str,
    pub passed: bool,
    pub detail: String,
}

impl fmt::Display for Check {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        let tag = if self.passed { "PASS" } else { "FAIL" };
        write!(f, "{tag} {:<20} {}", self.name, self.detail)
    }
}

#[derive(Debug, Clone, PartialEq, Default)]
pub struct Report {
    pub checks: Vec<Check>,
}

impl Report {
    pub fn passed(&self) -> bool {
        self.checks.iter().all(|c| c.passed)
    }

    pub fn failures(&self) -> impl Iterator<Item = &Check> {
        self.checks.iter().filter(|c| !c.passed)
    }
}

impl fmt::Display for Report {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        for c in &self.checks {
            writeln!(f, "{c}")?;
        }
        let failed = self.failures().count();
        write!(f, "{} checks, {} failed", self.checks.len(), failed)
    }
}

/// Band source for the Bessel checks; `perturbation` scales every value
/// by `1 + perturbation`.
#[derive(Debug, Clone, Copy, Default)]
pub struct BesselSource {
    pub perturbation: f64,
}

impl BesselSource {
    fn band(&self, x: f64, k_max: usize) -> Vec<f64> {
        let mut band = bessel_j_band(x, k_max).unwrap_or_else(|_| vec![f64::NAN; k_max + 1]);
        if self.perturbation != 0.0 {
            for v in &mut band {
                *v *= 1.0 + self.perturbation;
            }
        }
        band
    }
}

fn check(name: &'static str, passed: bool, detail: String) -> Check {
    Check { name, passed, detail }
}

fn max_abs(values: impl Iterator<Item = f64>) -> f64 {
    values.fold(0.0, |m: f64, v| if v.is_nan() { f64::NAN } else { m.max(v.abs()) })
}

fn cross_engine() -> Check {
    let etas = uniform_grid(-1.0, 1.0, 9);
    let mut cases = Vec::new();
    for ell in 1..=3u32 {
        for beta in [0.0, 0.25, 0.5] {
            for &eta in &etas {
                cases.push((ell, beta, eta));
            }
        }
    }
    let diffs: Vec<Result<f64, String>> = cases
        .par_iter()
        .map(|&(ell, beta, eta)| {
            let cfg = KickConfig::new(ell, 0.6, 4);
            let a = analytic::fidelity_plane_wave(&cfg, beta, eta).map_err(|e| e.to_string())?;
            let p = propagator::fidelity_experimental_sequence(&cfg, beta, eta, None).map_err(|e| e.to_string())?;
            Ok(a - p)
        })
        .collect();
    match diffs.into_iter().collect::<Result<Vec<_>, _>>() {
        Ok(d) => {
            let worst = max_abs(d.iter().copied());
            check(
                "cross-engine",
                worst <= CROSS_ENGINE_TOLERANCE,
                format!("max |F_analytic - F_propagator| = {worst:.3e} over {} points", d.len()),
            )
        }
        Err(e) => check("cross-engine", false, e),
    }
}

fn revival() -> Check {
    let mut worst: f64 = 0.0;
    let mut errors = Vec::new();
    for (ell, beta) in [(1u32, 0.5_f64), (2, 0.0), (2, 0.5)] {
        let cfg = KickConfig::new(ell, 0.6_f64, 4);
        match analytic::fidelity_plane_wave(&cfg, beta, 0.0) {
            Ok(f) => worst = worst.max((f - 1.0).abs()),
            Err(e) => errors.push(e.to_string()),
        }
        match propagator::fidelity_experimental_sequence(&cfg, beta, 0.0, None) {
            Ok(f) => worst = worst.max((f - 1.0).abs()),
            Err(e) => errors.push(e.to_string()),
        }
    }
    if !errors.is_empty() {
        return check("revival", false, errors.join("; "));
    }
    check("revival", worst <= REVIVAL_TOLERANCE, format!("max |F(0) - 1| = {worst:.3e}"))
}

fn symmetry() -> Check {
    let etas = uniform_grid(0.1, 1.5, 15);
    let mut worst: f64 = 0.0;
    for fwhm in [0.06, 0.07] {
        let bundle = match validate(KickConfig::new(2, 0.6, 4), BetaEnsemble::new(0.0, fwhm), NoiseConfig::silent()) {
            Ok(b) => b,
            Err(e) => return check("symmetry", false, e.to_string()),
        };
        let diffs: Result<Vec<f64>, _> = etas
            .par_iter()
            .map(|&eta| {
                let plus = analytic::fidelity_ensemble(&bundle, eta)?;
                let minus = analytic::fidelity_ensemble(&bundle, -eta)?;
                Ok::<f64, analytic::AnalyticError>(plus - minus)
            })
            .collect();
        match diffs {
            Ok(d) => worst = worst.max(max_abs(d.into_iter())),
            Err(e) => return check("symmetry", false, e.to_string()),
        }
    }
    check("symmetry", worst <= SYMMETRY_TOLERANCE, format!("max |F(eta) - F(-eta)| = {worst:.3e}"))
}

fn bessel_arguments() -> Vec<f64> {
    let mut xs: Vec<f64> = (0..=120).map(|i| 0.5 * i as f64).collect();
    xs.extend([100.0, 250.5, 1000.0]);
    xs
}

fn bessel_normalization(source: BesselSource) -> Check {
    let worst = max_abs(bessel_arguments().into_iter().map(|x| {
        let band = source.band(x, x.ceil() as usize + 60);
        band[0] * band[0] + 2.0 * band[1..].iter().map(|v| v * v).sum::<f64>() - 1.0
    }));
    check(
        "bessel-normalization",
        worst <= NORMALIZATION_TOLERANCE,
        format!("max |J0^2 + 2 sum Jk^2 - 1| = {worst:.3e}"),
    )
}

fn bessel_recurrence(source: BesselSource) -> Check {
    let mut worst: f64 = 0.0;
    for x in bessel_arguments().into_iter().filter(|&x| x >= 0.5) {
        let band = source.band(x, 22);
        for k in 1..=20 {
            let r = band[k - 1] + band[k + 1] - 2.0 * k as f64 / x * band[k];
            worst = if r.is_nan() { f64::NAN } else { worst.max(r.abs()) };
        }
    }
    check(
        "bessel-recurrence",
        worst <= RECURRENCE_TOLERANCE,
        format!("max three-term residual = {worst:.3e}"),
    )
}

fn bessel_symmetry() -> Check {
    let mut mismatches = 0;
    for k in 0..25 {
        let sign = if k % 2 == 0 { 1.0 } else { -1.0 };
        for &x in &[0.3, 1.7, 4.9, 5.1, 9.0, 33.0, 210.0] {
            let pos = bessel_j(k, x);
            let ok = match (pos, bessel_j(-k, x), bessel_j(k, -x)) {
                (Ok(p), Ok(n), Ok(m)) => n == sign * p && m == sign * p,
                _ => false,
            };
            if !ok {
                mismatches += 1;
            }
        }
    }
    check("bessel-symmetry", mismatches == 0, format!("{mismatches} reflection mismatches"))
}

pub fn run(source: BesselSource) -> Report {
    Report {
        checks: vec![
            cross_engine(),
            revival(),
            symmetry(),
            bessel_normalization(source),
            bessel_recurrence(source),
            bessel_symmetry(),
        ],
    }
}
