// SPDX-License-Identifier: Apache-2.0

//! Acceleration scans and their analysis.

use std::fmt;

use rayon::prelude::*;
use thiserror::Error;

use crate::analytic::{self, AnalyticError};
use crate::model::{ValidatedBundle, ValidationErrors};
use crate::propagator::{self, PropagatorError};
use crate::scalar::Real;
use crate::units::{PhysicalSetup, UnitsError};

/// Side peaks below this prominence are ignored.
pub const DEFAULT_PROMINENCE: f64 = 0.02;
/// Smallest `F(-η*) + F(+η*)` accepted by [`asymmetry_visibility`].
pub const MIN_VISIBILITY_DENOMINATOR: f64 = 1e-9;
/// Upper end of the range where visibility is fitted linearly in Δβ.
pub const THERMOMETRY_LINEAR_LIMIT: f64 = 0.08;
pub const THERMOMETRY_MAX_FWHM: f64 = 0.12;

#[derive(Debug, Clone, PartialEq, Error)]
pub enum ScanError {
    #[error("configuration error: {0}")]
    Config(String),
    #[error(transparent)]
    Validation(#[from] ValidationErrors),
    #[error(transparent)]
    Units(#[from] UnitsError),
    #[error(transparent)]
    Analytic(#[from] AnalyticError),
    #[error(transparent)]
    Propagator(#[from] PropagatorError),
    #[error("asymmetry visibility undefined at eta* = {eta_star}: F(-eta*) + F(+eta*) = {sum}")]
    VisibilityDenominator { eta_star: f64, sum: f64 },
}

impl ScanError {
    /// Whether the error comes from inputs rather than the numerics.
    pub fn is_config(&self) -> bool {
        matches!(
            self,
            ScanError::Config(_) | ScanError::Validation(_) | ScanError::Units(_)
        ) || matches!(self, ScanError::Analytic(AnalyticError::UnsupportedRegime { .. }))
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum Engine {
    Analytic,
    Propagator,
    NoisyPropagator,
}

impl Engine {
    pub fn tag(self) -> &'static str {
        match self {
            Engine::Analytic => "analytic",
            Engine::Propagator => "propagator",
            Engine::NoisyPropagator => "propagator+noise",
        }
    }
}

impl fmt::Display for Engine {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.tag())
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct FidelitySample<S> {
    pub mean: S,
    pub std_error: Option<S>,
}

/// Ensemble fidelity at one acceleration with the selected engine.
pub fn evaluate<S: Real>(bundle: &ValidatedBundle<S>, eta: S, engine: Engine) -> Result<FidelitySample<S>, ScanError> {
    check_engine(bundle, engine)?;
    if !eta.is_finite() {
        return Err(ScanError::Config(format!("eta must be finite, got {eta}")));
    }
    Ok(match engine {
        Engine::Analytic => FidelitySample {
            mean: analytic::fidelity_ensemble(bundle, eta)?,
            std_error: None,
        },
        Engine::Propagator => FidelitySample {
            mean: propagator::fidelity_ensemble(bundle, eta)?,
            std_error: None,
        },
        Engine::NoisyPropagator => {
            let est = propagator::fidelity_mc_ensemble(bundle, eta)?;
            FidelitySample { mean: est.mean, std_error: Some(est.std_error) }
        }
    })
}

fn check_engine<S: Real>(bundle: &ValidatedBundle<S>, engine: Engine) -> Result<(), ScanError> {
    let noisy = !bundle.noise().is_silent();
    match engine {
        Engine::Analytic | Engine::Propagator if noisy => Err(ScanError::Config(format!(
            "engine {engine} cannot model noise; use the noisy propagator or zero the noise settings"
        ))),
        Engine::Analytic if !bundle.config().is_resonant() => Err(AnalyticError::UnsupportedRegime {
            tau: bundle.tau().to_f64_lossy(),
        }
        .into()),
        _ => Ok(()),
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct AxisPoint<S> {
    pub eta: S,
    /// Acceleration in m/s².
    pub g: S,
}

/// Sampled fidelity curve.
#[derive(Debug, Clone, PartialEq)]
pub struct ScanResult<S> {
    pub axis: Vec<AxisPoint<S>>,
    pub fidelity: Vec<FidelitySample<S>>,
    pub engine: Engine,
    pub bundle: ValidatedBundle<S>,
    pub seed: Option<u64>,
    /// m/s² per unit η at the bundle's Talbot order.
    pub g_per_eta: S,
}

impl<S: Real> ScanResult<S> {
    pub fn etas(&self) -> Vec<S> {
        self.axis.iter().map(|p| p.eta).collect()
    }

    pub fn means(&self) -> Vec<S> {
        self.fidelity.iter().map(|f| f.mean).collect()
    }

    pub fn len(&self) -> usize {
        self.axis.len()
    }

    pub fn is_empty(&self) -> bool {
        self.axis.is_empty()
    }
}

/// `points` evenly spaced values from `min` to `max` inclusive.
pub fn uniform_grid<S: Real>(min: S, max: S, points: usize) -> Vec<S> {
    match points {
        0 => Vec::new(),
        1 => vec![min],
        _ => {
            let step = (max - min) / S::from_count(points - 1);
            (0..points)
                .map(|i| if i == points - 1 { max } else { min + step * S::from_count(i) })
                .collect()
        }
    }
}

/// Evaluates every grid point; results are in grid order regardless of
/// how the work is scheduled.
pub fn run_eta_scan<S: Real>(
    bundle: &ValidatedBundle<S>,
    grid: &[S],
    engine: Engine,
    setup: &PhysicalSetup<S>,
) -> Result<ScanResult<S>, ScanError> {
    if grid.is_empty() {
        return Err(ScanError::Config("eta grid is empty".into()));
    }
    if grid.iter().any(|e| !e.is_finite()) {
        return Err(ScanError::Config("eta grid contains non-finite values".into()));
    }
    if grid.windows(2).any(|w| !(w[1] > w[0])) {
        return Err(ScanError::Config("eta grid must be strictly increasing".into()));
    }
    check_engine(bundle, engine)?;
    setup.validate()?;
    let g_per_eta = setup.g_per_eta(bundle.config().ell)?;

    let fidelity = grid
        .par_iter()
        .map(|&eta| evaluate(bundle, eta, engine))
        .collect::<Result<Vec<_>, _>>()?;
    let axis = grid
        .iter()
        .map(|&eta| {
            crate::units::g_from_eta(eta, bundle.config().ell, setup).map(|g| AxisPoint { eta, g })
        })
        .collect::<Result<Vec<_>, _>>()?;

    Ok(ScanResult {
        axis,
        fidelity,
        engine,
        bundle: bundle.clone(),
        seed: (engine == Engine::NoisyPropagator).then(|| bundle.noise().seed),
        g_per_eta,
    })
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Flank {
    Left,
    Right,
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct SidePeak<S> {
    pub center: S,
    pub height: S,
    pub prominence: S,
}

/// Central peak geometry and the remaining resolved maxima.
#[derive(Debug, Clone, PartialEq)]
pub struct PeakReport<S> {
    pub center_eta: S,
    pub height: S,
    /// Half-maximum crossing on each side, where one exists in the grid.
    pub left_half_max: Option<S>,
    pub right_half_max: Option<S>,
    pub fwhm_eta: Option<S>,
    pub fwhm_g: Option<S>,
    pub missing_flanks: Vec<Flank>,
    pub side_peaks: Vec<SidePeak<S>>,
}

/// Indices of local maxima, endpoints included when they exceed their
/// single neighbour.
pub fn local_maxima<S: Real>(values: &[S]) -> Vec<usize> {
    let n = values.len();
    let mut out = Vec::new();
    if n == 0 {
        return out;
    }
    if n == 1 {
        return vec![0];
    }
    if values[0] > values[1] {
        out.push(0);
    }
    let mut i = 1;
    while i + 1 < n {
        if values[i] > values[i - 1] {
            // walk across a plateau
            let mut j = i;
            while j + 1 < n && values[j + 1] == values[i] {
                j += 1;
            }
            if j + 1 == n || values[j + 1] < values[i] {
                out.push(i);
            }
            i = j + 1;
        } else {
            i += 1;
        }
    }
    if values[n - 1] > values[n - 2] {
        out.push(n - 1);
    }
    out
}

/// Height above the higher of the two bases reached before climbing
/// above the peak.
pub fn prominence<S: Real>(values: &[S], peak: usize) -> S {
    let h = values[peak];
    let mut left_min = h;
    for &v in values[..peak].iter().rev() {
        if v > h {
            break;
        }
        left_min = left_min.min(v);
    }
    let mut right_min = h;
    for &v in &values[peak + 1..] {
        if v > h {
            break;
        }
        right_min = right_min.min(v);
    }
    h - left_min.max(right_min)
}

pub fn extract_peaks<S: Real>(result: &ScanResult<S>, prominence_floor: S) -> Result<PeakReport<S>, ScanError> {
    let mut report = peaks_of(&result.etas(), &result.means(), prominence_floor)?;
    report.fwhm_g = report.fwhm_eta.map(|w| w * result.g_per_eta.abs());
    Ok(report)
}

/// Peak analysis of a bare curve; `fwhm_g` is left empty.
pub fn peaks_of<S: Real>(etas: &[S], values: &[S], prominence_floor: S) -> Result<PeakReport<S>, ScanError> {
    if etas.len() != values.len() {
        return Err(ScanError::Config("axis and values differ in length".into()));
    }
    if etas.len() < 5 {
        return Err(ScanError::Config(format!(
            "peak extraction needs at least 5 points, got {}",
            etas.len()
        )));
    }
    let maxima = local_maxima(values);
    let central = *maxima
        .iter()
        .min_by(|&&a, &&b| {
            etas[a]
                .abs()
                .partial_cmp(&etas[b].abs())
                .unwrap_or(std::cmp::Ordering::Equal)
        })
        .ok_or_else(|| ScanError::Config("curve has no local maximum".into()))?;

    let height = values[central];
    let half = height * S::lit(0.5);
    let crossing = |i: usize, j: usize| {
        // linear interpolation between samples i (>= half) and j (< half)
        let (x0, y0, x1, y1) = (etas[i], values[i], etas[j], values[j]);
        x0 + (half - y0) * (x1 - x0) / (y1 - y0)
    };

    let mut left = None;
    let mut i = central;
    while i > 0 {
        if values[i - 1] < half {
            left = Some(crossing(i, i - 1));
            break;
        }
        i -= 1;
    }
    let mut right = None;
    let mut i = central;
    while i + 1 < values.len() {
        if values[i + 1] < half {
            right = Some(crossing(i, i + 1));
            break;
        }
        i += 1;
    }

    let mut missing_flanks = Vec::new();
    if left.is_none() {
        missing_flanks.push(Flank::Left);
    }
    if right.is_none() {
        missing_flanks.push(Flank::Right);
    }
    let fwhm_eta = match (left, right) {
        (Some(l), Some(r)) => Some(r - l),
        _ => None,
    };

    let side_peaks = maxima
        .iter()
        .filter(|&&m| m != central)
        .map(|&m| SidePeak {
            center: etas[m],
            height: values[m],
            prominence: prominence(values, m),
        })
        .filter(|p| p.prominence >= prominence_floor)
        .collect();

    Ok(PeakReport {
        center_eta: etas[central],
        height,
        left_half_max: left,
        right_half_max: right,
        fwhm_eta,
        fwhm_g: None,
        missing_flanks,
        side_peaks,
    })
}

/// `(F(-η*) - F(+η*)) / (F(-η*) + F(+η*))`.
pub fn asymmetry_visibility<S: Real>(bundle: &ValidatedBundle<S>, eta_star: S, engine: Engine) -> Result<S, ScanError> {
    if !(eta_star > S::zero()) || !eta_star.is_finite() {
        return Err(ScanError::Config(format!("eta* must be positive, got {eta_star}")));
    }
    let minus = evaluate(bundle, -eta_star, engine)?.mean;
    let plus = evaluate(bundle, eta_star, engine)?.mean;
    let sum = minus + plus;
    if sum <= S::lit(MIN_VISIBILITY_DENOMINATOR) {
        return Err(ScanError::VisibilityDenominator {
            eta_star: eta_star.to_f64_lossy(),
            sum: sum.to_f64_lossy(),
        });
    }
    Ok((minus - plus) / sum)
}

/// Center of the most prominent side peak on the positive η axis, from a
/// noiseless scan of `[0, 1.5]` at the bundle's parameters.
pub fn default_eta_star<S: Real>(bundle: &ValidatedBundle<S>) -> Result<S, ScanError> {
    let quiet = bundle.with_noise(crate::model::NoiseConfig::silent())?;
    let engine = if quiet.config().is_resonant() {
        Engine::Analytic
    } else {
        Engine::Propagator
    };
    let grid = uniform_grid(S::zero(), S::lit(1.5), 301);
    let values = grid
        .par_iter()
        .map(|&eta| evaluate(&quiet, eta, engine).map(|f| f.mean))
        .collect::<Result<Vec<_>, _>>()?;
    local_maxima(&values)
        .into_iter()
        .filter(|&i| i > 0)
        .map(|i| (i, prominence(&values, i)))
        .max_by(|a, b| a.1.partial_cmp(&b.1).unwrap_or(std::cmp::Ordering::Equal))
        .map(|(i, _)| grid[i])
        .ok_or_else(|| ScanError::Config("no side peak on the positive eta axis".into()))
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct LinearFit<S> {
    pub slope: S,
    pub intercept: S,
    pub r_squared: S,
    pub points: usize,
}

/// Ordinary least squares `y = slope * x + intercept`.
pub fn linear_fit<S: Real>(xs: &[S], ys: &[S]) -> Option<LinearFit<S>> {
    let n = xs.len();
    if n < 2 || n != ys.len() {
        return None;
    }
    let nf = S::from_count(n);
    let mx = xs.iter().fold(S::zero(), |a, &x| a + x) / nf;
    let my = ys.iter().fold(S::zero(), |a, &y| a + y) / nf;
    let mut sxx = S::zero();
    let mut sxy = S::zero();
    let mut syy = S::zero();
    for (&x, &y) in xs.iter().zip(ys) {
        sxx += (x - mx) * (x - mx);
        sxy += (x - mx) * (y - my);
        syy += (y - my) * (y - my);
    }
    if sxx == S::zero() {
        return None;
    }
    let slope = sxy / sxx;
    let r_squared = if syy == S::zero() {
        S::one()
    } else {
        sxy * sxy / (sxx * syy)
    };
    Some(LinearFit { slope, intercept: my - slope * mx, r_squared, points: n })
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct ThermometryPoint<S> {
    pub fwhm: S,
    pub visibility: S,
}

/// Visibility as a function of ensemble width.
#[derive(Debug, Clone, PartialEq)]
pub struct ThermometryCurve<S> {
    pub eta_star: S,
    pub points: Vec<ThermometryPoint<S>>,
    /// Fit over the points with `fwhm <= 0.08`.
    pub fit: LinearFit<S>,
    /// `|visibility|` strictly increases with width over the whole grid.
    pub monotone: bool,
}

pub fn thermometry_curve<S: Real>(
    template: &ValidatedBundle<S>,
    fwhm_grid: &[S],
    eta_star: S,
    engine: Engine,
) -> Result<ThermometryCurve<S>, ScanError> {
    let max = S::lit(THERMOMETRY_MAX_FWHM);
    if let Some(bad) = fwhm_grid.iter().find(|&&w| !(w > S::zero() && w <= max)) {
        return Err(ScanError::Config(format!("thermometry widths must lie in (0, 0.12], got {bad}")));
    }
    let limit = S::lit(THERMOMETRY_LINEAR_LIMIT);
    let in_range = fwhm_grid.iter().filter(|&&w| w <= limit).count();
    if in_range < 3 {
        return Err(ScanError::Config(format!(
            "thermometry fit needs at least 3 widths <= 0.08, got {in_range}"
        )));
    }

    let points = fwhm_grid
        .iter()
        .map(|&w| {
            let bundle = template.with_fwhm(w)?;
            asymmetry_visibility(&bundle, eta_star, engine).map(|visibility| ThermometryPoint { fwhm: w, visibility })
        })
        .collect::<Result<Vec<_>, ScanError>>()?;

    let (xs, ys): (Vec<S>, Vec<S>) = points
        .iter()
        .filter(|p| p.fwhm <= limit)
        .map(|p| (p.fwhm, p.visibility))
        .unzip();
    let fit = linear_fit(&xs, &ys).ok_or_else(|| ScanError::Config("thermometry widths are all equal".into()))?;

    let mut sorted = points.clone();
    sorted.sort_by(|a, b| a.fwhm.partial_cmp(&b.fwhm).unwrap_or(std::cmp::Ordering::Equal));
    let monotone = sorted
        .windows(2)
        .all(|w| w[1].visibility.abs() > w[0].visibility.abs());

    Ok(ThermometryCurve { eta_star, points, fit, monotone })
}
