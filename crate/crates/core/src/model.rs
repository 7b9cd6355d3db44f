// SPDX-License-Identifier: Apache-2.0

//! Experiment description shared by the analytic and propagator engines.

use std::fmt;

use thiserror::Error;

use crate::scalar::Real;
use crate::units::reduce_unit;

/// Default number of Gauss–Hermite nodes for quasimomentum averages.
pub const DEFAULT_QUADRATURE_NODES: usize = 64;

/// One violated invariant.
#[derive(Debug, Clone, PartialEq, Error)]
pub enum ModelError {
    #[error("ell must be ≥ 1")]
    Ell,
    #[error("phi_d must be > 0 and finite")]
    PhiD,
    #[error("num_kicks must be ≥ 1")]
    NumKicks,
    #[error("reversal_strength must be > 0 and finite")]
    ReversalStrength,
    #[error("tau must be > 0 and finite")]
    Tau,
    #[error("beta0 must be finite")]
    Center,
    #[error("fwhm must be ≥ 0")]
    Fwhm,
    #[error("quadrature nodes must be ≥ 1")]
    QuadratureNodes,
    #[error("amp_frac must be ≥ 0 and finite")]
    AmpFraction,
    #[error("phase_jitter must be ≥ 0 and finite")]
    PhaseJitter,
    #[error("realizations must be ≥ 1")]
    Realizations,
    #[error("eta must be finite")]
    Eta,
}

/// Every invariant violated by a candidate bundle.
#[derive(Debug, Clone, PartialEq, Error)]
pub struct ValidationErrors(pub Vec<ModelError>);

impl fmt::Display for ValidationErrors {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        let msgs: Vec<String> = self.0.iter().map(|e| e.to_string()).collect();
        f.write_str(&msgs.join("; "))
    }
}

/// Non-fatal observations made during validation.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Warning {
    /// `phi_d * num_kicks > 20`: the momentum lattice gets wide.
    LargeKickAction,
    /// `fwhm > 0.25`: the Gaussian overlaps its own periodic images.
    WideEnsemble,
    /// Coherent average with `n0 != 0`: the closed form and the propagated
    /// state carry different β-dependent phases, so the engines differ.
    OffsetCoherentPhase,
}

impl fmt::Display for Warning {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Warning::LargeKickAction => {
                f.write_str("phi_d * num_kicks > 20; propagator lattice will be large")
            }
            Warning::WideEnsemble => {
                f.write_str("fwhm > 0.25; Gaussian window overlaps beta periodicity")
            }
            Warning::OffsetCoherentPhase => f.write_str(
                "n0 != 0 with coherent averaging; analytic and propagator ensemble results will differ",
            ),
        }
    }
}

/// Pulse train definition in scaled units.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct KickConfig<S> {
    /// Talbot order; the pulse period is `τ = 2πℓ`.
    pub ell: u32,
    /// Strength of each forward kick.
    pub phi_d: S,
    /// Number of forward kicks.
    pub num_kicks: u32,
    /// Initial integer momentum in units of ħG.
    pub n0: i64,
    /// Strength of the reversal pulse.
    pub reversal_strength: S,
    /// Off-resonant pulse period; only the propagator accepts it.
    pub tau_override: Option<S>,
}

impl<S: Real> KickConfig<S> {
    /// Resonant configuration with the reversal set to `num_kicks * phi_d`.
    pub fn new(ell: u32, phi_d: S, num_kicks: u32) -> Self {
        Self {
            ell,
            phi_d,
            num_kicks,
            n0: 0,
            reversal_strength: S::from_count(num_kicks as usize) * phi_d,
            tau_override: None,
        }
    }

    /// Four kicks of 0.6 at the first Talbot resonance.
    pub fn reference() -> Self {
        Self::new(1, S::lit(0.6), 4)
    }

    pub fn with_n0(mut self, n0: i64) -> Self {
        self.n0 = n0;
        self
    }

    pub fn with_reversal(mut self, strength: S) -> Self {
        self.reversal_strength = strength;
        self
    }

    pub fn with_tau(mut self, tau: Option<S>) -> Self {
        self.tau_override = tau;
        self
    }

    pub fn tau(&self) -> S {
        self.tau_override
            .unwrap_or_else(|| S::lit(2.0) * S::PI() * S::from_count(self.ell as usize))
    }

    /// True when the pulse period is exactly `2πℓ`.
    pub fn is_resonant(&self) -> bool {
        match self.tau_override {
            None => true,
            Some(t) => t == S::lit(2.0) * S::PI() * S::from_count(self.ell as usize),
        }
    }

    /// `num_kicks * phi_d`, the reversal that undoes the forward train.
    pub fn ideal_reversal(&self) -> S {
        S::from_count(self.num_kicks as usize) * self.phi_d
    }

    fn check(&self, errors: &mut Vec<ModelError>) {
        let positive = |v: S| v.is_finite() && v > S::zero();
        if self.ell < 1 {
            errors.push(ModelError::Ell);
        }
        if !positive(self.phi_d) {
            errors.push(ModelError::PhiD);
        }
        if self.num_kicks < 1 {
            errors.push(ModelError::NumKicks);
        }
        if !positive(self.reversal_strength) {
            errors.push(ModelError::ReversalStrength);
        }
        if let Some(t) = self.tau_override {
            if !positive(t) {
                errors.push(ModelError::Tau);
            }
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum QuadratureRule {
    GaussHermite,
}

/// How amplitudes from different quasimomenta are combined.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Default)]
pub enum Averaging {
    /// `|∫ ρ(β) A(β) dβ|²`.
    #[default]
    Coherent,
    /// `∫ ρ(β) |A(β)|² dβ`.
    Incoherent,
}

/// Gaussian quasimomentum distribution.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct BetaEnsemble<S> {
    center: S,
    pub fwhm: S,
    pub nodes: usize,
    pub rule: QuadratureRule,
    pub averaging: Averaging,
}

impl<S: Real> BetaEnsemble<S> {
    /// The center is reduced into `[0, 1)`.
    pub fn new(center: S, fwhm: S) -> Self {
        Self {
            center: if center.is_finite() { reduce_unit(center) } else { center },
            fwhm,
            nodes: DEFAULT_QUADRATURE_NODES,
            rule: QuadratureRule::GaussHermite,
            averaging: Averaging::Coherent,
        }
    }

    pub fn plane_wave(beta: S) -> Self {
        Self::new(beta, S::zero())
    }

    pub fn with_nodes(mut self, nodes: usize) -> Self {
        self.nodes = nodes;
        self
    }

    pub fn with_averaging(mut self, averaging: Averaging) -> Self {
        self.averaging = averaging;
        self
    }

    pub fn with_fwhm(mut self, fwhm: S) -> Self {
        self.fwhm = fwhm;
        self
    }

    pub fn center(&self) -> S {
        self.center
    }

    /// Standard deviation `Δβ / (2√(2 ln 2))`.
    pub fn sigma(&self) -> S {
        self.fwhm / (S::lit(2.0) * (S::lit(2.0) * S::LN_2()).sqrt())
    }

    pub fn is_degenerate(&self) -> bool {
        self.fwhm == S::zero()
    }

    fn check(&self, errors: &mut Vec<ModelError>) {
        if !self.center.is_finite() {
            errors.push(ModelError::Center);
        }
        if !(self.fwhm >= S::zero()) || !self.fwhm.is_finite() {
            errors.push(ModelError::Fwhm);
        }
        if self.nodes < 1 {
            errors.push(ModelError::QuadratureNodes);
        }
    }
}

/// Spatial phase noise model for the pulse train.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Default)]
pub enum JitterMode {
    /// Gaussian increments accumulated from pulse to pulse.
    #[default]
    RandomWalk,
    /// Independent Gaussian offset on each pulse.
    Independent,
}

/// Experimental imperfections and Monte Carlo controls.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct NoiseConfig<S> {
    /// Half-width of the uniform relative error on the reversal amplitude.
    pub reversal_amp_fraction: S,
    /// Standard deviation of the per-pulse spatial phase noise, rad.
    pub phase_jitter: S,
    pub jitter_mode: JitterMode,
    pub num_realizations: u32,
    pub seed: u64,
}

impl<S: Real> NoiseConfig<S> {
    /// No imperfections, a single realization.
    pub fn silent() -> Self {
        Self {
            reversal_amp_fraction: S::zero(),
            phase_jitter: S::zero(),
            jitter_mode: JitterMode::RandomWalk,
            num_realizations: 1,
            seed: 0,
        }
    }

    /// ±7 % reversal amplitude and 0.02π phase noise per pulse.
    pub fn experimental(num_realizations: u32, seed: u64) -> Self {
        Self {
            reversal_amp_fraction: S::lit(0.07),
            phase_jitter: S::lit(0.02) * S::PI(),
            jitter_mode: JitterMode::RandomWalk,
            num_realizations,
            seed,
        }
    }

    pub fn with_mode(mut self, mode: JitterMode) -> Self {
        self.jitter_mode = mode;
        self
    }

    pub fn is_silent(&self) -> bool {
        self.reversal_amp_fraction == S::zero() && self.phase_jitter == S::zero()
    }

    fn check(&self, errors: &mut Vec<ModelError>) {
        let non_negative = |v: S| v.is_finite() && v >= S::zero();
        if !non_negative(self.reversal_amp_fraction) {
            errors.push(ModelError::AmpFraction);
        }
        if !non_negative(self.phase_jitter) {
            errors.push(ModelError::PhaseJitter);
        }
        if self.num_realizations < 1 {
            errors.push(ModelError::Realizations);
        }
    }
}

/// Scaled acceleration `η`.
#[derive(Debug, Clone, Copy, PartialEq, PartialOrd)]
pub struct AccelerationSpec<S> {
    eta: S,
}

impl<S: Real> AccelerationSpec<S> {
    pub fn new(eta: S) -> Result<Self, ModelError> {
        if eta.is_finite() {
            Ok(Self { eta })
        } else {
            Err(ModelError::Eta)
        }
    }

    pub fn eta(&self) -> S {
        self.eta
    }
}

/// A configuration that passed [`validate`]. Immutable.
#[derive(Debug, Clone, PartialEq)]
pub struct ValidatedBundle<S> {
    config: KickConfig<S>,
    ensemble: BetaEnsemble<S>,
    noise: NoiseConfig<S>,
    warnings: Vec<Warning>,
}

impl<S: Real> ValidatedBundle<S> {
    pub fn config(&self) -> &KickConfig<S> {
        &self.config
    }

    pub fn ensemble(&self) -> &BetaEnsemble<S> {
        &self.ensemble
    }

    pub fn noise(&self) -> &NoiseConfig<S> {
        &self.noise
    }

    pub fn warnings(&self) -> &[Warning] {
        &self.warnings
    }

    pub fn tau(&self) -> S {
        self.config.tau()
    }

    pub fn sigma(&self) -> S {
        self.ensemble.sigma()
    }

    pub fn reversal_strength(&self) -> S {
        self.config.reversal_strength
    }

    /// Re-validates with a different ensemble width.
    pub fn with_fwhm(&self, fwhm: S) -> Result<Self, ValidationErrors> {
        validate(self.config, self.ensemble.with_fwhm(fwhm), self.noise)
    }

    pub fn with_ensemble(&self, ensemble: BetaEnsemble<S>) -> Result<Self, ValidationErrors> {
        validate(self.config, ensemble, self.noise)
    }

    pub fn with_noise(&self, noise: NoiseConfig<S>) -> Result<Self, ValidationErrors> {
        validate(self.config, self.ensemble, noise)
    }

    pub fn with_config(&self, config: KickConfig<S>) -> Result<Self, ValidationErrors> {
        validate(config, self.ensemble, self.noise)
    }
}

/// Checks every invariant and collects all violations.
pub fn validate<S: Real>(
    config: KickConfig<S>,
    ensemble: BetaEnsemble<S>,
    noise: NoiseConfig<S>,
) -> Result<ValidatedBundle<S>, ValidationErrors> {
    let mut errors = Vec::new();
    config.check(&mut errors);
    ensemble.check(&mut errors);
    noise.check(&mut errors);
    if !errors.is_empty() {
        return Err(ValidationErrors(errors));
    }

    let mut warnings = Vec::new();
    if config.phi_d * S::from_count(config.num_kicks as usize) > S::lit(20.0) {
        warnings.push(Warning::LargeKickAction);
    }
    if ensemble.fwhm > S::lit(0.25) {
        warnings.push(Warning::WideEnsemble);
    }
    if config.n0 != 0 && !ensemble.is_degenerate() && ensemble.averaging == Averaging::Coherent {
        warnings.push(Warning::OffsetCoherentPhase);
    }
    Ok(ValidatedBundle { config, ensemble, noise, warnings })
}
