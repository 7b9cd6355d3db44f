// SPDX-License-Identifier: Apache-2.0

//! Direct propagation on a truncated integer-momentum lattice.
//!
//! A state with fixed quasimomentum β is stored as amplitudes on
//! `n ∈ [n_min, n_max]`. Free evolution between pulses is diagonal,
//! `exp(-i τ/2 (n + β + ηq + η/2)²)`, and a pulse of strength `s` with the
//! standing wave shifted by `α` is the banded convolution
//! `⟨n+k| e^{-is cos(θ+α)} |n⟩ = (-i)^k J_k(s) e^{ikα}`.
//!
//! The lattice grows by the coupling half-width on each pulse and is
//! trimmed back where the occupation is negligible, so truncation never
//! reflects amplitude off an edge.

use num_complex::Complex;
use rand::{Rng as _, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_distr::StandardNormal;
use rayon::prelude::*;
use thiserror::Error;

use crate::model::{JitterMode, KickConfig, NoiseConfig, ValidatedBundle};
use crate::quadrature::ensemble_fidelity;
use crate::scalar::Real;
use crate::specfun::{bessel_j_band, SpecFunError};

/// Maximum tolerated norm drift over a full pulse sequence.
pub const NORM_TOLERANCE: f64 = 1e-10;

#[derive(Debug, Clone, PartialEq, Error)]
pub enum PropagatorError {
    #[error("momentum lattice would need {needed} sites, cap is {cap}")]
    LatticeCap { needed: usize, cap: usize },
    #[error("norm drifted to {norm} after propagation; lattice truncation did not converge")]
    NonConvergence { norm: f64 },
    #[error("kick strength must be finite and >= 0, got {0}")]
    KickStrength(f64),
    #[error(transparent)]
    SpecFun(#[from] SpecFunError),
}

/// Truncation controls for the momentum lattice.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct LatticePolicy {
    /// Minimum half-width of a freshly prepared plane-wave lattice.
    pub min_radius: usize,
    /// Edge sites with occupation below this are dropped after each pulse.
    pub trim_threshold: f64,
    /// Couplings with `|J_k|` below this are not applied.
    pub coupling_cutoff: f64,
    pub max_sites: usize,
}

impl Default for LatticePolicy {
    fn default() -> Self {
        Self {
            min_radius: 16,
            trim_threshold: 1e-30,
            coupling_cutoff: 1e-16,
            max_sites: 1 << 20,
        }
    }
}

impl LatticePolicy {
    /// Initial half-width for a pulse train of total action `action`.
    pub fn initial_radius(&self, action: f64) -> usize {
        self.min_radius.max((2.0 * action).ceil() as usize)
    }
}

/// Amplitudes on a contiguous window of integer momenta at fixed β.
#[derive(Debug, Clone, PartialEq)]
pub struct WaveFunction<S> {
    n_min: i64,
    amplitudes: Vec<Complex<S>>,
    beta: S,
}

impl<S: Real> WaveFunction<S> {
    /// `|n0⟩` on the window `[n0 - radius, n0 + radius]`.
    pub fn plane_wave(n0: i64, beta: S, radius: usize) -> Self {
        let mut amplitudes = vec![Complex::new(S::zero(), S::zero()); 2 * radius + 1];
        amplitudes[radius] = Complex::new(S::one(), S::zero());
        Self {
            n_min: n0 - radius as i64,
            amplitudes,
            beta,
        }
    }

    pub fn beta(&self) -> S {
        self.beta
    }

    pub fn n_min(&self) -> i64 {
        self.n_min
    }

    pub fn n_max(&self) -> i64 {
        self.n_min + self.amplitudes.len() as i64 - 1
    }

    pub fn amplitudes(&self) -> &[Complex<S>] {
        &self.amplitudes
    }

    /// Amplitude at momentum `n`; zero outside the window.
    pub fn amplitude(&self, n: i64) -> Complex<S> {
        let offset = n - self.n_min;
        if offset < 0 || offset as usize >= self.amplitudes.len() {
            Complex::new(S::zero(), S::zero())
        } else {
            self.amplitudes[offset as usize]
        }
    }

    pub fn norm(&self) -> S {
        self.amplitudes.iter().map(|a| a.norm_sqr()).sum()
    }

    /// Occupation of the two outermost sites.
    pub fn edge_occupancy(&self) -> S {
        let first = self.amplitudes.first().map_or(S::zero(), |a| a.norm_sqr());
        if self.amplitudes.len() == 1 {
            return first;
        }
        first + self.amplitudes.last().map_or(S::zero(), |a| a.norm_sqr())
    }

    /// Free evolution for kick index `q`:
    /// `a_n ← a_n exp(-i τ/2 (n + β + ηq + η/2)²)`.
    pub fn apply_free_evolution(&mut self, tau: S, eta: S, q: i64) {
        self.evolve_diagonal(tau, eta, q, -S::one());
    }

    /// Inverse of [`Self::apply_free_evolution`].
    pub fn apply_free_evolution_adjoint(&mut self, tau: S, eta: S, q: i64) {
        self.evolve_diagonal(tau, eta, q, S::one());
    }

    fn evolve_diagonal(&mut self, tau: S, eta: S, q: i64, sign: S) {
        let half_tau = tau * S::lit(0.5);
        let shift = self.beta + eta * S::from_int(q) + eta * S::lit(0.5);
        for (i, a) in self.amplitudes.iter_mut().enumerate() {
            let p = S::from_int(self.n_min + i as i64) + shift;
            *a *= Complex::from_polar(S::one(), sign * half_tau * p * p);
        }
    }

    /// Applies `exp(-i s cos(θ + α))`.
    pub fn apply_kick(
        &mut self,
        strength: S,
        spatial_phase: S,
        policy: &LatticePolicy,
    ) -> Result<(), PropagatorError> {
        if !strength.is_finite() || strength < S::zero() {
            return Err(PropagatorError::KickStrength(strength.to_f64_lossy()));
        }
        let (half_width, couplings) = kick_couplings(strength, spatial_phase, policy.coupling_cutoff)?;
        if half_width == 0 {
            for a in self.amplitudes.iter_mut() {
                *a *= couplings[0];
            }
            return Ok(());
        }

        let len = self.amplitudes.len();
        let needed = len + 2 * half_width;
        if needed > policy.max_sites {
            return Err(PropagatorError::LatticeCap { needed, cap: policy.max_sites });
        }
        let mut out = vec![Complex::new(S::zero(), S::zero()); needed];
        for (i, &a) in self.amplitudes.iter().enumerate() {
            if a.re == S::zero() && a.im == S::zero() {
                continue;
            }
            for (j, &c) in couplings.iter().enumerate() {
                out[i + j] += c * a;
            }
        }
        self.n_min -= half_width as i64;
        self.amplitudes = out;
        self.trim(S::lit(policy.trim_threshold));
        Ok(())
    }

    fn trim(&mut self, threshold: S) {
        let keep = |a: &Complex<S>| a.norm_sqr() >= threshold;
        let Some(first) = self.amplitudes.iter().position(keep) else {
            return;
        };
        let last = self.amplitudes.iter().rposition(keep).unwrap_or(first);
        self.amplitudes.truncate(last + 1);
        self.amplitudes.drain(..first);
        self.n_min += first as i64;
    }
}

/// `(-i)^k` for any integer `k`.
fn neg_i_pow<S: Real>(k: i64) -> Complex<S> {
    match k.rem_euclid(4) {
        0 => Complex::new(S::one(), S::zero()),
        1 => Complex::new(S::zero(), -S::one()),
        2 => Complex::new(-S::one(), S::zero()),
        _ => Complex::new(S::zero(), S::one()),
    }
}

/// Coupling coefficients for `k = -K..=K`, returned with `K`.
fn kick_couplings<S: Real>(
    strength: S,
    spatial_phase: S,
    cutoff: f64,
) -> Result<(usize, Vec<Complex<S>>), PropagatorError> {
    if strength == S::zero() {
        return Ok((0, vec![Complex::new(S::one(), S::zero())]));
    }
    let s = strength.to_f64_lossy();
    let reach = s.ceil() as usize + 40 + (10.0 * s).sqrt().ceil() as usize;
    let band = bessel_j_band(strength, reach)?;
    let cutoff = S::lit(cutoff);
    let half_width = band.iter().rposition(|v| v.abs() >= cutoff).unwrap_or(0);

    let mut couplings = Vec::with_capacity(2 * half_width + 1);
    for k in -(half_width as i64)..=(half_width as i64) {
        let m = k.unsigned_abs() as usize;
        let mut j = band[m];
        if k < 0 && m % 2 == 1 {
            j = -j;
        }
        let phase = Complex::from_polar(S::one(), S::from_int(k) * spatial_phase);
        couplings.push(neg_i_pow::<S>(k) * phase * j);
    }
    Ok((half_width, couplings))
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum PulseKind {
    Forward,
    Reversal,
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Pulse<S> {
    pub strength: S,
    /// Standing-wave displacement in radians of `θ`.
    pub spatial_phase: S,
    /// Kick counter used in the preceding free evolution.
    pub index: u32,
    pub kind: PulseKind,
}

/// `T` forward pulses followed by one reversal pulse.
#[derive(Debug, Clone, PartialEq)]
pub struct PulseSchedule<S> {
    pulses: Vec<Pulse<S>>,
}

impl<S: Real> PulseSchedule<S> {
    /// Ideal train: forward pulses at phase 0, reversal at phase π.
    pub fn standard(config: &KickConfig<S>) -> Self {
        Self::build(config, None)
    }

    /// Train with a reversal amplitude error and spatial phase offsets.
    pub fn noisy(config: &KickConfig<S>, draw: &NoiseDraw<S>) -> Self {
        Self::build(config, Some(draw))
    }

    fn build(config: &KickConfig<S>, draw: Option<&NoiseDraw<S>>) -> Self {
        let offset = |j: usize| draw.and_then(|d| d.phase_offsets.get(j).copied());
        let mut pulses = Vec::with_capacity(config.num_kicks as usize + 1);
        for q in 0..config.num_kicks {
            let mut phase = S::zero();
            if let Some(o) = offset(q as usize) {
                phase += o;
            }
            pulses.push(Pulse {
                strength: config.phi_d,
                spatial_phase: phase,
                index: q,
                kind: PulseKind::Forward,
            });
        }
        let mut strength = config.reversal_strength;
        let mut phase = S::PI();
        if let Some(d) = draw {
            strength *= S::one() + d.amp_error;
            if let Some(o) = offset(config.num_kicks as usize) {
                phase += o;
            }
        }
        pulses.push(Pulse {
            strength,
            spatial_phase: phase,
            index: config.num_kicks,
            kind: PulseKind::Reversal,
        });
        Self { pulses }
    }

    pub fn pulses(&self) -> &[Pulse<S>] {
        &self.pulses
    }

    pub fn forward(&self) -> impl Iterator<Item = &Pulse<S>> {
        self.pulses.iter().filter(|p| p.kind == PulseKind::Forward)
    }

    pub fn reversal(&self) -> &Pulse<S> {
        self.pulses.last().expect("schedule always ends with a reversal")
    }
}

/// One Monte Carlo realization of the experimental imperfections.
#[derive(Debug, Clone, PartialEq)]
pub struct NoiseDraw<S> {
    /// Relative error on the reversal amplitude.
    pub amp_error: S,
    /// Spatial phase offset of each pulse, reversal last.
    pub phase_offsets: Vec<S>,
}

/// Draws realization `realization` from its own ChaCha stream, so the
/// result depends only on `(seed, realization)`.
pub fn draw_noise<S: Real>(noise: &NoiseConfig<S>, realization: u64, pulses: usize) -> NoiseDraw<S> {
    let mut rng = ChaCha8Rng::seed_from_u64(noise.seed);
    rng.set_stream(realization);
    let unit: f64 = rng.gen::<f64>() * 2.0 - 1.0;
    let amp_error = if noise.reversal_amp_fraction == S::zero() {
        S::zero()
    } else {
        noise.reversal_amp_fraction * S::lit(unit)
    };
    let mut phase_offsets = vec![S::zero(); pulses];
    if noise.phase_jitter > S::zero() {
        let mut walk = S::zero();
        for offset in phase_offsets.iter_mut() {
            let z: f64 = rng.sample(StandardNormal);
            let step = noise.phase_jitter * S::lit(z);
            *offset = match noise.jitter_mode {
                JitterMode::RandomWalk => {
                    walk += step;
                    walk
                }
                JitterMode::Independent => step,
            };
        }
    }
    NoiseDraw { amp_error, phase_offsets }
}

fn prepare<S: Real>(config: &KickConfig<S>, beta: S, policy: &LatticePolicy) -> WaveFunction<S> {
    let action = (config.phi_d * S::from_count(config.num_kicks as usize) + config.reversal_strength).to_f64_lossy();
    WaveFunction::plane_wave(config.n0, beta, policy.initial_radius(action))
}

fn check_norm<S: Real>(psi: &WaveFunction<S>) -> Result<(), PropagatorError> {
    let norm = psi.norm();
    if (norm - S::one()).abs() > S::lit(NORM_TOLERANCE) {
        return Err(PropagatorError::NonConvergence { norm: norm.to_f64_lossy() });
    }
    Ok(())
}

/// Evolves `|n0⟩` through the forward train of `schedule`.
fn forward_train<S: Real>(
    config: &KickConfig<S>,
    schedule: &PulseSchedule<S>,
    beta: S,
    eta: S,
    policy: &LatticePolicy,
) -> Result<WaveFunction<S>, PropagatorError> {
    let tau = config.tau();
    let mut psi = prepare(config, beta, policy);
    for pulse in schedule.forward() {
        psi.apply_free_evolution(tau, eta, pulse.index as i64);
        psi.apply_kick(pulse.strength, pulse.spatial_phase, policy)?;
    }
    Ok(psi)
}

/// Final state of the experimental sequence: forward train then the
/// reversal pulse, with optional noise.
pub fn evolve_experimental_sequence<S: Real>(
    config: &KickConfig<S>,
    beta: S,
    eta: S,
    draw: Option<&NoiseDraw<S>>,
    policy: &LatticePolicy,
) -> Result<WaveFunction<S>, PropagatorError> {
    let schedule = match draw {
        Some(d) => PulseSchedule::noisy(config, d),
        None => PulseSchedule::standard(config),
    };
    let mut psi = forward_train(config, &schedule, beta, eta, policy)?;
    let reversal = schedule.reversal();
    psi.apply_kick(reversal.strength, reversal.spatial_phase, policy)?;
    check_norm(&psi)?;
    Ok(psi)
}

/// `⟨n0| ψ_final⟩` for the experimental sequence.
pub fn experimental_amplitude<S: Real>(
    config: &KickConfig<S>,
    beta: S,
    eta: S,
    draw: Option<&NoiseDraw<S>>,
    policy: &LatticePolicy,
) -> Result<Complex<S>, PropagatorError> {
    evolve_experimental_sequence(config, beta, eta, draw, policy).map(|psi| psi.amplitude(config.n0))
}

/// Population returned to `|n0⟩`; total population is one, so this is
/// `p₀ / Σ pₙ`.
pub fn fidelity_experimental_sequence<S: Real>(
    config: &KickConfig<S>,
    beta: S,
    eta: S,
    draw: Option<&NoiseDraw<S>>,
) -> Result<S, PropagatorError> {
    experimental_amplitude(config, beta, eta, draw, &LatticePolicy::default()).map(|a| a.norm_sqr())
}

/// `⟨n0| U†(β, R, η=0) U(β, φ_d, η)^T |n0⟩`.
pub fn echo_definition_amplitude<S: Real>(
    config: &KickConfig<S>,
    beta: S,
    eta: S,
    policy: &LatticePolicy,
) -> Result<Complex<S>, PropagatorError> {
    let schedule = PulseSchedule::standard(config);
    let mut psi = forward_train(config, &schedule, beta, eta, policy)?;
    // U† = free† · kick†, and kick(R, 0)† = kick(R, π).
    psi.apply_kick(config.reversal_strength, S::PI(), policy)?;
    psi.apply_free_evolution_adjoint(config.tau(), S::zero(), config.num_kicks as i64 + 1);
    check_norm(&psi)?;
    Ok(psi.amplitude(config.n0))
}

pub fn fidelity_echo_definition<S: Real>(config: &KickConfig<S>, beta: S, eta: S) -> Result<S, PropagatorError> {
    echo_definition_amplitude(config, beta, eta, &LatticePolicy::default()).map(|a| a.norm_sqr())
}

/// Monte Carlo mean of the ensemble fidelity.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct McEstimate<S> {
    pub mean: S,
    /// Standard error of the mean; zero for a single realization.
    pub std_error: S,
    pub realizations: u32,
}

/// Noiseless ensemble fidelity of the experimental sequence.
pub fn fidelity_ensemble<S: Real>(bundle: &ValidatedBundle<S>, eta: S) -> Result<S, PropagatorError> {
    let config = bundle.config();
    let policy = LatticePolicy::default();
    ensemble_fidelity(bundle.ensemble(), bundle.ensemble().nodes, |beta| {
        experimental_amplitude(config, beta, eta, None, &policy)
    })
}

/// For each noise realization, the coherent (or incoherent) β average of
/// the experimental-sequence amplitude; mean and standard error over
/// realizations. A silent noise config takes the noiseless path exactly.
pub fn fidelity_mc_ensemble<S: Real>(bundle: &ValidatedBundle<S>, eta: S) -> Result<McEstimate<S>, PropagatorError> {
    let config = bundle.config();
    let noise = bundle.noise();
    let policy = LatticePolicy::default();
    let pulses = config.num_kicks as usize + 1;
    let realizations = noise.num_realizations;

    let samples: Vec<S> = (0..realizations as u64)
        .into_par_iter()
        .map(|r| {
            let draw = (!noise.is_silent()).then(|| draw_noise(noise, r, pulses));
            ensemble_fidelity(bundle.ensemble(), bundle.ensemble().nodes, |beta| {
                experimental_amplitude(config, beta, eta, draw.as_ref(), &policy)
            })
        })
        .collect::<Result<_, _>>()?;

    let count = S::from_count(samples.len());
    let mean = samples.iter().fold(S::zero(), |acc, &f| acc + f) / count;
    let std_error = if samples.len() > 1 {
        let ss = samples.iter().fold(S::zero(), |acc, &f| acc + (f - mean) * (f - mean));
        (ss / (count - S::one()) / count).sqrt()
    } else {
        S::zero()
    };
    Ok(McEstimate { mean, std_error, realizations })
}
