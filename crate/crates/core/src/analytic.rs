// SPDX-License-Identifier: Apache-2.0

//! Closed-form echo amplitude at quantum resonance.
//!
//! At `τ = 2πℓ` every free evolution acts on the integer lattice as a
//! translation in angle times a c-number phase, so the forward kicks merge
//! into a single cosine kick. The echo amplitude of a plane wave `|n₀⟩`
//! after the reversal pulse is then
//!
//! ```text
//! A = exp(-iφ(β,η) - i n₀ ℓπ(2β+1)(T-1) - i ℓπ n₀ η T²) · J₀(φ_d |T - W_T|)
//! W_T = Σ_{q<T} exp(-i(2β+1)ℓπ q - 2ℓπ i q η T + i ℓπ η q²)
//! φ(β,η) = ℓπ Σ_{q<T} (β + qη + η/2)²
//! ```
//!
//! Ensemble fidelities average `A` over a Gaussian in β.

use num_complex::Complex;
use thiserror::Error;

use crate::model::{KickConfig, ValidatedBundle};
use crate::quadrature::ensemble_fidelity;
use crate::scalar::Real;
use crate::specfun::{bessel_j, SpecFunError};

/// Node doubling may move an ensemble fidelity by at most this much.
pub const QUADRATURE_TOLERANCE: f64 = 1e-6;

#[derive(Debug, Clone, PartialEq, Error)]
pub enum AnalyticError {
    #[error("pulse period tau = {tau} is not a Talbot resonance 2*pi*ell; use the propagator engine")]
    UnsupportedRegime { tau: f64 },
    #[error("quadrature did not converge: {nodes} nodes gave {coarse}, {refined_nodes} gave {refined}")]
    QuadratureNonConvergence {
        nodes: usize,
        refined_nodes: usize,
        coarse: f64,
        refined: f64,
    },
    #[error(transparent)]
    SpecFun(#[from] SpecFunError),
}

/// Bracketed amplitude whose squared modulus is the plane-wave fidelity.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct EchoAmplitude<S> {
    pub value: Complex<S>,
    pub w_sum: Complex<S>,
    pub bessel_argument: S,
}

/// `W_T(β, η)`.
pub fn w_sum<S: Real>(config: &KickConfig<S>, beta: S, eta: S) -> Complex<S> {
    let ell_pi = S::from_count(config.ell as usize) * S::PI();
    let kicks = S::from_count(config.num_kicks as usize);
    let two = S::lit(2.0);
    (0..config.num_kicks as usize)
        .map(|q| {
            let q = S::from_count(q);
            let angle = -(two * beta + S::one()) * ell_pi * q - two * ell_pi * q * eta * kicks
                + ell_pi * eta * q * q;
            Complex::from_polar(S::one(), angle)
        })
        .fold(Complex::new(S::zero(), S::zero()), |acc, z| acc + z)
}

/// `φ(β, η) = ℓπ Σ_{q<T} (β + qη + η/2)²`.
pub fn global_phase<S: Real>(config: &KickConfig<S>, beta: S, eta: S) -> S {
    let ell_pi = S::from_count(config.ell as usize) * S::PI();
    let half_eta = eta * S::lit(0.5);
    let sum: S = (0..config.num_kicks as usize)
        .map(|q| {
            let p = beta + S::from_count(q) * eta + half_eta;
            p * p
        })
        .sum();
    ell_pi * sum
}

/// Argument of `J₀`: `φ_d |T - W|` for the ideal reversal, otherwise
/// `|φ_d W - R|` for a reversal of strength `R`.
fn bessel_argument<S: Real>(config: &KickConfig<S>, w: Complex<S>) -> S {
    let ideal = config.ideal_reversal();
    if config.reversal_strength == ideal {
        let kicks = S::from_count(config.num_kicks as usize);
        config.phi_d * (Complex::new(kicks, S::zero()) - w).norm()
    } else {
        (w * config.phi_d - Complex::new(config.reversal_strength, S::zero())).norm()
    }
}

fn ensure_resonant<S: Real>(config: &KickConfig<S>) -> Result<(), AnalyticError> {
    if config.is_resonant() {
        Ok(())
    } else {
        Err(AnalyticError::UnsupportedRegime { tau: config.tau().to_f64_lossy() })
    }
}

pub fn echo_amplitude<S: Real>(
    config: &KickConfig<S>,
    beta: S,
    eta: S,
) -> Result<EchoAmplitude<S>, AnalyticError> {
    ensure_resonant(config)?;
    let w = w_sum(config, beta, eta);
    let argument = bessel_argument(config, w);
    let magnitude = bessel_j(0, argument)?;

    let ell_pi = S::from_count(config.ell as usize) * S::PI();
    let kicks = S::from_count(config.num_kicks as usize);
    let n0 = S::from_int(config.n0);
    let phase = -global_phase(config, beta, eta)
        - n0 * ell_pi * (S::lit(2.0) * beta + S::one()) * (kicks - S::one())
        - ell_pi * n0 * eta * kicks * kicks;
    Ok(EchoAmplitude {
        value: Complex::from_polar(magnitude, phase),
        w_sum: w,
        bessel_argument: argument,
    })
}

/// Plane-wave fidelity `J₀(argument)²`.
pub fn fidelity_plane_wave<S: Real>(config: &KickConfig<S>, beta: S, eta: S) -> Result<S, AnalyticError> {
    let amp = echo_amplitude(config, beta, eta)?;
    let j0 = bessel_j(0, amp.bessel_argument)?;
    Ok(j0 * j0)
}

/// Ensemble fidelity with the bundle's quadrature, checked against a rule
/// with twice as many nodes.
pub fn fidelity_ensemble<S: Real>(bundle: &ValidatedBundle<S>, eta: S) -> Result<S, AnalyticError> {
    let ensemble = bundle.ensemble();
    let nodes = ensemble.nodes;
    let config = bundle.config();
    let amplitude = |beta: S| echo_amplitude(config, beta, eta).map(|a| a.value);
    let coarse = ensemble_fidelity(ensemble, nodes, amplitude)?;
    if ensemble.is_degenerate() {
        return Ok(coarse);
    }
    let refined = ensemble_fidelity(ensemble, 2 * nodes, amplitude)?;
    if (coarse - refined).abs() > S::lit(QUADRATURE_TOLERANCE) {
        return Err(AnalyticError::QuadratureNonConvergence {
            nodes,
            refined_nodes: 2 * nodes,
            coarse: coarse.to_f64_lossy(),
            refined: refined.to_f64_lossy(),
        });
    }
    Ok(coarse)
}

/// Ensemble fidelity with a fixed node count and no convergence check.
pub fn fidelity_ensemble_with_nodes<S: Real>(
    bundle: &ValidatedBundle<S>,
    eta: S,
    nodes: usize,
) -> Result<S, AnalyticError> {
    let config = bundle.config();
    ensemble_fidelity(bundle.ensemble(), nodes, |beta: S| {
        echo_amplitude(config, beta, eta).map(|a| a.value)
    })
}
