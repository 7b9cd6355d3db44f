// SPDX-License-Identifier: Apache-2.0

//! Fidelity of the quantum delta-kicked accelerator.
//!
//! Two independent engines compute the echo left after `T` kicks and a
//! single reversal pulse: [`analytic`] evaluates the closed-form amplitude
//! valid at Talbot resonances, [`propagator`] evolves a truncated momentum
//! lattice directly and also models reversal-amplitude and vibration noise.
//! [`scan`] drives acceleration scans and extracts peak widths, asymmetry
//! and the thermometry calibration.
//!
//! Everything numeric is generic over [`Real`]; the `*F64` aliases below are
//! what the command-line front end uses.

pub mod analytic;
pub mod model;
pub mod propagator;
pub mod quadrature;
pub mod scalar;
pub mod scan;
pub mod specfun;
pub mod units;

pub use num_complex::Complex;
pub use scalar::Real;

pub type C64 = Complex<f64>;
pub type KickConfigF64 = model::KickConfig<f64>;
pub type BetaEnsembleF64 = model::BetaEnsemble<f64>;
pub type NoiseConfigF64 = model::NoiseConfig<f64>;
pub type BundleF64 = model::ValidatedBundle<f64>;
pub type PhysicalSetupF64 = units::PhysicalSetup<f64>;
pub type WaveFunctionF64 = propagator::WaveFunction<f64>;
pub type ScanResultF64 = scan::ScanResult<f64>;
pub type PeakReportF64 = scan::PeakReport<f64>;
pub type ThermometryCurveF64 = scan::ThermometryCurve<f64>;

pub type KickConfigF32 = model::KickConfig<f32>;
pub type BundleF32 = model::ValidatedBundle<f32>;
