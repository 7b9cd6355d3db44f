// SPDX-License-Identifier: Apache-2.0

//! Conversions between laboratory and scaled quantities.
//!
//! Momentum is measured in units of `ħG` (two photon recoils), time in kick
//! periods, and the pulse period in units of the half-Talbot time
//! `T_½ = 2πM/(ħG²)`.

use thiserror::Error;

use crate::scalar::Real;

/// Reduced Planck constant, J·s.
pub const HBAR: f64 = 1.054_571_817e-34;
/// Unified atomic mass unit, kg.
pub const ATOMIC_MASS_UNIT: f64 = 1.660_539_066_60e-27;
/// Mass of ⁸⁷Rb in atomic mass units.
pub const RB87_MASS_U: f64 = 86.909_180_531;
/// Half-Talbot time measured in the reference ⁸⁷Rb setup, s.
pub const RB87_MEASURED_HALF_TALBOT: f64 = 51.5e-6;

#[derive(Debug, Clone, PartialEq, Error)]
pub enum UnitsError {
    #[error("talbot order must be >= 1, got {0}")]
    TalbotOrder(u32),
    #[error("detuning must be non-zero")]
    ZeroDetuning,
    #[error("pulse length must be positive, got {0}")]
    PulseLength(f64),
    #[error("invalid setup: {0}")]
    Setup(&'static str),
}

/// Atom species and standing-wave geometry.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct PhysicalSetup<S> {
    pub atom_mass: S,
    pub wavelength: S,
    /// Angle of each beam to the vertical.
    pub beam_angle: S,
    /// Measured half-Talbot time; takes precedence over the computed one
    /// for unit conversion when present.
    pub half_talbot_override: Option<S>,
}

impl<S: Real> PhysicalSetup<S> {
    /// ⁸⁷Rb in a 780 nm standing wave with beams at 53° to the vertical.
    pub fn rb87() -> Self {
        Self {
            atom_mass: S::lit(RB87_MASS_U * ATOMIC_MASS_UNIT),
            wavelength: S::lit(780e-9),
            beam_angle: S::lit(53.0_f64.to_radians()),
            half_talbot_override: None,
        }
    }

    pub fn with_half_talbot_override(mut self, seconds: Option<S>) -> Self {
        self.half_talbot_override = seconds;
        self
    }

    pub fn validate(&self) -> Result<(), UnitsError> {
        let positive = |v: S| v.is_finite() && v > S::zero();
        if !positive(self.atom_mass) {
            return Err(UnitsError::Setup("atom mass must be positive"));
        }
        if !positive(self.wavelength) {
            return Err(UnitsError::Setup("wavelength must be positive"));
        }
        if !positive(self.grating_vector()) {
            return Err(UnitsError::Setup("beam angle must give a positive grating vector"));
        }
        if let Some(t) = self.half_talbot_override {
            if !positive(t) {
                return Err(UnitsError::Setup("half-Talbot override must be positive"));
            }
        }
        Ok(())
    }

    /// `G = (4π/λ) sin θ`, in 1/m.
    pub fn grating_vector(&self) -> S {
        S::lit(4.0) * S::PI() / self.wavelength * self.beam_angle.sin()
    }

    /// `2πM/(ħG²)` from the geometry alone.
    pub fn computed_half_talbot(&self) -> S {
        let g = self.grating_vector();
        S::lit(2.0) * S::PI() * self.atom_mass / (S::lit(HBAR) * g * g)
    }

    /// Half-Talbot time used for conversions.
    pub fn half_talbot(&self) -> S {
        self.half_talbot_override
            .unwrap_or_else(|| self.computed_half_talbot())
    }

    /// Acceleration corresponding to `η = 1` at Talbot order `ell`, m/s².
    pub fn g_per_eta(&self, ell: u32) -> Result<S, UnitsError> {
        if ell < 1 {
            return Err(UnitsError::TalbotOrder(ell));
        }
        let period = S::from_count(ell as usize) * self.half_talbot();
        Ok(S::lit(HBAR) * self.grating_vector() / (self.atom_mass * period))
    }
}

/// `η = M g T / (ħ G)` with `T = ℓ T_½`.
pub fn eta_from_g<S: Real>(g: S, ell: u32, setup: &PhysicalSetup<S>) -> Result<S, UnitsError> {
    if ell < 1 {
        return Err(UnitsError::TalbotOrder(ell));
    }
    let period = S::from_count(ell as usize) * setup.half_talbot();
    Ok(setup.atom_mass * g * period / (S::lit(HBAR) * setup.grating_vector()))
}

pub fn g_from_eta<S: Real>(eta: S, ell: u32, setup: &PhysicalSetup<S>) -> Result<S, UnitsError> {
    if ell < 1 {
        return Err(UnitsError::TalbotOrder(ell));
    }
    let period = S::from_count(ell as usize) * setup.half_talbot();
    Ok(eta * S::lit(HBAR) * setup.grating_vector() / (setup.atom_mass * period))
}

/// Two-level light-shift parameters of a kicking pulse.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct LaserKickParams<S> {
    /// Rabi frequency Ω, rad/s.
    pub rabi_frequency: S,
    /// Pulse length Δt, s.
    pub pulse_length: S,
    /// Detuning δ_L, rad/s.
    pub detuning: S,
}

/// Kick strength `φ_d = Ω²Δt / (8 δ_L)`.
pub fn phi_d_from_laser<S: Real>(params: &LaserKickParams<S>) -> Result<S, UnitsError> {
    if params.detuning == S::zero() {
        return Err(UnitsError::ZeroDetuning);
    }
    if !(params.pulse_length > S::zero()) {
        return Err(UnitsError::PulseLength(params.pulse_length.to_f64_lossy()));
    }
    let omega = params.rabi_frequency;
    Ok(omega * omega * params.pulse_length / (S::lit(8.0) * params.detuning))
}

/// Quasimomentum imparted by a standing wave moving at `v = 2πΔf/G`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct QuasiMomentum<S> {
    /// `M v / (ħG)`, unreduced.
    pub raw: S,
    /// `raw` reduced into `[0, 1)`.
    pub reduced: S,
}

/// `β = M(2πΔf/G)/(ħG) = Δf · T_½`.
pub fn beta_from_detuning<S: Real>(delta_f: S, setup: &PhysicalSetup<S>) -> QuasiMomentum<S> {
    let raw = delta_f * setup.half_talbot();
    QuasiMomentum {
        raw,
        reduced: reduce_unit(raw),
    }
}

/// Reduces into `[0, 1)`.
pub fn reduce_unit<S: Real>(v: S) -> S {
    let r = v - v.floor();
    if r >= S::one() {
        S::zero()
    } else {
        r
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn rb87_setup_matches_measured_talbot_time() {
        let setup = PhysicalSetup::<f64>::rb87();
        let t = setup.computed_half_talbot();
        assert!((t / 51.5e-6 - 1.0).abs() < 0.02, "T_1/2 = {t}");
        assert!((t - 51.9e-6).abs() < 0.1e-6);
        let g = setup.grating_vector();
        assert!((g / 1.29e7 - 1.0).abs() < 0.005, "G = {g}");
    }

    #[test]
    fn override_takes_precedence() {
        let setup = PhysicalSetup::<f64>::rb87().with_half_talbot_override(Some(51.5e-6));
        assert_eq!(setup.half_talbot(), 51.5e-6);
        assert!(setup.computed_half_talbot() > 51.8e-6);
    }

    #[test]
    fn eta_conversion_examples() {
        let setup = PhysicalSetup::<f64>::rb87();
        assert_eq!(eta_from_g(0.0, 1, &setup).unwrap(), 0.0);
        let e1 = eta_from_g(9.81, 1, &setup).unwrap();
        let e2 = eta_from_g(9.81, 2, &setup).unwrap();
        assert!((e2 - 2.0 * e1).abs() < 1e-15 * e2.abs());
        let g = g_from_eta(1.0, 1, &setup).unwrap();
        assert!((g / 181.0 - 1.0).abs() < 0.01, "g = {g}");
        assert_eq!(g, setup.g_per_eta(1).unwrap());
        assert!(matches!(eta_from_g(1.0, 0, &setup), Err(UnitsError::TalbotOrder(0))));
        assert!(eta_from_g(-3.0, 1, &setup).unwrap() < 0.0);
    }

    #[test]
    fn eta_round_trip() {
        let setup = PhysicalSetup::<f64>::rb87();
        for ell in 1..=3 {
            for &g in &[-250.0, -9.81, 0.3, 17.0, 4000.0] {
                let back = g_from_eta(eta_from_g(g, ell, &setup).unwrap(), ell, &setup).unwrap();
                assert!((back - g).abs() <= 1e-12 * g.abs(), "ell={ell} g={g} back={back}");
            }
        }
    }

    #[test]
    fn kick_strength_from_laser() {
        let p = LaserKickParams { rabi_frequency: 0.0_f64, pulse_length: 1e-6, detuning: 4e10 };
        assert_eq!(phi_d_from_laser(&p).unwrap(), 0.0);
        let p = LaserKickParams { rabi_frequency: 3e8_f64, pulse_length: 1.08e-6, detuning: 4.27e10 };
        let base = phi_d_from_laser(&p).unwrap();
        let doubled = phi_d_from_laser(&LaserKickParams { rabi_frequency: 6e8, ..p }).unwrap();
        assert!((doubled - 4.0 * base).abs() < 1e-14 * doubled);
        let ratio = phi_d_from_laser(&LaserKickParams {
            pulse_length: 2.0 * p.pulse_length,
            detuning: 2.0 * p.detuning,
            ..p
        })
        .unwrap();
        assert!((ratio - base).abs() < 1e-15 * base);
        let zero = LaserKickParams { detuning: 0.0, ..p };
        assert_eq!(phi_d_from_laser(&zero), Err(UnitsError::ZeroDetuning));
    }

    #[test]
    fn quasimomentum_from_frequency_offset() {
        let setup = PhysicalSetup::<f64>::rb87();
        assert_eq!(beta_from_detuning(0.0, &setup).raw, 0.0);
        let t = setup.half_talbot();
        let one = beta_from_detuning(1.0 / t, &setup);
        assert!((one.raw - 1.0).abs() < 1e-12);
        assert!(one.reduced.min(1.0 - one.reduced) < 1e-12);
        let half = beta_from_detuning(9.7e3, &setup);
        assert!((half.raw - 0.5).abs() < 0.01, "beta = {}", half.raw);
        // direct route through the standing-wave velocity
        let v = 2.0 * std::f64::consts::PI * 9.7e3 / setup.grating_vector();
        let direct = setup.atom_mass * v / (HBAR * setup.grating_vector());
        assert!((direct - half.raw).abs() < 1e-12);
    }

    #[test]
    fn conversions_are_deterministic() {
        let a = PhysicalSetup::<f64>::rb87();
        let b = PhysicalSetup::<f64>::rb87();
        assert_eq!(a.computed_half_talbot().to_bits(), b.computed_half_talbot().to_bits());
        assert_eq!(
            eta_from_g(12.5, 2, &a).unwrap().to_bits(),
            eta_from_g(12.5, 2, &b).unwrap().to_bits()
        );
    }

    #[test]
    fn reduce_unit_handles_negatives() {
        assert_eq!(reduce_unit(-0.25_f64), 0.75);
        assert_eq!(reduce_unit(2.5_f64), 0.5);
        assert_eq!(reduce_unit(-1e-18_f64), 0.0);
    }
}
