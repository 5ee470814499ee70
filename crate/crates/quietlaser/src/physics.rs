//! Physical constants, particle-in-a-box eigenstructure, dipole coupling,
//! and the relation between the squared Rabi frequency and the resonator
//! energy.

use serde::{Deserialize, Serialize};
use std::f64::consts::PI;
use thiserror::Error;

#[derive(Debug, Error, PartialEq)]
pub enum PhysicsError {
    #[error("{name} must be strictly positive, got {value}")]
    NonPositive { name: &'static str, value: f64 },
    #[error("level index {0} outside the two-level truncation {{1, 2}}")]
    LevelOutOfRange(usize),
}

fn require_positive(name: &'static str, value: f64) -> Result<f64, PhysicsError> {
    if value > 0.0 && value.is_finite() {
        Ok(value)
    } else {
        Err(PhysicsError::NonPositive { name, value })
    }
}

/// Fundamental constants in SI units, configurable so that rounded
/// textbook values and CODATA values can coexist.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct PhysicalConstants {
    /// Elementary charge (C)
    pub charge: f64,
    /// Electron mass (kg)
    pub mass: f64,
    /// Reduced Planck constant (J·s)
    pub hbar: f64,
    /// Coulomb constant 1/(4πε₀) (m/F)
    pub coulomb: f64,
}

impl PhysicalConstants {
    /// Rounded two-digit values: e ≈ 1.60e−19 C, m ≈ 9.10e−31 kg,
    /// ħ ≈ 1.05e−34 J·s, 1/(4πε₀) ≈ 9e9 m/F.
    pub fn paper() -> Self {
        Self {
            charge: 1.60e-19,
            mass: 9.10e-31,
            hbar: 1.05e-34,
            coulomb: 9.0e9,
        }
    }

    pub fn new(charge: f64, mass: f64, hbar: f64, coulomb: f64) -> Result<Self, PhysicsError> {
        Ok(Self {
            charge: require_positive("charge", charge)?,
            mass: require_positive("mass", mass)?,
            hbar: require_positive("hbar", hbar)?,
            coulomb: require_positive("coulomb", coulomb)?,
        })
    }

    /// Coupling coefficient b = (1024/27π)·e²/(4πε₀ m) in m³/s², the
    /// proportionality constant in Ω_R² = b·μ/𝒱.
    pub fn coupling_strength(&self) -> f64 {
        (1024.0 / (27.0 * PI)) * self.charge * self.charge * self.coulomb / self.mass
    }
}

impl Default for PhysicalConstants {
    fn default() -> Self {
        Self::paper()
    }
}

/// One-dimensional box of full width `d`; the wavefunction vanishes at
/// x = ±d/2.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct BoxGeometry {
    width: f64,
}

impl BoxGeometry {
    pub fn new(width: f64) -> Result<Self, PhysicsError> {
        Ok(Self {
            width: require_positive("box width", width)?,
        })
    }

    /// Full box width d (m).
    pub fn width(&self) -> f64 {
        self.width
    }
}

/// Single-mode resonator: capacitance volume 𝒱, photon lifetime τ_p, and
/// angular frequency ω.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct ResonatorParams {
    /// Capacitance volume 𝒱 (m³)
    pub volume: f64,
    /// Photon lifetime τ_p (s)
    pub tau_p: f64,
    /// Angular frequency ω (rad/s)
    pub omega: f64,
}

impl ResonatorParams {
    pub fn new(volume: f64, tau_p: f64, omega: f64) -> Result<Self, PhysicsError> {
        Ok(Self {
            volume: require_positive("resonator volume", volume)?,
            tau_p: require_positive("photon lifetime", tau_p)?,
            omega: require_positive("resonator frequency", omega)?,
        })
    }
}

/// The (Ω_R², γ) pair driving the damped two-level dynamics. The
/// dimensionless noise parameter a = 2γ²/Ω_R² is always recomputed from
/// the stored fields, never stored independently.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct CouplingParams {
    rabi_sq: f64,
    gamma: f64,
}

impl CouplingParams {
    pub fn new(rabi_sq: f64, gamma: f64) -> Result<Self, PhysicsError> {
        Ok(Self {
            rabi_sq: require_positive("rabi_sq", rabi_sq)?,
            gamma: require_positive("gamma", gamma)?,
        })
    }

    /// Build from the canonical noise parameter a = 2γ²/Ω_R² instead of Ω_R².
    pub fn from_noise_parameter(a: f64, gamma: f64) -> Result<Self, PhysicsError> {
        require_positive("noise parameter a", a)?;
        let gamma = require_positive("gamma", gamma)?;
        Ok(Self {
            rabi_sq: 2.0 * gamma * gamma / a,
            gamma,
        })
    }

    /// Ω_R² (s⁻²)
    pub fn rabi_sq(&self) -> f64 {
        self.rabi_sq
    }

    /// Ω_R (s⁻¹)
    pub fn rabi(&self) -> f64 {
        self.rabi_sq.sqrt()
    }

    /// Half decay rate γ (s⁻¹); the full upper-state decay rate is 2γ.
    pub fn gamma(&self) -> f64 {
        self.gamma
    }

    /// a = 2γ²/Ω_R², the single knob controlling all zero-frequency noise
    /// ratios.
    pub fn noise_parameter(&self) -> f64 {
        2.0 * self.gamma * self.gamma / self.rabi_sq
    }

    /// Mean time between dissipation events, τ = (1 + a)/γ (s).
    pub fn mean_waiting_time(&self) -> f64 {
        (1.0 + self.noise_parameter()) / self.gamma
    }

    /// Average event rate R = γ/(1 + a) = 1/τ (s⁻¹).
    pub fn event_rate(&self) -> f64 {
        self.gamma / (1.0 + self.noise_parameter())
    }
}

/// Box level energy E_n = π²ħ²n²/(2md²) for n ∈ {1, 2} (J).
pub fn energy_level(
    n: usize,
    geom: &BoxGeometry,
    consts: &PhysicalConstants,
) -> Result<f64, PhysicsError> {
    if n != 1 && n != 2 {
        return Err(PhysicsError::LevelOutOfRange(n));
    }
    let d = geom.width();
    Ok(PI * PI * consts.hbar * consts.hbar * (n * n) as f64 / (2.0 * consts.mass * d * d))
}

/// Transition angular frequency ω = (E₂ − E₁)/ħ = 3π²ħ/(2md²) (rad/s).
pub fn transition_frequency(geom: &BoxGeometry, consts: &PhysicalConstants) -> f64 {
    3.0 * PI * PI * consts.hbar / (2.0 * consts.mass * geom.width() * geom.width())
}

/// Box width whose 1→2 transition sits at angular frequency `omega`:
/// d = sqrt(3π²ħ/(2mω)).
pub fn box_width_for_frequency(
    omega: f64,
    consts: &PhysicalConstants,
) -> Result<BoxGeometry, PhysicsError> {
    require_positive("omega", omega)?;
    BoxGeometry::new((3.0 * PI * PI * consts.hbar / (2.0 * consts.mass * omega)).sqrt())
}

/// Dipole matrix element x₁₂ = ∫ dx x ψ₁ψ₂ = 16d/(9π²) (m).
pub fn dipole_element(geom: &BoxGeometry) -> f64 {
    16.0 * geom.width() / (9.0 * PI * PI)
}

/// Squared Rabi frequency from the reduced resonator energy μ = E/ħω:
/// Ω_R² = b·μ/𝒱 with b = (1024/27π)·e²/(4πε₀ m).
pub fn rabi_sq_from_energy(
    mu: f64,
    res: &ResonatorParams,
    consts: &PhysicalConstants,
) -> Result<f64, PhysicsError> {
    if !(mu >= 0.0) {
        return Err(PhysicsError::NonPositive {
            name: "reduced photon number",
            value: mu,
        });
    }
    Ok(consts.coupling_strength() * mu / res.volume)
}

#[cfg(test)]
mod tests {
    use super::*;
    use approx::assert_relative_eq;

    fn paper_box() -> (BoxGeometry, PhysicalConstants) {
        let consts = PhysicalConstants::paper();
        let geom = box_width_for_frequency(2.0 * PI * 1.42e9, &consts).unwrap();
        (geom, consts)
    }

    #[test]
    fn level_ratio_is_four() {
        let (geom, consts) = paper_box();
        let e1 = energy_level(1, &geom, &consts).unwrap();
        let e2 = energy_level(2, &geom, &consts).unwrap();
        assert_relative_eq!(e2 / e1, 4.0, max_relative = 1e-14);
    }

    #[test]
    fn levels_above_two_rejected() {
        let (geom, consts) = paper_box();
        assert_eq!(
            energy_level(3, &geom, &consts),
            Err(PhysicsError::LevelOutOfRange(3))
        );
        assert_eq!(
            energy_level(0, &geom, &consts),
            Err(PhysicsError::LevelOutOfRange(0))
        );
    }

    #[test]
    fn hyperfine_frequency_gives_box_near_0p44_micron() {
        let (geom, _) = paper_box();
        assert_relative_eq!(geom.width(), 0.44e-6, max_relative = 0.01);
        // unrounded value, frozen from direct evaluation with the rounded constants
        assert_relative_eq!(geom.width(), 4.3756e-7, max_relative = 1e-4);
    }

    #[test]
    fn ground_state_energy_matches_frozen_value() {
        let consts = PhysicalConstants::paper();
        let geom = BoxGeometry::new(0.44e-6).unwrap();
        let e1 = energy_level(1, &geom, &consts).unwrap();
        assert_relative_eq!(e1, 3.088e-25, max_relative = 1e-3);
    }

    #[test]
    fn width_frequency_round_trip() {
        let consts = PhysicalConstants::paper();
        for &omega in &[1.0e6, 2.0 * PI * 1.42e9, 3.3e12] {
            let geom = box_width_for_frequency(omega, &consts).unwrap();
            assert_relative_eq!(
                transition_frequency(&geom, &consts),
                omega,
                max_relative = 1e-12
            );
        }
    }

    #[test]
    fn quadrupled_frequency_halves_width() {
        let consts = PhysicalConstants::paper();
        let d1 = box_width_for_frequency(1.0e9, &consts).unwrap().width();
        let d4 = box_width_for_frequency(4.0e9, &consts).unwrap().width();
        assert_relative_eq!(d4, d1 / 2.0, max_relative = 1e-13);
    }

    #[test]
    fn energy_scales_inverse_square_of_width() {
        let consts = PhysicalConstants::paper();
        for k in 0..8 {
            let d = 1e-7 * 10f64.powf(k as f64 / 4.0);
            let geom = BoxGeometry::new(d).unwrap();
            let e = energy_level(1, &geom, &consts).unwrap();
            let reference = energy_level(1, &BoxGeometry::new(1e-7).unwrap(), &consts).unwrap();
            assert_relative_eq!(e * d * d, reference * 1e-14, max_relative = 1e-12);
        }
    }

    #[test]
    fn dipole_element_scales_linearly() {
        for &d in &[1e-9, 0.44e-6, 2.5e-3] {
            let geom = BoxGeometry::new(d).unwrap();
            assert_relative_eq!(
                dipole_element(&geom) / d,
                16.0 / (9.0 * PI * PI),
                max_relative = 1e-15
            );
        }
        let geom = BoxGeometry::new(0.44e-6).unwrap();
        assert_relative_eq!(dipole_element(&geom), 7.9255e-8, max_relative = 1e-4);
    }

    #[test]
    fn coupling_strength_near_3000() {
        let consts = PhysicalConstants::paper();
        let b = consts.coupling_strength();
        assert!((2900.0..=3100.0).contains(&b), "b = {b}");
        // direct evaluation of (1024/27π)·e²·(1/4πε₀)/m with the rounded constants
        let expected = 1024.0 / (27.0 * PI) * 1.60e-19 * 1.60e-19 * 9.0e9 / 9.10e-31;
        assert_relative_eq!(b, expected, max_relative = 1e-15);
        assert_relative_eq!(b, 3.0565e3, max_relative = 1e-4);
    }

    #[test]
    fn rabi_sq_vanishes_without_field() {
        let consts = PhysicalConstants::paper();
        let res = ResonatorParams::new(1e-10, 1e-6, 2.0 * PI * 1.42e9).unwrap();
        assert_eq!(rabi_sq_from_energy(0.0, &res, &consts).unwrap(), 0.0);
    }

    #[test]
    fn rabi_sq_carries_volume_units() {
        let consts = PhysicalConstants::paper();
        let b = consts.coupling_strength();
        for &(mu, volume) in &[(0.5, 1e-12), (3.0, 2.4e-10), (250.0, 7.7e-8)] {
            let res = ResonatorParams::new(volume, 1e-6, 1e9).unwrap();
            let rabi_sq = rabi_sq_from_energy(mu, &res, &consts).unwrap();
            assert_relative_eq!(rabi_sq * volume / mu, b, max_relative = 1e-13);
        }
    }

    #[test]
    fn coupling_params_recompute_a() {
        let c = CouplingParams::new(2.0, 1.0).unwrap();
        assert_relative_eq!(c.noise_parameter(), 1.0, max_relative = 1e-15);
        let c = CouplingParams::from_noise_parameter(0.25, 2.0).unwrap();
        assert_relative_eq!(c.noise_parameter(), 0.25, max_relative = 1e-15);
        assert_relative_eq!(c.rabi_sq(), 32.0, max_relative = 1e-15);
    }

    #[test]
    fn rate_and_mean_wait_are_reciprocal() {
        let c = CouplingParams::from_noise_parameter(1.0, 1.0).unwrap();
        assert_relative_eq!(c.mean_waiting_time(), 2.0, max_relative = 1e-15);
        assert_relative_eq!(c.event_rate(), 0.5, max_relative = 1e-15);
        assert_relative_eq!(
            c.event_rate() * c.mean_waiting_time(),
            1.0,
            max_relative = 1e-15
        );
    }

    #[test]
    fn invalid_parameters_rejected() {
        assert!(PhysicalConstants::new(0.0, 1.0, 1.0, 1.0).is_err());
        assert!(BoxGeometry::new(-1.0).is_err());
        assert!(ResonatorParams::new(1.0, f64::NAN, 1.0).is_err());
        assert!(CouplingParams::new(1.0, -2.0).is_err());
        assert!(CouplingParams::from_noise_parameter(0.0, 1.0).is_err());
    }
}
