//! Laser steady state and closed-loop noise: operating-point algebra from
//! the balance condition J = γ/(1 + a) = μ/τ_p, the analytic detected-noise
//! ratio, and a microscopic hybrid jump simulator in which the integer
//! photon number feeds back on the Rabi frequency and a Poissonian cold
//! detector drains the resonator.

use crate::numeric::{newton_bisect, sinhc};
use crate::physics::{CouplingParams, PhysicalConstants};
use crate::renewal::EventTrain;
use num_complex::Complex64;
use rand::Rng;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use serde::Serialize;
use std::io::Write;
use thiserror::Error;

#[derive(Debug, Error)]
pub enum LaserError {
    #[error("{name} must be strictly positive, got {value}")]
    NonPositive { name: &'static str, value: f64 },
    #[error("operating point violates {invariant} by relative residual {residual:.3e}")]
    InvariantViolated {
        invariant: &'static str,
        residual: f64,
    },
    #[error("electron norm grew by {drift:.3e} within one jump interval")]
    NormDrift { drift: f64 },
    #[error("emission-time root finder failed to converge")]
    JumpTimeSearch,
    #[error(transparent)]
    Io(#[from] std::io::Error),
}

fn require_positive(name: &'static str, value: f64) -> Result<f64, LaserError> {
    if value > 0.0 && value.is_finite() {
        Ok(value)
    } else {
        Err(LaserError::NonPositive { name, value })
    }
}

/// Detected-noise spectral density over the detection rate,
/// 𝒮_ΔD/D = 2a² − a + 1.
///
/// Minimum 7/8 at a = 1/4; approaches the detector shot noise 1 as a → 0.
pub fn detected_noise_ratio(a: f64) -> f64 {
    assert!(a > 0.0, "noise parameter a must be positive, got {a}");
    2.0 * a * a - a + 1.0
}

/// Closed-loop transfer pair (A, 1/(1 − A)) with loop gain
/// A = (μ/R)dR/dμ = a/(1 + a) < 1.
pub fn closed_loop_transfer(a: f64) -> (f64, f64) {
    assert!(a > 0.0, "noise parameter a must be positive, got {a}");
    let gain = a / (1.0 + a);
    (gain, 1.0 + a)
}

/// Self-consistent laser operating point: injection rate, resonator, and
/// the coupling pair they imply through J = γ/(1 + a) = μ/τ_p and
/// Ω_R² = b·μ/𝒱.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct OperatingPoint {
    injection_rate: f64,
    tau_p: f64,
    volume: f64,
    mu: f64,
    rabi_sq: f64,
    gamma: f64,
}

impl OperatingPoint {
    /// Injection rate J (s⁻¹).
    pub fn injection_rate(&self) -> f64 {
        self.injection_rate
    }

    /// Photon lifetime τ_p (s).
    pub fn tau_p(&self) -> f64 {
        self.tau_p
    }

    /// Capacitance volume 𝒱 (m³).
    pub fn volume(&self) -> f64 {
        self.volume
    }

    /// Mean reduced photon number μ = J·τ_p.
    pub fn mu(&self) -> f64 {
        self.mu
    }

    /// Squared Rabi frequency at the mean photon number (s⁻²).
    pub fn rabi_sq(&self) -> f64 {
        self.rabi_sq
    }

    /// Half decay rate γ (s⁻¹).
    pub fn gamma(&self) -> f64 {
        self.gamma
    }

    /// Noise parameter a = 2γ²/Ω_R², recomputed.
    pub fn noise_parameter(&self) -> f64 {
        2.0 * self.gamma * self.gamma / self.rabi_sq
    }

    pub fn coupling(&self) -> CouplingParams {
        CouplingParams::new(self.rabi_sq, self.gamma).expect("operating point fields positive")
    }

    /// Design the operating point with a prescribed noise parameter:
    /// J = μ/τ_p, γ = J(1 + a), Ω_R² = 2γ²/a, 𝒱 = b·μ/Ω_R².
    pub fn design(
        a: f64,
        mu: f64,
        tau_p: f64,
        consts: &PhysicalConstants,
    ) -> Result<Self, LaserError> {
        require_positive("noise parameter a", a)?;
        require_positive("mu", mu)?;
        require_positive("tau_p", tau_p)?;
        let injection_rate = mu / tau_p;
        let gamma = injection_rate * (1.0 + a);
        let rabi_sq = 2.0 * gamma * gamma / a;
        let volume = consts.coupling_strength() * mu / rabi_sq;
        let point = Self {
            injection_rate,
            tau_p,
            volume,
            mu,
            rabi_sq,
            gamma,
        };
        point.validate(consts)?;
        Ok(point)
    }

    /// Check the three defining identities to 1e−10 relative.
    pub fn validate(&self, consts: &PhysicalConstants) -> Result<(), LaserError> {
        let checks = [
            (
                "mu = J tau_p",
                (self.mu - self.injection_rate * self.tau_p).abs() / self.mu,
            ),
            (
                "J = gamma/(1 + a)",
                (self.injection_rate - self.gamma / (1.0 + self.noise_parameter())).abs()
                    / self.injection_rate,
            ),
            (
                "rabi_sq = b mu/volume",
                (self.rabi_sq - consts.coupling_strength() * self.mu / self.volume).abs()
                    / self.rabi_sq,
            ),
        ];
        for (invariant, residual) in checks {
            if !(residual <= 1e-10) {
                return Err(LaserError::InvariantViolated {
                    invariant,
                    residual,
                });
            }
        }
        Ok(())
    }
}

/// Solve the steady-state condition for γ given (J, τ_p, 𝒱):
/// 2Jγ²/Ω_R² − γ + J = 0 with μ = J·τ_p and Ω_R² = b·μ/𝒱.
///
/// Returns 0, 1, or 2 operating points sorted by ascending noise
/// parameter; the empty case Ω_R < 2√2·J means the drive is too weak to
/// sustain the requested injection rate. The two roots always have
/// reciprocal noise parameters.
pub fn steady_state(
    injection_rate: f64,
    tau_p: f64,
    volume: f64,
    consts: &PhysicalConstants,
) -> Result<Vec<OperatingPoint>, LaserError> {
    require_positive("injection rate", injection_rate)?;
    require_positive("tau_p", tau_p)?;
    require_positive("volume", volume)?;
    let mu = injection_rate * tau_p;
    let rabi_sq = consts.coupling_strength() * mu / volume;
    let discriminant = 1.0 - 8.0 * injection_rate * injection_rate / rabi_sq;
    if discriminant < 0.0 {
        return Ok(Vec::new());
    }
    let root = discriminant.sqrt();
    let gammas: &[f64] = if discriminant == 0.0 {
        &[rabi_sq / (4.0 * injection_rate)]
    } else {
        &[
            rabi_sq * (1.0 - root) / (4.0 * injection_rate),
            rabi_sq * (1.0 + root) / (4.0 * injection_rate),
        ]
    };
    let mut points = Vec::with_capacity(gammas.len());
    for &gamma in gammas {
        let point = OperatingPoint {
            injection_rate,
            tau_p,
            volume,
            mu,
            rabi_sq,
            gamma,
        };
        point.validate(consts)?;
        points.push(point);
    }
    Ok(points)
}

/// Closed-loop simulation parameters.
#[derive(Debug, Clone, Copy, Serialize)]
pub struct LoopConfig {
    /// Total simulated time (s)
    pub horizon: f64,
    /// RNG seed; equal seeds give identical runs
    pub seed: u64,
    /// Pin the Rabi frequency to its mean-field value, severing the
    /// photon-number feedback (open-loop control)
    pub freeze_feedback: bool,
    /// Record (t, μ) samples at this stride, if set (s)
    pub record_stride: Option<f64>,
    /// Starting photon number; defaults to round(μ̄)
    pub initial_photons: Option<u64>,
}

impl LoopConfig {
    pub fn new(horizon: f64, seed: u64) -> Self {
        Self {
            horizon,
            seed,
            freeze_feedback: false,
            record_stride: None,
            initial_photons: None,
        }
    }
}

/// One recorded photon-number sample.
#[derive(Debug, Clone, Copy, Serialize)]
pub struct MuSample {
    pub t: f64,
    pub photons: u64,
}

/// Result of a closed-loop run: both event trains plus trajectory
/// summaries.
#[derive(Debug, Clone)]
pub struct LoopOutcome {
    /// Detector click times
    pub detections: EventTrain,
    /// Emission (electron decay) times
    pub emissions: EventTrain,
    /// Time-averaged photon number ∫μ dt / T
    pub mean_photon_number: f64,
    /// Detections per unit time (s⁻¹)
    pub detection_rate: f64,
    /// Emissions per unit time (s⁻¹)
    pub emission_rate: f64,
    /// (t, μ) samples at the configured stride
    pub trajectory: Vec<MuSample>,
}

/// Write the (t, μ) trajectory samples as CSV.
pub fn write_trajectory_csv<W: Write>(samples: &[MuSample], mut out: W) -> Result<(), LaserError> {
    writeln!(out, "t,mu_int")?;
    for sample in samples {
        writeln!(out, "{},{}", sample.t, sample.photons)?;
    }
    Ok(())
}

/// 2×2 propagator of the damped amplitude equations over time `dt` at
/// fixed Ω_R: exp(dt·M) with M = [[0, iΩ/2], [iΩ/2, −γ]], evaluated as
/// e^{−γdt/2}[cosh(α dt/2)·I + (dt/2)·sinhc(α dt/2)·(2M + γI)].
#[derive(Debug, Clone, Copy)]
struct Propagator {
    u11: Complex64,
    u12: Complex64,
    u22: Complex64,
}

impl Propagator {
    fn new(gamma: f64, rabi: f64, dt: f64) -> Self {
        let alpha = Complex64::new(gamma * gamma - rabi * rabi, 0.0).sqrt();
        let z = 0.5 * alpha * dt;
        let envelope = (-0.5 * gamma * dt).exp();
        let cosh = z.cosh() * envelope;
        let half_sinhc = 0.5 * dt * sinhc(z) * envelope;
        Self {
            u11: cosh + half_sinhc * gamma,
            u12: half_sinhc * Complex64::new(0.0, rabi),
            u22: cosh - half_sinhc * gamma,
        }
    }

    fn apply(&self, state: (Complex64, Complex64)) -> (Complex64, Complex64) {
        (
            self.u11 * state.0 + self.u12 * state.1,
            self.u12 * state.0 + self.u22 * state.1,
        )
    }
}

/// Hybrid quantum-jump evolution of the closed loop.
///
/// Between jumps the electron amplitudes follow the damped two-level
/// equations with Ω_R(μ) = Ω̄_R·sqrt(μ/μ̄) set by the instantaneous photon
/// number; the squared norm of the unnormalized state is the emission
/// survival probability. An emission adds one photon and resets the
/// electron to the lower state; a detection (rate μ/τ_p) removes one
/// photon and records a timestamp. Photon number zero is legal — the
/// detector simply goes quiet until the next emission.
pub fn simulate_loop(op: &OperatingPoint, config: &LoopConfig) -> Result<LoopOutcome, LaserError> {
    require_positive("horizon", config.horizon)?;
    let horizon = config.horizon;
    let gamma = op.gamma();
    let tau_p = op.tau_p();
    let mut rng = ChaCha8Rng::seed_from_u64(config.seed);
    let draw_uniform = move |rng: &mut ChaCha8Rng| rng.gen::<f64>();

    let rabi_at = |photons: u64| -> f64 {
        if config.freeze_feedback {
            op.rabi_sq().sqrt()
        } else {
            (op.rabi_sq() * photons as f64 / op.mu()).sqrt()
        }
    };

    let mut photons = config
        .initial_photons
        .unwrap_or_else(|| op.mu().round() as u64);
    let mut state = (Complex64::new(1.0, 0.0), Complex64::new(0.0, 0.0));
    let mut survival_threshold = draw_uniform(&mut rng);
    let mut t = 0.0;

    let mut detections = Vec::new();
    let mut emissions = Vec::new();
    let mut mu_time_integral = 0.0;
    let mut trajectory = Vec::new();
    let mut next_record = match config.record_stride {
        Some(stride) => {
            require_positive("record stride", stride)?;
            trajectory.push(MuSample { t: 0.0, photons });
            stride
        }
        None => f64::INFINITY,
    };
    let record_stride = config.record_stride.unwrap_or(f64::INFINITY);
    let time_tolerance = 1e-12 / gamma;

    while t < horizon {
        let rabi = rabi_at(photons);
        let detection_rate = photons as f64 / tau_p;
        let t_detection = if detection_rate > 0.0 {
            t - (1.0 - draw_uniform(&mut rng)).ln() / detection_rate
        } else {
            f64::INFINITY
        };
        let t_bound = t_detection.min(next_record).min(horizon);
        let dt = t_bound - t;

        let start_norm = state.0.norm_sqr() + state.1.norm_sqr();
        let full = Propagator::new(gamma, rabi, dt);
        let evolved = full.apply(state);
        let end_norm = evolved.0.norm_sqr() + evolved.1.norm_sqr();
        if end_norm > start_norm * (1.0 + 1e-6) {
            return Err(LaserError::NormDrift {
                drift: end_norm / start_norm - 1.0,
            });
        }

        if end_norm < survival_threshold {
            // emission inside (t, t_bound): locate the crossing of the
            // monotone survival against the uniform draw
            let objective = |s: f64| {
                let partial = Propagator::new(gamma, rabi, s).apply(state);
                let norm = partial.0.norm_sqr() + partial.1.norm_sqr();
                let slope = 2.0 * gamma * partial.1.norm_sqr();
                (survival_threshold - norm, slope)
            };
            let s = newton_bisect(objective, 0.0, dt, time_tolerance.min(dt * 1e-9), 200)
                .ok_or(LaserError::JumpTimeSearch)?;
            let t_emit = t + s;
            mu_time_integral += photons as f64 * s;
            emissions.push(t_emit);
            photons += 1;
            state = (Complex64::new(1.0, 0.0), Complex64::new(0.0, 0.0));
            survival_threshold = draw_uniform(&mut rng);
            t = t_emit;
            continue;
        }

        mu_time_integral += photons as f64 * dt;
        state = evolved;
        t = t_bound;
        if t_bound == t_detection {
            photons -= 1;
            detections.push(t);
        } else if t_bound == next_record {
            trajectory.push(MuSample { t, photons });
            next_record += record_stride;
        }
        // t_bound == horizon falls through and ends the loop
    }

    let detection_rate = detections.len() as f64 / horizon;
    let emission_rate = emissions.len() as f64 / horizon;
    Ok(LoopOutcome {
        detections: EventTrain::new(detections, horizon, config.seed)
            .expect("detection times ordered by construction"),
        emissions: EventTrain::new(emissions, horizon, config.seed)
            .expect("emission times ordered by construction"),
        mean_photon_number: mu_time_integral / horizon,
        detection_rate,
        emission_rate,
        trajectory,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use approx::assert_relative_eq;

    #[test]
    fn detected_noise_landmarks() {
        assert_relative_eq!(detected_noise_ratio(0.25), 7.0 / 8.0, max_relative = 1e-15);
        assert_relative_eq!(detected_noise_ratio(1.0), 2.0, max_relative = 1e-15);
        assert!((detected_noise_ratio(1e-9) - 1.0).abs() < 1e-8);
    }

    #[test]
    fn detected_noise_global_minimum_at_quarter() {
        let mut best_a = 0.0;
        let mut best = f64::INFINITY;
        let n = 5000;
        for k in 0..n {
            let a = 10f64.powf(-2.0 + 3.0 * k as f64 / (n - 1) as f64);
            let value = detected_noise_ratio(a);
            assert!(value >= 7.0 / 8.0 - 1e-12);
            if value < best {
                best = value;
                best_a = a;
            }
        }
        assert!((best_a - 0.25).abs() < 0.002);
        // derivative changes sign at a = 1/4
        let h = 1e-6;
        let left = detected_noise_ratio(0.25 - h) - detected_noise_ratio(0.25);
        let right = detected_noise_ratio(0.25 + h) - detected_noise_ratio(0.25);
        assert!(left > 0.0 && right > 0.0);
    }

    #[test]
    fn transfer_landmarks_and_divergence() {
        let (gain, amplification) = closed_loop_transfer(0.25);
        assert_relative_eq!(gain, 0.2, max_relative = 1e-15);
        assert_relative_eq!(amplification, 1.25, max_relative = 1e-15);
        let (gain, _) = closed_loop_transfer(1e9);
        assert!(gain > 1.0 - 1e-8 && gain < 1.0);
        assert!(detected_noise_ratio(1e9) > 1e17);
    }

    #[test]
    fn transfer_consistency_links_pump_and_detected_noise() {
        // (𝒮_r/D + A²)/(1 − A)² = 2a² − a + 1
        let mut lcg = 0x9e3779b97f4a7c15_u64;
        let mut uniform = || {
            lcg = lcg.wrapping_mul(6364136223846793005).wrapping_add(1442695040888963407);
            (lcg >> 11) as f64 / (1u64 << 53) as f64
        };
        for _ in 0..20 {
            let a = 10f64.powf(-2.0 + 4.0 * uniform());
            let (gain, _) = closed_loop_transfer(a);
            let pump = crate::dynamics::pump_noise_ratio(a);
            let combined = (pump + gain * gain) / ((1.0 - gain) * (1.0 - gain));
            assert_relative_eq!(combined, detected_noise_ratio(a), max_relative = 1e-12);
        }
    }

    #[test]
    fn designed_point_satisfies_invariants() {
        let consts = PhysicalConstants::paper();
        let op = OperatingPoint::design(0.25, 100.0, 1e-6, &consts).unwrap();
        op.validate(&consts).unwrap();
        assert_relative_eq!(op.noise_parameter(), 0.25, max_relative = 1e-12);
        assert_relative_eq!(op.mu(), 100.0, max_relative = 1e-15);
    }

    #[test]
    fn min_noise_design_volume_matches_244_tau_p_sq() {
        let consts = PhysicalConstants::paper();
        let tau_p = 1e-6;
        let op = OperatingPoint::design(0.25, 1.0, tau_p, &consts).unwrap();
        assert_relative_eq!(op.volume(), 244.0 * tau_p * tau_p, max_relative = 0.02);
        // unrounded value (2b/25)·τ_p²
        let b = consts.coupling_strength();
        assert_relative_eq!(op.volume(), 2.0 * b / 25.0 * tau_p * tau_p, max_relative = 1e-12);
    }

    #[test]
    fn steady_state_roots_are_reciprocal_in_a() {
        let consts = PhysicalConstants::paper();
        let designed = OperatingPoint::design(0.25, 5.0, 1e-6, &consts).unwrap();
        let roots = steady_state(
            designed.injection_rate(),
            designed.tau_p(),
            designed.volume(),
            &consts,
        )
        .unwrap();
        assert_eq!(roots.len(), 2);
        assert_relative_eq!(roots[0].noise_parameter(), 0.25, max_relative = 1e-9);
        assert_relative_eq!(roots[1].noise_parameter(), 4.0, max_relative = 1e-9);
        assert!(roots[0].noise_parameter() < roots[1].noise_parameter());
        assert_relative_eq!(
            roots[0].noise_parameter() * roots[1].noise_parameter(),
            1.0,
            max_relative = 1e-9
        );
        for root in &roots {
            root.validate(&consts).unwrap();
        }
    }

    #[test]
    fn steady_state_empty_below_threshold() {
        // Ω_R < 2√2·J: volume too large for the requested rate
        let consts = PhysicalConstants::paper();
        let designed = OperatingPoint::design(1.0, 5.0, 1e-6, &consts).unwrap();
        let roots = steady_state(
            designed.injection_rate(),
            designed.tau_p(),
            designed.volume() * 1.001,
            &consts,
        )
        .unwrap();
        assert!(roots.is_empty());
    }

    #[test]
    fn steady_state_double_root_has_unit_noise_parameter() {
        // constructed so that Ω_R² = 8J² holds exactly in floating point
        let consts = PhysicalConstants::new(1.0, 1.0, 1.0, 1.0).unwrap();
        let b = consts.coupling_strength();
        let injection_rate = 0.25;
        let tau_p = 4.0; // μ = 1
        let volume = b / 0.5; // Ω_R² = b·1/𝒱 = 0.5 = 8J² exactly
        let roots = steady_state(injection_rate, tau_p, volume, &consts).unwrap();
        assert_eq!(roots.len(), 1);
        assert_relative_eq!(roots[0].noise_parameter(), 1.0, max_relative = 1e-12);
        assert_relative_eq!(roots[0].gamma(), 0.5, max_relative = 1e-12);
    }

    #[test]
    fn loop_runs_reproducibly() {
        let consts = PhysicalConstants::paper();
        let op = OperatingPoint::design(0.25, 20.0, 1e-6, &consts).unwrap();
        let config = LoopConfig::new(200.0 * op.tau_p(), 11);
        let a = simulate_loop(&op, &config).unwrap();
        let b = simulate_loop(&op, &config).unwrap();
        assert_eq!(a.detections, b.detections);
        assert_eq!(a.emissions, b.emissions);
        assert_eq!(a.mean_photon_number, b.mean_photon_number);
    }

    #[test]
    fn loop_survives_zero_photons() {
        let consts = PhysicalConstants::paper();
        let op = OperatingPoint::design(0.25, 2.0, 1e-6, &consts).unwrap();
        let mut config = LoopConfig::new(300.0 * op.tau_p(), 5);
        config.initial_photons = Some(0);
        let outcome = simulate_loop(&op, &config).unwrap();
        // the pump restarts the field: events must flow
        assert!(outcome.emissions.count() > 0);
        assert!(outcome.detections.count() > 0);
    }

    #[test]
    fn trajectory_recording_obeys_stride() {
        let consts = PhysicalConstants::paper();
        let op = OperatingPoint::design(0.25, 10.0, 1e-6, &consts).unwrap();
        let mut config = LoopConfig::new(50.0 * op.tau_p(), 3);
        config.record_stride = Some(op.tau_p());
        let outcome = simulate_loop(&op, &config).unwrap();
        assert!(outcome.trajectory.len() >= 50);
        for pair in outcome.trajectory.windows(2) {
            assert!(pair[1].t > pair[0].t);
        }
        let mut csv = Vec::new();
        write_trajectory_csv(&outcome.trajectory, &mut csv).unwrap();
        assert!(csv.starts_with(b"t,mu_int\n"));
    }
}
