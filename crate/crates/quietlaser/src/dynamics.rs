//! Closed-form damped-Rabi dynamics and the renewal algebra built on them:
//! the waiting-time density of dissipation events, its Laplace transform,
//! the regularized event-density transform, the excess correlation g(t) − 1,
//! and the zero-frequency noise ratios.
//!
//! The decay discriminants α = sqrt(γ² − Ω_R²) and κ = sqrt(γ²/4 − Ω_R²)
//! are kept complex throughout so the over- and underdamped regimes share
//! one code path; results that are real on physical grounds are extracted
//! with an imaginary-residue assertion.

use crate::numeric::{coshm1c, demand_real, sinhc};
use crate::physics::CouplingParams;
use num_complex::Complex64;

/// Upper-state occupation sin²(Ω_R t/2) of the undamped resonantly driven
/// two-level system, starting from the lower state.
pub fn undamped_upper_prob(t: f64, coupling: &CouplingParams) -> f64 {
    let s = (0.5 * coupling.rabi() * t).sin();
    s * s
}

/// Shot-noise-referred zero-frequency pump noise,
/// 𝒮_r(0)/R = 1 − 3a/(1 + a)².
///
/// Equals 1/4 at a = 1 (the quietest pump) and approaches the shot-noise
/// level 1 in both the a → 0 and a → ∞ limits.
pub fn pump_noise_ratio(a: f64) -> f64 {
    assert!(a > 0.0, "noise parameter a must be positive, got {a}");
    1.0 - 3.0 * a / ((1.0 + a) * (1.0 + a))
}

/// Normalized pump-rate sensitivity (μ/R)(dR/dμ) = a/(1 + a) at fixed γ.
pub fn rate_sensitivity(a: f64) -> f64 {
    assert!(a > 0.0, "noise parameter a must be positive, got {a}");
    a / (1.0 + a)
}

/// Laplace transform of the waiting-time density,
/// w̃(p) = γΩ_R²/(p³ + 3γp² + (2γ² + Ω_R²)p + γΩ_R²).
///
/// Defined for Re(p) ≥ 0, where the denominator has no roots.
pub fn laplace_waiting(p: Complex64, coupling: &CouplingParams) -> Complex64 {
    let gamma = coupling.gamma();
    let rabi_sq = coupling.rabi_sq();
    let denom = ((p + 3.0 * gamma) * p + (2.0 * gamma * gamma + rabi_sq)) * p + gamma * rabi_sq;
    let scale = gamma * rabi_sq;
    assert!(
        denom.norm() > 1e-300 * scale.max(1.0),
        "laplace_waiting evaluated at a pole: p = {p}"
    );
    Complex64::new(scale, 0.0) / denom
}

/// First-decay waiting-time law of the damped driven two-level system.
///
/// Carries α = sqrt(γ² − Ω_R²), which is real in the overdamped regime and
/// purely imaginary in the underdamped one.
#[derive(Debug, Clone, Copy)]
pub struct WaitingTimeLaw {
    coupling: CouplingParams,
    alpha: Complex64,
}

impl WaitingTimeLaw {
    pub fn new(coupling: CouplingParams) -> Self {
        let gamma = coupling.gamma();
        let alpha = Complex64::new(gamma * gamma - coupling.rabi_sq(), 0.0).sqrt();
        let law = Self { coupling, alpha };
        let gamma_sq = alpha * alpha + coupling.rabi_sq();
        debug_assert!(
            (gamma_sq - gamma * gamma).norm() <= 1e-12 * gamma * gamma,
            "alpha discriminant identity violated"
        );
        law
    }

    pub fn coupling(&self) -> &CouplingParams {
        &self.coupling
    }

    /// Decay discriminant α = sqrt(γ² − Ω_R²) (s⁻¹).
    pub fn alpha(&self) -> Complex64 {
        self.alpha
    }

    /// Upper-state amplitude C₂(t) before the first decay event, for the
    /// initial condition C₁(0) = 1, C₂(0) = 0:
    /// C₂(t) = (iΩ_R/2α)(e^{(−γ+α)t/2} − e^{(−γ−α)t/2}).
    ///
    /// Evaluated as iΩ_R (t/2) e^{−γt/2} sinhc(αt/2), which is continuous
    /// across α = 0.
    pub fn amplitude_c2(&self, t: f64) -> Complex64 {
        debug_assert!(t >= 0.0);
        let gamma = self.coupling.gamma();
        let envelope = (-0.5 * gamma * t).exp() * 0.5 * t * self.coupling.rabi();
        Complex64::new(0.0, envelope) * sinhc(0.5 * self.alpha * t)
    }

    /// Waiting-time density w(t) = 2γ C₂(t)C₂*(t) (s⁻¹), real and
    /// non-negative in both damping regimes.
    pub fn density(&self, t: f64) -> f64 {
        debug_assert!(t >= 0.0);
        2.0 * self.coupling.gamma() * self.amplitude_c2(t).norm_sqr()
    }

    /// Survival probability 1 − W(t) that no decay happened up to `t`:
    /// e^{−γt}[γ²t²·(cosh(αt) − 1)/(αt)² + γt·sinh(αt)/(αt) + 1].
    pub fn survival(&self, t: f64) -> f64 {
        debug_assert!(t >= 0.0);
        let gamma = self.coupling.gamma();
        let gt = gamma * t;
        let z = self.alpha * t;
        let bracket = gt * gt * coshm1c(z) + gt * sinhc(z) + 1.0;
        ((-gt).exp() * demand_real(bracket, "waiting-time survival")).clamp(0.0, 1.0)
    }

    /// Cumulative distribution W(t) of the first decay time.
    pub fn cdf(&self, t: f64) -> f64 {
        1.0 - self.survival(t)
    }

    /// Mean waiting time τ = (1 + a)/γ (s).
    pub fn mean(&self) -> f64 {
        self.coupling.mean_waiting_time()
    }
}

/// Spectral data of the renewal event density: κ = sqrt(γ²/4 − Ω_R²) and
/// the relaxation roots λ± = −3γ/2 ± κ of the regularized transform.
#[derive(Debug, Clone, Copy)]
pub struct RenewalSpectrum {
    coupling: CouplingParams,
    kappa: Complex64,
    lambda_plus: Complex64,
    lambda_minus: Complex64,
}

impl RenewalSpectrum {
    pub fn new(coupling: CouplingParams) -> Self {
        let gamma = coupling.gamma();
        let kappa = Complex64::new(0.25 * gamma * gamma - coupling.rabi_sq(), 0.0).sqrt();
        let center = Complex64::new(-1.5 * gamma, 0.0);
        let spectrum = Self {
            coupling,
            kappa,
            lambda_plus: center + kappa,
            lambda_minus: center - kappa,
        };
        spectrum.check_roots();
        spectrum
    }

    fn check_roots(&self) {
        let gamma = self.coupling.gamma();
        let sum = self.lambda_plus + self.lambda_minus;
        let product = self.lambda_plus * self.lambda_minus;
        let expected = 2.0 * gamma * gamma + self.coupling.rabi_sq();
        debug_assert!((sum + 3.0 * gamma).norm() <= 1e-12 * 3.0 * gamma);
        debug_assert!((product - expected).norm() <= 1e-12 * expected);
        assert!(
            self.lambda_plus.re < 0.0 && self.lambda_minus.re < 0.0,
            "event-density relaxation roots must decay"
        );
    }

    pub fn coupling(&self) -> &CouplingParams {
        &self.coupling
    }

    pub fn kappa(&self) -> Complex64 {
        self.kappa
    }

    pub fn lambda_plus(&self) -> Complex64 {
        self.lambda_plus
    }

    pub fn lambda_minus(&self) -> Complex64 {
        self.lambda_minus
    }

    /// Excess correlation g(t) − 1 = (λ₋e^{λ₊t} − λ₊e^{λ₋t})/(2κ),
    /// evaluated as −e^{−3γt/2}[(3γt/2)·sinhc(κt) + cosh(κt)].
    ///
    /// Starts at −1 (no event can immediately follow an event) and decays
    /// to 0.
    pub fn g_excess(&self, t: f64) -> f64 {
        debug_assert!(t >= 0.0);
        let gamma = self.coupling.gamma();
        let z = self.kappa * t;
        let bracket = 1.5 * gamma * t * sinhc(z) + z.cosh();
        -(-1.5 * gamma * t).exp() * demand_real(bracket, "excess correlation")
    }

    /// Regularized Laplace transform of the event density, i.e. G̃(p) with
    /// the singular R/p term removed:
    /// G̃_reg(p) = R[λ₋/(2κ(p − λ₊)) − λ₊/(2κ(p − λ₋))]
    ///          = −R(p + 3γ)/(p² + 3γp + 2γ² + Ω_R²).
    ///
    /// The rational form on the second line is used; it is manifestly real
    /// for real p and continuous across κ = 0.
    pub fn laplace_g_regular(&self, p: Complex64) -> Complex64 {
        let gamma = self.coupling.gamma();
        let rate = self.coupling.event_rate();
        let denom = (p + 3.0 * gamma) * p + (2.0 * gamma * gamma + self.coupling.rabi_sq());
        -rate * (p + 3.0 * gamma) / denom
    }
}
