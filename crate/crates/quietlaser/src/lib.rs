//! Simulation and analysis toolkit for quiet (sub-Poissonian) one-electron lasers.
//!
//! The toolkit covers the full chain from a driven particle-in-a-box electron
//! to the closed-loop photon statistics of a battery-driven single-electron
//! laser:
//!
//! * [`physics`] — box eigenstructure, dipole coupling, and the relation
//!   between the Rabi frequency and the resonator energy.
//! * [`dynamics`] — closed-form damped-Rabi amplitudes, the waiting-time law
//!   of dissipation events, renewal Laplace algebra, and zero-frequency noise
//!   ratios.
//! * [`renewal`] — Monte Carlo sampling of the renewal event process with
//!   Fano-factor and spectral-density estimators.
//! * [`laser`] — steady-state operating points and a stochastic closed-loop
//!   jump simulator with photon-number feedback and a Poissonian detector.
//! * [`tdse`] — an independent grid solver for the 1-D Schrödinger equation
//!   plus the classical bouncing electron, used to verify the two-level
//!   reduction from first principles.
//!
//! All quantities are SI internally; the dimensionless noise parameter
//! `a = 2γ²/Ω_R²` appears only at API boundaries that ask for it.

pub mod dynamics;
pub mod laser;
mod numeric;
pub mod physics;
pub mod renewal;
pub mod tdse;

pub use physics::{BoxGeometry, CouplingParams, PhysicalConstants, ResonatorParams};
