//! First-principles grid solver for the driven particle in a box: numeric
//! eigenstructure of the Dirichlet box, norm-preserving Crank–Nicolson time
//! stepping of the full Schrödinger equation, the induced current, and the
//! classical bouncing electron it all reduces to.
//!
//! This module deliberately shares no dynamics code with the closed-form
//! two-level layer; it is the independent check on that reduction.

use crate::physics::{BoxGeometry, PhysicalConstants};
use num_complex::Complex64;
use std::io::Write;
use thiserror::Error;

#[derive(Debug, Error)]
pub enum TdseError {
    #[error("{name} must be strictly positive, got {value}")]
    NonPositive { name: &'static str, value: f64 },
    #[error("grid needs at least {needed} interior points, got {got}")]
    GridTooSmall { needed: usize, got: usize },
    #[error("norm drifted by {drift:.3e} during evolution (limit 1e-8)")]
    NormDrift { drift: f64 },
    #[error("initial state must be normalized: ∑|ψ|²·h = {norm}")]
    NotNormalized { norm: f64 },
    #[error(transparent)]
    Io(#[from] std::io::Error),
}

/// Uniform grid over the open interval (−d/2, d/2); the wavefunction is
/// pinned to zero on both walls.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct SpatialGrid {
    n_points: usize,
    width: f64,
}

impl SpatialGrid {
    pub fn new(n_points: usize, geom: &BoxGeometry) -> Result<Self, TdseError> {
        if n_points < 8 {
            return Err(TdseError::GridTooSmall {
                needed: 8,
                got: n_points,
            });
        }
        Ok(Self {
            n_points,
            width: geom.width(),
        })
    }

    pub fn n_points(&self) -> usize {
        self.n_points
    }

    pub fn width(&self) -> f64 {
        self.width
    }

    /// Grid spacing h = d/(n + 1).
    pub fn spacing(&self) -> f64 {
        self.width / (self.n_points + 1) as f64
    }

    /// Coordinate of interior point `j` (0-based), in (−d/2, d/2).
    pub fn position(&self, j: usize) -> f64 {
        -0.5 * self.width + (j + 1) as f64 * self.spacing()
    }
}

/// Complex amplitudes on the interior grid points (units m^{−1/2}).
#[derive(Debug, Clone)]
pub struct WaveFunction {
    pub amplitudes: Vec<Complex64>,
    pub time: f64,
}

impl WaveFunction {
    /// ∑|ψ|²·h, equal to 1 for a normalized state.
    pub fn norm_sq(&self, grid: &SpatialGrid) -> f64 {
        self.amplitudes.iter().map(|a| a.norm_sqr()).sum::<f64>() * grid.spacing()
    }

    /// Position expectation ⟨x⟩ = ∑ x|ψ|²·h (m).
    pub fn mean_position(&self, grid: &SpatialGrid) -> f64 {
        self.amplitudes
            .iter()
            .enumerate()
            .map(|(j, a)| grid.position(j) * a.norm_sqr())
            .sum::<f64>()
            * grid.spacing()
    }
}

/// The two lowest eigenpairs of the discrete box Hamiltonian.
#[derive(Debug, Clone)]
pub struct Eigenstates {
    /// E₁, E₂ (J)
    pub energies: [f64; 2],
    /// Real mode profiles, normalized to ∑ψ²·h = 1
    pub modes: [Vec<f64>; 2],
}

impl Eigenstates {
    /// Promote mode `n` (1 or 2) to a complex wavefunction at t = 0.
    pub fn wavefunction(&self, n: usize) -> WaveFunction {
        assert!(n == 1 || n == 2, "two-level basis holds levels 1 and 2 only");
        WaveFunction {
            amplitudes: self.modes[n - 1]
                .iter()
                .map(|&x| Complex64::new(x, 0.0))
                .collect(),
            time: 0.0,
        }
    }

    /// Numeric 1→2 transition angular frequency (rad/s).
    pub fn transition_frequency(&self, consts: &PhysicalConstants) -> f64 {
        (self.energies[1] - self.energies[0]) / consts.hbar
    }

    /// Dipole element ∑ ψ₁ x ψ₂ h from the numeric modes (m).
    pub fn dipole_element(&self, grid: &SpatialGrid) -> f64 {
        let h = grid.spacing();
        self.modes[0]
            .iter()
            .zip(&self.modes[1])
            .enumerate()
            .map(|(j, (&a, &b))| a * grid.position(j) * b)
            .sum::<f64>()
            * h
    }
}

/// Count eigenvalues of the symmetric tridiagonal (diag, off) below λ via
/// the Sturm pivot recurrence.
fn sturm_count(diag: f64, off: f64, n: usize, lambda: f64) -> usize {
    let mut count = 0;
    let mut pivot = diag - lambda;
    let off_sq = off * off;
    for _ in 0..n {
        if pivot < 0.0 {
            count += 1;
        }
        let mut denom = pivot;
        if denom.abs() < 1e-300 {
            denom = 1e-300_f64.copysign(if denom == 0.0 { 1.0 } else { denom });
        }
        pivot = (diag - lambda) - off_sq / denom;
    }
    count
}

/// Tridiagonal solve by Gaussian elimination with partial pivoting, so
/// the near-singular shifts of inverse iteration stay well behaved. After
/// elimination `dl` holds the second-superdiagonal fill-in.
fn solve_tridiag_pivot(sub: &[f64], diag: &[f64], sup: &[f64], rhs: &[f64]) -> Vec<f64> {
    let n = diag.len();
    let mut dl = sub.to_vec();
    let mut d = diag.to_vec();
    let mut du = sup.to_vec();
    let mut x = rhs.to_vec();
    let pivot_of = |v: f64| if v == 0.0 { 1e-300 } else { v };
    if n == 1 {
        x[0] /= pivot_of(d[0]);
        return x;
    }

    for i in 0..n - 1 {
        if d[i].abs() >= dl[i].abs() {
            let fact = dl[i] / pivot_of(d[i]);
            d[i + 1] -= fact * du[i];
            x[i + 1] -= fact * x[i];
            dl[i] = 0.0;
        } else {
            // interchange rows i and i+1
            let fact = d[i] / dl[i];
            d[i] = dl[i];
            let temp = d[i + 1];
            d[i + 1] = du[i] - fact * temp;
            if i < n - 2 {
                dl[i] = du[i + 1];
                du[i + 1] = -fact * dl[i];
            } else {
                dl[i] = 0.0;
            }
            du[i] = temp;
            x.swap(i, i + 1);
            let upper = x[i];
            x[i + 1] -= fact * upper;
        }
    }

    x[n - 1] /= pivot_of(d[n - 1]);
    x[n - 2] = (x[n - 2] - du[n - 2] * x[n - 1]) / pivot_of(d[n - 2]);
    for i in (0..n - 2).rev() {
        x[i] = (x[i] - du[i] * x[i + 1] - dl[i] * x[i + 2]) / pivot_of(d[i]);
    }
    x
}

/// Lowest two eigenpairs of the discrete second-derivative operator with
/// Dirichlet walls: Sturm bisection for the eigenvalues, inverse iteration
/// for the modes.
pub fn eigenstates_numeric(grid: &SpatialGrid, consts: &PhysicalConstants) -> Eigenstates {
    let n = grid.n_points();
    let h = grid.spacing();
    let kinetic = consts.hbar * consts.hbar / (2.0 * consts.mass * h * h);
    let diag = 2.0 * kinetic;
    let off = -kinetic;

    let mut energies = [0.0; 2];
    for (k, energy) in energies.iter_mut().enumerate() {
        let mut lo = 0.0;
        let mut hi = 4.0 * kinetic;
        // bisect until the k-th eigenvalue is pinned to relative 1e−14
        for _ in 0..80 {
            let mid = 0.5 * (lo + hi);
            if sturm_count(diag, off, n, mid) > k {
                hi = mid;
            } else {
                lo = mid;
            }
            if hi - lo <= 1e-14 * hi.abs() {
                break;
            }
        }
        *energy = 0.5 * (lo + hi);
    }

    let sub = vec![off; n - 1];
    let sup = vec![off; n - 1];
    let modes: Vec<Vec<f64>> = energies
        .iter()
        .enumerate()
        .map(|(k, &energy)| {
            // shift slightly off the eigenvalue so the solve stays regular
            let shifted: Vec<f64> = (0..n).map(|_| diag - energy * (1.0 + 1e-9)).collect();
            let mut vec: Vec<f64> = (0..n)
                .map(|j| {
                    ((k + 1) as f64 * std::f64::consts::PI * (j + 1) as f64 / (n + 1) as f64).sin()
                })
                .collect();
            for _ in 0..3 {
                vec = solve_tridiag_pivot(&sub, &shifted, &sup, &vec);
                let norm = vec.iter().map(|x| x * x).sum::<f64>().sqrt();
                vec.iter_mut().for_each(|x| *x /= norm);
            }
            // normalize to unit probability and fix the sign convention:
            // ψ₁ positive at the center, ψ₂ positive just right of it
            let scale = 1.0 / (vec.iter().map(|x| x * x).sum::<f64>() * h).sqrt();
            vec.iter_mut().for_each(|x| *x *= scale);
            let probe = if k == 0 { n / 2 } else { n / 2 + n / 8 };
            if vec[probe] < 0.0 {
                vec.iter_mut().for_each(|x| *x = -*x);
            }
            vec
        })
        .collect();

    let mut iter = modes.into_iter();
    Eigenstates {
        energies,
        modes: [iter.next().unwrap(), iter.next().unwrap()],
    }
}

/// Alternating drive v(t) = v·cos(ωt) applied across the box; the electron
/// feels the potential −e·v·cos(ωt)·x/d.
#[derive(Debug, Clone, Copy)]
pub struct DriveParams {
    /// Peak potential v (V); zero switches the drive off
    pub peak_potential: f64,
    /// Drive angular frequency ω (rad/s)
    pub omega: f64,
}

impl DriveParams {
    pub fn new(peak_potential: f64, omega: f64) -> Result<Self, TdseError> {
        if peak_potential != 0.0 && !(omega > 0.0) {
            return Err(TdseError::NonPositive {
                name: "drive frequency",
                value: omega,
            });
        }
        Ok(Self {
            peak_potential,
            omega,
        })
    }

    pub fn off() -> Self {
        Self {
            peak_potential: 0.0,
            omega: 0.0,
        }
    }

    /// Instantaneous potential v(t) (V).
    pub fn potential(&self, t: f64) -> f64 {
        self.peak_potential * (self.omega * t).cos()
    }
}

/// Time-stepping parameters for [`evolve`].
#[derive(Debug, Clone, Copy)]
pub struct EvolutionConfig {
    pub t_end: f64,
    pub dt: f64,
    /// Record observables every this many steps (≥ 1); step 0 and the
    /// final step are always recorded.
    pub observable_stride: usize,
}

/// Scalar observables along the evolution, plus the final state.
#[derive(Debug, Clone)]
pub struct Trajectory {
    pub times: Vec<f64>,
    /// Interaction-picture projections C_n(t) = e^{iω_n t}⟨ψ_n|ψ(t)⟩
    pub c1: Vec<Complex64>,
    pub c2: Vec<Complex64>,
    /// ⟨x⟩(t) (m)
    pub mean_x: Vec<f64>,
    /// ∑|ψ|²·h (should stay 1)
    pub norm_sq: Vec<f64>,
    /// Static-box energy ⟨H₀⟩ (J)
    pub energy: Vec<f64>,
    pub final_state: WaveFunction,
}

impl Trajectory {
    /// Population outside the two-level subspace, 1 − |C₁|² − |C₂|².
    pub fn two_level_leak(&self) -> Vec<f64> {
        self.c1
            .iter()
            .zip(&self.c2)
            .map(|(a, b)| 1.0 - a.norm_sqr() - b.norm_sqr())
            .collect()
    }
}

struct Observer<'a> {
    grid: &'a SpatialGrid,
    basis: &'a Eigenstates,
    omega1: f64,
    omega2: f64,
    kinetic: f64,
}

impl Observer<'_> {
    fn project(&self, mode: &[f64], psi: &[Complex64], h: f64) -> Complex64 {
        mode.iter()
            .zip(psi)
            .map(|(&m, &a)| m * a)
            .sum::<Complex64>()
            * h
    }

    fn record(&self, traj: &mut Trajectory, psi: &[Complex64], t: f64) {
        let h = self.grid.spacing();
        let raw1 = self.project(&self.basis.modes[0], psi, h);
        let raw2 = self.project(&self.basis.modes[1], psi, h);
        traj.times.push(t);
        traj.c1.push(raw1 * Complex64::from_polar(1.0, self.omega1 * t));
        traj.c2.push(raw2 * Complex64::from_polar(1.0, self.omega2 * t));
        let mut norm = 0.0;
        let mut mean_x = 0.0;
        let mut energy = 0.0;
        let n = psi.len();
        for j in 0..n {
            let p = psi[j].norm_sqr();
            norm += p;
            mean_x += self.grid.position(j) * p;
            let left = if j > 0 { psi[j - 1] } else { Complex64::default() };
            let right = if j + 1 < n { psi[j + 1] } else { Complex64::default() };
            let h0 = self.kinetic * (2.0 * psi[j] - left - right);
            energy += (psi[j].conj() * h0).re;
        }
        traj.norm_sq.push(norm * h);
        traj.mean_x.push(mean_x * h);
        traj.energy.push(energy * h);
    }
}

/// Norm-preserving Crank–Nicolson integration of the driven box:
/// (1 + i·dt/2ħ·H(t+dt/2))ψ' = (1 − i·dt/2ħ·H(t+dt/2))ψ.
///
/// Fails if the recorded norm ever drifts from the initial one by more
/// than 1e−8.
pub fn evolve(
    grid: &SpatialGrid,
    consts: &PhysicalConstants,
    drive: &DriveParams,
    basis: &Eigenstates,
    psi0: &WaveFunction,
    config: &EvolutionConfig,
) -> Result<Trajectory, TdseError> {
    if !(config.dt > 0.0) {
        return Err(TdseError::NonPositive {
            name: "dt",
            value: config.dt,
        });
    }
    if !(config.t_end > 0.0) {
        return Err(TdseError::NonPositive {
            name: "t_end",
            value: config.t_end,
        });
    }
    let norm0 = psi0.norm_sq(grid);
    if (norm0 - 1.0).abs() > 1e-8 {
        return Err(TdseError::NotNormalized { norm: norm0 });
    }

    let n = grid.n_points();
    let h = grid.spacing();
    let kinetic = consts.hbar * consts.hbar / (2.0 * consts.mass * h * h);
    let steps = (config.t_end / config.dt).round().max(1.0) as usize;
    let dt = config.t_end / steps as f64;
    let lambda = dt / (2.0 * consts.hbar);
    let stride = config.observable_stride.max(1);

    let observer = Observer {
        grid,
        basis,
        omega1: basis.energies[0] / consts.hbar,
        omega2: basis.energies[1] / consts.hbar,
        kinetic,
    };

    let mut psi = psi0.amplitudes.clone();
    let mut traj = Trajectory {
        times: Vec::new(),
        c1: Vec::new(),
        c2: Vec::new(),
        mean_x: Vec::new(),
        norm_sq: Vec::new(),
        energy: Vec::new(),
        final_state: WaveFunction {
            amplitudes: Vec::new(),
            time: 0.0,
        },
    };
    observer.record(&mut traj, &psi, psi0.time);

    // field-free parts of the Crank–Nicolson operators
    let off_lhs = Complex64::new(0.0, -lambda * kinetic);
    let off_rhs = Complex64::new(0.0, lambda * kinetic);
    let force = consts.charge * drive.peak_potential / grid.width();
    let mut rhs = vec![Complex64::default(); n];
    let mut diag = vec![Complex64::default(); n];
    let mut scratch_c = vec![Complex64::default(); n];

    for step in 0..steps {
        let t = psi0.time + step as f64 * dt;
        let drive_mid = if drive.peak_potential == 0.0 {
            0.0
        } else {
            (drive.omega * (t + 0.5 * dt)).cos()
        };
        // H = kinetic tridiagonal − e·v·cos(ω t_mid)·x/d
        for j in 0..n {
            let potential = -force * drive_mid * grid.position(j);
            let h_diag = 2.0 * kinetic + potential;
            diag[j] = Complex64::new(1.0, lambda * h_diag);
            let left = if j > 0 { psi[j - 1] } else { Complex64::default() };
            let right = if j + 1 < n { psi[j + 1] } else { Complex64::default() };
            rhs[j] = Complex64::new(1.0, -lambda * h_diag) * psi[j] + off_rhs * (left + right);
        }
        // complex Thomas solve: (diag, off_lhs) tridiagonal
        scratch_c[0] = off_lhs / diag[0];
        rhs[0] /= diag[0];
        for j in 1..n {
            let denom = diag[j] - off_lhs * scratch_c[j - 1];
            if j + 1 < n {
                scratch_c[j] = off_lhs / denom;
            }
            rhs[j] = (rhs[j] - off_lhs * rhs[j - 1]) / denom;
        }
        for j in (0..n - 1).rev() {
            let next = rhs[j + 1];
            rhs[j] -= scratch_c[j] * next;
        }
        psi.copy_from_slice(&rhs);

        if (step + 1) % stride == 0 || step + 1 == steps {
            observer.record(&mut traj, &psi, psi0.time + (step + 1) as f64 * dt);
            let drift = (traj.norm_sq.last().unwrap() - norm0).abs();
            if drift > 1e-8 {
                return Err(TdseError::NormDrift { drift });
            }
        }
    }

    traj.final_state = WaveFunction {
        amplitudes: psi,
        time: psi0.time + config.t_end,
    };
    Ok(traj)
}

/// Induced current ⟨i⟩ = (e/d)·d⟨x⟩/dt from a recorded trajectory, by
/// centered differences (one-sided second-order stencils at the ends).
/// Aligned one-to-one with `traj.times`; assumes a uniform recording
/// stride.
pub fn induced_current(
    traj: &Trajectory,
    grid: &SpatialGrid,
    consts: &PhysicalConstants,
) -> Vec<f64> {
    let x = &traj.mean_x;
    let t = &traj.times;
    let n = x.len();
    let scale = consts.charge / grid.width();
    if n < 3 {
        return vec![0.0; n];
    }
    let dt = t[1] - t[0];
    let mut current = Vec::with_capacity(n);
    current.push(scale * (-3.0 * x[0] + 4.0 * x[1] - x[2]) / (2.0 * dt));
    for j in 1..n - 1 {
        current.push(scale * (x[j + 1] - x[j - 1]) / (2.0 * dt));
    }
    current.push(scale * (3.0 * x[n - 1] - 4.0 * x[n - 2] + x[n - 3]) / (2.0 * dt));
    current
}

/// Write the trajectory as CSV rows (t, Re C₁, Im C₁, Re C₂, Im C₂, ⟨x⟩, ⟨i⟩).
pub fn write_trajectory_csv<W: Write>(
    traj: &Trajectory,
    grid: &SpatialGrid,
    consts: &PhysicalConstants,
    mut out: W,
) -> Result<(), TdseError> {
    let current = induced_current(traj, grid, consts);
    writeln!(out, "t,re_c1,im_c1,re_c2,im_c2,mean_x,mean_i")?;
    for k in 0..traj.times.len() {
        writeln!(
            out,
            "{},{},{},{},{},{},{}",
            traj.times[k],
            traj.c1[k].re,
            traj.c1[k].im,
            traj.c2[k].re,
            traj.c2[k].im,
            traj.mean_x[k],
            current[k]
        )?;
    }
    Ok(())
}

/// Classical trajectory samples plus the exactly accumulated drive work.
#[derive(Debug, Clone)]
pub struct ClassicalTrajectory {
    pub times: Vec<f64>,
    /// x(t) (m), confined to [−d, d] by elastic walls
    pub positions: Vec<f64>,
    /// p(t) (kg·m/s)
    pub momenta: Vec<f64>,
    /// Induced current i = (e/d)·p/m (A)
    pub currents: Vec<f64>,
    /// ∫ (ev/d)cos(ωt)·(dx/dt) dt, integrated in closed form per segment
    pub work_done: f64,
}

/// Closed-form flight under the spatially uniform force K·cos(ωt) from
/// state (x, p) at `t0` over `span`; returns the end state and the work
/// done by the drive.
fn free_flight(
    x: f64,
    p: f64,
    t0: f64,
    span: f64,
    force_amp: f64,
    omega: f64,
    mass: f64,
) -> (f64, f64, f64) {
    if force_amp == 0.0 {
        return (x + span * p / mass, p, 0.0);
    }
    let t1 = t0 + span;
    let (sin0, sin1) = ((omega * t0).sin(), (omega * t1).sin());
    let (cos0, cos1) = ((omega * t0).cos(), (omega * t1).cos());
    let drift = p - force_amp / omega * sin0;
    let p1 = p + force_amp / omega * (sin1 - sin0);
    let x1 = x + drift * span / mass - force_amp / (mass * omega * omega) * (cos1 - cos0);
    // ∫ K cos(ωt)(C + (K/ω) sin ωt)/m dt with C the drift momentum
    let work = force_amp / mass
        * (drift * (sin1 - sin0) / omega
            + force_amp / (2.0 * omega * omega) * (sin1 * sin1 - sin0 * sin0));
    (x1, p1, work)
}

/// Integrate the classical bouncing electron: exact flight under the
/// oscillating force between elastic reflections at x = ±d.
pub fn classical_trajectory(
    x0: f64,
    p0: f64,
    drive: &DriveParams,
    t_end: f64,
    dt: f64,
    geom: &BoxGeometry,
    consts: &PhysicalConstants,
) -> ClassicalTrajectory {
    let d = geom.width();
    let mass = consts.mass;
    assert!(x0.abs() <= d, "initial position outside the walls");
    assert!(dt > 0.0 && t_end > 0.0);
    let force_amp = consts.charge * drive.peak_potential / d;
    let omega = drive.omega;

    let samples = (t_end / dt).round().max(1.0) as usize;
    let dt = t_end / samples as f64;
    let mut times = Vec::with_capacity(samples + 1);
    let mut positions = Vec::with_capacity(samples + 1);
    let mut momenta = Vec::with_capacity(samples + 1);

    let mut x = x0;
    let mut p = p0;
    let mut t = 0.0;
    let mut work = 0.0;
    times.push(0.0);
    positions.push(x);
    momenta.push(p);

    // substeps small enough that a wall is crossed at most once per substep
    let drive_scale = if force_amp > 0.0 {
        (0.02 * 2.0 * std::f64::consts::PI / omega).min(dt)
    } else {
        dt
    };
    let momentum_gain = force_amp * drive_scale;

    for k in 0..samples {
        let t_sample = (k + 1) as f64 * dt;
        while t < t_sample - 1e-15 * t_end {
            let momentum_bound = p.abs() + momentum_gain;
            let travel_cap = if momentum_bound > 0.0 {
                0.05 * d * mass / momentum_bound
            } else {
                f64::INFINITY
            };
            let span = (t_sample - t).min(drive_scale).min(travel_cap);
            let (x_new, p_new, w_new) = free_flight(x, p, t, span, force_amp, omega, mass);
            if x_new.abs() <= d {
                x = x_new;
                p = p_new;
                work += w_new;
                t += span;
            } else {
                // bisect the exact flow for the wall-crossing time
                let wall = if x_new > d { d } else { -d };
                let mut lo = 0.0;
                let mut hi = span;
                for _ in 0..200 {
                    let mid = 0.5 * (lo + hi);
                    let (xm, _, _) = free_flight(x, p, t, mid, force_amp, omega, mass);
                    if (xm - wall) * (x_new - wall) > 0.0 {
                        hi = mid;
                    } else {
                        lo = mid;
                    }
                    if hi - lo < 1e-15 * span.max(1e-300) {
                        break;
                    }
                }
                let s = 0.5 * (lo + hi);
                let (_, p_wall, w_wall) = free_flight(x, p, t, s, force_amp, omega, mass);
                x = wall;
                p = -p_wall; // elastic reflection
                work += w_wall;
                t += s;
            }
        }
        t = t_sample;
        times.push(t);
        positions.push(x);
        momenta.push(p);
    }

    let current_scale = consts.charge / d;
    let currents = momenta.iter().map(|&p| current_scale * p / mass).collect();
    ClassicalTrajectory {
        times,
        positions,
        momenta,
        currents,
        work_done: work,
    }
}
