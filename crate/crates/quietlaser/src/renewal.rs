//! Monte Carlo renewal engine: inverse-CDF sampling of inter-event waiting
//! times, event-train generation, and counting-statistics estimators
//! (windowed Fano factor with jackknife errors, Bartlett periodogram).

use crate::dynamics::WaitingTimeLaw;
use crate::numeric::newton_bisect;
use rand::Rng;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;
use serde::Serialize;
use std::io::{self, BufRead, BufWriter, Write};
use std::path::Path;
use thiserror::Error;

#[derive(Debug, Error)]
pub enum RenewalError {
    #[error("need at least {needed} counting windows, got {got}")]
    TooFewWindows { needed: usize, got: usize },
    #[error("event train has no events inside the counting windows")]
    NoEvents,
    #[error("frequency grid entry {omega} outside resolvable band [{lo}, {hi}]")]
    OutsideBand { omega: f64, lo: f64, hi: f64 },
    #[error("{name} must be strictly positive, got {value}")]
    NonPositive { name: &'static str, value: f64 },
    #[error("event train file is malformed: {0}")]
    Format(String),
    #[error(transparent)]
    Io(#[from] io::Error),
}

/// Inter-event waiting-time distribution usable by the renewal sampler.
pub trait InterEventLaw {
    /// Cumulative distribution W(t), monotone from 0 to 1.
    fn cdf(&self, t: f64) -> f64;
    /// Probability density w(t) = dW/dt.
    fn density(&self, t: f64) -> f64;
    /// Mean inter-event time.
    fn mean(&self) -> f64;
}

impl InterEventLaw for WaitingTimeLaw {
    fn cdf(&self, t: f64) -> f64 {
        WaitingTimeLaw::cdf(self, t)
    }
    fn density(&self, t: f64) -> f64 {
        WaitingTimeLaw::density(self, t)
    }
    fn mean(&self) -> f64 {
        WaitingTimeLaw::mean(self)
    }
}

/// Memoryless control law; a renewal process with this law is Poisson and
/// serves as the shot-noise baseline.
#[derive(Debug, Clone, Copy)]
pub struct ExponentialLaw {
    rate: f64,
}

impl ExponentialLaw {
    pub fn new(rate: f64) -> Result<Self, RenewalError> {
        if rate > 0.0 && rate.is_finite() {
            Ok(Self { rate })
        } else {
            Err(RenewalError::NonPositive {
                name: "rate",
                value: rate,
            })
        }
    }
}

impl InterEventLaw for ExponentialLaw {
    fn cdf(&self, t: f64) -> f64 {
        -(-self.rate * t).exp_m1()
    }
    fn density(&self, t: f64) -> f64 {
        self.rate * (-self.rate * t).exp()
    }
    fn mean(&self) -> f64 {
        1.0 / self.rate
    }
}

/// Quantile W⁻¹(u) by bracketed Newton/bisection root finding on the CDF.
///
/// The bracket starts at [0, 50τ] and doubles as needed. Panics if the
/// root finder has not converged to 1e−12·τ after 200 iterations, which
/// indicates an inconsistent CDF/density pair.
pub fn waiting_quantile<L: InterEventLaw>(law: &L, u: f64) -> f64 {
    assert!((0.0..1.0).contains(&u), "quantile argument must be in [0, 1)");
    if u == 0.0 {
        return 0.0;
    }
    let tau = law.mean();
    let mut hi = 50.0 * tau;
    let mut doublings = 0;
    while law.cdf(hi) < u {
        hi *= 2.0;
        doublings += 1;
        assert!(doublings < 64, "waiting-time CDF does not reach u = {u}");
    }
    newton_bisect(
        |t| (law.cdf(t) - u, law.density(t)),
        0.0,
        hi,
        1e-12 * tau,
        200,
    )
    .expect("waiting-time quantile root finder failed to converge")
}

/// Draw one waiting time distributed per the law's density.
pub fn sample_waiting_time<L: InterEventLaw, R: Rng>(law: &L, rng: &mut R) -> f64 {
    waiting_quantile(law, rng.gen::<f64>())
}

/// Ordered dissipation-event timestamps from one simulated realization.
#[derive(Debug, Clone, PartialEq)]
pub struct EventTrain {
    timestamps: Vec<f64>,
    horizon: f64,
    seed: u64,
}

impl EventTrain {
    /// Wrap raw timestamps, enforcing strict ordering inside [0, horizon].
    pub fn new(timestamps: Vec<f64>, horizon: f64, seed: u64) -> Result<Self, RenewalError> {
        if !(horizon > 0.0) {
            return Err(RenewalError::NonPositive {
                name: "horizon",
                value: horizon,
            });
        }
        for pair in timestamps.windows(2) {
            if pair[1] <= pair[0] {
                return Err(RenewalError::Format(format!(
                    "timestamps not strictly increasing: {} then {}",
                    pair[0], pair[1]
                )));
            }
        }
        if let (Some(first), Some(last)) = (timestamps.first(), timestamps.last()) {
            if *first < 0.0 || *last > horizon {
                return Err(RenewalError::Format(
                    "timestamps outside [0, horizon]".into(),
                ));
            }
        }
        Ok(Self {
            timestamps,
            horizon,
            seed,
        })
    }

    pub fn timestamps(&self) -> &[f64] {
        &self.timestamps
    }

    pub fn horizon(&self) -> f64 {
        self.horizon
    }

    pub fn seed(&self) -> u64 {
        self.seed
    }

    pub fn count(&self) -> usize {
        self.timestamps.len()
    }

    /// Empirical event rate, count/horizon (s⁻¹).
    pub fn observed_rate(&self) -> f64 {
        self.count() as f64 / self.horizon
    }

    pub fn inter_event_gaps(&self) -> Vec<f64> {
        self.timestamps.windows(2).map(|w| w[1] - w[0]).collect()
    }

    /// Write one timestamp per line after `#`-prefixed header comments
    /// carrying the seed, horizon, and any extra parameters. Timestamps are
    /// printed with the shortest decimal that round-trips exactly.
    pub fn write_csv<W: Write>(
        &self,
        mut out: W,
        params: &[(&str, String)],
    ) -> Result<(), RenewalError> {
        writeln!(out, "# seed = {}", self.seed)?;
        writeln!(out, "# horizon = {}", self.horizon)?;
        for (name, value) in params {
            writeln!(out, "# {name} = {value}")?;
        }
        for t in &self.timestamps {
            writeln!(out, "{t}")?;
        }
        Ok(())
    }

    pub fn write_csv_path<P: AsRef<Path>>(
        &self,
        path: P,
        params: &[(&str, String)],
    ) -> Result<(), RenewalError> {
        let file = std::fs::File::create(path)?;
        self.write_csv(BufWriter::new(file), params)
    }

    /// Parse a train written by [`EventTrain::write_csv`]; extra header
    /// parameters are returned alongside.
    pub fn read_csv<R: BufRead>(input: R) -> Result<(Self, Vec<(String, String)>), RenewalError> {
        let mut seed = None;
        let mut horizon = None;
        let mut params = Vec::new();
        let mut timestamps = Vec::new();
        for line in input.lines() {
            let line = line?;
            let line = line.trim();
            if line.is_empty() {
                continue;
            }
            if let Some(comment) = line.strip_prefix('#') {
                let Some((name, value)) = comment.split_once('=') else {
                    continue;
                };
                let (name, value) = (name.trim(), value.trim());
                match name {
                    "seed" => {
                        seed = Some(value.parse::<u64>().map_err(|e| {
                            RenewalError::Format(format!("bad seed {value:?}: {e}"))
                        })?)
                    }
                    "horizon" => {
                        horizon = Some(value.parse::<f64>().map_err(|e| {
                            RenewalError::Format(format!("bad horizon {value:?}: {e}"))
                        })?)
                    }
                    _ => params.push((name.to_string(), value.to_string())),
                }
            } else {
                timestamps.push(
                    line.parse::<f64>()
                        .map_err(|e| RenewalError::Format(format!("bad timestamp {line:?}: {e}")))?,
                );
            }
        }
        let seed = seed.ok_or_else(|| RenewalError::Format("missing seed header".into()))?;
        let horizon =
            horizon.ok_or_else(|| RenewalError::Format("missing horizon header".into()))?;
        Ok((Self::new(timestamps, horizon, seed)?, params))
    }

    pub fn read_csv_path<P: AsRef<Path>>(
        path: P,
    ) -> Result<(Self, Vec<(String, String)>), RenewalError> {
        let file = std::fs::File::open(path)?;
        Self::read_csv(io::BufReader::new(file))
    }
}

/// Generate an ordinary renewal train: cumulative sums of i.i.d. waiting
/// times truncated at `horizon`. Same seed and parameters give an
/// identical train.
pub fn generate_event_train<L: InterEventLaw>(law: &L, horizon: f64, seed: u64) -> EventTrain {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut timestamps = Vec::with_capacity((1.2 * horizon / law.mean()) as usize + 4);
    let mut t = 0.0;
    loop {
        t += sample_waiting_time(law, &mut rng);
        if t > horizon {
            break;
        }
        timestamps.push(t);
    }
    EventTrain {
        timestamps,
        horizon,
        seed,
    }
}

/// Generate independent trains for each seed in parallel; output order
/// follows the seed order.
pub fn generate_event_trains<L: InterEventLaw + Sync>(
    law: &L,
    horizon: f64,
    seeds: &[u64],
) -> Vec<EventTrain> {
    seeds
        .par_iter()
        .map(|&seed| generate_event_train(law, horizon, seed))
        .collect()
}

/// Windowed counting statistics: Fano factor with a jackknife standard
/// error.
#[derive(Debug, Clone, Copy, Serialize)]
pub struct CountStatistics {
    /// Counting window length (s)
    pub window: f64,
    /// Number of disjoint windows used
    pub n_windows: usize,
    /// Mean count per window
    pub mean_count: f64,
    /// Variance-to-mean ratio of the counts
    pub fano: f64,
    /// Jackknife standard error of the Fano factor
    pub std_err: f64,
}

fn window_counts(train: &EventTrain, window: f64) -> Result<Vec<f64>, RenewalError> {
    if !(window > 0.0) {
        return Err(RenewalError::NonPositive {
            name: "window",
            value: window,
        });
    }
    let n_windows = (train.horizon() / window).floor() as usize;
    let mut counts = vec![0.0; n_windows];
    for &t in train.timestamps() {
        let idx = (t / window).floor() as usize;
        if idx < n_windows {
            counts[idx] += 1.0;
        }
    }
    Ok(counts)
}

fn fano_of_counts(counts: &[f64], window: f64) -> Result<CountStatistics, RenewalError> {
    let n = counts.len();
    if n < 10 {
        return Err(RenewalError::TooFewWindows { needed: 10, got: n });
    }
    let nf = n as f64;
    let sum: f64 = counts.iter().sum();
    if sum == 0.0 {
        return Err(RenewalError::NoEvents);
    }
    let mean = sum / nf;
    let sum_sq: f64 = counts.iter().map(|c| c * c).sum();
    let variance = (sum_sq - nf * mean * mean) / (nf - 1.0);
    let fano = variance / mean;

    // leave-one-out estimates from the precomputed sums
    let mut jack = Vec::with_capacity(n);
    for &c in counts {
        let mean_i = (sum - c) / (nf - 1.0);
        let var_i = (sum_sq - c * c - (nf - 1.0) * mean_i * mean_i) / (nf - 2.0);
        jack.push(var_i / mean_i);
    }
    let jack_mean = jack.iter().sum::<f64>() / nf;
    let std_err = ((nf - 1.0) / nf
        * jack.iter().map(|f| (f - jack_mean) * (f - jack_mean)).sum::<f64>())
    .sqrt();

    Ok(CountStatistics {
        window,
        n_windows: n,
        mean_count: mean,
        fano,
        std_err,
    })
}

/// Fano factor of counts in disjoint windows partitioning [0, horizon].
///
/// In the long-window limit the Fano factor approaches the zero-frequency
/// spectral density over the rate. Fails with fewer than 10 windows.
pub fn fano_factor(train: &EventTrain, window: f64) -> Result<CountStatistics, RenewalError> {
    fano_of_counts(&window_counts(train, window)?, window)
}

/// Fano factor over window counts pooled from several independent trains.
pub fn pooled_fano(trains: &[EventTrain], window: f64) -> Result<CountStatistics, RenewalError> {
    let mut counts = Vec::new();
    for train in trains {
        counts.extend(window_counts(train, window)?);
    }
    fano_of_counts(&counts, window)
}

/// Bartlett-averaged periodogram of the centered counting signal,
/// evaluated at the requested angular frequencies (double-sided spectral
/// density of the rate fluctuation, in s⁻¹).
///
/// The train is split into segments long enough to resolve the smallest
/// requested frequency; at least 20 segments are required. Within a
/// segment the events are binned at `bin_width`, mean-centered, and
/// Fourier-summed directly at each frequency.
pub fn psd_estimate(
    train: &EventTrain,
    omega_grid: &[f64],
    bin_width: f64,
) -> Result<Vec<f64>, RenewalError> {
    if !(bin_width > 0.0) {
        return Err(RenewalError::NonPositive {
            name: "bin_width",
            value: bin_width,
        });
    }
    let lo = 2.0 * std::f64::consts::PI / train.horizon();
    let hi = std::f64::consts::PI / bin_width;
    let mut omega_min = f64::INFINITY;
    for &omega in omega_grid {
        if !(omega >= lo && omega <= hi) {
            return Err(RenewalError::OutsideBand { omega, lo, hi });
        }
        omega_min = omega_min.min(omega);
    }
    if omega_grid.is_empty() {
        return Ok(Vec::new());
    }

    let t_seg = 2.0 * std::f64::consts::PI / omega_min;
    let n_segments = (train.horizon() / t_seg).floor() as usize;
    if n_segments < 20 {
        return Err(RenewalError::TooFewWindows {
            needed: 20,
            got: n_segments,
        });
    }
    let bins = (t_seg / bin_width).round().max(1.0) as usize;
    let dt = t_seg / bins as f64;

    let mut spectrum = vec![0.0; omega_grid.len()];
    let mut counts = vec![0.0; bins];
    let mut event_idx = 0;
    let events = train.timestamps();
    for seg in 0..n_segments {
        let start = seg as f64 * t_seg;
        counts.iter_mut().for_each(|c| *c = 0.0);
        while event_idx < events.len() && events[event_idx] < start + t_seg {
            let offset = events[event_idx] - start;
            if offset >= 0.0 {
                let bin = ((offset / dt) as usize).min(bins - 1);
                counts[bin] += 1.0;
            }
            event_idx += 1;
        }
        let mean = counts.iter().sum::<f64>() / bins as f64;
        for (s, &omega) in spectrum.iter_mut().zip(omega_grid) {
            let mut re = 0.0;
            let mut im = 0.0;
            for (k, &c) in counts.iter().enumerate() {
                let phase = omega * (k as f64 + 0.5) * dt;
                let x = c - mean;
                re += x * phase.cos();
                im -= x * phase.sin();
            }
            *s += (re * re + im * im) / t_seg;
        }
    }
    spectrum.iter_mut().for_each(|s| *s /= n_segments as f64);
    Ok(spectrum)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::physics::CouplingParams;
    use approx::assert_relative_eq;

    fn law(a: f64, gamma: f64) -> WaitingTimeLaw {
        WaitingTimeLaw::new(CouplingParams::from_noise_parameter(a, gamma).unwrap())
    }

    #[test]
    fn quantile_at_zero_is_zero() {
        assert_eq!(waiting_quantile(&law(1.0, 1.0), 0.0), 0.0);
    }

    #[test]
    fn quantile_inverts_cdf() {
        let law = law(0.5, 2.0);
        for &u in &[1e-6, 0.1, 0.5, 0.9, 0.999, 1.0 - 1e-9] {
            let t = waiting_quantile(&law, u);
            assert!((law.cdf(t) - u).abs() < 1e-9, "u = {u}");
        }
    }

    #[test]
    fn exponential_law_quantile_closed_form() {
        let law = ExponentialLaw::new(3.0).unwrap();
        for &u in &[0.05_f64, 0.5, 0.95] {
            let expected = -(1.0 - u).ln() / 3.0;
            assert_relative_eq!(waiting_quantile(&law, u), expected, max_relative = 1e-10);
        }
    }

    #[test]
    fn trains_are_deterministic_per_seed() {
        let law = law(1.0, 1.0);
        let a = generate_event_train(&law, 500.0, 7);
        let b = generate_event_train(&law, 500.0, 7);
        assert_eq!(a, b);
        let c = generate_event_train(&law, 500.0, 8);
        assert_ne!(a.timestamps(), c.timestamps());
    }

    #[test]
    fn train_invariants_hold() {
        let law = law(0.25, 5.0);
        let train = generate_event_train(&law, 300.0, 3);
        assert!(train.count() > 0);
        for pair in train.timestamps().windows(2) {
            assert!(pair[1] > pair[0]);
        }
        assert!(*train.timestamps().last().unwrap() <= train.horizon());
        assert!(train.timestamps()[0] >= 0.0);
    }

    #[test]
    fn tiny_horizon_gives_empty_train() {
        let train = generate_event_train(&law(1.0, 1.0), 1e-12, 1);
        assert_eq!(train.count(), 0);
    }

    #[test]
    fn parallel_generation_matches_sequential() {
        let law = law(1.0, 1.0);
        let seeds = [1, 2, 3, 4];
        let parallel = generate_event_trains(&law, 200.0, &seeds);
        for (seed, train) in seeds.iter().zip(&parallel) {
            assert_eq!(train, &generate_event_train(&law, 200.0, *seed));
        }
    }

    #[test]
    fn fano_needs_ten_windows() {
        let train = generate_event_train(&law(1.0, 1.0), 100.0, 1);
        match fano_factor(&train, 20.0) {
            Err(RenewalError::TooFewWindows { needed: 10, got: 5 }) => {}
            other => panic!("expected TooFewWindows, got {other:?}"),
        }
    }

    #[test]
    fn csv_round_trip_is_exact() {
        let law = law(1.0, 1.23456789e7);
        let train = generate_event_train(&law, 4000.0 * law.mean(), 99);
        let mut buffer = Vec::new();
        train
            .write_csv(&mut buffer, &[("gamma", format!("{}", 1.23456789e7))])
            .unwrap();
        let (back, params) = EventTrain::read_csv(io::Cursor::new(buffer)).unwrap();
        assert_eq!(back, train);
        assert_eq!(params, vec![("gamma".to_string(), "12345678.9".to_string())]);
    }

    #[test]
    fn csv_rejects_garbage() {
        let bad = "# seed = 1\n# horizon = 10\n2.0\n1.0\n";
        assert!(EventTrain::read_csv(io::Cursor::new(bad)).is_err());
        let missing = "1.0\n2.0\n";
        assert!(EventTrain::read_csv(io::Cursor::new(missing)).is_err());
    }

    #[test]
    fn psd_rejects_out_of_band_grid() {
        let train = generate_event_train(&law(1.0, 1.0), 2000.0, 5);
        assert!(matches!(
            psd_estimate(&train, &[1e9], 0.2),
            Err(RenewalError::OutsideBand { .. })
        ));
        assert!(matches!(
            psd_estimate(&train, &[1e-9], 0.2),
            Err(RenewalError::OutsideBand { .. })
        ));
    }

    mod properties {
        use super::*;
        use proptest::prelude::*;

        proptest! {
            #![proptest_config(ProptestConfig::with_cases(32))]

            #[test]
            fn csv_round_trip(seed in 0u64..1000, horizon_tau in 5.0..50.0f64) {
                let law = law(1.0, 1.0);
                let train = generate_event_train(&law, horizon_tau * law.mean(), seed);
                let mut buffer = Vec::new();
                train.write_csv(&mut buffer, &[]).unwrap();
                let (back, _) = EventTrain::read_csv(std::io::Cursor::new(buffer)).unwrap();
                prop_assert_eq!(back, train);
            }

            #[test]
            fn quantile_monotone(u1 in 0.0..0.999f64, u2 in 0.0..0.999f64) {
                let law = law(0.25, 1.0);
                let (lo, hi) = if u1 <= u2 { (u1, u2) } else { (u2, u1) };
                prop_assert!(waiting_quantile(&law, lo) <= waiting_quantile(&law, hi) + 1e-12);
            }
        }
    }
}
