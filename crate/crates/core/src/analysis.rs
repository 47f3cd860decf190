//! Post-hoc trace metrics: CoG vertical delta and dominant period.

use std::fmt;

use crate::experiment::compute_fitness;
use crate::sim::{RobotModel, Termination, TrialTrace};

/// Minimum signal length accepted by [`estimate_period`], s.
pub const MIN_PERIOD_SIGNAL_S: f64 = 4.0;
/// Required peak prominence as a fraction of the zero-lag autocorrelation.
pub const PEAK_PROMINENCE: f64 = 0.3;
/// Shortest lag considered, s.
pub const MIN_LAG_S: f64 = 0.5;

#[derive(Debug, thiserror::Error, PartialEq)]
pub enum AnalysisError {
    #[error("series is empty")]
    EmptySeries,
    #[error("signal spans {got:.3} s, need at least {need:.1} s")]
    TooShort { got: f64, need: f64 },
    #[error("sample interval must be positive, got {0}")]
    InvalidStep(f64),
}

/// `max - min` of the series.
pub fn vertical_delta(z: &[f64]) -> Result<f64, AnalysisError> {
    let first = *z.first().ok_or(AnalysisError::EmptySeries)?;
    let (lo, hi) = z.iter().fold((first, first), |(lo, hi), &v| (lo.min(v), hi.max(v)));
    Ok(hi - lo)
}

/// Normalized (biased) autocorrelation for lags `0..=max_lag`; `r[0] = 1`
/// unless the signal is constant, in which case every entry is 0.
pub fn autocorrelation(x: &[f64], max_lag: usize) -> Vec<f64> {
    let n = x.len();
    let mean = x.iter().sum::<f64>() / n.max(1) as f64;
    let c: Vec<f64> = x.iter().map(|v| v - mean).collect();
    let r0: f64 = c.iter().map(|v| v * v).sum();
    (0..=max_lag.min(n.saturating_sub(1)))
        .map(|k| {
            if r0 == 0.0 {
                return 0.0;
            }
            c[..n - k].iter().zip(&c[k..]).map(|(a, b)| a * b).sum::<f64>() / r0
        })
        .collect()
}

fn prominence(r: &[f64], k: usize) -> f64 {
    let peak = r[k];
    let mut left = peak;
    for &v in r[..k].iter().rev() {
        if v > peak {
            break;
        }
        left = left.min(v);
    }
    let mut right = peak;
    for &v in &r[k + 1..] {
        if v > peak {
            break;
        }
        right = right.min(v);
    }
    peak - left.max(right)
}

/// Dominant period from the first prominent autocorrelation peak, searched
/// over lags in `[0.5 s, duration / 2]`. `None` for aperiodic signals.
pub fn estimate_period(signal: &[f64], dt: f64) -> Result<Option<f64>, AnalysisError> {
    if !(dt > 0.0 && dt.is_finite()) {
        return Err(AnalysisError::InvalidStep(dt));
    }
    let span = signal.len() as f64 * dt;
    if span + 1e-9 < MIN_PERIOD_SIGNAL_S {
        return Err(AnalysisError::TooShort { got: span, need: MIN_PERIOD_SIGNAL_S });
    }
    let lo = (MIN_LAG_S / dt).ceil() as usize;
    let hi = signal.len() / 2;
    // One extra lag so a peak at `hi` can still be tested as a local max.
    let r = autocorrelation(signal, hi + 1);
    if r[0] == 0.0 {
        return Ok(None);
    }
    for k in lo.max(1)..=hi.min(r.len() - 2) {
        if r[k] > r[k - 1] && r[k] >= r[k + 1] && prominence(&r, k) >= PEAK_PROMINENCE * r[0] {
            let (a, b, c) = (r[k - 1], r[k], r[k + 1]);
            let denom = a - 2.0 * b + c;
            let shift = if denom != 0.0 { (0.5 * (a - c) / denom).clamp(-0.5, 0.5) } else { 0.0 };
            return Ok(Some((k as f64 + shift) * dt));
        }
    }
    Ok(None)
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct TraceMetrics {
    pub vertical_delta: f64,
    pub dominant_period: Option<f64>,
    pub mean_fitness: f64,
    /// Unknown when the metrics come from an exported file.
    pub termination: Option<Termination>,
    pub samples: usize,
}

impl TraceMetrics {
    /// Metrics from raw columns. Fitness is the unpadded mean over the rows.
    pub fn from_columns(dt: f64, z: &[f64], rope_tension: &[f64], weight: f64) -> Result<Self, AnalysisError> {
        let vertical_delta = vertical_delta(z)?;
        let dominant_period = match estimate_period(z, dt) {
            Ok(p) => p,
            Err(AnalysisError::TooShort { .. }) => None,
            Err(e) => return Err(e),
        };
        let mean_fitness =
            rope_tension.iter().map(|t| (1.0 - t / weight).clamp(0.0, 1.0)).sum::<f64>() / rope_tension.len().max(1) as f64;
        Ok(Self { vertical_delta, dominant_period, mean_fitness, termination: None, samples: z.len() })
    }

    pub fn from_trace(trace: &TrialTrace, model: &RobotModel) -> Result<Self, AnalysisError> {
        let z = trace.cog_heights();
        let tension: Vec<f64> = trace.samples.iter().map(|s| s.sensors.rope_tension).collect();
        let mut m = Self::from_columns(trace.dt, &z, &tension, model.weight())?;
        m.mean_fitness = compute_fitness(trace, model);
        m.termination = Some(trace.termination);
        Ok(m)
    }
}

impl fmt::Display for TraceMetrics {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        writeln!(f, "samples = {}", self.samples)?;
        writeln!(f, "vertical_delta_m = {}", self.vertical_delta)?;
        match self.dominant_period {
            Some(p) => writeln!(f, "dominant_period_s = {p}")?,
            None => writeln!(f, "dominant_period_s = none")?,
        }
        writeln!(f, "mean_fitness = {}", self.mean_fitness)?;
        write!(f, "termination = {}", self.termination.map_or("unknown", Termination::label))
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use rand::SeedableRng;
    use rand_chacha::ChaCha8Rng;
    use rand_distr::{Distribution, Normal};
    use std::f64::consts::TAU;

    fn sine(period: f64, amp: f64, dt: f64, secs: f64) -> Vec<f64> {
        (0..(secs / dt) as usize).map(|i| amp * (TAU * i as f64 * dt / period).sin()).collect()
    }

    #[test]
    fn delta_examples() {
        assert_eq!(vertical_delta(&[0.3; 10]).unwrap(), 0.0);
        let s = sine(3.0, 0.02, 0.01, 15.0);
        assert!((vertical_delta(&s).unwrap() - 0.04).abs() < 1e-4);
        assert_eq!(vertical_delta(&[]), Err(AnalysisError::EmptySeries));
    }

    #[test]
    fn sine_period() {
        let p = estimate_period(&sine(3.0, 1.0, 0.01, 15.0), 0.01).unwrap().unwrap();
        assert!((p - 3.0).abs() < 0.05, "{p}");
    }

    #[test]
    fn noise_is_aperiodic() {
        let mut rng = ChaCha8Rng::seed_from_u64(11);
        let n = Normal::new(0.0, 1.0).unwrap();
        let x: Vec<f64> = (0..1500).map(|_| n.sample(&mut rng)).collect();
        assert_eq!(estimate_period(&x, 0.01).unwrap(), None);
    }

    #[test]
    fn too_short() {
        assert!(matches!(estimate_period(&[0.0; 300], 0.01), Err(AnalysisError::TooShort { .. })));
        assert_eq!(estimate_period(&[1.0; 500], 0.01).unwrap(), None);
    }
}
