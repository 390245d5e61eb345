//! Synthetic anomaly series and the difference/normalize/window pipeline.

use alloc::format;
use alloc::vec;
use alloc::vec::Vec;

use rand::seq::index;
use rand::Rng;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, Normal};

use super::LabeledDataset;
use crate::error::{Error, Result};
use crate::matrix::Matrix;

/// Generative parameters of one series regime.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct SeriesSpec {
    pub length: usize,
    pub period: f64,
    pub amplitude: f64,
    pub noise: f64,
    /// Linear drift added per step.
    pub trend: f64,
    pub anomaly_count: usize,
    pub anomaly_min: f64,
    pub anomaly_max: f64,
    pub seed: u64,
}

impl Default for SeriesSpec {
    fn default() -> Self {
        Self {
            length: 5000,
            period: 50.0,
            amplitude: 1.0,
            noise: 0.1,
            trend: 0.0,
            anomaly_count: 10,
            anomaly_min: 1.0,
            anomaly_max: 2.0,
            seed: 0,
        }
    }
}

impl SeriesSpec {
    pub fn validate(&self) -> Result<()> {
        if self.anomaly_count * 10 >= self.length {
            return Err(Error::Config(format!(
                "anomaly_count {} must stay below length/10",
                self.anomaly_count
            )));
        }
        if !(self.period > 0.0 && self.noise > 0.0 && self.amplitude >= 0.0) {
            return Err(Error::Config("period and noise must be positive, amplitude >= 0".into()));
        }
        if !(self.anomaly_min > 0.0 && self.anomaly_max >= self.anomaly_min) || !self.anomaly_max.is_finite() {
            return Err(Error::Config("anomaly magnitudes must satisfy 0 < min <= max".into()));
        }
        if !self.trend.is_finite() {
            return Err(Error::Config("trend must be finite".into()));
        }
        Ok(())
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct AnomalySeries {
    pub values: Vec<f64>,
    pub flags: Vec<bool>,
}

/// Sinusoid + drift + Gaussian noise with spikes of random sign injected at
/// distinct uniformly drawn positions.
pub fn gen_anomaly_series(spec: &SeriesSpec) -> Result<AnomalySeries> {
    spec.validate()?;
    let mut rng = ChaCha8Rng::seed_from_u64(spec.seed);
    let noise = Normal::new(0.0, spec.noise).map_err(|e| Error::Config(format!("noise: {e}")))?;
    let mut values: Vec<f64> = (0..spec.length)
        .map(|t| {
            let phase = core::f64::consts::TAU * t as f64 / spec.period;
            spec.amplitude * libm::sin(phase) + spec.trend * t as f64 + noise.sample(&mut rng)
        })
        .collect();
    let mut flags = vec![false; spec.length];
    for pos in index::sample(&mut rng, spec.length, spec.anomaly_count).into_vec() {
        let magnitude = rng.random_range(spec.anomaly_min..=spec.anomaly_max);
        let sign = if rng.random_bool(0.5) { 1.0 } else { -1.0 };
        values[pos] += sign * magnitude;
        flags[pos] = true;
    }
    Ok(AnomalySeries { values, flags })
}

/// First differences, z-normalized with the population mean and standard deviation.
pub fn normalized_differences(series: &[f64]) -> Result<Vec<f64>> {
    if series.len() < 2 {
        return Err(Error::DegenerateSeries("need at least two points to difference".into()));
    }
    let diffs: Vec<f64> = series.windows(2).map(|w| w[1] - w[0]).collect();
    let n = diffs.len() as f64;
    let mean = diffs.iter().sum::<f64>() / n;
    let var = diffs.iter().map(|d| (d - mean) * (d - mean)).sum::<f64>() / n;
    let std = libm::sqrt(var);
    if !(std > 0.0) || !std.is_finite() {
        return Err(Error::DegenerateSeries("differenced series has zero standard deviation".into()));
    }
    Ok(diffs.into_iter().map(|d| (d - mean) / std).collect())
}

/// Turns a series into windowed samples.
///
/// Each sample holds the current normalized difference and the `window − 1`
/// before it, oldest first. The label is the anomaly flag of the current point.
/// Points without a full history are dropped, leaving `len − window` samples.
pub fn window_preprocess(series: &[f64], flags: &[bool], window: usize) -> Result<LabeledDataset> {
    if window == 0 {
        return Err(Error::Config("window must be at least 1".into()));
    }
    if series.len() != flags.len() {
        return Err(Error::Shape(format!(
            "{} series points but {} flags",
            series.len(),
            flags.len()
        )));
    }
    if series.len() <= window + 1 {
        return Err(Error::Config(format!(
            "series of length {} too short for window {window}",
            series.len()
        )));
    }
    let diffs = normalized_differences(series)?;
    let count = diffs.len() - (window - 1);
    let mut data = Vec::with_capacity(count * window);
    let mut labels = Vec::with_capacity(count);
    for end in window - 1..diffs.len() {
        data.extend(diffs[end + 1 - window..=end].iter().map(|&v| v as f32));
        // diffs[k] = series[k + 1] - series[k], so the current point is k + 1
        labels.push(usize::from(flags[end + 1]));
    }
    LabeledDataset::new(Matrix::from_vec(count, window, data)?, labels, 2, format!("series(window={window})"))
}
