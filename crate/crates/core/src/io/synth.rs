//! Synthetic spatially correlated traces.
//!
//! Latent sources sit at sensor positions and follow unit-variance AR(1)
//! processes. Sensor `i` sees `offset + amplitude · Σ_j a_ij s_j[t]` plus white
//! noise, with `a_ij ∝ exp(-d_ij / ℓ)` normalized over `j`.

use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, StandardNormal};

use crate::error::{Error, Result};
use crate::io::trace::EpochTrace;
use crate::topology::SensorField;

#[derive(Debug, Clone, PartialEq)]
pub struct SynthSpec {
    pub epochs: usize,
    /// Meters; 0 gives independent sensors, infinity a single shared signal.
    pub correlation_length: f64,
    /// Standard deviation of the white noise.
    pub noise: f64,
    pub seed: u64,
    /// Number of latent sources; all sensors when `None`.
    pub sources: Option<usize>,
    pub amplitude: f64,
    /// AR(1) coefficient of the sources, in `[0, 1)`.
    pub smoothness: f64,
    pub offset: f64,
    pub epoch_seconds: f64,
}

impl Default for SynthSpec {
    fn default() -> Self {
        Self {
            epochs: 2880,
            correlation_length: 10.0,
            noise: 0.1,
            seed: 1,
            sources: None,
            amplitude: 2.0,
            smoothness: 0.99,
            offset: 20.0,
            epoch_seconds: 30.0,
        }
    }
}

impl SynthSpec {
    pub fn validate(&self, p: usize) -> Result<()> {
        if p == 0 {
            return Err(Error::Config("synthetic field has no sensors".into()));
        }
        if self.epochs < 2 {
            return Err(Error::Config(format!("need at least 2 epochs, got {}", self.epochs)));
        }
        if !(self.correlation_length >= 0.0) {
            return Err(Error::Config("correlation length must be non-negative".into()));
        }
        if !(self.noise >= 0.0) || !self.amplitude.is_finite() || !(self.amplitude >= 0.0) {
            return Err(Error::Config("noise and amplitude must be non-negative".into()));
        }
        if !(0.0..1.0).contains(&self.smoothness) {
            return Err(Error::Config(format!("smoothness must be in [0, 1), got {}", self.smoothness)));
        }
        if matches!(self.sources, Some(r) if r == 0 || r > p) {
            return Err(Error::Config(format!("sources must be in 1..={p}")));
        }
        if !(self.epoch_seconds > 0.0) {
            return Err(Error::Config("epoch length must be positive".into()));
        }
        Ok(())
    }
}

/// Mixing matrix `a[i][j]`, sensor `i` by source `j`.
pub fn mixing_weights(field: &SensorField, sources: &[usize], length: f64) -> Vec<Vec<f64>> {
    (0..field.len())
        .map(|i| {
            let raw: Vec<f64> = sources
                .iter()
                .map(|&j| {
                    let d = field.distance(i, j);
                    if length.is_infinite() {
                        1.0
                    } else if length == 0.0 {
                        if d == 0.0 { 1.0 } else { 0.0 }
                    } else {
                        (-d / length).exp()
                    }
                })
                .collect();
            let total: f64 = raw.iter().sum();
            if total > 0.0 {
                raw.into_iter().map(|a| a / total).collect()
            } else {
                raw
            }
        })
        .collect()
}

/// Evenly spread source sensors.
fn source_sites(p: usize, r: usize) -> Vec<usize> {
    (0..r).map(|k| k * p / r).collect()
}

pub fn generate_synthetic(spec: &SynthSpec, field: &SensorField) -> Result<EpochTrace> {
    let p = field.len();
    spec.validate(p)?;
    let sites = source_sites(p, spec.sources.unwrap_or(p));
    let a = mixing_weights(field, &sites, spec.correlation_length);
    let mut rng = ChaCha8Rng::seed_from_u64(spec.seed);
    let innovation = (1.0 - spec.smoothness * spec.smoothness).sqrt();
    let mut s: Vec<f64> = sites.iter().map(|_| StandardNormal.sample(&mut rng)).collect();
    let mut samples = Vec::with_capacity(spec.epochs);
    for t in 0..spec.epochs {
        if t > 0 {
            for sj in &mut s {
                let e: f64 = StandardNormal.sample(&mut rng);
                *sj = spec.smoothness * *sj + innovation * e;
            }
        }
        let x: Vec<f64> = a
            .iter()
            .map(|row| {
                let signal: f64 = row.iter().zip(&s).map(|(w, v)| w * v).sum();
                let e: f64 = StandardNormal.sample(&mut rng);
                spec.offset + spec.amplitude * signal + spec.noise * e
            })
            .collect();
        samples.push(x);
    }
    let timestamps = (0..spec.epochs).map(|t| t as f64 * spec.epoch_seconds).collect();
    EpochTrace::new(field.ids(), timestamps, samples)
}
