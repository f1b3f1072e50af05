use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, Normal};
use serde::{Deserialize, Serialize};

use super::{SampledSignal, SymbolicTransient};
use crate::error::{Error, Result};
use crate::scalar::Real;

/// Observation grid for synthetic data.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum TimeGrid {
    /// `start + i·step` for `i < count`.
    Uniform { start: f64, step: f64, count: usize },
    Explicit(Vec<f64>),
}

impl TimeGrid {
    /// `count` points spanning `[0, horizon]` inclusive.
    pub fn spanning(horizon: f64, count: usize) -> Self {
        let step = if count > 1 {
            horizon / (count - 1) as f64
        } else {
            horizon
        };
        TimeGrid::Uniform {
            start: 0.0,
            step,
            count,
        }
    }

    pub fn times(&self) -> Vec<f64> {
        match self {
            TimeGrid::Uniform { start, step, count } => {
                (0..*count).map(|i| start + step * i as f64).collect()
            }
            TimeGrid::Explicit(t) => t.clone(),
        }
    }
}

/// Samples `s` on `grid` and adds i.i.d. Gaussian noise from a seeded generator.
pub fn synthesize_samples<T: Real>(
    s: &SymbolicTransient<T>,
    grid: &TimeGrid,
    noise_sigma: f64,
    seed: u64,
) -> Result<SampledSignal<T>> {
    if !(noise_sigma >= 0.0) {
        return Err(Error::InvalidConfig(format!(
            "noise_sigma = {noise_sigma} must be non-negative"
        )));
    }
    let times: Vec<T> = grid
        .times()
        .into_iter()
        .map(|t| T::from_f64(t).unwrap())
        .collect();
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let normal = Normal::new(0.0, noise_sigma)
        .map_err(|e| Error::InvalidConfig(format!("noise: {e}")))?;
    let values = times
        .iter()
        .map(|&t| {
            let clean = s.evaluate(t);
            if noise_sigma > 0.0 {
                clean + T::from_f64(normal.sample(&mut rng)).unwrap()
            } else {
                clean
            }
        })
        .collect();
    let sampled = SampledSignal::new(times, values)?;
    Ok(match grid {
        TimeGrid::Uniform { start, step, .. } if sampled.len() > 1 => SampledSignal::uniform(
            T::from_f64(*start).unwrap(),
            T::from_f64(*step).unwrap(),
            sampled.values().to_vec(),
        )?,
        _ => sampled,
    })
}
