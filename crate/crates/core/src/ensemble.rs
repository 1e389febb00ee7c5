//! Deterministic parallel evaluation of per-sample Monte Carlo values.
//!
//! Samples are computed independently (each from its own RNG stream),
//! gathered in index order and reduced sequentially, so the result does
//! not depend on the number of workers.

use rayon::prelude::*;
use serde::Serialize;

use crate::error::{Error, Result};

/// Number of worker threads used for ensembles.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct Workers(pub usize);

impl Default for Workers {
    fn default() -> Self {
        Workers(1)
    }
}

impl Workers {
    pub fn available() -> Self {
        Workers(std::thread::available_parallelism().map_or(1, |n| n.get()))
    }
}

/// Evaluates `f(i)` for `i in 0..n` on `workers` threads and returns the
/// values in index order.
pub fn map_samples<T, F>(n: usize, workers: Workers, f: F) -> Result<Vec<T>>
where
    T: Send,
    F: Fn(u64) -> Result<T> + Sync + Send,
{
    if workers.0 <= 1 {
        return (0..n as u64).map(f).collect();
    }
    let pool = rayon::ThreadPoolBuilder::new()
        .num_threads(workers.0)
        .build()
        .map_err(|e| Error::param("workers", e.to_string()))?;
    pool.install(|| (0..n as u64).into_par_iter().map(&f).collect())
}

/// A Monte Carlo mean with its standard error.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct EstimateWithError {
    pub value: f64,
    /// Sample standard deviation over `sqrt(n_samples)`.
    pub std_error: f64,
    pub n_samples: usize,
    pub seed: u64,
}

impl EstimateWithError {
    /// Two-pass mean and unbiased variance in index order.
    pub fn from_samples(samples: &[f64], seed: u64) -> Self {
        let n = samples.len();
        if n == 0 {
            return EstimateWithError {
                value: f64::NAN,
                std_error: f64::NAN,
                n_samples: 0,
                seed,
            };
        }
        let mean = samples.iter().sum::<f64>() / n as f64;
        let var = if n > 1 {
            samples.iter().map(|x| (x - mean) * (x - mean)).sum::<f64>() / (n - 1) as f64
        } else {
            0.0
        };
        EstimateWithError {
            value: mean,
            std_error: (var / n as f64).sqrt(),
            n_samples: n,
            seed,
        }
    }

    pub fn scaled(self, factor: f64) -> Self {
        EstimateWithError {
            value: self.value * factor,
            std_error: self.std_error * factor.abs(),
            ..self
        }
    }

    /// `|value - reference| / std_error`; infinite for a zero-variance
    /// estimate that misses the reference.
    pub fn z_score(&self, reference: f64) -> f64 {
        let gap = (self.value - reference).abs();
        if gap == 0.0 {
            0.0
        } else {
            gap / self.std_error
        }
    }

    pub fn within_sigmas(&self, reference: f64, k: f64) -> bool {
        self.z_score(reference) <= k
    }
}
