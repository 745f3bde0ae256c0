//! Descriptive statistics for benchmark samples.

use serde::{Deserialize, Serialize};

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Stats {
    pub n: usize,
    /// Lower median: element `(n - 1) / 2` of the sorted samples.
    pub median: f64,
    /// Sample standard deviation (divisor `n - 1`); 0 when `n < 2`.
    pub std_dev: f64,
    pub min: f64,
    pub max: f64,
}

impl Stats {
    /// `None` for an empty slice.
    pub fn of(xs: &[f64]) -> Option<Stats> {
        if xs.is_empty() {
            return None;
        }
        let mut sorted = xs.to_vec();
        sorted.sort_by(f64::total_cmp);
        // Welford's online update.
        let (mut mean, mut m2) = (0.0, 0.0);
        for (i, &x) in xs.iter().enumerate() {
            let d = x - mean;
            mean += d / (i + 1) as f64;
            m2 += d * (x - mean);
        }
        let n = xs.len();
        Some(Stats {
            n,
            median: sorted[(n - 1) / 2],
            std_dev: if n < 2 { 0.0 } else { (m2 / (n - 1) as f64).max(0.0).sqrt() },
            min: sorted[0],
            max: sorted[n - 1],
        })
    }

    /// Fewer than three samples make the standard deviation unreliable.
    pub fn small_sample(&self) -> bool {
        self.n < 3
    }
}

pub fn mean(xs: &[f64]) -> f64 {
    xs.iter().sum::<f64>() / xs.len() as f64
}
