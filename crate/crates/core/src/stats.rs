use serde::Serialize;

/// Sample mean with its standard error.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct MeanStderr {
    pub mean: f64,
    pub stderr: f64,
    pub n: u64,
}

impl MeanStderr {
    /// Two-pass mean and standard error of the mean, summed in slice order.
    pub fn from_samples(xs: &[f64]) -> Self {
        let n = xs.len();
        if n == 0 {
            return Self { mean: f64::NAN, stderr: f64::NAN, n: 0 };
        }
        let mean = xs.iter().sum::<f64>() / n as f64;
        let stderr = if n > 1 {
            let ss: f64 = xs.iter().map(|x| (x - mean) * (x - mean)).sum();
            (ss / (n - 1) as f64 / n as f64).sqrt()
        } else {
            0.0
        };
        Self { mean, stderr, n: n as u64 }
    }

    /// Proportion of successes with the binomial standard error.
    pub fn from_counts(successes: u64, trials: u64) -> Self {
        let p = successes as f64 / trials as f64;
        Self { mean: p, stderr: (p * (1.0 - p) / trials as f64).sqrt(), n: trials }
    }

    /// `|a - b|` in units of the pooled standard error of two independent estimates.
    pub fn z_distance(&self, other: &MeanStderr) -> f64 {
        let s = (self.stderr * self.stderr + other.stderr * other.stderr).sqrt();
        (self.mean - other.mean).abs() / s
    }

    /// `|mean - value|` in units of this estimate's standard error.
    pub fn z_to(&self, value: f64) -> f64 {
        (self.mean - value).abs() / self.stderr
    }
}
