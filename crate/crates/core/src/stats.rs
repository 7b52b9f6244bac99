use serde::{Deserialize, Serialize};

/// Sample mean with its standard error.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Estimate {
    pub mean: f64,
    pub std_error: f64,
    pub samples: u64,
}

impl Estimate {
    /// Mean of i.i.d. observations; the standard error uses the unbiased
    /// sample variance and is 0 for fewer than two samples.
    pub fn from_samples(xs: &[f64]) -> Self {
        let n = xs.len();
        if n == 0 {
            return Self {
                mean: f64::NAN,
                std_error: f64::NAN,
                samples: 0,
            };
        }
        let mean = xs.iter().sum::<f64>() / n as f64;
        let std_error = if n < 2 {
            0.0
        } else {
            let var = xs.iter().map(|x| (x - mean).powi(2)).sum::<f64>() / (n - 1) as f64;
            (var / n as f64).sqrt()
        };
        Self {
            mean,
            std_error,
            samples: n as u64,
        }
    }

    /// Binomial proportion `successes / trials`.
    pub fn proportion(successes: u64, trials: u64) -> Self {
        if trials == 0 {
            return Self {
                mean: f64::NAN,
                std_error: f64::NAN,
                samples: 0,
            };
        }
        let p = successes as f64 / trials as f64;
        Self {
            mean: p,
            std_error: (p * (1.0 - p) / trials as f64).sqrt(),
            samples: trials,
        }
    }

    /// `|mean - target| <= k * std_error`.
    pub fn within(&self, target: f64, k: f64) -> bool {
        (self.mean - target).abs() <= k * self.std_error
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn sample_estimate() {
        let e = Estimate::from_samples(&[1.0, 2.0, 3.0, 4.0]);
        assert_eq!(e.mean, 2.5);
        assert!((e.std_error - (5.0f64 / 3.0 / 4.0).sqrt()).abs() < 1e-15);
        assert_eq!(Estimate::from_samples(&[3.0]).std_error, 0.0);
        assert!(Estimate::from_samples(&[]).mean.is_nan());
    }

    #[test]
    fn proportion_estimate() {
        let e = Estimate::proportion(25, 100);
        assert_eq!(e.mean, 0.25);
        assert!((e.std_error - (0.25f64 * 0.75 / 100.0).sqrt()).abs() < 1e-15);
        assert!(e.within(0.3, 2.0));
        assert!(!e.within(0.4, 2.0));
    }
}
