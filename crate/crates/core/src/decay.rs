//! Counting and timing primitives for metastable nuclei.
//!
//! All durations are in days.

use std::f64::consts::LN_2;

use rand::Rng;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result, Warning};

/// Above this mean the per-sample redundancy is no longer small.
pub const MU_WARN_THRESHOLD: f64 = 0.5;

/// Exponential decay law, parameterized by the mean lifetime `tau_D`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(try_from = "DecayParamsRepr", into = "DecayParamsRepr")]
pub struct DecayParams {
    mean_life: f64,
}

/// Written as a mean life; either form is read.
#[derive(Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
struct DecayParamsRepr {
    #[serde(default, skip_serializing_if = "Option::is_none")]
    mean_life_days: Option<f64>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    half_life_days: Option<f64>,
}

impl TryFrom<DecayParamsRepr> for DecayParams {
    type Error = Error;
    fn try_from(r: DecayParamsRepr) -> Result<Self> {
        match (r.mean_life_days, r.half_life_days) {
            (Some(tau), None) => DecayParams::from_mean_life(tau),
            (None, Some(t)) => DecayParams::from_half_life(t),
            _ => Err(Error::domain(
                "give exactly one of mean_life_days and half_life_days",
            )),
        }
    }
}

impl From<DecayParams> for DecayParamsRepr {
    fn from(d: DecayParams) -> Self {
        Self {
            mean_life_days: Some(d.mean_life),
            half_life_days: None,
        }
    }
}

impl DecayParams {
    pub fn from_mean_life(mean_life: f64) -> Result<Self> {
        if !(mean_life > 0.0 && mean_life.is_finite()) {
            return Err(Error::domain(format!(
                "mean lifetime must be positive and finite, got {mean_life}"
            )));
        }
        Ok(Self { mean_life })
    }

    pub fn from_half_life(half_life: f64) -> Result<Self> {
        Self::from_mean_life(half_life_to_mean_life(half_life)?)
    }

    /// `tau_D`, days.
    pub fn mean_life(&self) -> f64 {
        self.mean_life
    }

    /// `T_1/2 = ln 2 * tau_D`, days.
    pub fn half_life(&self) -> f64 {
        LN_2 * self.mean_life
    }
}

pub fn half_life_to_mean_life(half_life: f64) -> Result<f64> {
    if !(half_life > 0.0 && half_life.is_finite()) {
        return Err(Error::domain(format!(
            "half-life must be positive and finite, got {half_life}"
        )));
    }
    Ok(half_life / LN_2)
}

/// Probability that a nucleus alive at time 0 has decayed by `elapsed`.
pub fn decay_probability(elapsed: f64, decay: &DecayParams) -> Result<f64> {
    if !(elapsed >= 0.0) {
        return Err(Error::domain(format!(
            "elapsed time must be non-negative, got {elapsed}"
        )));
    }
    Ok(-(-elapsed / decay.mean_life).exp_m1())
}

/// Decay time of one nucleus, measured from its production.
pub fn sample_decay_time<R: Rng + ?Sized>(decay: &DecayParams, rng: &mut R) -> f64 {
    // 1 - u lies in (0, 1], so the log is finite
    let u: f64 = rng.random();
    -decay.mean_life * (1.0 - u).ln()
}

/// Mean number of excited nuclei in one standard sample.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct SourceParams {
    pub mu: f64,
}

impl SourceParams {
    pub fn new(mu: f64) -> Result<Self> {
        if !(mu >= 0.0 && mu.is_finite()) {
            return Err(Error::domain(format!(
                "mu must be finite and >= 0, got {mu}"
            )));
        }
        if mu >= 10.0 {
            return Err(Error::domain(format!(
                "mu = {mu} is outside the inversion sampler's range (< 10)"
            )));
        }
        Ok(Self { mu })
    }

    pub fn warnings(&self) -> Vec<Warning> {
        if self.mu > MU_WARN_THRESHOLD {
            vec![Warning::new(
                "mu",
                format!(
                    "mu = {} is not small; multi-nucleus samples become common",
                    self.mu
                ),
            )]
        } else {
            Vec::new()
        }
    }

    /// `P(N = 0) = exp(-mu)`.
    pub fn p_empty(&self) -> f64 {
        (-self.mu).exp()
    }

    pub fn pmf(&self, n: u32) -> f64 {
        let mut p = (-self.mu).exp();
        for k in 1..=n {
            p *= self.mu / f64::from(k);
        }
        p
    }
}

/// Poisson(`mu`) draw for one standard sample.
pub fn sample_excited_count<R: Rng + ?Sized>(source: &SourceParams, rng: &mut R) -> u32 {
    poisson_by_inversion(source.mu, rng)
}

/// Sequential inversion. Exact for the small means used here; `mean` must
/// stay well below ~700 so that `exp(-mean)` does not underflow.
pub(crate) fn poisson_by_inversion<R: Rng + ?Sized>(mean: f64, rng: &mut R) -> u32 {
    if mean <= 0.0 {
        return 0;
    }
    let u: f64 = rng.random();
    let mut p = (-mean).exp();
    let mut cdf = p;
    let mut n = 0u32;
    while u >= cdf {
        n += 1;
        p *= mean / f64::from(n);
        if p == 0.0 && f64::from(n) > mean {
            // cdf rounded short of 1; u sits in the unrepresentable tail
            break;
        }
        cdf += p;
    }
    n
}

/// Explicit count distribution, `probabilities[n] = P(N = n)`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(try_from = "Vec<f64>", into = "Vec<f64>")]
pub struct CountTable {
    probabilities: Vec<f64>,
    cumulative: Vec<f64>,
}

impl TryFrom<Vec<f64>> for CountTable {
    type Error = Error;
    fn try_from(p: Vec<f64>) -> Result<Self> {
        CountTable::new(p)
    }
}

impl From<CountTable> for Vec<f64> {
    fn from(t: CountTable) -> Self {
        t.probabilities
    }
}

impl CountTable {
    pub fn new(probabilities: Vec<f64>) -> Result<Self> {
        if probabilities.is_empty() {
            return Err(Error::domain("count table is empty"));
        }
        if probabilities.iter().any(|p| !(*p >= 0.0 && p.is_finite())) {
            return Err(Error::domain(
                "count table has a negative or non-finite entry",
            ));
        }
        let total: f64 = probabilities.iter().sum();
        if (total - 1.0).abs() > 1e-9 {
            return Err(Error::domain(format!("count table sums to {total}, not 1")));
        }
        let mut acc = 0.0;
        let cumulative = probabilities
            .iter()
            .map(|p| {
                acc += p;
                acc
            })
            .collect();
        Ok(Self {
            probabilities,
            cumulative,
        })
    }

    pub fn probabilities(&self) -> &[f64] {
        &self.probabilities
    }

    pub fn pmf(&self, n: u32) -> f64 {
        self.probabilities.get(n as usize).copied().unwrap_or(0.0)
    }

    pub fn mean(&self) -> f64 {
        self.probabilities
            .iter()
            .enumerate()
            .map(|(n, p)| n as f64 * p)
            .sum()
    }

    pub fn sample<R: Rng + ?Sized>(&self, rng: &mut R) -> u32 {
        let u: f64 = rng.random::<f64>() * self.cumulative[self.cumulative.len() - 1];
        let idx = self.cumulative.partition_point(|&c| c <= u);
        idx.min(self.probabilities.len() - 1) as u32
    }
}

/// Per-sample excited-nucleus count law.
///
/// Poisson is the default; a table covers sources whose dilution statistics
/// were calibrated empirically.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum CountDistribution {
    Poisson(SourceParams),
    Table(CountTable),
}

impl From<SourceParams> for CountDistribution {
    fn from(s: SourceParams) -> Self {
        CountDistribution::Poisson(s)
    }
}

impl CountDistribution {
    pub fn poisson(mu: f64) -> Result<Self> {
        Ok(CountDistribution::Poisson(SourceParams::new(mu)?))
    }

    pub fn mean(&self) -> f64 {
        match self {
            CountDistribution::Poisson(s) => s.mu,
            CountDistribution::Table(t) => t.mean(),
        }
    }

    pub fn pmf(&self, n: u32) -> f64 {
        match self {
            CountDistribution::Poisson(s) => s.pmf(n),
            CountDistribution::Table(t) => t.pmf(n),
        }
    }

    pub fn sample<R: Rng + ?Sized>(&self, rng: &mut R) -> u32 {
        match self {
            CountDistribution::Poisson(s) => sample_excited_count(s, rng),
            CountDistribution::Table(t) => t.sample(rng),
        }
    }

    pub fn warnings(&self) -> Vec<Warning> {
        match self {
            CountDistribution::Poisson(s) => s.warnings(),
            CountDistribution::Table(t) if t.mean() > MU_WARN_THRESHOLD => vec![Warning::new(
                "count_table",
                format!("table mean {} is not small", t.mean()),
            )],
            CountDistribution::Table(_) => Vec::new(),
        }
    }

    /// The law conditioned on `N >= 1`, tabulated until the tail mass
    /// drops below `1e-15`.
    pub fn conditional_nonempty(&self) -> Result<CountTable> {
        let empty = self.pmf(0);
        let nonempty = 1.0 - empty;
        if nonempty <= 0.0 {
            return Err(Error::domain("source never produces an excited nucleus"));
        }
        let mut probs = vec![0.0];
        let mut covered = 0.0;
        let mut n = 1u32;
        while nonempty - covered > 1e-15 * nonempty && n < 200 {
            let p = self.pmf(n);
            if let CountDistribution::Table(t) = self {
                if n as usize >= t.probabilities().len() {
                    break;
                }
            }
            probs.push(p / nonempty);
            covered += p;
            n += 1;
        }
        // renormalize away the truncated tail
        let total: f64 = probs.iter().sum();
        probs.iter_mut().for_each(|p| *p /= total);
        CountTable::new(probs)
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::rng::RngSeed;

    #[test]
    fn half_life_conversion() {
        assert!((half_life_to_mean_life(LN_2).unwrap() - 1.0).abs() < 1e-15);
        assert_eq!(half_life_to_mean_life(LN_2).unwrap(), 1.0);
        // Sn-117m
        let tau = half_life_to_mean_life(13.6).unwrap();
        assert!((tau - 19.620_652_556_089_9).abs() < 1e-9, "{tau}");
        assert!(half_life_to_mean_life(0.0).is_err());
        assert!(half_life_to_mean_life(-1.0).is_err());
    }

    #[test]
    fn decay_params_round_trip_half_life() {
        let d = DecayParams::from_half_life(13.6).unwrap();
        assert!((d.half_life() - 13.6).abs() < 1e-12);
        assert!(DecayParams::from_mean_life(0.0).is_err());
    }

    #[test]
    fn decay_probability_values() {
        let d = DecayParams::from_mean_life(2.5).unwrap();
        assert_eq!(decay_probability(0.0, &d).unwrap(), 0.0);
        assert!((decay_probability(d.half_life(), &d).unwrap() - 0.5).abs() < 1e-15);
        let one = decay_probability(2.5, &d).unwrap();
        assert!((one - 0.632_120_558_828_557_7).abs() < 1e-15);
        assert!(decay_probability(-1e-9, &d).is_err());
        assert!(decay_probability(f64::NAN, &d).is_err());
    }

    #[test]
    fn zero_mu_is_always_empty() {
        let s = SourceParams::new(0.0).unwrap();
        let mut rng = RngSeed::new(1).stream("t", 0);
        assert!((0..10_000).all(|_| sample_excited_count(&s, &mut rng) == 0));
    }

    #[test]
    fn source_validation() {
        assert!(SourceParams::new(-0.1).is_err());
        assert!(SourceParams::new(12.0).is_err());
        assert!(SourceParams::new(0.1).unwrap().warnings().is_empty());
        assert_eq!(SourceParams::new(0.8).unwrap().warnings().len(), 1);
    }

    #[test]
    fn count_table_validation_and_sampling() {
        assert!(CountTable::new(vec![0.5, 0.4]).is_err());
        assert!(CountTable::new(vec![1.1, -0.1]).is_err());
        let t = CountTable::new(vec![0.0, 0.25, 0.75]).unwrap();
        let mut rng = RngSeed::new(3).stream("t", 0);
        let n = 100_000;
        let twos = (0..n).filter(|_| t.sample(&mut rng) == 2).count();
        let se = (0.75f64 * 0.25 / n as f64).sqrt();
        assert!((twos as f64 / n as f64 - 0.75).abs() < 4.0 * se);
    }

    #[test]
    fn conditional_nonempty_poisson() {
        let d = CountDistribution::poisson(0.1).unwrap();
        let c = d.conditional_nonempty().unwrap();
        assert_eq!(c.pmf(0), 0.0);
        let expect1 = 0.1 * (-0.1f64).exp() / (1.0 - (-0.1f64).exp());
        assert!((c.pmf(1) - expect1).abs() < 1e-12);
        assert!((c.probabilities().iter().sum::<f64>() - 1.0).abs() < 1e-12);
        assert!(CountDistribution::poisson(0.0)
            .unwrap()
            .conditional_nonempty()
            .is_err());
    }
}
