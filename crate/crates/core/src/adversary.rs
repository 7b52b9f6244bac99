//! Eavesdropping strategies against a plate in transit, Bob's statistical
//! check on the arrival count, and the closed-form bounds on what Eve can
//! learn.
//!
//! Three bounds are tracked, all functions of `x = (tau_P + tau_T) / tau_D`
//! and `y = tau_B / tau_D`:
//!
//! * translucent: `mu * (1 - e^-x) * e^-x * (1 - e^-y)`, Eve reads one decay
//!   of a two-nucleus sample and the partner decays later for Bob;
//! * intercept-resend: `s * sqrt(mu P / ((1 - P) (1 - e^{-eps mu})^2)) / sqrt(N)`,
//!   the most Eve can substitute while hiding inside `s` standard deviations
//!   of Bob's arrival count;
//! * fraction: `P = 1 - e^-x`, everything that decayed before arrival, for
//!   when Bob cannot inspect the plate at arrival.

use rand::seq::index;
use rand::Rng;
use serde::{Deserialize, Serialize};

use crate::decay::{sample_decay_time, CountDistribution, CountTable};
use crate::error::{Error, Result, Warning};
use crate::protocol::{Phase, Plate, Scenario, SiftOutcome, TimelineParams};
use crate::stats::Estimate;

pub const DEFAULT_SIGMAS: f64 = 5.0;
pub const DEFAULT_EVASION_CONFIDENCE: f64 = 0.95;

#[derive(Debug, Clone, Copy, Default, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "SCREAMING_SNAKE_CASE")]
pub enum Strategy {
    #[default]
    None,
    Translucent,
    Opaque,
    Both,
}

impl Strategy {
    pub fn translucent(self) -> bool {
        matches!(self, Strategy::Translucent | Strategy::Both)
    }

    pub fn opaque(self) -> bool {
        matches!(self, Strategy::Opaque | Strategy::Both)
    }
}

/// Number of decayed samples Eve swaps for bright ones.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(untagged)]
pub enum Budget {
    Fixed(usize),
    Auto(AutoBudget),
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum AutoBudget {
    /// Largest replacement count that still evades Bob's test with the
    /// configured confidence.
    Auto,
}

impl Default for Budget {
    fn default() -> Self {
        Budget::Fixed(0)
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct AttackConfig {
    #[serde(default)]
    pub strategy: Strategy,
    /// Observation interval `[start, end]` in days on the production clock.
    /// Defaults to `[0, tau_P + tau_T]`.
    #[serde(default)]
    pub window: Option<[f64; 2]>,
    #[serde(default)]
    pub budget: Budget,
    #[serde(default = "one")]
    pub epsilon_eve: f64,
    /// Probability with which an auto budget must evade Bob's test.
    #[serde(default = "default_confidence")]
    pub evasion_confidence: f64,
}

fn one() -> f64 {
    1.0
}

fn default_confidence() -> f64 {
    DEFAULT_EVASION_CONFIDENCE
}

impl Default for AttackConfig {
    fn default() -> Self {
        Self {
            strategy: Strategy::None,
            window: None,
            budget: Budget::default(),
            epsilon_eve: 1.0,
            evasion_confidence: DEFAULT_EVASION_CONFIDENCE,
        }
    }
}

impl AttackConfig {
    pub fn new(strategy: Strategy) -> Self {
        Self {
            strategy,
            ..Self::default()
        }
    }

    /// Resolved observation window, checked against the timeline.
    pub fn window(&self, timeline: &TimelineParams) -> Result<(f64, f64)> {
        let arrival = timeline.arrival();
        let (start, end) = match self.window {
            None => (0.0, arrival),
            Some([s, e]) => (s, e),
        };
        if !(0.0 <= start && start <= end && end <= arrival) {
            return Err(Error::domain(format!(
                "eve window [{start}, {end}] must lie within [0, {arrival}]"
            )));
        }
        Ok((start, end))
    }

    pub fn check(&self, timeline: &TimelineParams) -> Result<()> {
        self.window(timeline)?;
        if !(0.0..=1.0).contains(&self.epsilon_eve) {
            return Err(Error::domain(format!(
                "epsilon_eve must lie in [0, 1], got {}",
                self.epsilon_eve
            )));
        }
        if !(self.evasion_confidence > 0.0 && self.evasion_confidence < 1.0) {
            return Err(Error::domain(format!(
                "evasion_confidence must lie in (0, 1), got {}",
                self.evasion_confidence
            )));
        }
        Ok(())
    }
}

/// Eve's source of samples holding at least one excited nucleus, with the
/// same relative populations of singlets, pairs, triplets as Alice's.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct BrightSourceSpec {
    table: CountTable,
}

impl BrightSourceSpec {
    pub fn matching(source: &CountDistribution) -> Result<Self> {
        Ok(Self {
            table: source.conditional_nonempty()?,
        })
    }

    pub fn from_table(table: CountTable) -> Result<Self> {
        if table.pmf(0) != 0.0 {
            return Err(Error::domain("bright source must never be empty"));
        }
        Ok(Self { table })
    }

    pub fn table(&self) -> &CountTable {
        &self.table
    }

    pub fn sample<R: Rng + ?Sized>(&self, rng: &mut R) -> u32 {
        self.table.sample(rng)
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "SCREAMING_SNAKE_CASE")]
pub enum Mechanism {
    Translucent,
    Opaque,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub struct EveEntry {
    pub pair: usize,
    pub guess: bool,
    pub mechanism: Mechanism,
}

/// What Eve learned, at most one entry per pair, ascending by pair.
#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
pub struct EveRecord {
    pub entries: Vec<EveEntry>,
    pub replaced: usize,
    #[serde(default, skip_serializing_if = "Vec::is_empty")]
    pub warnings: Vec<Warning>,
}

/// Eve's guesses that hit a sifted bit.
#[derive(Debug, Clone, Copy, Default, PartialEq, Eq, Serialize, Deserialize)]
pub struct Knowledge {
    /// Sifted bits Eve guessed correctly.
    pub known: usize,
    /// Length of the sifted key.
    pub sifted: usize,
}

impl Knowledge {
    pub fn fraction(&self) -> f64 {
        if self.sifted == 0 {
            0.0
        } else {
            self.known as f64 / self.sifted as f64
        }
    }
}

impl EveRecord {
    /// Merges two records; on a shared pair the entry from `self` wins.
    pub fn merge(mut self, other: EveRecord) -> EveRecord {
        let mut entries = std::mem::take(&mut self.entries);
        let mine: std::collections::HashSet<usize> = entries.iter().map(|e| e.pair).collect();
        entries.extend(
            other
                .entries
                .into_iter()
                .filter(|e| !mine.contains(&e.pair)),
        );
        entries.sort_by_key(|e| e.pair);
        self.warnings.extend(other.warnings);
        EveRecord {
            entries,
            replaced: self.replaced + other.replaced,
            warnings: self.warnings,
        }
    }

    /// A pair counts as known only if it survived sifting and Eve's guess
    /// equals the bit Bob kept.
    pub fn knowledge(&self, sifted: &SiftOutcome) -> Knowledge {
        let announced = &sifted.transcript.announced;
        let known = self
            .entries
            .iter()
            .filter(|e| match announced.binary_search(&e.pair) {
                Ok(pos) => sifted.bob_raw[pos] == e.guess,
                Err(_) => false,
            })
            .count();
        Knowledge {
            known,
            sifted: announced.len(),
        }
    }
}

fn detected<R: Rng + ?Sized>(efficiency: f64, rng: &mut R) -> bool {
    efficiency >= 1.0 || (efficiency > 0.0 && rng.random::<f64>() < efficiency)
}

/// Passive attack. Eve watches the plate during her window and remembers
/// every multi-nucleus sample in which she saw exactly one decay. The plate
/// is left untouched.
///
/// Singlet samples are skipped: once their only nucleus has decayed they
/// can no longer reveal anything to Bob.
pub fn eve_translucent<R: Rng + ?Sized>(
    plate: &Plate,
    config: &AttackConfig,
    timeline: &TimelineParams,
    rng: &mut R,
) -> Result<EveRecord> {
    let (start, end) = config.window(timeline)?;
    let mut entries = Vec::new();
    for (pair, p) in plate.pairs().iter().enumerate() {
        if p.excited_count() < 2 {
            continue;
        }
        let seen = p
            .decay_times()
            .iter()
            .filter(|&&t| t >= start && t <= end && detected(config.epsilon_eve, rng))
            .count();
        if seen == 1 {
            entries.push(EveEntry {
                pair,
                guess: p.hidden_bit(),
                mechanism: Mechanism::Translucent,
            });
        }
    }
    Ok(EveRecord {
        entries,
        ..EveRecord::default()
    })
}

/// Translucent entries whose pair also reveals a decay during Bob's
/// revelation period: bits that Eve holds and that end up in the raw key
/// of an ideal detector. This is the event the first-order estimate counts.
pub fn translucent_successes(
    record: &EveRecord,
    plate: &Plate,
    timeline: &TimelineParams,
) -> usize {
    record
        .entries
        .iter()
        .filter(|e| e.mechanism == Mechanism::Translucent)
        .filter(|e| {
            plate.pairs()[e.pair]
                .decay_times()
                .iter()
                .any(|&t| Phase::of(t, timeline) == Phase::Revealed)
        })
        .count()
}

#[derive(Debug, Clone, PartialEq)]
pub struct OpaqueOutcome {
    pub plate: Plate,
    pub record: EveRecord,
    pub requested: usize,
}

/// Intercept-resend. Eve picks `budget` pairs in which she saw a decay
/// during her window, notes the bit, and replaces the sample with a fresh
/// bright one at the end of her window. The replacement's decay clocks start
/// at that moment.
///
/// A budget larger than the number of eligible pairs is truncated, with a
/// warning on the record.
pub fn eve_opaque<R: Rng + ?Sized>(
    plate: &Plate,
    config: &AttackConfig,
    bright: &BrightSourceSpec,
    timeline: &TimelineParams,
    budget: usize,
    rng: &mut R,
) -> Result<OpaqueOutcome> {
    let (start, end) = config.window(timeline)?;
    let candidates: Vec<usize> = plate
        .pairs()
        .iter()
        .enumerate()
        .filter(|(_, p)| {
            p.decay_times()
                .iter()
                .filter(|&&t| t >= start && t <= end)
                .any(|_| detected(config.epsilon_eve, rng))
        })
        .map(|(i, _)| i)
        .collect();

    let mut warnings = Vec::new();
    let k = if budget > candidates.len() {
        warnings.push(Warning::new(
            "budget",
            format!(
                "requested {budget} replacements but only {} decayed samples were seen",
                candidates.len()
            ),
        ));
        candidates.len()
    } else {
        budget
    };

    let mut chosen: Vec<usize> = index::sample(rng, candidates.len(), k)
        .into_iter()
        .map(|i| candidates[i])
        .collect();
    chosen.sort_unstable();

    let mut modified = plate.clone();
    let mut entries = Vec::with_capacity(k);
    for &pair in &chosen {
        let n = bright.sample(rng);
        let times = (0..n)
            .map(|_| end + sample_decay_time(&timeline.decay, rng))
            .collect();
        let cell = &mut modified.pairs_mut()[pair];
        entries.push(EveEntry {
            pair,
            guess: cell.hidden_bit(),
            mechanism: Mechanism::Opaque,
        });
        cell.replace_sample(times);
    }
    Ok(OpaqueOutcome {
        plate: modified,
        record: EveRecord {
            entries,
            replaced: k,
            warnings,
        },
        requested: budget,
    })
}

/// Outcome of Bob's arrival-count test.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct DetectionTest {
    pub observed: u64,
    pub expected: f64,
    pub std_dev: f64,
    pub z_score: f64,
    pub passed: bool,
}

/// Compares the number of decays Bob sees at arrival with its honest mean
/// `N mu P eps`. The variance is `N mu P (1 - P)` thinned by `eps`, a
/// binomial approximation of what is really a Poisson mixture. Fails when
/// the count falls more than `sigmas` standard deviations below the mean.
pub fn bob_detection_test(
    observed: u64,
    pairs: usize,
    mu: f64,
    p_fraction: f64,
    epsilon_bob: f64,
    sigmas: f64,
) -> DetectionTest {
    let n = pairs as f64;
    let expected = n * mu * p_fraction * epsilon_bob;
    let std_dev = (n * mu * p_fraction * (1.0 - p_fraction) * epsilon_bob)
        .max(0.0)
        .sqrt();
    let diff = observed as f64 - expected;
    let z_score = if std_dev > 0.0 {
        diff / std_dev
    } else if diff >= 0.0 {
        0.0
    } else {
        f64::NEG_INFINITY
    };
    DetectionTest {
        observed,
        expected,
        std_dev,
        z_score,
        passed: z_score >= -sigmas,
    }
}

/// Eve's automatic replacement budget: the largest `k` for which a
/// Chernoff bound on the Poisson arrival count still certifies that Bob's
/// test passes with probability `confidence`.
///
/// Each replacement removes on average `eps * lambda1 / (1 - e^-lambda1)`
/// detected decays (`lambda1 = mu P`, the mean decayed count of a sample
/// that decayed). With `rest = N mu P eps - k * removed`, `k` is admissible
/// when `rest - threshold >= sqrt(2 rest ln(1 / (1 - confidence)))`.
pub fn auto_budget(
    pairs: usize,
    mu: f64,
    p_fraction: f64,
    epsilon_bob: f64,
    sigmas: f64,
    confidence: f64,
) -> usize {
    let honest = bob_detection_test(0, pairs, mu, p_fraction, epsilon_bob, sigmas);
    let threshold = honest.expected - sigmas * honest.std_dev;
    let lambda1 = mu * p_fraction;
    if lambda1 <= 0.0 || epsilon_bob <= 0.0 {
        // Bob sees nothing at arrival; replacements are free
        return pairs;
    }
    let removed = epsilon_bob * lambda1 / -(-lambda1).exp_m1();
    let margin = 2.0 * (1.0 / (1.0 - confidence)).ln();
    let admissible = |k: usize| {
        let rest = honest.expected - k as f64 * removed;
        rest > 0.0 && rest - threshold >= (margin * rest).sqrt()
    };
    if !admissible(0) {
        return 0;
    }
    let mut k = 0;
    while k < pairs && admissible(k + 1) {
        k += 1;
    }
    k
}

/// Translucent-attack success probability per non-empty sample.
pub fn analytic_p_translucent(mu: f64, timeline: &TimelineParams) -> f64 {
    let x = timeline.exposure_ratio();
    let y = timeline.revelation_ratio();
    let decayed = -(-x).exp_m1();
    (mu / 2.0) * 2.0 * decayed * (-x).exp() * -(-y).exp_m1()
}

/// Fraction of nuclei decayed before arrival, `1 - exp(-(tau_P + tau_T) / tau_D)`.
pub fn analytic_p_fraction(timeline: &TimelineParams) -> f64 {
    -(-timeline.exposure_ratio()).exp_m1()
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct InterceptBound {
    pub exact: f64,
    pub approximate: f64,
}

/// Intercept-resend bound at `sigmas` standard deviations, both the exact
/// and the small-`mu` form, clamped to `[0, 1]`. Divergent cases (`P = 1`,
/// `eps = 0`, `mu = 0`) report 1: no security.
pub fn analytic_p_intercept_bound(
    mu: f64,
    p_fraction: f64,
    epsilon_bob: f64,
    pairs: usize,
    sigmas: f64,
) -> Result<InterceptBound> {
    if !(0.0..=1.0).contains(&p_fraction) {
        return Err(Error::domain(format!(
            "P must lie in [0, 1], got {p_fraction}"
        )));
    }
    if !(0.0..=1.0).contains(&epsilon_bob) {
        return Err(Error::domain(format!(
            "epsilon_bob must lie in [0, 1], got {epsilon_bob}"
        )));
    }
    if !(mu >= 0.0) || pairs == 0 || !(sigmas >= 0.0) {
        return Err(Error::domain("mu, sigmas must be >= 0 and N >= 1"));
    }
    if p_fraction == 0.0 {
        return Ok(InterceptBound {
            exact: 0.0,
            approximate: 0.0,
        });
    }
    if p_fraction >= 1.0 || epsilon_bob == 0.0 || mu == 0.0 {
        return Ok(InterceptBound {
            exact: 1.0,
            approximate: 1.0,
        });
    }
    let root_n = (pairs as f64).sqrt();
    let seen = -(-epsilon_bob * mu).exp_m1();
    let exact = sigmas * (mu * p_fraction / ((1.0 - p_fraction) * seen * seen)).sqrt() / root_n;
    let approximate = sigmas
        * (p_fraction / ((1.0 - p_fraction) * epsilon_bob * epsilon_bob * mu)).sqrt()
        / root_n;
    Ok(InterceptBound {
        exact: exact.min(1.0),
        approximate: approximate.min(1.0),
    })
}

/// Monte Carlo counterparts of the analytic bounds.
#[derive(Debug, Clone, Copy, Default, PartialEq, Serialize, Deserialize)]
pub struct MonteCarloEstimates {
    pub pre_arrival_fraction: Option<Estimate>,
    pub translucent_success: Option<Estimate>,
    pub eve_knowledge: Option<Estimate>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct BoundsReport {
    pub scenario: Scenario,
    pub p_translucent: f64,
    pub p_intercept_bound: f64,
    pub p_intercept_approx: f64,
    pub p_fraction: f64,
    /// Scenario (b) uses `P / (1 - P)` instead of `P` when set.
    pub exact_fraction_ratio: bool,
    pub combined_bound: f64,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub monte_carlo: Option<MonteCarloEstimates>,
}

/// Inputs for [`compute_bounds`].
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct BoundInputs {
    pub mu: f64,
    pub timeline: TimelineParams,
    pub epsilon_bob: f64,
    pub pairs: usize,
    pub sigmas: f64,
    pub scenario: Scenario,
    pub exact_fraction_ratio: bool,
}

pub fn compute_bounds(inputs: &BoundInputs) -> Result<BoundsReport> {
    let p_fraction = analytic_p_fraction(&inputs.timeline);
    let intercept = analytic_p_intercept_bound(
        inputs.mu,
        p_fraction,
        inputs.epsilon_bob,
        inputs.pairs,
        inputs.sigmas,
    )?;
    let mut report = BoundsReport {
        scenario: inputs.scenario,
        p_translucent: analytic_p_translucent(inputs.mu, &inputs.timeline).clamp(0.0, 1.0),
        p_intercept_bound: intercept.exact,
        p_intercept_approx: intercept.approximate,
        p_fraction,
        exact_fraction_ratio: inputs.exact_fraction_ratio,
        combined_bound: 0.0,
        monte_carlo: None,
    };
    report.combined_bound = combined_bound(&report);
    Ok(report)
}

/// Translucent term plus the opaque term of the active scenario, clamped
/// to `[0, 1]`.
pub fn combined_bound(bounds: &BoundsReport) -> f64 {
    let opaque = match bounds.scenario {
        Scenario::ArrivalCheck => bounds.p_intercept_bound,
        Scenario::NoArrivalCheck if bounds.exact_fraction_ratio => {
            if bounds.p_fraction >= 1.0 {
                1.0
            } else {
                bounds.p_fraction / (1.0 - bounds.p_fraction)
            }
        }
        Scenario::NoArrivalCheck => bounds.p_fraction,
    };
    (bounds.p_translucent + opaque).clamp(0.0, 1.0)
}
