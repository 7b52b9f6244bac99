//! Batch Monte Carlo over a [`RunConfig`], analytic bound evaluation and
//! parameter sweeps.
//!
//! Trial `i` draws from `stream("trial", i)` only, and results are gathered
//! in trial order, so a report depends on the configuration and seed alone,
//! never on the number of worker threads.

use std::io::Write;
use std::time::Instant;

use rand::Rng;
use serde::{Deserialize, Serialize};

use crate::adversary::{
    auto_budget, bob_detection_test, compute_bounds, eve_opaque, eve_translucent,
    translucent_successes, BoundInputs, BoundsReport, BrightSourceSpec, Budget, DetectionTest,
    EveRecord, MonteCarloEstimates,
};
use crate::bb84::{bb84_distilled, bb84_session, intercept_resend_qber, Bb84Summary};
use crate::config::RunConfig;
use crate::decay::{CountDistribution, DecayParams, SourceParams};
use crate::error::{Error, Result, Warning};
use crate::postproc::{distill, DistillParams, DistillStatus, LedgerSummary};
use crate::protocol::{
    bob_arrival_check, bob_measure, encode_plate, phase_counts, sift, PhaseCounts, Scenario,
    TimelineParams,
};
use crate::rng::RngSeed;
use crate::stats::Estimate;

pub const REPORT_SCHEMA_VERSION: u32 = 1;

/// Probability that a pair yields a sifted bit, exact for a Poisson source:
/// no flagged decay at arrival (scenario a only) and events in exactly one
/// cell during revelation. `background` is the mean number of spurious
/// events per cell over the revelation period.
pub fn expected_raw_yield(
    mu: f64,
    timeline: &TimelineParams,
    epsilon_bob: f64,
    background: f64,
    scenario: Scenario,
) -> f64 {
    let (kept, correct, wrong) = yield_terms(mu, timeline, epsilon_bob, background, scenario);
    kept * (correct + wrong)
}

/// Error rate of the sifted key under background events, exact for a
/// Poisson source.
pub fn expected_qber(mu: f64, timeline: &TimelineParams, epsilon_bob: f64, background: f64) -> f64 {
    let (_, correct, wrong) = yield_terms(
        mu,
        timeline,
        epsilon_bob,
        background,
        Scenario::NoArrivalCheck,
    );
    if correct + wrong == 0.0 {
        0.0
    } else {
        wrong / (correct + wrong)
    }
}

fn yield_terms(
    mu: f64,
    timeline: &TimelineParams,
    epsilon_bob: f64,
    background: f64,
    scenario: Scenario,
) -> (f64, f64, f64) {
    let x = timeline.exposure_ratio();
    let y = timeline.revelation_ratio();
    let p = -(-x).exp_m1();
    let kept = match scenario {
        Scenario::ArrivalCheck => (-epsilon_bob * mu * p).exp(),
        Scenario::NoArrivalCheck => 1.0,
    };
    // thinned Poisson counts per phase are independent
    let silent = (-epsilon_bob * mu * (-x).exp() * -(-y).exp_m1()).exp();
    let quiet = (-background).exp();
    let correct = (1.0 - quiet * silent) * quiet;
    let wrong = quiet * silent * (1.0 - quiet);
    (kept, correct, wrong)
}

/// Background rate (events per cell per day) that produces `qber` on the
/// sifted key. Solved by bisection; `qber` must lie in `[0, 0.5)`.
pub fn background_rate_for_qber(
    mu: f64,
    timeline: &TimelineParams,
    epsilon_bob: f64,
    qber: f64,
) -> Result<f64> {
    if !(0.0..0.5).contains(&qber) {
        return Err(Error::domain(format!(
            "qber must lie in [0, 0.5), got {qber}"
        )));
    }
    if timeline.revelation <= 0.0 {
        return Err(Error::domain("background needs a revelation period"));
    }
    let f = |b: f64| expected_qber(mu, timeline, epsilon_bob, b) - qber;
    let (mut lo, mut hi) = (0.0, 1.0);
    while f(hi) < 0.0 {
        hi *= 2.0;
        if hi > 1e6 {
            return Err(Error::domain(format!("qber {qber} is unreachable")));
        }
    }
    for _ in 0..200 {
        let mid = 0.5 * (lo + hi);
        if f(mid) < 0.0 {
            lo = mid;
        } else {
            hi = mid;
        }
    }
    Ok(0.5 * (lo + hi) / timeline.revelation)
}

/// Analytic secret bits per pair: expected raw yield times the fraction
/// left after removing Eve's bounded knowledge. Reconciliation costs are
/// not included.
pub fn analytic_key_rate(config: &RunConfig, bounds: &BoundsReport) -> f64 {
    let background = config.plate.background_rate * config.timeline.revelation;
    let y = expected_raw_yield(
        config.mu(),
        &config.timeline,
        config.detector.epsilon_bob,
        background,
        config.scenario,
    );
    y * (1.0 - bounds.combined_bound).max(0.0)
}

pub fn run_bounds(config: &RunConfig) -> Result<BoundsReport> {
    compute_bounds(&BoundInputs {
        mu: config.mu(),
        timeline: config.timeline,
        epsilon_bob: config.detector.epsilon_bob,
        pairs: config.plate.pair_count,
        sigmas: config.sigmas,
        scenario: config.scenario,
        exact_fraction_ratio: config.exact_fraction_ratio,
    })
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct EveSummary {
    pub translucent_known: usize,
    /// Translucent bits that Bob also receives (ideal detector).
    pub translucent_successes: usize,
    /// Requested opaque replacements (after resolving an auto budget).
    pub budget: usize,
    pub replaced: usize,
    /// Sifted bits Eve knows.
    pub known_sifted: usize,
    pub knowledge_fraction: f64,
    pub warnings: Vec<Warning>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TrialSummary {
    pub index: u64,
    pub nuclei: u64,
    /// Samples holding at least one excited nucleus.
    pub nonempty_samples: u64,
    pub phases: PhaseCounts,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub arrival_flagged: Option<usize>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub detection: Option<DetectionTest>,
    pub raw_key_length: usize,
    pub error_rate: f64,
    pub eve: EveSummary,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub ledger: Option<LedgerSummary>,
}

impl TrialSummary {
    /// Translucent successes per non-empty sample.
    pub fn translucent_success(&self) -> f64 {
        if self.nonempty_samples == 0 {
            0.0
        } else {
            self.eve.translucent_successes as f64 / self.nonempty_samples as f64
        }
    }

    pub fn aborted(&self) -> bool {
        matches!(
            self.ledger.as_ref().map(|l| &l.status),
            Some(DistillStatus::Aborted(_))
        )
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Aggregate {
    pub raw_key_length: Estimate,
    pub error_rate: Estimate,
    /// Pooled over all nuclei of all trials.
    pub pre_arrival_fraction: Estimate,
    /// Pooled over all non-empty samples of all trials.
    pub translucent_success: Estimate,
    pub eve_knowledge: Estimate,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub detection_pass_rate: Option<Estimate>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub final_key_length: Option<Estimate>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub abort_rate: Option<Estimate>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RunReport {
    pub schema_version: u32,
    pub config: RunConfig,
    pub warnings: Vec<Warning>,
    pub bounds: BoundsReport,
    pub analytic_raw_yield: f64,
    pub analytic_key_rate: f64,
    pub aggregate: Aggregate,
    pub trials: Vec<TrialSummary>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub wall_clock_seconds: Option<f64>,
}

impl RunReport {
    pub fn to_json(&self) -> String {
        serde_json::to_string_pretty(self).expect("report serializes")
    }

    pub fn detection_failures(&self) -> usize {
        self.trials
            .iter()
            .filter(|t| t.detection.is_some_and(|d| !d.passed))
            .count()
    }

    pub fn aborts(&self) -> usize {
        self.trials.iter().filter(|t| t.aborted()).count()
    }
}

/// One run of the exchange, Eve included, followed by post-processing.
pub fn run_trial<R: Rng + ?Sized>(
    config: &RunConfig,
    index: u64,
    rng: &mut R,
) -> Result<TrialSummary> {
    let timeline = &config.timeline;
    let (plate, alice_key) = encode_plate(&config.plate, timeline, rng);
    let phases = phase_counts(&plate, timeline);
    let nonempty = plate
        .pairs()
        .iter()
        .filter(|p| p.excited_count() > 0)
        .count() as u64;
    let mu = config.mu();
    let p = crate::adversary::analytic_p_fraction(timeline);

    let mut record = EveRecord::default();
    let strategy = config.attack.strategy;
    if strategy.translucent() {
        record = eve_translucent(&plate, &config.attack, timeline, rng)?;
    }
    let translucent_known = record.entries.len();
    let translucent_successes = translucent_successes(&record, &plate, timeline);
    let mut budget = 0;
    let plate = if strategy.opaque() {
        budget = match config.attack.budget {
            Budget::Fixed(k) => k,
            Budget::Auto(_) => auto_budget(
                config.plate.pair_count,
                mu,
                p,
                config.detector.epsilon_bob,
                config.sigmas,
                config.attack.evasion_confidence,
            ),
        };
        let bright = BrightSourceSpec::matching(&config.plate.source)?;
        let out = eve_opaque(&plate, &config.attack, &bright, timeline, budget, rng)?;
        record = record.merge(out.record);
        out.plate
    } else {
        plate
    };

    let arrival = match config.scenario {
        Scenario::ArrivalCheck => Some(bob_arrival_check(&plate, timeline, &config.detector, rng)),
        Scenario::NoArrivalCheck => None,
    };
    let detection = arrival.as_ref().map(|a| {
        bob_detection_test(
            a.detected_decays,
            config.plate.pair_count,
            mu,
            p,
            config.detector.epsilon_bob,
            config.sigmas,
        )
    });
    let observations = bob_measure(
        &plate,
        timeline,
        &config.detector,
        config.plate.background_rate,
        rng,
    );
    let sifted = sift(
        &alice_key,
        &observations,
        arrival.as_ref(),
        config.announcement,
    )?;
    let knowledge = record.knowledge(&sifted);

    let ledger = match &config.postprocess {
        Some(params) if !sifted.alice_raw.is_empty() => {
            let bounds = run_bounds(config)?;
            Some(
                distill(
                    &sifted.alice_raw,
                    &sifted.bob_raw,
                    bounds.combined_bound,
                    params,
                    rng,
                )?
                .summary(),
            )
        }
        _ => None,
    };

    Ok(TrialSummary {
        index,
        nuclei: phases.total(),
        nonempty_samples: nonempty,
        phases,
        arrival_flagged: arrival.as_ref().map(|a| a.count()),
        detection,
        raw_key_length: sifted.alice_raw.len(),
        error_rate: sifted.error_rate(),
        eve: EveSummary {
            translucent_known,
            translucent_successes,
            budget,
            replaced: record.replaced,
            known_sifted: knowledge.known,
            knowledge_fraction: knowledge.fraction(),
            warnings: record.warnings,
        },
        ledger,
    })
}

fn run_trials(config: &RunConfig) -> Result<Vec<TrialSummary>> {
    let seed = RngSeed::new(config.seed);
    let one = |i: u64| run_trial(config, i, &mut seed.stream("trial", i));
    let n = config.trials as u64;
    #[cfg(feature = "parallel")]
    {
        use rayon::prelude::*;
        (0..n).into_par_iter().map(one).collect()
    }
    #[cfg(not(feature = "parallel"))]
    {
        (0..n).map(one).collect()
    }
}

fn aggregate(trials: &[TrialSummary]) -> Aggregate {
    let col = |f: &dyn Fn(&TrialSummary) -> f64| {
        Estimate::from_samples(&trials.iter().map(f).collect::<Vec<_>>())
    };
    let pre: u64 = trials.iter().map(|t| t.phases.pre_arrival).sum();
    let nuclei: u64 = trials.iter().map(|t| t.phases.total()).sum();
    let known: u64 = trials
        .iter()
        .map(|t| t.eve.translucent_successes as u64)
        .sum();
    let nonempty: u64 = trials.iter().map(|t| t.nonempty_samples).sum();
    let tests: Vec<_> = trials.iter().filter_map(|t| t.detection).collect();
    let ledgers: Vec<_> = trials.iter().filter_map(|t| t.ledger.as_ref()).collect();
    Aggregate {
        raw_key_length: col(&|t| t.raw_key_length as f64),
        error_rate: col(&|t| t.error_rate),
        pre_arrival_fraction: Estimate::proportion(pre, nuclei),
        translucent_success: Estimate::proportion(known, nonempty),
        eve_knowledge: col(&|t| t.eve.knowledge_fraction),
        detection_pass_rate: (!tests.is_empty()).then(|| {
            Estimate::proportion(
                tests.iter().filter(|d| d.passed).count() as u64,
                tests.len() as u64,
            )
        }),
        final_key_length: (!ledgers.is_empty()).then(|| {
            Estimate::from_samples(
                &ledgers
                    .iter()
                    .map(|l| l.final_length as f64)
                    .collect::<Vec<_>>(),
            )
        }),
        abort_rate: (!ledgers.is_empty()).then(|| {
            let aborted = ledgers
                .iter()
                .filter(|l| matches!(l.status, DistillStatus::Aborted(_)))
                .count();
            Estimate::proportion(aborted as u64, ledgers.len() as u64)
        }),
    }
}

pub fn run_simulation(config: &RunConfig) -> Result<RunReport> {
    config.validate()?;
    // Instant is unavailable on wasm32, so the clock is only read on request
    let start = config.report_timing.then(Instant::now);
    let trials = run_trials(config)?;
    let aggregate = aggregate(&trials);
    let mut bounds = run_bounds(config)?;
    bounds.monte_carlo = Some(MonteCarloEstimates {
        pre_arrival_fraction: Some(aggregate.pre_arrival_fraction),
        translucent_success: config
            .attack
            .strategy
            .translucent()
            .then_some(aggregate.translucent_success),
        eve_knowledge: (config.attack.strategy != crate::adversary::Strategy::None)
            .then_some(aggregate.eve_knowledge),
    });
    let background = config.plate.background_rate * config.timeline.revelation;
    Ok(RunReport {
        schema_version: REPORT_SCHEMA_VERSION,
        config: config.clone(),
        warnings: config.warnings(),
        analytic_raw_yield: expected_raw_yield(
            config.mu(),
            &config.timeline,
            config.detector.epsilon_bob,
            background,
            config.scenario,
        ),
        analytic_key_rate: analytic_key_rate(config, &bounds),
        bounds,
        aggregate,
        trials,
        wall_clock_seconds: start.map(|s| s.elapsed().as_secs_f64()),
    })
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub enum SweepParameter {
    #[serde(rename = "mu")]
    Mu,
    #[serde(rename = "tau_D")]
    TauD,
    #[serde(rename = "tau_T")]
    TauT,
    #[serde(rename = "tau_B")]
    TauB,
    #[serde(rename = "N")]
    N,
    #[serde(rename = "epsilon_bob")]
    EpsilonBob,
}

impl SweepParameter {
    pub const ALL: [SweepParameter; 6] = [
        Self::Mu,
        Self::TauD,
        Self::TauT,
        Self::TauB,
        Self::N,
        Self::EpsilonBob,
    ];

    pub fn name(self) -> &'static str {
        match self {
            Self::Mu => "mu",
            Self::TauD => "tau_D",
            Self::TauT => "tau_T",
            Self::TauB => "tau_B",
            Self::N => "N",
            Self::EpsilonBob => "epsilon_bob",
        }
    }

    /// `config` with this parameter set to `value`, validated.
    pub fn apply(self, config: &RunConfig, value: f64) -> Result<RunConfig> {
        let mut c = config.clone();
        match self {
            Self::Mu => match c.plate.source {
                CountDistribution::Poisson(_) => {
                    c.plate.source = CountDistribution::Poisson(SourceParams::new(value)?);
                }
                CountDistribution::Table(_) => {
                    return Err(Error::domain("a mu sweep needs a Poisson source"));
                }
            },
            Self::TauD => c.timeline.decay = DecayParams::from_mean_life(value)?,
            Self::TauT => c.timeline.transport = value,
            Self::TauB => c.timeline.revelation = value,
            Self::N => {
                if !(value >= 1.0 && value.fract() == 0.0) {
                    return Err(Error::domain(format!(
                        "N must be a positive integer, got {value}"
                    )));
                }
                c.plate.pair_count = value as usize;
            }
            Self::EpsilonBob => {
                c.detector.epsilon_bob = value;
            }
        }
        c.validate()?;
        Ok(c)
    }
}

impl std::str::FromStr for SweepParameter {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        Self::ALL
            .into_iter()
            .find(|p| p.name() == s)
            .ok_or_else(|| {
                let names: Vec<_> = Self::ALL.iter().map(|p| p.name()).collect();
                Error::domain(format!(
                    "unknown sweep parameter {s:?}; expected one of {}",
                    names.join(", ")
                ))
            })
    }
}

/// One grid point. Column order is the CSV column order.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SweepRow {
    pub parameter: String,
    pub value: f64,
    pub p_translucent: f64,
    pub p_intercept_bound: f64,
    pub p_intercept_approx: f64,
    pub p_fraction: f64,
    pub combined_bound: f64,
    pub empirical_pre_arrival_fraction: Option<f64>,
    pub empirical_raw_key_length: Option<f64>,
    pub empirical_error_rate: Option<f64>,
    pub empirical_eve_knowledge: Option<f64>,
    pub empirical_detection_pass_rate: Option<f64>,
    pub key_rate: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SweepTable {
    pub schema_version: u32,
    pub parameter: SweepParameter,
    pub rows: Vec<SweepRow>,
}

impl SweepTable {
    pub fn write_csv<W: Write>(&self, out: W) -> Result<()> {
        let mut w = csv::Writer::from_writer(out);
        for row in &self.rows {
            w.serialize(row)
                .map_err(|e| Error::Protocol(e.to_string()))?;
        }
        w.flush().map_err(|e| Error::Protocol(e.to_string()))
    }

    pub fn to_csv(&self) -> String {
        let mut buf = Vec::new();
        self.write_csv(&mut buf).expect("in-memory csv");
        String::from_utf8(buf).expect("utf-8")
    }

    pub fn to_json(&self) -> String {
        serde_json::to_string_pretty(self).expect("table serializes")
    }

    pub fn column(&self, f: impl Fn(&SweepRow) -> f64) -> Vec<f64> {
        self.rows.iter().map(f).collect()
    }
}

/// Bounds (and, with `simulate`, a Monte Carlo run of `config.trials`
/// trials) at every grid value.
pub fn run_sweep(
    config: &RunConfig,
    parameter: SweepParameter,
    grid: &[f64],
    simulate: bool,
) -> Result<SweepTable> {
    if grid.is_empty() {
        return Err(Error::domain("sweep grid is empty"));
    }
    let rows = grid
        .iter()
        .map(|&value| {
            let c = parameter.apply(config, value)?;
            let bounds = run_bounds(&c)?;
            let key_rate = analytic_key_rate(&c, &bounds);
            let agg = if simulate {
                Some(run_simulation(&c)?.aggregate)
            } else {
                None
            };
            Ok(SweepRow {
                parameter: parameter.name().to_string(),
                value,
                p_translucent: bounds.p_translucent,
                p_intercept_bound: bounds.p_intercept_bound,
                p_intercept_approx: bounds.p_intercept_approx,
                p_fraction: bounds.p_fraction,
                combined_bound: bounds.combined_bound,
                empirical_pre_arrival_fraction: agg.map(|a| a.pre_arrival_fraction.mean),
                empirical_raw_key_length: agg.map(|a| a.raw_key_length.mean),
                empirical_error_rate: agg.map(|a| a.error_rate.mean),
                empirical_eve_knowledge: agg.map(|a| a.eve_knowledge.mean),
                empirical_detection_pass_rate: agg
                    .and_then(|a| a.detection_pass_rate.map(|e| e.mean)),
                key_rate,
            })
        })
        .collect::<Result<Vec<_>>>()?;
    Ok(SweepTable {
        schema_version: REPORT_SCHEMA_VERSION,
        parameter,
        rows,
    })
}

/// Evenly spaced grid from `start` to `stop` inclusive.
pub fn linear_grid(start: f64, stop: f64, points: usize) -> Result<Vec<f64>> {
    match points {
        0 => Err(Error::domain("grid needs at least one point")),
        1 => Ok(vec![start]),
        _ => {
            let step = (stop - start) / (points - 1) as f64;
            Ok((0..points).map(|i| start + step * i as f64).collect())
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Bb84Report {
    pub schema_version: u32,
    pub seed: u64,
    pub session: Bb84Summary,
    /// Intercept-resend error rate from exhaustive enumeration.
    pub intercept_resend_qber: f64,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub ledger: Option<LedgerSummary>,
}

impl Bb84Report {
    pub fn to_json(&self) -> String {
        serde_json::to_string_pretty(self).expect("report serializes")
    }
}

pub fn run_bb84(
    n: usize,
    eve_enabled: bool,
    seed: u64,
    postprocess: Option<&DistillParams>,
) -> Result<Bb84Report> {
    let mut rng = RngSeed::new(seed).stream("bb84", 0);
    let (session, ledger) = match postprocess {
        Some(params) => {
            let (s, l) = bb84_distilled(n, eve_enabled, params, &mut rng)?;
            (s.summary(), Some(l))
        }
        None => (bb84_session(n, eve_enabled, &mut rng)?.summary(), None),
    };
    Ok(Bb84Report {
        schema_version: REPORT_SCHEMA_VERSION,
        seed,
        session,
        intercept_resend_qber: intercept_resend_qber(),
        ledger,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::adversary::Strategy;

    fn small(trials: usize) -> RunConfig {
        RunConfig {
            trials,
            seed: 11,
            ..RunConfig::default()
        }
    }

    #[test]
    fn empty_source_gives_empty_key() {
        let mut c = small(1);
        c.plate.source = CountDistribution::poisson(0.0).unwrap();
        let r = run_simulation(&c).unwrap();
        assert_eq!(r.trials[0].raw_key_length, 0);
        assert_eq!(r.trials[0].nuclei, 0);
        assert!(r.trials[0].ledger.is_none());
    }

    #[test]
    fn bounds_match_config() {
        let mut c = RunConfig::default();
        c.plate.pair_count = 2400;
        let b = run_bounds(&c).unwrap();
        assert!((b.p_translucent - 0.012_832_550_196_942_1).abs() < 1e-12);
        assert!(
            (b.p_intercept_bound - 0.159_584_122_551_991_77).abs() < 1e-12,
            "{b:?}"
        );
        assert!((b.p_intercept_approx - 0.151_864_371_425_133_9).abs() < 1e-12);
        assert!((b.p_fraction - 0.181_269_246_922_018).abs() < 1e-12);
    }

    #[test]
    fn yield_formula_limits() {
        let t = TimelineParams::from_ratios(0.2, 2.0, DecayParams::from_mean_life(10.0).unwrap())
            .unwrap();
        assert_eq!(expected_qber(0.1, &t, 1.0, 0.0), 0.0);
        let y = expected_raw_yield(0.1, &t, 1.0, 0.0, Scenario::NoArrivalCheck);
        let direct = 1.0 - (-0.1 * (-0.2f64).exp() * (1.0 - (-2.0f64).exp())).exp();
        assert!((y - direct).abs() < 1e-15);
        let b = background_rate_for_qber(0.1, &t, 1.0, 0.02).unwrap();
        assert!((expected_qber(0.1, &t, 1.0, b * t.revelation) - 0.02).abs() < 1e-12);
        assert!(background_rate_for_qber(0.1, &t, 1.0, 0.6).is_err());
    }

    #[test]
    fn sweep_rejects_bad_input() {
        let c = RunConfig::default();
        assert!(run_sweep(&c, SweepParameter::Mu, &[], false).is_err());
        assert!(run_sweep(&c, SweepParameter::N, &[10.5], false).is_err());
        assert!(run_sweep(&c, SweepParameter::EpsilonBob, &[1.5], false).is_err());
        assert!("colour".parse::<SweepParameter>().is_err());
        assert_eq!(
            "tau_D".parse::<SweepParameter>().unwrap(),
            SweepParameter::TauD
        );
    }

    #[test]
    fn single_point_sweep_equals_bounds() {
        let c = RunConfig::default();
        let t = run_sweep(&c, SweepParameter::Mu, &[0.1], false).unwrap();
        let b = run_bounds(&c).unwrap();
        assert_eq!(t.rows.len(), 1);
        assert_eq!(t.rows[0].combined_bound, b.combined_bound);
        assert_eq!(t.rows[0].p_intercept_bound, b.p_intercept_bound);
        assert!(t.rows[0].empirical_raw_key_length.is_none());
    }

    #[test]
    fn attack_run_reports_knowledge() {
        let mut c = small(4);
        c.plate.pair_count = 3000;
        c.attack.strategy = Strategy::Both;
        c.attack.budget = Budget::Auto(crate::adversary::AutoBudget::Auto);
        let r = run_simulation(&c).unwrap();
        for t in &r.trials {
            assert!(t.eve.budget > 0);
            assert!(t.eve.known_sifted > 0);
            assert!(t.detection.is_some());
        }
        assert!(r.bounds.monte_carlo.unwrap().eve_knowledge.is_some());
    }

    #[test]
    fn grid() {
        assert_eq!(linear_grid(1.0, 3.0, 3).unwrap(), vec![1.0, 2.0, 3.0]);
        assert_eq!(linear_grid(1.0, 3.0, 1).unwrap(), vec![1.0]);
        assert!(linear_grid(1.0, 3.0, 0).is_err());
    }
}
