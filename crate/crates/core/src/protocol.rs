//! The honest exchange: plate encoding, transport timeline, Bob's
//! observations and public sifting.
//!
//! Decay clocks start when the nuclei are produced, so every decay time on a
//! plate is absolute. The timeline splits that clock into three phases:
//!
//! ```text
//!   0 ........ production + transport ........ + revelation ........
//!   |   PRE_ARRIVAL (Eve may watch)   |   REVEALED (Bob's safe)  |  NEVER
//! ```

use rand::Rng;
use serde::{Deserialize, Serialize};

use crate::decay::{poisson_by_inversion, sample_decay_time, CountDistribution, DecayParams};
use crate::error::{Error, Result, Warning};

/// Fewer pairs than this and sampling fluctuations dominate every estimate.
pub const MIN_RECOMMENDED_PAIRS: usize = 1000;

/// Durations (days) that govern every probability of the exchange.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct TimelineParams {
    /// `tau_P`: production of the isotope to encoding of the plate.
    #[serde(rename = "production_days")]
    pub production: f64,
    /// `tau_T`: courier transport.
    #[serde(rename = "transport_days")]
    pub transport: f64,
    /// `tau_B`: Bob's revelation period.
    #[serde(rename = "revelation_days")]
    pub revelation: f64,
    pub decay: DecayParams,
}

impl TimelineParams {
    pub fn new(
        production: f64,
        transport: f64,
        revelation: f64,
        decay: DecayParams,
    ) -> Result<Self> {
        let t = Self {
            production,
            transport,
            revelation,
            decay,
        };
        t.check()?;
        Ok(t)
    }

    /// Builds a timeline from the dimensionless ratios
    /// `x = (tau_P + tau_T) / tau_D` and `y = tau_B / tau_D`, with the whole
    /// exposure attributed to transport.
    pub fn from_ratios(exposure: f64, revelation: f64, decay: DecayParams) -> Result<Self> {
        let tau = decay.mean_life();
        Self::new(0.0, exposure * tau, revelation * tau, decay)
    }

    pub fn check(&self) -> Result<()> {
        for (name, v) in [
            ("production_days", self.production),
            ("transport_days", self.transport),
            ("revelation_days", self.revelation),
        ] {
            if !(v >= 0.0 && v.is_finite()) {
                return Err(Error::domain(format!(
                    "{name} must be finite and >= 0, got {v}"
                )));
            }
        }
        Ok(())
    }

    /// Time at which the plate reaches Bob.
    pub fn arrival(&self) -> f64 {
        self.production + self.transport
    }

    /// End of Bob's revelation period.
    pub fn end(&self) -> f64 {
        self.arrival() + self.revelation
    }

    /// `x = (tau_P + tau_T) / tau_D`.
    pub fn exposure_ratio(&self) -> f64 {
        self.arrival() / self.decay.mean_life()
    }

    /// `y = tau_B / tau_D`.
    pub fn revelation_ratio(&self) -> f64 {
        self.revelation / self.decay.mean_life()
    }

    pub fn warnings(&self) -> Vec<Warning> {
        let tau = self.decay.mean_life();
        let mut w = Vec::new();
        if self.revelation < tau {
            w.push(Warning::new(
                "revelation_days",
                format!(
                    "tau_B = {} is shorter than tau_D = {tau}; few bits get revealed",
                    self.revelation
                ),
            ));
        }
        if self.production >= tau {
            w.push(Warning::new(
                "production_days",
                format!(
                    "tau_P = {} is not shorter than tau_D = {tau}",
                    self.production
                ),
            ));
        }
        if self.transport >= tau {
            w.push(Warning::new(
                "transport_days",
                format!(
                    "tau_T = {} is not shorter than tau_D = {tau}",
                    self.transport
                ),
            ));
        }
        w
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct PlateSpec {
    /// `M`, number of cell pairs.
    pub pair_count: usize,
    pub source: CountDistribution,
    /// Spurious detectable events per cell per day.
    #[serde(default)]
    pub background_rate: f64,
}

impl PlateSpec {
    pub fn new(
        pair_count: usize,
        source: impl Into<CountDistribution>,
        background_rate: f64,
    ) -> Result<Self> {
        let s = Self {
            pair_count,
            source: source.into(),
            background_rate,
        };
        s.check()?;
        Ok(s)
    }

    pub fn check(&self) -> Result<()> {
        if self.pair_count == 0 {
            return Err(Error::domain("pair_count must be at least 1"));
        }
        if !(self.background_rate >= 0.0 && self.background_rate.is_finite()) {
            return Err(Error::domain(format!(
                "background_rate must be finite and >= 0, got {}",
                self.background_rate
            )));
        }
        Ok(())
    }

    pub fn warnings(&self) -> Vec<Warning> {
        let mut w = self.source.warnings();
        if self.pair_count < MIN_RECOMMENDED_PAIRS {
            w.push(Warning::new(
                "pair_count",
                format!("M = {} is below {MIN_RECOMMENDED_PAIRS}", self.pair_count),
            ));
        }
        w
    }
}

/// Cell within a pair. The left cell carries bit 1, the right cell bit 0.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Side {
    Left,
    Right,
}

impl Side {
    pub fn for_bit(bit: bool) -> Self {
        if bit {
            Side::Left
        } else {
            Side::Right
        }
    }

    pub fn bit(self) -> bool {
        matches!(self, Side::Left)
    }

    pub fn other(self) -> Self {
        match self {
            Side::Left => Side::Right,
            Side::Right => Side::Left,
        }
    }
}

/// One pair of cells. Only the radioactive cell holds excited nuclei; the
/// placebo cell's excited list is empty by construction.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(try_from = "CellPairRepr", into = "CellPairRepr")]
pub struct CellPair {
    hidden_bit: bool,
    decay_times: Vec<f64>,
}

#[derive(Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
struct CellPairRepr {
    hidden_bit: u8,
    left: Vec<f64>,
    right: Vec<f64>,
}

impl From<CellPair> for CellPairRepr {
    fn from(p: CellPair) -> Self {
        let (left, right) = if p.hidden_bit {
            (p.decay_times, Vec::new())
        } else {
            (Vec::new(), p.decay_times)
        };
        Self {
            hidden_bit: u8::from(p.hidden_bit),
            left,
            right,
        }
    }
}

impl TryFrom<CellPairRepr> for CellPair {
    type Error = Error;
    fn try_from(r: CellPairRepr) -> Result<Self> {
        let hidden_bit = match r.hidden_bit {
            0 => false,
            1 => true,
            b => {
                return Err(Error::Protocol(format!(
                    "hidden_bit must be 0 or 1, got {b}"
                )))
            }
        };
        let (radioactive, placebo) = if hidden_bit {
            (r.left, r.right)
        } else {
            (r.right, r.left)
        };
        if !placebo.is_empty() {
            return Err(Error::Protocol("placebo cell holds excited nuclei".into()));
        }
        Ok(CellPair::new(hidden_bit, radioactive))
    }
}

impl CellPair {
    pub fn new(hidden_bit: bool, decay_times: Vec<f64>) -> Self {
        Self {
            hidden_bit,
            decay_times,
        }
    }

    pub fn hidden_bit(&self) -> bool {
        self.hidden_bit
    }

    pub fn radioactive_side(&self) -> Side {
        Side::for_bit(self.hidden_bit)
    }

    /// Absolute decay times of the excited nuclei in the radioactive cell.
    pub fn decay_times(&self) -> &[f64] {
        &self.decay_times
    }

    pub fn cell(&self, side: Side) -> &[f64] {
        if side == self.radioactive_side() {
            &self.decay_times
        } else {
            &[]
        }
    }

    pub fn excited_count(&self) -> usize {
        self.decay_times.len()
    }

    /// Swaps the radioactive sample for another one in the same cell.
    pub(crate) fn replace_sample(&mut self, decay_times: Vec<f64>) {
        self.decay_times = decay_times;
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Plate {
    pairs: Vec<CellPair>,
}

impl Plate {
    pub fn from_pairs(pairs: Vec<CellPair>) -> Self {
        Self { pairs }
    }

    pub fn pairs(&self) -> &[CellPair] {
        &self.pairs
    }

    pub(crate) fn pairs_mut(&mut self) -> &mut [CellPair] {
        &mut self.pairs
    }

    pub fn len(&self) -> usize {
        self.pairs.len()
    }

    pub fn is_empty(&self) -> bool {
        self.pairs.is_empty()
    }

    pub fn total_nuclei(&self) -> usize {
        self.pairs.iter().map(CellPair::excited_count).sum()
    }

    pub fn hidden_bits(&self) -> Vec<bool> {
        self.pairs.iter().map(CellPair::hidden_bit).collect()
    }
}

/// Alice's preparation: a uniformly random bit per pair, a sample of
/// excited nuclei on the matching cell and placebo on the other.
pub fn encode_plate<R: Rng + ?Sized>(
    spec: &PlateSpec,
    timeline: &TimelineParams,
    rng: &mut R,
) -> (Plate, Vec<bool>) {
    let pairs: Vec<CellPair> = (0..spec.pair_count)
        .map(|_| {
            let bit: bool = rng.random();
            let n = spec.source.sample(rng);
            let times = (0..n)
                .map(|_| sample_decay_time(&timeline.decay, rng))
                .collect();
            CellPair::new(bit, times)
        })
        .collect();
    let key = pairs.iter().map(CellPair::hidden_bit).collect();
    (Plate { pairs }, key)
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "SCREAMING_SNAKE_CASE")]
pub enum Phase {
    /// Decayed before the plate reached Bob.
    PreArrival,
    /// Decayed during Bob's revelation period.
    Revealed,
    /// Still excited when the revelation period ends.
    Never,
}

impl Phase {
    pub fn of(time: f64, timeline: &TimelineParams) -> Self {
        if time <= timeline.arrival() {
            Phase::PreArrival
        } else if time <= timeline.end() {
            Phase::Revealed
        } else {
            Phase::Never
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct NucleusEvent {
    pub pair: usize,
    pub time: f64,
    pub phase: Phase,
}

#[derive(Debug, Clone, Copy, Default, PartialEq, Eq, Serialize, Deserialize)]
pub struct PhaseCounts {
    pub pre_arrival: u64,
    pub revealed: u64,
    pub never: u64,
}

impl PhaseCounts {
    pub fn total(&self) -> u64 {
        self.pre_arrival + self.revealed + self.never
    }

    pub fn fractions(&self) -> [f64; 3] {
        let n = self.total().max(1) as f64;
        [
            self.pre_arrival as f64 / n,
            self.revealed as f64 / n,
            self.never as f64 / n,
        ]
    }

    fn add(&mut self, phase: Phase) {
        match phase {
            Phase::PreArrival => self.pre_arrival += 1,
            Phase::Revealed => self.revealed += 1,
            Phase::Never => self.never += 1,
        }
    }
}

/// Labels every nucleus on the plate with the phase in which it decays.
pub fn classify_events(plate: &Plate, timeline: &TimelineParams) -> Vec<NucleusEvent> {
    plate
        .pairs
        .iter()
        .enumerate()
        .flat_map(|(pair, p)| {
            p.decay_times.iter().map(move |&time| NucleusEvent {
                pair,
                time,
                phase: Phase::of(time, timeline),
            })
        })
        .collect()
}

/// Phase tally without materializing the per-nucleus labels.
pub fn phase_counts(plate: &Plate, timeline: &TimelineParams) -> PhaseCounts {
    let mut counts = PhaseCounts::default();
    for p in &plate.pairs {
        for &t in &p.decay_times {
            counts.add(Phase::of(t, timeline));
        }
    }
    counts
}

impl FromIterator<NucleusEvent> for PhaseCounts {
    fn from_iter<I: IntoIterator<Item = NucleusEvent>>(iter: I) -> Self {
        let mut counts = PhaseCounts::default();
        iter.into_iter().for_each(|e| counts.add(e.phase));
        counts
    }
}

/// Per-decay detection efficiencies.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct DetectorModel {
    pub epsilon_bob: f64,
    #[serde(default = "one")]
    pub epsilon_eve: f64,
}

fn one() -> f64 {
    1.0
}

impl DetectorModel {
    pub fn new(epsilon_bob: f64, epsilon_eve: f64) -> Result<Self> {
        let d = Self {
            epsilon_bob,
            epsilon_eve,
        };
        d.check()?;
        Ok(d)
    }

    pub fn ideal() -> Self {
        Self {
            epsilon_bob: 1.0,
            epsilon_eve: 1.0,
        }
    }

    pub fn check(&self) -> Result<()> {
        for (name, v) in [
            ("epsilon_bob", self.epsilon_bob),
            ("epsilon_eve", self.epsilon_eve),
        ] {
            if !(0.0..=1.0).contains(&v) {
                return Err(Error::domain(format!("{name} must lie in [0, 1], got {v}")));
            }
        }
        Ok(())
    }
}

/// Whether Bob inspects the plate for decays at arrival.
#[derive(Debug, Clone, Copy, Default, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub enum Scenario {
    /// Arrival check; flagged pairs are discarded.
    #[default]
    #[serde(rename = "a")]
    ArrivalCheck,
    /// No arrival check.
    #[serde(rename = "b")]
    NoArrivalCheck,
}

/// Bob's inspection of the plate at arrival.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct ArrivalReport {
    pub pair_count: usize,
    /// Pairs with at least one detected pre-arrival decay, ascending.
    pub flagged: Vec<usize>,
    /// Detected pre-arrival decays, counted per nucleus.
    pub detected_decays: u64,
}

impl ArrivalReport {
    /// Number of flagged pairs.
    pub fn count(&self) -> usize {
        self.flagged.len()
    }

    pub fn flags(&self) -> Vec<bool> {
        let mut f = vec![false; self.pair_count];
        self.flagged.iter().for_each(|&i| f[i] = true);
        f
    }
}

fn detected<R: Rng + ?Sized>(efficiency: f64, rng: &mut R) -> bool {
    efficiency >= 1.0 || (efficiency > 0.0 && rng.random::<f64>() < efficiency)
}

pub fn bob_arrival_check<R: Rng + ?Sized>(
    plate: &Plate,
    timeline: &TimelineParams,
    detector: &DetectorModel,
    rng: &mut R,
) -> ArrivalReport {
    let arrival = timeline.arrival();
    let mut flagged = Vec::new();
    let mut detected_decays = 0u64;
    for (i, p) in plate.pairs.iter().enumerate() {
        let seen = p
            .decay_times
            .iter()
            .filter(|&&t| t <= arrival && detected(detector.epsilon_bob, rng))
            .count() as u64;
        if seen > 0 {
            flagged.push(i);
            detected_decays += seen;
        }
    }
    ArrivalReport {
        pair_count: plate.len(),
        flagged,
        detected_decays,
    }
}

/// Events Bob registers in each cell of a pair during the revelation period.
#[derive(Debug, Clone, Copy, Default, PartialEq, Eq, Serialize, Deserialize)]
pub struct PairObservation {
    pub left_events: u32,
    pub right_events: u32,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "SCREAMING_SNAKE_CASE")]
pub enum Outcome {
    Nothing,
    Bit(bool),
    /// Events in both cells; the pair is dropped.
    Conflict,
}

impl PairObservation {
    pub fn events(&self, side: Side) -> u32 {
        match side {
            Side::Left => self.left_events,
            Side::Right => self.right_events,
        }
    }

    /// A bit is a location: any number of events in one cell reads as that
    /// cell's value.
    pub fn outcome(&self) -> Outcome {
        match (self.left_events > 0, self.right_events > 0) {
            (false, false) => Outcome::Nothing,
            (true, false) => Outcome::Bit(true),
            (false, true) => Outcome::Bit(false),
            (true, true) => Outcome::Conflict,
        }
    }
}

/// Bob's revelation-period readout, including background events at
/// `background_rate` per cell per day.
pub fn bob_measure<R: Rng + ?Sized>(
    plate: &Plate,
    timeline: &TimelineParams,
    detector: &DetectorModel,
    background_rate: f64,
    rng: &mut R,
) -> Vec<PairObservation> {
    let (start, end) = (timeline.arrival(), timeline.end());
    let background_mean = background_rate * timeline.revelation;
    plate
        .pairs
        .iter()
        .map(|p| {
            let decays = p
                .decay_times
                .iter()
                .filter(|&&t| t > start && t <= end && detected(detector.epsilon_bob, rng))
                .count() as u32;
            let mut obs = PairObservation {
                left_events: poisson_by_inversion(background_mean, rng),
                right_events: poisson_by_inversion(background_mean, rng),
            };
            match p.radioactive_side() {
                Side::Left => obs.left_events += decays,
                Side::Right => obs.right_events += decays,
            }
            obs
        })
        .collect()
}

/// How the public discussion is split into rounds. The key material is the
/// same either way; only the transcript's round structure differs.
#[derive(Debug, Clone, Copy, Default, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum AnnouncementMode {
    /// Arrival discards and revealed indices are published together after
    /// the revelation period.
    #[default]
    SingleRound,
    /// Arrival discards are published right after arrival, revealed indices
    /// after the revelation period.
    DiscardsFirst,
}

/// Public sifting record: pair indices only, never bit values.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct SiftTranscript {
    pub mode: AnnouncementMode,
    /// Pairs discarded because of decays seen at arrival.
    pub discarded: Vec<usize>,
    /// Pairs that revealed a bit to Bob and were kept.
    pub announced: Vec<usize>,
    pub raw_key_length: usize,
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct SiftOutcome {
    pub alice_raw: Vec<bool>,
    pub bob_raw: Vec<bool>,
    pub transcript: SiftTranscript,
}

impl SiftOutcome {
    pub fn mismatches(&self) -> usize {
        self.alice_raw
            .iter()
            .zip(&self.bob_raw)
            .filter(|(a, b)| a != b)
            .count()
    }

    pub fn error_rate(&self) -> f64 {
        if self.alice_raw.is_empty() {
            0.0
        } else {
            self.mismatches() as f64 / self.alice_raw.len() as f64
        }
    }
}

pub fn sift(
    alice_key: &[bool],
    observations: &[PairObservation],
    arrival: Option<&ArrivalReport>,
    mode: AnnouncementMode,
) -> Result<SiftOutcome> {
    let m = alice_key.len();
    if observations.len() != m {
        return Err(Error::Protocol(format!(
            "{} observations for a {m}-pair key",
            observations.len()
        )));
    }
    let mut discard = vec![false; m];
    let mut discarded = Vec::new();
    if let Some(report) = arrival {
        if report.pair_count != m {
            return Err(Error::Protocol(format!(
                "arrival report covers {} pairs, key has {m}",
                report.pair_count
            )));
        }
        for &i in &report.flagged {
            if i >= m {
                return Err(Error::Protocol(format!(
                    "flagged pair index {i} out of range"
                )));
            }
            if !discard[i] {
                discard[i] = true;
                discarded.push(i);
            }
        }
        discarded.sort_unstable();
    }

    let mut announced = Vec::new();
    let mut alice_raw = Vec::new();
    let mut bob_raw = Vec::new();
    for (i, obs) in observations.iter().enumerate() {
        if discard[i] {
            continue;
        }
        if let Outcome::Bit(b) = obs.outcome() {
            announced.push(i);
            alice_raw.push(alice_key[i]);
            bob_raw.push(b);
        }
    }
    Ok(SiftOutcome {
        transcript: SiftTranscript {
            mode,
            discarded,
            raw_key_length: announced.len(),
            announced,
        },
        alice_raw,
        bob_raw,
    })
}
