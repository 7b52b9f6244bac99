//! Classical post-processing of the sifted key: error estimation,
//! reconciliation and privacy amplification, with every publicly disclosed
//! bit accounted for in a [`KeyLedger`].

mod reconcile;
mod toeplitz;

use rand::seq::index;
use rand::Rng;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

pub use reconcile::{reconcile, ReconcileParams, Reconciled, MAX_ERROR_RATE};
pub use toeplitz::HashSeed;

pub const DEFAULT_SECURITY_BITS: usize = 64;
/// Standard scores above the sampled error rate used to size reconciliation
/// blocks. A small sample often sees too few errors; undersized estimates
/// give blocks that hide pairs of errors.
pub const BLOCK_SIZING_Z: f64 = 2.0;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ErrorEstimate {
    pub rate: f64,
    /// Positions compared in public, ascending. They must be dropped from
    /// both keys before reconciliation.
    pub disclosed: Vec<usize>,
}

impl ErrorEstimate {
    /// Wilson score upper limit at `z` standard scores.
    pub fn upper_bound(&self, z: f64) -> f64 {
        let n = self.disclosed.len() as f64;
        if n == 0.0 {
            return 1.0;
        }
        let p = self.rate;
        let z2 = z * z;
        let centre = p + z2 / (2.0 * n);
        let spread = z * (p * (1.0 - p) / n + z2 / (4.0 * n * n)).sqrt();
        ((centre + spread) / (1.0 + z2 / n)).min(1.0)
    }
}

/// Publicly compares a uniformly chosen `sample_fraction` of positions
/// (at least one).
pub fn estimate_error_rate<R: Rng + ?Sized>(
    alice: &[bool],
    bob: &[bool],
    sample_fraction: f64,
    rng: &mut R,
) -> Result<ErrorEstimate> {
    if alice.is_empty() {
        return Err(Error::domain(
            "cannot estimate the error rate of an empty key",
        ));
    }
    if alice.len() != bob.len() {
        return Err(Error::Protocol(format!(
            "key lengths differ: {} vs {}",
            alice.len(),
            bob.len()
        )));
    }
    if !(sample_fraction > 0.0 && sample_fraction <= 1.0) {
        return Err(Error::domain(format!(
            "sample_fraction must lie in (0, 1], got {sample_fraction}"
        )));
    }
    let n = alice.len();
    let size = ((n as f64 * sample_fraction).ceil() as usize).clamp(1, n);
    let mut disclosed = index::sample(rng, n, size).into_vec();
    disclosed.sort_unstable();
    let errors = disclosed.iter().filter(|&&i| alice[i] != bob[i]).count();
    Ok(ErrorEstimate {
        rate: errors as f64 / size as f64,
        disclosed,
    })
}

/// `key` without the positions listed in `sorted_indices`.
pub fn remove_indices(key: &[bool], sorted_indices: &[usize]) -> Vec<bool> {
    let mut skip = sorted_indices.iter().peekable();
    key.iter()
        .enumerate()
        .filter(|(i, _)| {
            if skip.peek() == Some(&i) {
                skip.next();
                false
            } else {
                true
            }
        })
        .map(|(_, &b)| b)
        .collect()
}

/// `m = max(0, n - ceil(n * eve_bound) - leakage - s)`.
pub fn final_key_length(n: usize, eve_bound: f64, leakage: usize, security_bits: usize) -> usize {
    let eve = (n as f64 * eve_bound.clamp(0.0, 1.0)).ceil() as usize;
    n.saturating_sub(eve)
        .saturating_sub(leakage)
        .saturating_sub(security_bits)
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "SCREAMING_SNAKE_CASE")]
pub enum AmplifyStatus {
    Ok,
    /// Nothing left after subtracting Eve's share, leakage and margin.
    Aborted,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct Amplified {
    pub key: Vec<bool>,
    pub status: AmplifyStatus,
}

/// Compresses `key` to [`final_key_length`] bits with the Toeplitz hash
/// given by `seed`, whose dimensions must match.
pub fn privacy_amplify(
    key: &[bool],
    leakage: usize,
    eve_bound: f64,
    security_bits: usize,
    seed: &HashSeed,
) -> Result<Amplified> {
    let n = key.len();
    if n == 0 {
        return Err(Error::domain("cannot amplify an empty key"));
    }
    let m = final_key_length(n, eve_bound, leakage, security_bits);
    if m == 0 {
        return Ok(Amplified {
            key: Vec::new(),
            status: AmplifyStatus::Aborted,
        });
    }
    if seed.input_len() != n || seed.output_len() != m {
        return Err(Error::domain(format!(
            "seed is for {} -> {}, need {n} -> {m}",
            seed.input_len(),
            seed.output_len()
        )));
    }
    Ok(Amplified {
        key: seed.hash(key)?,
        status: AmplifyStatus::Ok,
    })
}

/// Hex rendering, bits packed MSB first, zero-padded to whole bytes.
pub fn bits_to_hex(bits: &[bool]) -> String {
    let bytes: Vec<u8> = bits
        .chunks(8)
        .map(|c| {
            c.iter()
                .enumerate()
                .fold(0u8, |acc, (i, &b)| acc | (u8::from(b) << (7 - i)))
        })
        .collect();
    hex::encode(bytes)
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct DistillParams {
    #[serde(default = "default_sample_fraction")]
    pub sample_fraction: f64,
    #[serde(default = "default_security_bits")]
    pub security_bits: usize,
    #[serde(default = "default_passes")]
    pub passes: usize,
    #[serde(default = "default_verification")]
    pub verification_checks: usize,
}

fn default_sample_fraction() -> f64 {
    0.2
}
fn default_security_bits() -> usize {
    DEFAULT_SECURITY_BITS
}
fn default_passes() -> usize {
    4
}
fn default_verification() -> usize {
    16
}

impl Default for DistillParams {
    fn default() -> Self {
        Self {
            sample_fraction: default_sample_fraction(),
            security_bits: default_security_bits(),
            passes: default_passes(),
            verification_checks: default_verification(),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
#[serde(
    rename_all = "SCREAMING_SNAKE_CASE",
    tag = "status",
    content = "reason"
)]
pub enum DistillStatus {
    Ok,
    Aborted(String),
}

/// Full account of one post-processing session.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct KeyLedger {
    pub alice_raw: Vec<bool>,
    pub bob_raw: Vec<bool>,
    pub disclosed_sample_indices: Vec<usize>,
    pub estimated_error_rate: f64,
    /// Key length after the disclosed sample is removed.
    pub reconciled_length: usize,
    /// Parity bits disclosed during reconciliation.
    pub reconciliation_leakage: usize,
    pub eve_bound: f64,
    pub security_parameter: usize,
    pub final_key: Vec<bool>,
    /// Bob's copy after the same hash.
    pub bob_final_key: Vec<bool>,
    pub status: DistillStatus,
}

impl KeyLedger {
    /// Bits that crossed the public channel: the compared sample plus every
    /// reconciliation parity.
    pub fn total_disclosed(&self) -> usize {
        self.disclosed_sample_indices.len() + self.reconciliation_leakage
    }

    pub fn final_mismatches(&self) -> usize {
        self.final_key
            .iter()
            .zip(&self.bob_final_key)
            .filter(|(a, b)| a != b)
            .count()
            + self.final_key.len().abs_diff(self.bob_final_key.len())
    }

    pub fn expected_final_length(&self) -> usize {
        final_key_length(
            self.reconciled_length,
            self.eve_bound,
            self.reconciliation_leakage,
            self.security_parameter,
        )
    }

    pub fn summary(&self) -> LedgerSummary {
        LedgerSummary {
            raw_length: self.alice_raw.len(),
            sample_disclosed: self.disclosed_sample_indices.len(),
            estimated_error_rate: self.estimated_error_rate,
            reconciled_length: self.reconciled_length,
            reconciliation_leakage: self.reconciliation_leakage,
            eve_bound: self.eve_bound,
            security_parameter: self.security_parameter,
            final_length: self.final_key.len(),
            final_key_hex: bits_to_hex(&self.final_key),
            residual_mismatches: self.final_mismatches(),
            status: self.status.clone(),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct LedgerSummary {
    pub raw_length: usize,
    pub sample_disclosed: usize,
    pub estimated_error_rate: f64,
    pub reconciled_length: usize,
    pub reconciliation_leakage: usize,
    pub eve_bound: f64,
    pub security_parameter: usize,
    pub final_length: usize,
    pub final_key_hex: String,
    pub residual_mismatches: usize,
    pub status: DistillStatus,
}

/// Runs estimation, reconciliation and privacy amplification on a pair of
/// sifted keys. Abort conditions are reported in the ledger status.
pub fn distill<R: Rng + ?Sized>(
    alice_raw: &[bool],
    bob_raw: &[bool],
    eve_bound: f64,
    params: &DistillParams,
    rng: &mut R,
) -> Result<KeyLedger> {
    let estimate = estimate_error_rate(alice_raw, bob_raw, params.sample_fraction, rng)?;
    let disclosed = estimate.disclosed.clone();
    let alice = remove_indices(alice_raw, &disclosed);
    let bob = remove_indices(bob_raw, &disclosed);
    let mut ledger = KeyLedger {
        alice_raw: alice_raw.to_vec(),
        bob_raw: bob_raw.to_vec(),
        disclosed_sample_indices: disclosed,
        estimated_error_rate: estimate.rate,
        reconciled_length: alice.len(),
        reconciliation_leakage: 0,
        eve_bound,
        security_parameter: params.security_bits,
        final_key: Vec::new(),
        bob_final_key: Vec::new(),
        status: DistillStatus::Ok,
    };
    if alice.is_empty() {
        ledger.status = DistillStatus::Aborted("no bits left after error estimation".into());
        return Ok(ledger);
    }

    if estimate.rate > MAX_ERROR_RATE {
        ledger.status = DistillStatus::Aborted(
            Error::ReconciliationAborted {
                rate: estimate.rate,
                limit: MAX_ERROR_RATE,
            }
            .to_string(),
        );
        return Ok(ledger);
    }
    let sizing_rate = estimate.upper_bound(BLOCK_SIZING_Z).min(MAX_ERROR_RATE);
    let rec_params = ReconcileParams {
        passes: params.passes,
        verification_checks: params.verification_checks,
        ..ReconcileParams::for_error_rate(sizing_rate)
    };
    let reconciled = match reconcile(&alice, &bob, &rec_params, rng) {
        Ok(r) => r,
        Err(e @ Error::ReconciliationAborted { .. }) => {
            ledger.status = DistillStatus::Aborted(e.to_string());
            return Ok(ledger);
        }
        Err(e) => return Err(e),
    };
    ledger.reconciliation_leakage = reconciled.leakage;

    let n = reconciled.alice.len();
    let m = final_key_length(n, eve_bound, reconciled.leakage, params.security_bits);
    let seed = HashSeed::random(n, m, rng);
    let a = privacy_amplify(
        &reconciled.alice,
        reconciled.leakage,
        eve_bound,
        params.security_bits,
        &seed,
    )?;
    let b = privacy_amplify(
        &reconciled.bob,
        reconciled.leakage,
        eve_bound,
        params.security_bits,
        &seed,
    )?;
    if a.status == AmplifyStatus::Aborted {
        ledger.status = DistillStatus::Aborted("privacy amplification left no key".into());
    } else if !reconciled.verified {
        ledger.status = DistillStatus::Aborted("reconciliation could not be verified".into());
    }
    ledger.final_key = a.key;
    ledger.bob_final_key = b.key;
    Ok(ledger)
}
