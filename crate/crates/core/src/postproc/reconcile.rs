//! Interactive parity reconciliation in the style of Cascade.
//!
//! Pass 1 splits the key into blocks of `k1 = max(8, ceil(0.73 / e))` bits,
//! every later pass reshuffles the positions and doubles the block size.
//! Alice discloses each block parity; a mismatching block is bisected, one
//! disclosed parity per halving, until the error is located and Bob flips
//! it. A flip changes the parity of the block that holds the bit in every
//! earlier pass, so those blocks are re-examined (the cascade) until all
//! known parities agree.
//!
//! After the scheduled passes Alice and Bob compare a number of random
//! subset parities. Keys that still differ survive each check with
//! probability 1/2; on a failed check another pass is run with half the
//! previous extra pass's block size (starting from `k1 / 2`).

use rand::seq::SliceRandom;
use rand::Rng;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

/// Above this error rate the disclosed parities would eat the key.
pub const MAX_ERROR_RATE: f64 = 0.15;

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ReconcileParams {
    /// Error rate used to size the first-pass blocks.
    pub estimated_error_rate: f64,
    #[serde(default = "default_passes")]
    pub passes: usize,
    /// Random subset-parity checks after the last pass.
    #[serde(default = "default_verification")]
    pub verification_checks: usize,
    /// Extra passes allowed when a verification check fails.
    #[serde(default = "default_extra")]
    pub max_extra_passes: usize,
}

fn default_passes() -> usize {
    4
}

fn default_verification() -> usize {
    16
}

fn default_extra() -> usize {
    4
}

impl ReconcileParams {
    pub fn for_error_rate(estimated_error_rate: f64) -> Self {
        Self {
            estimated_error_rate,
            passes: default_passes(),
            verification_checks: default_verification(),
            max_extra_passes: default_extra(),
        }
    }

    /// First-pass block size, capped at the key length.
    pub fn initial_block_size(&self, n: usize) -> usize {
        let k = if self.estimated_error_rate > 0.0 {
            (0.73 / self.estimated_error_rate).ceil()
        } else {
            f64::INFINITY
        };
        let k = if k.is_finite() {
            (k as usize).max(8)
        } else {
            usize::MAX
        };
        k.min(n.max(1))
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct Reconciled {
    pub alice: Vec<bool>,
    pub bob: Vec<bool>,
    /// Every parity bit disclosed on the public channel.
    pub leakage: usize,
    pub corrections: usize,
    pub passes_run: usize,
    pub initial_block_size: usize,
    /// Verification checks passed in a row at the end. Keys that still
    /// differ pass all of them with probability at most `2^-residual_bound`.
    pub residual_bound: usize,
    pub verified: bool,
}

struct Pass {
    block: usize,
    order: Vec<usize>,
    position: Vec<usize>,
    alice_parity: Vec<bool>,
    bob_parity: Vec<bool>,
}

impl Pass {
    fn block_of(&self, index: usize) -> usize {
        self.position[index] / self.block
    }

    fn range(&self, b: usize) -> std::ops::Range<usize> {
        let n = self.order.len();
        b * self.block..((b + 1) * self.block).min(n)
    }
}

struct Session<'a> {
    alice: &'a [bool],
    bob: Vec<bool>,
    passes: Vec<Pass>,
    leakage: usize,
    corrections: usize,
}

fn parity(key: &[bool], indices: &[usize]) -> bool {
    indices.iter().fold(false, |acc, &i| acc ^ key[i])
}

impl Session<'_> {
    fn add_pass(&mut self, block: usize, order: Vec<usize>) {
        let n = order.len();
        let mut position = vec![0; n];
        for (pos, &i) in order.iter().enumerate() {
            position[i] = pos;
        }
        let blocks = n.div_ceil(block);
        let chunk =
            |key: &[bool]| -> Vec<bool> { order.chunks(block).map(|c| parity(key, c)).collect() };
        let alice_parity = chunk(self.alice);
        let bob_parity = chunk(&self.bob);
        self.leakage += blocks;
        self.passes.push(Pass {
            block,
            order,
            position,
            alice_parity,
            bob_parity,
        });
        let p = self.passes.len() - 1;
        let pending: Vec<(usize, usize)> = (0..blocks)
            .filter(|&b| self.passes[p].alice_parity[b] != self.passes[p].bob_parity[b])
            .map(|b| (p, b))
            .collect();
        self.cascade(pending);
    }

    /// Bisects every odd block until all disclosed parities agree.
    fn cascade(&mut self, mut pending: Vec<(usize, usize)>) {
        while let Some((p, b)) = pending.pop() {
            let pass = &self.passes[p];
            if pass.alice_parity[b] == pass.bob_parity[b] {
                continue;
            }
            let flipped = self.bisect(p, b);
            self.bob[flipped] = !self.bob[flipped];
            self.corrections += 1;
            for (q, pass) in self.passes.iter_mut().enumerate() {
                let blk = pass.block_of(flipped);
                pass.bob_parity[blk] = !pass.bob_parity[blk];
                if pass.alice_parity[blk] != pass.bob_parity[blk] {
                    pending.push((q, blk));
                }
            }
        }
    }

    /// Locates one error inside an odd block of pass `p`, disclosing the
    /// parity of each first half along the way.
    fn bisect(&mut self, p: usize, b: usize) -> usize {
        let pass = &self.passes[p];
        let mut range = pass.range(b);
        while range.len() > 1 {
            let mid = range.start + range.len() / 2;
            let half = &pass.order[range.start..mid];
            self.leakage += 1;
            if parity(self.alice, half) != parity(&self.bob, half) {
                range = range.start..mid;
            } else {
                range = mid..range.end;
            }
        }
        pass.order[range.start]
    }

    /// One random subset-parity comparison; one disclosed bit.
    fn check<R: Rng + ?Sized>(&mut self, rng: &mut R) -> bool {
        let subset: Vec<usize> = (0..self.alice.len()).filter(|_| rng.random()).collect();
        self.leakage += 1;
        parity(self.alice, &subset) == parity(&self.bob, &subset)
    }
}

/// Corrects Bob's key towards Alice's. Only parities cross the public
/// channel; all of them are counted in `leakage`.
pub fn reconcile<R: Rng + ?Sized>(
    alice: &[bool],
    bob: &[bool],
    params: &ReconcileParams,
    rng: &mut R,
) -> Result<Reconciled> {
    if alice.len() != bob.len() {
        return Err(Error::Protocol(format!(
            "cannot reconcile keys of lengths {} and {}",
            alice.len(),
            bob.len()
        )));
    }
    if !(params.estimated_error_rate >= 0.0) || params.estimated_error_rate > MAX_ERROR_RATE {
        return Err(Error::ReconciliationAborted {
            rate: params.estimated_error_rate,
            limit: MAX_ERROR_RATE,
        });
    }
    let n = alice.len();
    let k1 = params.initial_block_size(n);
    let mut session = Session {
        alice,
        bob: bob.to_vec(),
        passes: Vec::new(),
        leakage: 0,
        corrections: 0,
    };
    if n == 0 {
        return Ok(Reconciled {
            alice: Vec::new(),
            bob: Vec::new(),
            leakage: 0,
            corrections: 0,
            passes_run: 0,
            initial_block_size: k1,
            residual_bound: 0,
            verified: true,
        });
    }

    let run_pass = |session: &mut Session, block: usize, rng: &mut R| {
        let mut order: Vec<usize> = (0..n).collect();
        if !session.passes.is_empty() {
            order.shuffle(rng);
        }
        session.add_pass(block.clamp(1, n), order);
    };
    let mut block = k1;
    for _ in 0..params.passes.max(1) {
        run_pass(&mut session, block, rng);
        block = block.saturating_mul(2);
    }

    // a failed check means errors hide in even blocks; retry with smaller ones
    let mut extra = 0;
    let mut residual_bound = 0;
    let verified = loop {
        while residual_bound < params.verification_checks && session.check(rng) {
            residual_bound += 1;
        }
        if residual_bound == params.verification_checks {
            break true;
        }
        if extra == params.max_extra_passes {
            break false;
        }
        extra += 1;
        run_pass(&mut session, (k1 >> extra).max(2), rng);
        residual_bound = 0;
    };

    Ok(Reconciled {
        alice: alice.to_vec(),
        passes_run: session.passes.len(),
        bob: session.bob,
        leakage: session.leakage,
        corrections: session.corrections,
        initial_block_size: k1,
        residual_bound,
        verified,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::rng::RngSeed;

    fn random_key(n: usize, rng: &mut impl Rng) -> Vec<bool> {
        (0..n).map(|_| rng.random()).collect()
    }

    #[test]
    fn identical_keys_cost_only_top_level_parities() {
        let mut rng = RngSeed::new(1).stream("rec", 0);
        let a = random_key(1000, &mut rng);
        let params = ReconcileParams {
            verification_checks: 0,
            ..ReconcileParams::for_error_rate(0.02)
        };
        let r = reconcile(&a, &a, &params, &mut rng).unwrap();
        assert_eq!(r.corrections, 0);
        assert_eq!(r.initial_block_size, 37);
        // blocks of 37, 74, 148, 296 over 1000 bits
        assert_eq!(r.leakage, 28 + 14 + 7 + 4);
        assert_eq!(r.bob, a);
    }

    #[test]
    fn single_flip_is_found_cheaply() {
        let mut rng = RngSeed::new(2).stream("rec", 0);
        let a = random_key(1024, &mut rng);
        let mut b = a.clone();
        b[517] = !b[517];
        let params = ReconcileParams::for_error_rate(1.0 / 1024.0);
        let r = reconcile(&a, &b, &params, &mut rng).unwrap();
        assert_eq!(r.bob, a);
        assert_eq!(r.corrections, 1);
        let block = r.initial_block_size as f64;
        let top = (1024.0 / block).ceil();
        let search = block.log2().ceil();
        // later passes each add one parity per block; verification adds its checks
        let overhead = (r.passes_run - 1) as f64 * top + params.verification_checks as f64;
        assert!(
            r.leakage as f64 <= 2.0 * top + 2.0 * search + overhead,
            "leakage {}",
            r.leakage
        );
    }

    #[test]
    fn two_percent_errors_are_removed() {
        let mut residual = 0usize;
        let trials = 100;
        let n = 10_000;
        for t in 0..trials {
            let mut rng = RngSeed::new(3).stream("rec", t);
            let a = random_key(n, &mut rng);
            let b: Vec<bool> = a
                .iter()
                .map(|&x| x ^ (rng.random::<f64>() < 0.02))
                .collect();
            let r = reconcile(&a, &b, &ReconcileParams::for_error_rate(0.02), &mut rng).unwrap();
            residual += r.alice.iter().zip(&r.bob).filter(|(x, y)| x != y).count();
        }
        let rate = residual as f64 / (trials as usize * n) as f64;
        assert!(rate <= 1e-3, "residual mismatch rate {rate}");
    }

    #[test]
    fn aborts_above_fifteen_percent() {
        let a = vec![false; 100];
        let mut rng = RngSeed::new(4).stream("rec", 0);
        let err = reconcile(&a, &a, &ReconcileParams::for_error_rate(0.2), &mut rng).unwrap_err();
        assert!(matches!(err, Error::ReconciliationAborted { .. }));
        assert!(reconcile(
            &a,
            &a[..99],
            &ReconcileParams::for_error_rate(0.01),
            &mut rng
        )
        .is_err());
    }

    #[test]
    fn zero_error_estimate_uses_one_block() {
        let p = ReconcileParams::for_error_rate(0.0);
        assert_eq!(p.initial_block_size(500), 500);
        assert_eq!(
            ReconcileParams::for_error_rate(0.5).initial_block_size(500),
            8
        );
        assert_eq!(
            ReconcileParams::for_error_rate(0.01).initial_block_size(20),
            20
        );
    }
}
