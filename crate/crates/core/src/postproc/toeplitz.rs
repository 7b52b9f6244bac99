//! Toeplitz-matrix universal hashing over GF(2).
//!
//! An `m x n` Toeplitz matrix is fixed by its first column and first row,
//! `n + m - 1` bits in total. Entry `(i, j)` is `seed[i - j + n - 1]`, so
//! every row is a reversed window of the seed and the product with a packed
//! input reduces to shifted word-wise AND + popcount.

use rand::Rng;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

/// Seed of one Toeplitz hash `{0,1}^n -> {0,1}^m`.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct HashSeed {
    input_len: usize,
    output_len: usize,
    bits: Vec<bool>,
}

impl HashSeed {
    pub fn random<R: Rng + ?Sized>(input_len: usize, output_len: usize, rng: &mut R) -> Self {
        let len = seed_len(input_len, output_len);
        Self {
            input_len,
            output_len,
            bits: (0..len).map(|_| rng.random()).collect(),
        }
    }

    pub fn from_bits(input_len: usize, output_len: usize, bits: Vec<bool>) -> Result<Self> {
        let want = seed_len(input_len, output_len);
        if bits.len() != want {
            return Err(Error::domain(format!(
                "toeplitz seed for {input_len} -> {output_len} needs {want} bits, got {}",
                bits.len()
            )));
        }
        Ok(Self {
            input_len,
            output_len,
            bits,
        })
    }

    pub fn input_len(&self) -> usize {
        self.input_len
    }

    pub fn output_len(&self) -> usize {
        self.output_len
    }

    pub fn bits(&self) -> &[bool] {
        &self.bits
    }

    pub fn hash(&self, input: &[bool]) -> Result<Vec<bool>> {
        if input.len() != self.input_len {
            return Err(Error::domain(format!(
                "toeplitz hash expects {} input bits, got {}",
                self.input_len,
                input.len()
            )));
        }
        Ok(toeplitz_product(&self.bits, input, self.output_len))
    }
}

fn seed_len(n: usize, m: usize) -> usize {
    if m == 0 || n == 0 {
        0
    } else {
        n + m - 1
    }
}

fn pack(bits: impl ExactSizeIterator<Item = bool>) -> Vec<u64> {
    let mut words = vec![0u64; bits.len().div_ceil(64)];
    for (i, b) in bits.enumerate() {
        if b {
            words[i / 64] |= 1 << (i % 64);
        }
    }
    words
}

/// 64 bits of `words` starting at bit `offset` (zero past the end).
fn window(words: &[u64], offset: usize) -> u64 {
    let (w, s) = (offset / 64, offset % 64);
    let lo = words.get(w).copied().unwrap_or(0) >> s;
    if s == 0 {
        lo
    } else {
        lo | words.get(w + 1).copied().unwrap_or(0) << (64 - s)
    }
}

fn toeplitz_product(seed: &[bool], input: &[bool], m: usize) -> Vec<bool> {
    let n = input.len();
    if m == 0 || n == 0 {
        return vec![false; m];
    }
    // rev[t] = seed[L - 1 - t]; row i is rev[m - 1 - i .. m - 1 - i + n]
    let rev = pack(seed.iter().rev().copied());
    let x = pack(input.iter().copied());
    (0..m)
        .map(|i| {
            let start = m - 1 - i;
            let ones: u32 = x
                .iter()
                .enumerate()
                .map(|(w, &xw)| (window(&rev, start + 64 * w) & xw).count_ones())
                .sum();
            ones % 2 == 1
        })
        .collect()
}
