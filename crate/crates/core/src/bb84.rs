//! Four-state prepare-and-measure protocol on a single nucleus: the ground
//! state |0⟩ and the metastable state |1⟩ form the computational basis, and
//! (|0⟩ ± |1⟩)/√2 the conjugate one. Pure states only; decay during storage
//! is not modelled.

use std::f64::consts::FRAC_1_SQRT_2;

use num_complex::Complex64;
use rand::Rng;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::postproc::{distill, DistillParams, LedgerSummary};

pub const NORM_TOLERANCE: f64 = 1e-12;

/// Amplitudes over {ground, metastable}.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct NuclearQubit {
    a0: Complex64,
    a1: Complex64,
}

impl NuclearQubit {
    pub fn new(a0: Complex64, a1: Complex64) -> Result<Self> {
        let q = Self { a0, a1 };
        q.check()?;
        Ok(q)
    }

    pub fn amplitudes(&self) -> (Complex64, Complex64) {
        (self.a0, self.a1)
    }

    pub fn norm_sqr(&self) -> f64 {
        self.a0.norm_sqr() + self.a1.norm_sqr()
    }

    pub fn check(&self) -> Result<()> {
        let n = self.norm_sqr();
        if (n - 1.0).abs() > NORM_TOLERANCE || !n.is_finite() {
            return Err(Error::NotNormalized(n));
        }
        Ok(())
    }

    /// Amplitudes in the conjugate basis (Hadamard); norm preserving.
    pub fn in_tilde_basis(&self) -> (Complex64, Complex64) {
        (
            (self.a0 + self.a1) * FRAC_1_SQRT_2,
            (self.a0 - self.a1) * FRAC_1_SQRT_2,
        )
    }

    /// Probability of reading 1 in `basis`.
    pub fn probability_of_one(&self, basis: Basis) -> f64 {
        match basis {
            Basis::Computational => self.a1.norm_sqr(),
            Basis::Tilde => self.in_tilde_basis().1.norm_sqr(),
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Basis {
    Computational,
    Tilde,
}

impl Basis {
    pub fn random<R: Rng + ?Sized>(rng: &mut R) -> Self {
        if rng.random() {
            Self::Tilde
        } else {
            Self::Computational
        }
    }
}

pub fn prepare(bit: bool, basis: Basis) -> NuclearQubit {
    let one = Complex64::new(1.0, 0.0);
    let zero = Complex64::new(0.0, 0.0);
    let h = Complex64::new(FRAC_1_SQRT_2, 0.0);
    let (a0, a1) = match (basis, bit) {
        (Basis::Computational, false) => (one, zero),
        (Basis::Computational, true) => (zero, one),
        (Basis::Tilde, false) => (h, h),
        (Basis::Tilde, true) => (h, -h),
    };
    NuclearQubit { a0, a1 }
}

/// Born-rule measurement; the post-measurement state is the returned
/// basis state.
pub fn measure<R: Rng + ?Sized>(qubit: &NuclearQubit, basis: Basis, rng: &mut R) -> Result<bool> {
    qubit.check()?;
    let p1 = qubit.probability_of_one(basis).clamp(0.0, 1.0);
    Ok(if p1 == 0.0 {
        false
    } else if p1 == 1.0 {
        true
    } else {
        rng.random::<f64>() < p1
    })
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Bb84Session {
    pub sent: usize,
    pub eve_enabled: bool,
    pub alice_sifted: Vec<bool>,
    pub bob_sifted: Vec<bool>,
    pub qber: f64,
}

impl Bb84Session {
    pub fn sifted_len(&self) -> usize {
        self.alice_sifted.len()
    }

    pub fn errors(&self) -> usize {
        self.alice_sifted
            .iter()
            .zip(&self.bob_sifted)
            .filter(|(a, b)| a != b)
            .count()
    }

    pub fn summary(&self) -> Bb84Summary {
        Bb84Summary {
            sent: self.sent,
            eve_enabled: self.eve_enabled,
            sifted: self.sifted_len(),
            errors: self.errors(),
            qber: self.qber,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Bb84Summary {
    pub sent: usize,
    pub eve_enabled: bool,
    pub sifted: usize,
    pub errors: usize,
    pub qber: f64,
}

/// `n` qubits with uniform bits and bases on both sides. With Eve enabled,
/// every qubit is measured in a random basis and resent in that basis.
pub fn bb84_session<R: Rng + ?Sized>(
    n: usize,
    eve_enabled: bool,
    rng: &mut R,
) -> Result<Bb84Session> {
    if n == 0 {
        return Err(Error::domain("a session needs at least one qubit"));
    }
    let mut alice_sifted = Vec::with_capacity(n / 2);
    let mut bob_sifted = Vec::with_capacity(n / 2);
    for _ in 0..n {
        let bit: bool = rng.random();
        let basis = Basis::random(rng);
        let mut qubit = prepare(bit, basis);
        if eve_enabled {
            let eve_basis = Basis::random(rng);
            let seen = measure(&qubit, eve_basis, rng)?;
            qubit = prepare(seen, eve_basis);
        }
        let bob_basis = Basis::random(rng);
        let read = measure(&qubit, bob_basis, rng)?;
        if bob_basis == basis {
            alice_sifted.push(bit);
            bob_sifted.push(read);
        }
    }
    let errors = alice_sifted
        .iter()
        .zip(&bob_sifted)
        .filter(|(a, b)| a != b)
        .count();
    let qber = if alice_sifted.is_empty() {
        0.0
    } else {
        errors as f64 / alice_sifted.len() as f64
    };
    Ok(Bb84Session {
        sent: n,
        eve_enabled,
        alice_sifted,
        bob_sifted,
        qber,
    })
}

/// Exact intercept-resend error rate, averaged over Alice's bit and basis,
/// Eve's basis and Eve's outcome, restricted to matching Alice/Bob bases.
pub fn intercept_resend_qber() -> f64 {
    let bases = [Basis::Computational, Basis::Tilde];
    let mut total = 0.0;
    for bit in [false, true] {
        for &basis in &bases {
            let sent = prepare(bit, basis);
            for &eve in &bases {
                let p1 = sent.probability_of_one(eve);
                for (seen, p_seen) in [(false, 1.0 - p1), (true, p1)] {
                    let resent = prepare(seen, eve);
                    let p_bob_one = resent.probability_of_one(basis);
                    let p_err = if bit { 1.0 - p_bob_one } else { p_bob_one };
                    total += 0.25 * 0.5 * p_seen * p_err;
                }
            }
        }
    }
    total
}

/// Runs a session and distills its sifted keys with the shared pipeline.
/// Eve's knowledge is taken as zero beyond what the error rate costs in
/// reconciliation.
pub fn bb84_distilled<R: Rng + ?Sized>(
    n: usize,
    eve_enabled: bool,
    params: &DistillParams,
    rng: &mut R,
) -> Result<(Bb84Session, LedgerSummary)> {
    let session = bb84_session(n, eve_enabled, rng)?;
    let ledger = distill(&session.alice_sifted, &session.bob_sifted, 0.0, params, rng)?;
    Ok((session, ledger.summary()))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::postproc::DistillStatus;
    use crate::rng::RngSeed;

    const BASES: [Basis; 2] = [Basis::Computational, Basis::Tilde];

    #[test]
    fn prepared_states() {
        let q = prepare(false, Basis::Computational);
        assert_eq!(
            q.amplitudes(),
            (Complex64::new(1.0, 0.0), Complex64::new(0.0, 0.0))
        );
        let (a0, a1) = prepare(true, Basis::Tilde).amplitudes();
        assert_eq!(a0.re, FRAC_1_SQRT_2);
        assert_eq!(a1.re, -FRAC_1_SQRT_2);
        for bit in [false, true] {
            for b in BASES {
                assert!((prepare(bit, b).norm_sqr() - 1.0).abs() <= NORM_TOLERANCE);
            }
        }
    }

    #[test]
    fn same_basis_is_deterministic() {
        let mut rng = RngSeed::new(1).stream("bb84", 0);
        for bit in [false, true] {
            for b in BASES {
                let q = prepare(bit, b);
                for _ in 0..1000 {
                    assert_eq!(measure(&q, b, &mut rng).unwrap(), bit);
                }
            }
        }
    }

    #[test]
    fn born_statistics_for_all_states() {
        let shots = 100_000u64;
        for bit in [false, true] {
            for prep in BASES {
                for meas in BASES {
                    let mut rng = RngSeed::new(2)
                        .stream("born", u64::from(bit) * 4 + (prep as u64) * 2 + meas as u64);
                    let q = prepare(bit, prep);
                    let p = q.probability_of_one(meas);
                    let ones = (0..shots)
                        .filter(|_| measure(&q, meas, &mut rng).unwrap())
                        .count() as f64;
                    let sd = (shots as f64 * p * (1.0 - p)).sqrt();
                    assert!(
                        (ones - shots as f64 * p).abs() <= 3.0 * sd.max(1e-9),
                        "{bit} {prep:?} {meas:?}"
                    );
                    if prep != meas {
                        assert!((p - 0.5).abs() < 1e-15);
                    }
                }
            }
        }
    }

    #[test]
    fn basis_change_preserves_norm() {
        let mut rng = RngSeed::new(3).stream("unitary", 0);
        for _ in 0..1000 {
            let (x, y, z, w): (f64, f64, f64, f64) =
                (rng.random(), rng.random(), rng.random(), rng.random());
            let a0 = Complex64::new(x - 0.5, y - 0.5);
            let a1 = Complex64::new(z - 0.5, w - 0.5);
            let n = (a0.norm_sqr() + a1.norm_sqr()).sqrt();
            let q = NuclearQubit::new(a0 / n, a1 / n).unwrap();
            let (t0, t1) = q.in_tilde_basis();
            assert!((t0.norm_sqr() + t1.norm_sqr() - 1.0).abs() <= NORM_TOLERANCE);
        }
    }

    #[test]
    fn unnormalized_state_is_rejected() {
        let c = Complex64::new(1.0, 0.0);
        assert!(matches!(
            NuclearQubit::new(c, c),
            Err(Error::NotNormalized(_))
        ));
        let bad = NuclearQubit { a0: c, a1: c };
        let mut rng = RngSeed::new(4).stream("bb84", 0);
        assert!(measure(&bad, Basis::Computational, &mut rng).is_err());
    }

    #[test]
    fn oracle_is_one_quarter() {
        assert!((intercept_resend_qber() - 0.25).abs() < 1e-15);
    }

    #[test]
    fn session_without_eve_is_error_free() {
        let mut rng = RngSeed::new(5).stream("bb84", 0);
        let s = bb84_session(20_000, false, &mut rng).unwrap();
        assert_eq!(s.qber, 0.0);
        let sd = (20_000.0f64 * 0.25).sqrt();
        assert!((s.sifted_len() as f64 - 10_000.0).abs() <= 3.0 * sd);
        assert!(bb84_session(0, false, &mut rng).is_err());
    }

    #[test]
    fn distilled_session_without_eve() {
        let mut rng = RngSeed::new(6).stream("bb84", 0);
        let (s, ledger) = bb84_distilled(4000, false, &DistillParams::default(), &mut rng).unwrap();
        assert_eq!(s.qber, 0.0);
        assert_eq!(ledger.status, DistillStatus::Ok);
        assert_eq!(ledger.residual_mismatches, 0);
        assert!(ledger.final_length > 0);
    }
}
