//! Simulation and analysis of key distribution over plates of decaying
//! metastable nuclei.
//!
//! Alice spots a dilute radioactive sample on one cell of every cell pair
//! and a chemically identical placebo on the other; the side carries the
//! bit. The plate travels to Bob, who learns a bit whenever he sees a decay.
//! An eavesdropper can watch the plate in transit, or swap decayed samples
//! for fresh ones; both attacks are bounded by how many nuclei decay before
//! arrival.
//!
//! * [`decay`]: exponential decay law and sample-count distributions.
//! * [`protocol`]: plate encoding, timeline phases, Bob's measurements, sifting.
//! * [`adversary`]: translucent and opaque attacks, Bob's detection test,
//!   analytic bounds.
//! * [`postproc`]: error estimation, reconciliation, Toeplitz privacy amplification.
//! * [`isotope`]: production and dilution arithmetic, isotope catalog.
//! * [`bb84`]: the four-state single-nucleus variant.
//! * [`config`], [`runner`]: seeded batch runs, bound tables and sweeps.

// `!(x >= 0.0)` is used on purpose: it also rejects NaN.
#![allow(clippy::neg_cmp_op_on_partial_ord)]

pub mod adversary;
pub mod bb84;
pub mod config;
pub mod decay;
pub mod error;
pub mod isotope;
pub mod postproc;
pub mod protocol;
pub mod rng;
pub mod runner;
pub mod stats;

pub use config::RunConfig;
pub use error::{Error, Result, Warning};
pub use rng::RngSeed;
pub use runner::{run_bounds, run_simulation, run_sweep, RunReport};
