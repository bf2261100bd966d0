//! Byzantine-resilient T-private information retrieval (BPIR) over simulated
//! replicated databases.
//!
//! The crate builds query plans that hide the retrieved message index from any
//! `T` colluding databases, survives arbitrary corruption by `B` Byzantine
//! databases (plus optionally `U` unresponsive ones), decodes the desired
//! message exactly, and checks the achieved download rate against the
//! closed-form capacity.
//!
//! Module map:
//! * [`field`] — exact prime-field arithmetic and linear algebra.
//! * [`codec`] — Vandermonde MDS generators, puncturing, error-and-erasure
//!   decoding with a brute-force oracle for tests.
//! * [`scheme`] — query-plan construction (general, trivial, unresponsive).
//! * [`sim`] — the simulated database network and adversary strategies.
//! * [`mod@retrieve`] — layered error correction, interference cancellation
//!   and Byzantine identification.
//! * [`analysis`] — capacity formulas, exact-rational rate accounting,
//!   privacy audits and the confusability probe.
//! * [`cli`] — experiment configuration and report emission.

pub mod analysis;
pub mod cli;
pub mod codec;
pub mod field;
pub mod retrieve;
pub mod scheme;
pub mod sim;

pub use analysis::{capacity, capacity_unresponsive, measure_rate, RateReport, Rational};
pub use codec::{DecodeOutcome, MdsGenerator, PuncturePattern, ReceivedWord};
pub use field::{FieldMatrix, PrimeField, SeededRng};
pub use retrieve::{retrieve, RetrievalResult};
pub use scheme::{build_plan, build_trivial_plan, Params, QueryPlan, Regime};
pub use sim::{collect, AdversaryConfig, AnswerSet, Behavior, MessageSet};
