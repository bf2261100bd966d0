//! The simulated database network: honest linear answering, Byzantine
//! strategies (content alteration, answer corruption, coordinated worst
//! case) and unresponsiveness.
//!
//! Everything is single-round: a node's answer depends only on its own
//! contents, its own queries, and the adversary coordination seed. Byzantine
//! mutations are applied after honest evaluation, in ascending node order,
//! from one coordination stream.

use std::collections::{BTreeMap, BTreeSet};

use thiserror::Error;

use crate::field::{FieldElement, PrimeField, SeededRng};
use crate::scheme::{QueryPlan, QuerySpec, Regime};

#[derive(Debug, Clone, PartialEq, Eq, Error)]
pub enum SimError {
    #[error("answer/coefficient length mismatch: {0}")]
    LengthMismatch(String),
    #[error("plan is not materialized; cannot answer queries")]
    NotMaterialized,
}

/// The stored messages `W_1..W_M`, all of equal length.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct MessageSet {
    pub messages: Vec<Vec<FieldElement>>,
}

impl MessageSet {
    pub fn new(messages: Vec<Vec<FieldElement>>) -> Result<Self, SimError> {
        let len = messages.first().map_or(0, |w| w.len());
        if messages.iter().any(|w| w.len() != len) {
            return Err(SimError::LengthMismatch(
                "all messages must have equal length".into(),
            ));
        }
        Ok(MessageSet { messages })
    }

    /// Uniformly random message set of `m` messages of length `len`.
    pub fn sample(m: usize, len: usize, field: PrimeField, rng: &mut SeededRng) -> Self {
        MessageSet {
            messages: (0..m).map(|_| rng.vector(field, len)).collect(),
        }
    }

    pub fn message_len(&self) -> usize {
        self.messages.first().map_or(0, |w| w.len())
    }
}

/// How one database behaves when answering.
#[derive(Debug, Clone, PartialEq)]
pub enum Behavior {
    /// Answers truthfully from the correct contents.
    Honest,
    /// Answers truthfully from altered contents (the unsynchronized case).
    ContentSwap(MessageSet),
    /// Replaces each answer symbol with a uniform field element,
    /// independently with the given probability.
    AnswerRandom(f64),
    /// Replaces every answer symbol with `value + 1`: all of the node's
    /// positions are corrupted, which is the worst case the error budgets
    /// are dimensioned for.
    AnswerWorst,
    /// Returns nothing; contributes erasures, not errors.
    Unresponsive,
}

/// One simulated database.
#[derive(Debug, Clone)]
pub struct DatabaseNode {
    pub index: usize,
    pub contents: MessageSet,
    pub behavior: Behavior,
}

/// Which nodes deviate and how. Nodes not listed behave honestly.
#[derive(Debug, Clone, PartialEq)]
pub struct AdversaryConfig {
    pub behaviors: BTreeMap<usize, Behavior>,
    /// Coordination seed shared by the Byzantine nodes.
    pub seed: u64,
}

impl AdversaryConfig {
    pub fn honest() -> Self {
        AdversaryConfig {
            behaviors: BTreeMap::new(),
            seed: 0,
        }
    }

    pub fn uniform<I: IntoIterator<Item = usize>>(nodes: I, behavior: Behavior, seed: u64) -> Self {
        AdversaryConfig {
            behaviors: nodes.into_iter().map(|n| (n, behavior.clone())).collect(),
            seed,
        }
    }

    pub fn worst<I: IntoIterator<Item = usize>>(byzantine: I, seed: u64) -> Self {
        AdversaryConfig::uniform(byzantine, Behavior::AnswerWorst, seed)
    }

    pub fn with_unresponsive<I: IntoIterator<Item = usize>>(mut self, nodes: I) -> Self {
        for n in nodes {
            self.behaviors.insert(n, Behavior::Unresponsive);
        }
        self
    }

    /// Nodes whose answers may be wrong (not merely missing).
    pub fn byzantine_set(&self) -> BTreeSet<usize> {
        self.behaviors
            .iter()
            .filter(|(_, b)| !matches!(b, Behavior::Honest | Behavior::Unresponsive))
            .map(|(&n, _)| n)
            .collect()
    }

    pub fn unresponsive_set(&self) -> BTreeSet<usize> {
        self.behaviors
            .iter()
            .filter(|(_, b)| matches!(b, Behavior::Unresponsive))
            .map(|(&n, _)| n)
            .collect()
    }
}

/// Per-database answer strings; `None` marks an unresponsive database.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct AnswerSet {
    pub per_db: Vec<Option<Vec<FieldElement>>>,
}

impl AnswerSet {
    /// Symbols actually received.
    pub fn received_symbols(&self) -> u64 {
        self.per_db
            .iter()
            .map(|a| a.as_ref().map_or(0, |v| v.len() as u64))
            .sum()
    }

    /// Debug serialization: arrays of integers with `null` for missing.
    pub fn to_json(&self) -> serde_json::Value {
        serde_json::Value::Array(
            self.per_db
                .iter()
                .map(|a| match a {
                    None => serde_json::Value::Null,
                    Some(v) => serde_json::Value::Array(
                        v.iter().map(|&x| serde_json::json!(x)).collect(),
                    ),
                })
                .collect(),
        )
    }
}

/// Evaluates one node's honest answers: each slot returns the sum over the
/// involved messages of the coefficient-row inner product.
pub fn honest_answer(
    field: PrimeField,
    node: &DatabaseNode,
    specs: &[QuerySpec],
) -> Result<Vec<FieldElement>, SimError> {
    let mut out = Vec::with_capacity(specs.len());
    for spec in specs {
        let mut acc = 0u64;
        for (msg, coeff) in &spec.coeffs {
            let w = node.contents.messages.get(*msg).ok_or_else(|| {
                SimError::LengthMismatch(format!("node stores no message {msg}"))
            })?;
            if w.len() != coeff.len() {
                return Err(SimError::LengthMismatch(format!(
                    "coefficient row of length {} against message of length {}",
                    coeff.len(),
                    w.len()
                )));
            }
            acc = field.add(acc, field.dot(coeff, w));
        }
        out.push(acc);
    }
    Ok(out)
}

/// Post-hoc corruption of already-computed honest answers, per the
/// adversary configuration, in deterministic node order.
pub fn apply_adversary(
    field: PrimeField,
    cfg: &AdversaryConfig,
    answers: &mut AnswerSet,
) {
    let mut coord = SeededRng::derived(cfg.seed, 0xADD5);
    for (&node, behavior) in &cfg.behaviors {
        let Some(slot) = answers.per_db.get_mut(node) else {
            continue;
        };
        match behavior {
            Behavior::Honest | Behavior::ContentSwap(_) => {}
            Behavior::AnswerRandom(rate) => {
                if let Some(values) = slot.as_mut() {
                    for v in values.iter_mut() {
                        let roll = coord.next_u64();
                        let replace = if *rate >= 1.0 {
                            true
                        } else if *rate <= 0.0 {
                            false
                        } else {
                            (roll as f64) < rate * (u64::MAX as f64)
                        };
                        if replace {
                            *v = coord.element(field);
                        }
                    }
                }
            }
            Behavior::AnswerWorst => {
                if let Some(values) = slot.as_mut() {
                    for v in values.iter_mut() {
                        *v = field.add(*v, 1);
                    }
                }
            }
            Behavior::Unresponsive => {
                *slot = None;
            }
        }
    }
}

/// One query round: every node answers its own specs from its own contents,
/// then the adversary mutates the answer set.
pub fn collect(
    plan: &QueryPlan,
    truth: &MessageSet,
    cfg: &AdversaryConfig,
) -> Result<AnswerSet, SimError> {
    let material = plan.material.as_ref().ok_or(SimError::NotMaterialized)?;
    let field = plan.params.field().map_err(|e| {
        SimError::LengthMismatch(format!("invalid field in plan: {e}"))
    })?;
    let mut per_db = Vec::with_capacity(plan.params.n);
    for db in 0..plan.params.n {
        let contents = match cfg.behaviors.get(&db) {
            Some(Behavior::ContentSwap(alt)) => alt.clone(),
            _ => truth.clone(),
        };
        let node = DatabaseNode {
            index: db,
            contents,
            behavior: cfg.behaviors.get(&db).cloned().unwrap_or(Behavior::Honest),
        };
        per_db.push(Some(honest_answer(field, &node, &material.per_db_specs[db])?));
    }
    let mut answers = AnswerSet { per_db };
    apply_adversary(field, cfg, &mut answers);
    if plan.regime == Regime::Trivial {
        // Databases that were never queried hold empty answer lists either way.
        for db in 0..plan.params.n {
            if !plan.queried.contains(&db) {
                answers.per_db[db] = Some(Vec::new());
            }
        }
    }
    Ok(answers)
}
