//! Decoding of collected answers.
//!
//! Layer by layer, in ascending round order: each undesired subset's
//! downloaded sum is a codeword of that subset's generator with the
//! side-information suffix unseen, so it is decoded with the suffix marked
//! as erasures (equivalently, on the punctured code) and the suffix is then
//! regenerated exactly. The regenerated side information is cancelled from
//! the mixed answers, leaving a noisy codeword of the outer desired-message
//! code, which is decoded and inverted back through the mixing matrix.
//! Databases owning any corrected position are identified as Byzantine;
//! missing databases only ever contribute erasures and are never accused.

use std::collections::BTreeSet;

use thiserror::Error;

use crate::codec::{CodecError, DecodeOutcome, ReceivedWord};
use crate::field::{FieldElement, FieldError};
use crate::scheme::{QueryPlan, Regime, SchemeError};
use crate::sim::AnswerSet;

#[derive(Debug, Error)]
pub enum RetrievalError {
    #[error("answer set does not fit the plan: {0}")]
    AnswerShape(String),
    #[error("layer {layer} failed to decode (adversary exceeded its budget?): {source}")]
    LayerDecode {
        layer: String,
        #[source]
        source: CodecError,
    },
    #[error("outer desired-message decode failed (adversary exceeded its budget?): {0}")]
    OuterDecode(#[source] CodecError),
    #[error("no majority value at copy position {position}")]
    NoMajority { position: usize },
    #[error("plan is not materialized; cannot decode against it")]
    NotMaterialized,
    #[error(transparent)]
    Scheme(#[from] SchemeError),
    #[error(transparent)]
    Field(#[from] FieldError),
    #[error(transparent)]
    Codec(#[from] CodecError),
}

/// Error accounting of one decoded layer.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct LayerTally {
    pub layer: String,
    pub errors: usize,
    /// Worst-case in-model error count for the layer.
    pub budget: u64,
}

/// One undesired layer after correction.
#[derive(Debug, Clone)]
pub struct KLayerOutcome {
    pub k_idx: usize,
    pub outcome: DecodeOutcome,
    pub error_dbs: BTreeSet<usize>,
    pub tally: LayerTally,
}

/// The decoded message with its diagnostics.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct RetrievalResult {
    pub message: Vec<FieldElement>,
    pub identified_byzantine: BTreeSet<usize>,
    pub layer_tallies: Vec<LayerTally>,
    pub download_actual: u64,
}

fn check_shape(plan: &QueryPlan, answers: &AnswerSet) -> Result<(), RetrievalError> {
    if answers.per_db.len() != plan.params.n {
        return Err(RetrievalError::AnswerShape(format!(
            "{} answer entries for {} databases",
            answers.per_db.len(),
            plan.params.n
        )));
    }
    for db in 0..plan.params.n {
        if let Some(a) = &answers.per_db[db] {
            if a.len() != plan.slots_of(db) {
                return Err(RetrievalError::AnswerShape(format!(
                    "database {db} answered {} symbols for {} queries",
                    a.len(),
                    plan.slots_of(db)
                )));
            }
        }
    }
    Ok(())
}

/// Corrects the aligned downloaded sum of K-set `k_idx` and regenerates its
/// side information. The received word lives on the full layer generator
/// with the side-information suffix erased, so erasure decoding on the
/// surviving prefix is exactly decoding of the punctured code.
pub fn correct_k_layer(
    plan: &QueryPlan,
    answers: &AnswerSet,
    k_idx: usize,
) -> Result<KLayerOutcome, RetrievalError> {
    let material = plan.material.as_ref().ok_or(RetrievalError::NotMaterialized)?;
    let dims = &plan.dims;
    let kd = dims.k_dims[k_idx];
    let gen_len = kd.gen_len as usize;
    let u_len = kd.u_len as usize;

    let mut symbols = vec![0u64; gen_len];
    let mut erasures: BTreeSet<usize> = (u_len..gen_len).collect();
    for coord in 0..u_len {
        let (db, slot) = plan.u_location[k_idx][coord];
        match &answers.per_db[db] {
            Some(a) => symbols[coord] = a[slot],
            None => {
                erasures.insert(coord);
            }
        }
    }
    let rec = ReceivedWord { symbols, erasures };
    let outcome = material.k_gens[k_idx]
        .decode(&rec)
        .map_err(|source| RetrievalError::LayerDecode {
            layer: format!("K{k_idx}"),
            source,
        })?;
    let error_dbs: BTreeSet<usize> = outcome
        .error_positions
        .iter()
        .map(|&pos| plan.u_location[k_idx][pos].0)
        .collect();
    let eff = plan.params.effective() as u64;
    let tally = LayerTally {
        layer: format!("K{k_idx}"),
        errors: outcome.error_positions.len(),
        budget: plan.params.b as u64 * (kd.alpha / eff),
    };
    Ok(KLayerOutcome {
        k_idx,
        outcome,
        error_dbs,
        tally,
    })
}

/// Cancels the corrected side information from the mixed answers, decodes
/// the outer desired-message code, and inverts the mixing.
pub fn cancel_and_decode(
    plan: &QueryPlan,
    answers: &AnswerSet,
    k_layers: &[KLayerOutcome],
) -> Result<RetrievalResult, RetrievalError> {
    let material = plan.material.as_ref().ok_or(RetrievalError::NotMaterialized)?;
    let field = plan.params.field()?;
    let dims = &plan.dims;
    let outer = material.outer.as_ref().expect("full plans carry an outer generator");
    let sets = plan.sets.as_ref().expect("full plans carry a set system");

    let x_offsets: Vec<usize> = dims
        .x_lens
        .iter()
        .scan(0usize, |acc, &len| {
            let here = *acc;
            *acc += len as usize;
            Some(here)
        })
        .collect();

    let mut symbols = vec![0u64; dims.outer_len as usize];
    let mut erasures = BTreeSet::new();
    for (l_idx, locs) in plan.x_location.iter().enumerate() {
        let k_idx = if l_idx == 0 {
            None
        } else {
            Some(
                sets.k_index_of_l(l_idx)
                    .expect("non-singleton L-sets pair with a K-set"),
            )
        };
        for (coord, &(db, slot)) in locs.iter().enumerate() {
            let pos = x_offsets[l_idx] + coord;
            match &answers.per_db[db] {
                None => {
                    erasures.insert(pos);
                }
                Some(a) => {
                    let mut v = a[slot];
                    if let Some(k_idx) = k_idx {
                        let layer = k_layers
                            .iter()
                            .find(|l| l.k_idx == k_idx)
                            .expect("every K-set is corrected before cancellation");
                        let sigma =
                            layer.outcome.corrected_codeword[dims.k_dims[k_idx].u_len as usize + coord];
                        v = field.sub(v, sigma);
                    }
                    symbols[pos] = v;
                }
            }
        }
    }

    let rec = ReceivedWord { symbols, erasures };
    let outcome = outer.decode(&rec).map_err(RetrievalError::OuterDecode)?;

    // W = (OuterGen(first L rows) * S_desired)^{-1} x*_{first L}.
    let msg_len = dims.message_len as usize;
    let rows: Vec<usize> = (0..msg_len).collect();
    let sub = outer.row_submatrix(&rows);
    let mixed = sub.matmul(&material.mixing[plan.desired])?;
    let inv = mixed.inverse()?;
    let message = inv.mul_vec(&outcome.corrected_codeword[..msg_len])?;

    // Identification: owners of corrected positions, on every layer.
    let mut identified: BTreeSet<usize> = k_layers
        .iter()
        .flat_map(|l| l.error_dbs.iter().copied())
        .collect();
    let mut desired_errors = 0usize;
    for &pos in &outcome.error_positions {
        let (l_idx, coord) = locate_segment(&x_offsets, &dims.x_lens, pos);
        identified.insert(plan.x_location[l_idx][coord].0);
        desired_errors += 1;
    }

    let eff = plan.params.effective() as u64;
    let mut layer_tallies: Vec<LayerTally> = k_layers.iter().map(|l| l.tally.clone()).collect();
    layer_tallies.push(LayerTally {
        layer: "desired".into(),
        errors: desired_errors,
        budget: plan.params.b as u64 * eff.pow(plan.params.m as u32 - 1),
    });

    Ok(RetrievalResult {
        message,
        identified_byzantine: identified,
        layer_tallies,
        download_actual: answers.received_symbols(),
    })
}

fn locate_segment(offsets: &[usize], lens: &[u64], pos: usize) -> (usize, usize) {
    for (l_idx, &off) in offsets.iter().enumerate() {
        if pos < off + lens[l_idx] as usize {
            return (l_idx, pos - off);
        }
    }
    unreachable!("position {pos} beyond the outer codeword");
}

/// Majority decoding for the trivial regime: each symbol's value is the one
/// a strict majority of the received copies agrees on.
pub fn majority_decode(
    plan: &QueryPlan,
    answers: &AnswerSet,
    desired: usize,
) -> Result<RetrievalResult, RetrievalError> {
    check_shape(plan, answers)?;
    if plan.regime != Regime::Trivial {
        return Err(RetrievalError::Scheme(SchemeError::Regime {
            required: Regime::Trivial,
            actual: plan.regime,
            detail: "majority decoding".into(),
        }));
    }
    let m = plan.params.m;
    let copies: Vec<(usize, &Vec<FieldElement>)> = plan
        .queried
        .iter()
        .filter_map(|&db| answers.per_db[db].as_ref().map(|a| (db, a)))
        .collect();
    if copies.is_empty() {
        return Err(RetrievalError::AnswerShape("no copies received".into()));
    }
    let mut decoded_all = Vec::with_capacity(m);
    let mut identified = BTreeSet::new();
    for pos in 0..m {
        let mut counts: Vec<(FieldElement, usize)> = Vec::new();
        for (_, copy) in &copies {
            let v = copy[pos];
            match counts.iter_mut().find(|(val, _)| *val == v) {
                Some((_, c)) => *c += 1,
                None => counts.push((v, 1)),
            }
        }
        let (value, count) = counts
            .iter()
            .max_by_key(|(_, c)| *c)
            .copied()
            .expect("at least one copy");
        if count * 2 <= copies.len() {
            return Err(RetrievalError::NoMajority { position: pos });
        }
        decoded_all.push(value);
        for (db, copy) in &copies {
            if copy[pos] != value {
                identified.insert(*db);
            }
        }
    }
    let errors = identified.len();
    Ok(RetrievalResult {
        message: vec![decoded_all[desired]],
        identified_byzantine: identified,
        layer_tallies: vec![LayerTally {
            layer: "copies".into(),
            errors,
            budget: plan.params.b as u64,
        }],
        download_actual: answers.received_symbols(),
    })
}

/// Full decoding pipeline for any plan: layered correction with successive
/// interference cancellation in the general regime, majority decoding in
/// the trivial regime.
pub fn retrieve(plan: &QueryPlan, answers: &AnswerSet) -> Result<RetrievalResult, RetrievalError> {
    check_shape(plan, answers)?;
    match plan.regime {
        Regime::Trivial => majority_decode(plan, answers, plan.desired),
        Regime::Full => {
            // K-sets are ordered by round already; sigma of a later round
            // depends only on u of its own layer, decoded here in order.
            let k_count = plan.dims.k_dims.len();
            let mut k_layers = Vec::with_capacity(k_count);
            for k_idx in 0..k_count {
                k_layers.push(correct_k_layer(plan, answers, k_idx)?);
            }
            cancel_and_decode(plan, answers, &k_layers)
        }
        Regime::Infeasible => Err(RetrievalError::Scheme(SchemeError::Regime {
            required: Regime::Full,
            actual: Regime::Infeasible,
            detail: "retrieval".into(),
        })),
    }
}
