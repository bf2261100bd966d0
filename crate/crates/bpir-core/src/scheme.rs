//! Construction of query plans.
//!
//! The general plan asks every database for the same number of symbols per
//! round; round `i` covers all sums of `i` messages. The desired message is
//! spread over one long MDS codeword, every undesired message is carried by
//! per-subset MDS codewords split into downloaded symbols (`u`) and side
//! information (`sigma`) regenerable from them, and all messages in the same
//! subset share one generator so their sum is again a codeword. Coordinates
//! are dealt to databases by a seeded shuffle followed by round-robin, which
//! keeps the per-database load exactly even.
//!
//! The trivial-regime plan simply requests full copies of the (unit-length)
//! database from enough servers for majority decoding.

use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::codec::{make_generator, CodecError, MdsGenerator};
use crate::field::{
    sample_full_rank, FieldElement, FieldError, FieldMatrix, PrimeField, SeededRng,
};

/// Default field modulus: prime, and large enough for every desk-scale
/// parameter set (codeword lengths up to 65537).
pub const DEFAULT_MODULUS: u64 = 65537;

/// Errors from parameter validation and plan construction.
#[derive(Debug, Clone, PartialEq, Eq, Error)]
pub enum SchemeError {
    #[error("operation requires the {required:?} regime but parameters fall in {actual:?}: {detail}")]
    Regime {
        required: Regime,
        actual: Regime,
        detail: String,
    },
    #[error("field size q = {q} is too small: the longest codeword has {needed} positions, need q > {needed}")]
    FieldTooSmall { q: u64, needed: u64 },
    #[error("dimension arithmetic overflowed; parameters are too large to materialize")]
    Overflow,
    #[error("invalid parameters: {0}")]
    Parameter(String),
    #[error(transparent)]
    Field(#[from] FieldError),
    #[error(transparent)]
    Codec(#[from] CodecError),
}

/// Which of the three capacity regimes the parameters fall in.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub enum Regime {
    /// `2B + T + U < N`: the layered scheme applies.
    Full,
    /// `2B + 1 <= N - U <= 2B + T`: only full downloads with majority
    /// decoding work.
    Trivial,
    /// `N - U < 2B + 1`: the Byzantine databases can always confuse the
    /// user; capacity is zero.
    Infeasible,
}

/// The system parameters: `N` databases storing `M` messages, privacy
/// against `T` colluding databases, resilience against `B` Byzantine and
/// `U` unresponsive databases, over `F_q`, with a master seed.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub struct Params {
    pub n: usize,
    pub m: usize,
    pub t: usize,
    pub b: usize,
    pub u: usize,
    pub q: u64,
    pub seed: u64,
}

impl Params {
    pub fn new(n: usize, m: usize, t: usize, b: usize) -> Result<Self, SchemeError> {
        Params::with_all(n, m, t, b, 0, DEFAULT_MODULUS, 0)
    }

    pub fn with_all(
        n: usize,
        m: usize,
        t: usize,
        b: usize,
        u: usize,
        q: u64,
        seed: u64,
    ) -> Result<Self, SchemeError> {
        if n < 1 {
            return Err(SchemeError::Parameter("need N >= 1 databases".into()));
        }
        if m < 1 {
            return Err(SchemeError::Parameter("need M >= 1 messages".into()));
        }
        if t < 1 {
            return Err(SchemeError::Parameter("need T >= 1".into()));
        }
        Ok(Params { n, m, t, b, u, q, seed })
    }

    /// Total regime classification.
    pub fn regime(&self) -> Regime {
        let responsive = self.n.saturating_sub(self.u);
        if 2 * self.b + self.t + self.u < self.n {
            Regime::Full
        } else if 2 * self.b + 1 <= responsive && responsive <= 2 * self.b + self.t {
            Regime::Trivial
        } else {
            Regime::Infeasible
        }
    }

    /// Effective database count `N - 2B - U` the scheme is dimensioned for.
    pub fn effective(&self) -> usize {
        self.n - 2 * self.b - self.u
    }

    /// Longest codeword a full-regime plan would use: the desired-layer
    /// length `N * (N - 2B - U)^{M-1}`. The field must satisfy
    /// `q > max_codeword_len()` so distinct evaluation points exist.
    pub fn max_codeword_len(&self) -> Result<u64, SchemeError> {
        let eff = self.effective() as u128;
        let len = (self.n as u128)
            .checked_mul(pow_u128(eff, self.m as u32 - 1)?)
            .ok_or(SchemeError::Overflow)?;
        to_u64(len)
    }

    /// Field-size validation for full-regime construction.
    pub fn validate_field_size(&self) -> Result<(), SchemeError> {
        if self.regime() != Regime::Full {
            return Ok(());
        }
        let needed = self.max_codeword_len()?;
        if self.q <= needed {
            return Err(SchemeError::FieldTooSmall { q: self.q, needed });
        }
        Ok(())
    }

    pub fn field(&self) -> Result<PrimeField, SchemeError> {
        Ok(PrimeField::new(self.q)?)
    }

    fn require_full(&self, what: &str) -> Result<(), SchemeError> {
        let actual = self.regime();
        if actual != Regime::Full {
            return Err(SchemeError::Regime {
                required: Regime::Full,
                actual,
                detail: format!(
                    "{what}: need 2B + T + U < N, got 2*{} + {} + {} >= {}",
                    self.b, self.t, self.u, self.n
                ),
            });
        }
        Ok(())
    }
}

/// The ordered subset bookkeeping of the construction: all subsets of the
/// message set containing the desired index (`l_sets`), and all nonempty
/// subsets avoiding it (`k_sets`), each ascending by size with
/// lexicographic tie-break.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct SetSystem {
    pub desired: usize,
    pub m: usize,
    pub l_sets: Vec<Vec<usize>>,
    pub k_sets: Vec<Vec<usize>>,
}

/// All subsets containing `desired` and all nonempty subsets avoiding it,
/// in (size, lexicographic) order. Message indices are 0-based.
pub fn enumerate_sets(m: usize, desired: usize) -> Result<SetSystem, SchemeError> {
    if m < 1 || m > 16 {
        return Err(SchemeError::Parameter(format!(
            "message count {m} outside the supported 1..=16 range"
        )));
    }
    if desired >= m {
        return Err(SchemeError::Parameter(format!(
            "desired index {desired} out of range for {m} messages"
        )));
    }
    let mut l_sets = Vec::new();
    let mut k_sets = Vec::new();
    for mask in 1u32..(1 << m) {
        let set: Vec<usize> = (0..m).filter(|i| mask & (1 << i) != 0).collect();
        if set.contains(&desired) {
            l_sets.push(set);
        } else {
            k_sets.push(set);
        }
    }
    let key = |s: &Vec<usize>| (s.len(), s.clone());
    l_sets.sort_by_key(key);
    k_sets.sort_by_key(key);
    Ok(SetSystem {
        desired,
        m,
        l_sets,
        k_sets,
    })
}

impl SetSystem {
    /// Index into `k_sets` of `l_sets[l_idx]` minus the desired message.
    /// Defined for every L-set of size >= 2.
    pub fn k_index_of_l(&self, l_idx: usize) -> Option<usize> {
        let mut reduced = self.l_sets[l_idx].clone();
        reduced.retain(|&x| x != self.desired);
        if reduced.is_empty() {
            return None;
        }
        self.k_sets.iter().position(|k| *k == reduced)
    }

    /// Index into `l_sets` of `k_sets[k_idx]` plus the desired message.
    pub fn l_index_of_k(&self, k_idx: usize) -> usize {
        let mut extended = self.k_sets[k_idx].clone();
        extended.push(self.desired);
        extended.sort_unstable();
        self.l_sets
            .iter()
            .position(|l| *l == extended)
            .expect("every K-set extends to an L-set")
    }
}

/// Codeword dimensions of one undesired-message subset layer.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub struct KDims {
    /// Message dimension of the layer code.
    pub alpha: u64,
    /// Downloaded-symbol count (codeword prefix).
    pub u_len: u64,
    /// Side-information count (codeword suffix, never downloaded alone).
    pub sigma_len: u64,
    /// Full generator length `u_len + sigma_len`.
    pub gen_len: u64,
}

/// All counts of the layered construction for one parameter set.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct SchemeDims {
    /// Per-message length `L = (N - 2B - U)^M`.
    pub message_len: u64,
    /// One entry per K-set.
    pub k_dims: Vec<KDims>,
    /// Desired-codeword segment length per L-set.
    pub x_lens: Vec<u64>,
    /// Desired-layer codeword length `N * (N - 2B - U)^{M-1}`.
    pub outer_len: u64,
    /// Per-database download in round `i` (1-indexed by position).
    pub per_db_rounds: Vec<u64>,
    /// Per-database total download.
    pub per_db_total: u64,
    /// Symbols actually received: `(N - U) * per_db_total`.
    pub download: u64,
    /// Symbols requested across all `N` databases.
    pub planned: u64,
}

fn pow_u128(base: u128, exp: u32) -> Result<u128, SchemeError> {
    base.checked_pow(exp).ok_or(SchemeError::Overflow)
}

fn to_u64(v: u128) -> Result<u64, SchemeError> {
    u64::try_from(v).map_err(|_| SchemeError::Overflow)
}

/// Computes every count of the construction and cross-checks the
/// consistency identities before returning.
pub fn compute_dims(params: &Params, sets: &SetSystem) -> Result<SchemeDims, SchemeError> {
    params.require_full("dimension computation")?;
    let n = params.n as u128;
    let eff = params.effective() as u128; // N - 2B - U
    let t = params.t as u128;
    let m = params.m as u32;

    let message_len = to_u64(pow_u128(eff, m)?)?;
    let outer_len = to_u64(n.checked_mul(pow_u128(eff, m - 1)?).ok_or(SchemeError::Overflow)?)?;

    let mut k_dims = Vec::with_capacity(sets.k_sets.len());
    for k_set in &sets.k_sets {
        let s = k_set.len() as u32;
        // alpha = eff * (eff - t)^{s-1} * t^{M-s}
        let alpha = eff
            .checked_mul(pow_u128(eff - t, s - 1)?)
            .and_then(|v| v.checked_mul(pow_u128(t, m - s).ok()?))
            .ok_or(SchemeError::Overflow)?;
        let u_len = alpha / eff * n;
        let sigma_len = u_len / t * (eff - t);
        k_dims.push(KDims {
            alpha: to_u64(alpha)?,
            u_len: to_u64(u_len)?,
            sigma_len: to_u64(sigma_len)?,
            gen_len: to_u64(u_len + sigma_len)?,
        });
    }

    let mut x_lens = Vec::with_capacity(sets.l_sets.len());
    for l_set in &sets.l_sets {
        let r = l_set.len() as u32;
        let len = n
            .checked_mul(pow_u128(eff - t, r - 1)?)
            .and_then(|v| v.checked_mul(pow_u128(t, m - r).ok()?))
            .ok_or(SchemeError::Overflow)?;
        x_lens.push(to_u64(len)?);
    }

    let mut per_db_rounds = Vec::with_capacity(params.m);
    for r in 1..=m {
        let combos = binomial_u128(m as usize, r as usize);
        let per = combos
            .checked_mul(pow_u128(eff - t, r - 1)?)
            .and_then(|v| v.checked_mul(pow_u128(t, m - r).ok()?))
            .ok_or(SchemeError::Overflow)?;
        per_db_rounds.push(to_u64(per)?);
    }
    let per_db_total: u64 = per_db_rounds.iter().sum();
    let download = per_db_total
        .checked_mul((params.n - params.u) as u64)
        .ok_or(SchemeError::Overflow)?;
    let planned = per_db_total
        .checked_mul(params.n as u64)
        .ok_or(SchemeError::Overflow)?;

    let dims = SchemeDims {
        message_len,
        k_dims,
        x_lens,
        outer_len,
        per_db_rounds,
        per_db_total,
        download,
        planned,
    };
    dims.verify(params, sets)?;
    Ok(dims)
}

fn binomial_u128(n: usize, k: usize) -> u128 {
    if k > n {
        return 0;
    }
    let mut acc: u128 = 1;
    for i in 0..k {
        acc = acc * (n - i) as u128 / (i + 1) as u128;
    }
    acc
}

impl SchemeDims {
    /// Consistency identities of the construction; violation means a bug.
    fn verify(&self, params: &Params, sets: &SetSystem) -> Result<(), SchemeError> {
        let eff = params.effective() as u64;
        let t = params.t as u64;
        let n = params.n as u64;
        let bad = |what: String| Err(SchemeError::Parameter(format!("dimension check failed: {what}")));

        if self.x_lens.iter().sum::<u64>() != self.outer_len {
            return bad("desired segments must tile the outer codeword".into());
        }
        for (i, kd) in self.k_dims.iter().enumerate() {
            if kd.alpha % t != 0 || kd.alpha % eff != 0 {
                return bad(format!("alpha_{i} not divisible by T and N-2B-U"));
            }
            if kd.u_len % n != 0 || kd.sigma_len % n != 0 {
                return bad(format!("layer {i} does not split evenly over databases"));
            }
            if kd.sigma_len * t != kd.u_len * (eff - t) {
                return bad(format!("layer {i} side-information ratio is off"));
            }
            let l_idx = sets.l_index_of_k(i);
            if self.x_lens[l_idx] != kd.sigma_len {
                return bad(format!(
                    "sigma length of K-set {i} must match the paired desired segment"
                ));
            }
        }
        // Per message: its band rows tile the first T*eff^{M-1} rows of its
        // mixing matrix, and its codeword segments tile a full outer length.
        let band_budget = t * eff.pow(params.m as u32 - 1);
        for msg in 0..params.m {
            if msg == sets.desired {
                continue;
            }
            let mut rows = 0u64;
            let mut coords = 0u64;
            for (i, k_set) in sets.k_sets.iter().enumerate() {
                if k_set.contains(&msg) {
                    rows += self.k_dims[i].alpha;
                    coords += self.k_dims[i].gen_len;
                }
            }
            if rows != band_budget {
                return bad(format!("message {msg} consumes {rows} mixing rows, want {band_budget}"));
            }
            if coords != self.outer_len {
                return bad(format!("message {msg} codeword length {coords}, want {}", self.outer_len));
            }
        }
        if band_budget > self.message_len {
            return bad("band budget exceeds mixing matrix height".into());
        }
        for (x_len, l_set) in self.x_lens.iter().zip(&sets.l_sets) {
            let r = l_set.len();
            if x_len % n != 0 {
                return bad(format!("desired segment for round {r} does not split evenly"));
            }
        }
        Ok(())
    }
}

/// What one answer slot elicits.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub enum SpecKind {
    /// Pure desired-message symbol: coordinate `coord` of segment `l_idx`.
    Desired { l_idx: usize, coord: usize },
    /// Desired symbol plus the aligned side-information sum of K-set
    /// `k_idx`; `coord` indexes both the segment and the sigma vector.
    Mixed {
        l_idx: usize,
        k_idx: usize,
        coord: usize,
    },
    /// Aligned sum of downloaded undesired symbols of K-set `k_idx`.
    Undesired { k_idx: usize, coord: usize },
    /// Trivial regime: the whole (unit-length) message `message`.
    FullContent { message: usize },
}

/// One slot of a database's ordered request list.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub struct SpecSlot {
    pub kind: SpecKind,
}

/// The wire form of one query symbol: for each involved message, an explicit
/// coefficient row; the answer is the sum of the row/message inner products.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct QuerySpec {
    pub subset: Vec<usize>,
    pub coeffs: Vec<(usize, Vec<FieldElement>)>,
}

/// Mixing matrices, generators and precomputed wire queries of a
/// materialized plan.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct PlanMaterial {
    /// `S_1..S_M`, all sampled even though only the desired one is used in
    /// full; every database's view must look the same for every choice of
    /// desired index.
    pub mixing: Vec<FieldMatrix>,
    /// Desired-layer generator, `(N * eff^{M-1}, eff^M)`.
    pub outer: Option<MdsGenerator>,
    /// One generator per K-set, shared by every message in the set.
    pub k_gens: Vec<MdsGenerator>,
    /// `bands[msg][k_idx]` = first mixing-matrix row of the band, when
    /// `msg` belongs to that K-set.
    pub bands: Vec<Vec<Option<usize>>>,
    /// Wire queries per database, aligned with the plan's slots.
    pub per_db_specs: Vec<Vec<QuerySpec>>,
}

/// A complete query plan: what every database is asked, plus the
/// decoder-side layout mapping every codeword coordinate to the
/// (database, slot) serving it.
#[derive(Debug, Clone)]
pub struct QueryPlan {
    pub params: Params,
    pub desired: usize,
    pub regime: Regime,
    pub sets: Option<SetSystem>,
    pub dims: SchemeDims,
    /// Databases that receive queries (all of them in the full regime).
    pub queried: Vec<usize>,
    pub per_db_slots: Vec<Vec<SpecSlot>>,
    /// `(db, slot)` serving desired coordinate `coord` of segment `l_idx`.
    pub x_location: Vec<Vec<(usize, usize)>>,
    /// `(db, slot)` serving downloaded coordinate `coord` of K-set `k_idx`.
    pub u_location: Vec<Vec<(usize, usize)>>,
    pub material: Option<PlanMaterial>,
}

impl QueryPlan {
    /// Wire queries for one database (materialized plans only).
    pub fn specs_for(&self, db: usize) -> &[QuerySpec] {
        &self
            .material
            .as_ref()
            .expect("plan is not materialized")
            .per_db_specs[db]
    }

    pub fn is_materialized(&self) -> bool {
        self.material.is_some()
    }

    /// Slot count requested from one database.
    pub fn slots_of(&self, db: usize) -> usize {
        self.per_db_slots[db].len()
    }
}

/// Builds the fully materialized general-scheme plan.
pub fn build_plan(params: &Params, desired: usize) -> Result<QueryPlan, SchemeError> {
    build_general(params, desired, true)
}

/// Builds the counts-and-layout part of the plan without sampling matrices
/// or coefficient rows; enough for rate accounting and table dumps of
/// parameter sets too large to materialize.
pub fn build_plan_skeleton(params: &Params, desired: usize) -> Result<QueryPlan, SchemeError> {
    build_general(params, desired, false)
}

fn build_general(params: &Params, desired: usize, materialize: bool) -> Result<QueryPlan, SchemeError> {
    params.require_full("general plan construction")?;
    if desired >= params.m {
        return Err(SchemeError::Parameter(format!(
            "desired index {desired} out of range for {} messages",
            params.m
        )));
    }
    params.validate_field_size()?;
    let sets = enumerate_sets(params.m, desired)?;
    let dims = compute_dims(params, &sets)?;

    // Assignment stream is separate from the matrix stream so skeleton and
    // materialized plans of the same seed lay out identically.
    let mut rng_assign = SeededRng::derived(params.seed, 1);
    let n = params.n;

    let mut per_db_slots: Vec<Vec<SpecSlot>> = vec![Vec::new(); n];
    let mut x_location: Vec<Vec<(usize, usize)>> = dims
        .x_lens
        .iter()
        .map(|&len| vec![(usize::MAX, usize::MAX); len as usize])
        .collect();
    let mut u_location: Vec<Vec<(usize, usize)>> = dims
        .k_dims
        .iter()
        .map(|kd| vec![(usize::MAX, usize::MAX); kd.u_len as usize])
        .collect();

    // Walk all subsets in (round, lexicographic) order; shuffle each
    // group's coordinates and deal them round-robin.
    let mut groups: Vec<(usize, bool)> = Vec::new(); // (index into l_sets/k_sets, is_l)
    {
        let mut all: Vec<(Vec<usize>, usize, bool)> = Vec::new();
        for (j, l) in sets.l_sets.iter().enumerate() {
            all.push((l.clone(), j, true));
        }
        for (i, k) in sets.k_sets.iter().enumerate() {
            all.push((k.clone(), i, false));
        }
        all.sort_by_key(|(s, _, _)| (s.len(), s.clone()));
        groups.extend(all.into_iter().map(|(_, idx, is_l)| (idx, is_l)));
    }

    for (idx, is_l) in groups {
        let count = if is_l {
            dims.x_lens[idx] as usize
        } else {
            dims.k_dims[idx].u_len as usize
        };
        let mut order: Vec<usize> = (0..count).collect();
        rng_assign.shuffle(&mut order);
        for (pos, &coord) in order.iter().enumerate() {
            let db = pos % n;
            let slot_idx = per_db_slots[db].len();
            let kind = if is_l {
                if idx == 0 {
                    SpecKind::Desired { l_idx: 0, coord }
                } else {
                    let k_idx = sets
                        .k_index_of_l(idx)
                        .expect("every non-singleton L-set pairs with a K-set");
                    SpecKind::Mixed {
                        l_idx: idx,
                        k_idx,
                        coord,
                    }
                }
            } else {
                SpecKind::Undesired { k_idx: idx, coord }
            };
            per_db_slots[db].push(SpecSlot { kind });
            if is_l {
                x_location[idx][coord] = (db, slot_idx);
            } else {
                u_location[idx][coord] = (db, slot_idx);
            }
        }
    }

    debug_assert!(per_db_slots
        .iter()
        .all(|slots| slots.len() as u64 == dims.per_db_total));

    let material = if materialize {
        Some(materialize_general(params, desired, &sets, &dims, &per_db_slots)?)
    } else {
        None
    };

    Ok(QueryPlan {
        params: *params,
        desired,
        regime: Regime::Full,
        sets: Some(sets),
        dims,
        queried: (0..n).collect(),
        per_db_slots,
        x_location,
        u_location,
        material,
    })
}

fn materialize_general(
    params: &Params,
    desired: usize,
    sets: &SetSystem,
    dims: &SchemeDims,
    per_db_slots: &[Vec<SpecSlot>],
) -> Result<PlanMaterial, SchemeError> {
    let field = params.field()?;
    let msg_len = dims.message_len as usize;

    let mut rng_mix = SeededRng::derived(params.seed, 0);
    let mut mixing = Vec::with_capacity(params.m);
    for _ in 0..params.m {
        mixing.push(sample_full_rank(msg_len, field, &mut rng_mix)?);
    }

    let outer = make_generator(dims.outer_len as usize, msg_len, field)?;
    let mut k_gens = Vec::with_capacity(dims.k_dims.len());
    for kd in &dims.k_dims {
        k_gens.push(make_generator(kd.gen_len as usize, kd.alpha as usize, field)?);
    }

    // Per-message consecutive row bands over the K-sets containing it.
    let mut bands: Vec<Vec<Option<usize>>> = vec![vec![None; sets.k_sets.len()]; params.m];
    for msg in 0..params.m {
        if msg == desired {
            continue;
        }
        let mut offset = 0usize;
        for (i, k_set) in sets.k_sets.iter().enumerate() {
            if k_set.contains(&msg) {
                bands[msg][i] = Some(offset);
                offset += dims.k_dims[i].alpha as usize;
            }
        }
    }

    // Desired-layer coefficient rows: OuterGen * S_desired.
    let outer_rows = outer.matrix().matmul(&mixing[desired])?;

    // Undesired-layer coefficient rows per (K-set, message):
    // Gen_i * S_msg(band, :).
    let mut layer_rows: Vec<Vec<Option<FieldMatrix>>> =
        vec![vec![None; params.m]; sets.k_sets.len()];
    for (i, k_set) in sets.k_sets.iter().enumerate() {
        let gen_mat = k_gens[i].matrix();
        for &msg in k_set {
            let start = bands[msg][i].expect("band exists for member message");
            let rows: Vec<usize> = (start..start + dims.k_dims[i].alpha as usize).collect();
            let band_mat = mixing[msg].select_rows(&rows);
            layer_rows[i][msg] = Some(gen_mat.matmul(&band_mat)?);
        }
    }

    let x_offsets: Vec<usize> = dims
        .x_lens
        .iter()
        .scan(0usize, |acc, &len| {
            let here = *acc;
            *acc += len as usize;
            Some(here)
        })
        .collect();

    let mut per_db_specs: Vec<Vec<QuerySpec>> = Vec::with_capacity(params.n);
    for slots in per_db_slots {
        let mut specs = Vec::with_capacity(slots.len());
        for slot in slots {
            let spec = match slot.kind {
                SpecKind::Desired { l_idx, coord } => QuerySpec {
                    subset: vec![desired],
                    coeffs: vec![(desired, outer_rows.row(x_offsets[l_idx] + coord).to_vec())],
                },
                SpecKind::Mixed { l_idx, k_idx, coord } => {
                    let mut subset = sets.k_sets[k_idx].clone();
                    subset.push(desired);
                    subset.sort_unstable();
                    let mut coeffs =
                        vec![(desired, outer_rows.row(x_offsets[l_idx] + coord).to_vec())];
                    let sigma_row = dims.k_dims[k_idx].u_len as usize + coord;
                    for &msg in &sets.k_sets[k_idx] {
                        let rows = layer_rows[k_idx][msg].as_ref().expect("member rows");
                        coeffs.push((msg, rows.row(sigma_row).to_vec()));
                    }
                    coeffs.sort_by_key(|(m, _)| *m);
                    QuerySpec { subset, coeffs }
                }
                SpecKind::Undesired { k_idx, coord } => {
                    let subset = sets.k_sets[k_idx].clone();
                    let coeffs = subset
                        .iter()
                        .map(|&msg| {
                            let rows = layer_rows[k_idx][msg].as_ref().expect("member rows");
                            (msg, rows.row(coord).to_vec())
                        })
                        .collect();
                    QuerySpec { subset, coeffs }
                }
                SpecKind::FullContent { .. } => unreachable!("general plans have no full-content slots"),
            };
            specs.push(spec);
        }
        per_db_specs.push(specs);
    }

    Ok(PlanMaterial {
        mixing,
        outer: Some(outer),
        k_gens,
        bands,
        per_db_specs,
    })
}

/// Builds the trivial-regime plan: full (unit-length) copies from enough
/// databases that `2B + 1` of them are guaranteed to respond. The request is
/// identical at every queried database, so it reveals nothing about the
/// desired index.
pub fn build_trivial_plan(params: &Params) -> Result<QueryPlan, SchemeError> {
    let actual = params.regime();
    if actual != Regime::Trivial {
        return Err(SchemeError::Regime {
            required: Regime::Trivial,
            actual,
            detail: format!(
                "trivial plan: need 2B + 1 <= N - U <= 2B + T, got N={}, T={}, B={}, U={}",
                params.n, params.t, params.b, params.u
            ),
        });
    }
    params.field()?; // validate the modulus even though any q > 2 works here
    let copies = (2 * params.b + 1 + params.u).min(params.n);
    let mut rng_assign = SeededRng::derived(params.seed, 1);
    let queried = rng_assign.sample_distinct(params.n, copies);

    let mut per_db_slots: Vec<Vec<SpecSlot>> = vec![Vec::new(); params.n];
    let mut per_db_specs: Vec<Vec<QuerySpec>> = vec![Vec::new(); params.n];
    for &db in &queried {
        for message in 0..params.m {
            per_db_slots[db].push(SpecSlot {
                kind: SpecKind::FullContent { message },
            });
            per_db_specs[db].push(QuerySpec {
                subset: vec![message],
                coeffs: vec![(message, vec![1])],
            });
        }
    }

    let responding = 2 * params.b + 1;
    let dims = SchemeDims {
        message_len: 1,
        k_dims: Vec::new(),
        x_lens: Vec::new(),
        outer_len: 0,
        per_db_rounds: vec![params.m as u64],
        per_db_total: params.m as u64,
        download: (responding * params.m) as u64,
        planned: (copies * params.m) as u64,
    };

    Ok(QueryPlan {
        params: *params,
        desired: 0,
        regime: Regime::Trivial,
        sets: None,
        dims,
        queried,
        per_db_slots,
        x_location: Vec::new(),
        u_location: Vec::new(),
        material: Some(PlanMaterial {
            mixing: Vec::new(),
            outer: None,
            k_gens: Vec::new(),
            bands: Vec::new(),
            per_db_specs,
        }),
    })
}

/// Renders the plan as the usual query table: one column per database, one
/// row per answer slot, rounds separated by a dashed line. Symbols are
/// labeled `a` for the desired message and `b`, `c`, ... for the undesired
/// ones in index order, with 1-based positions inside each message's own
/// codeword layout.
pub fn dump_query_table(plan: &QueryPlan) -> Result<String, SchemeError> {
    if plan.regime != Regime::Full {
        return Err(SchemeError::Regime {
            required: Regime::Full,
            actual: plan.regime,
            detail: "query-table dump".into(),
        });
    }
    let sets = plan.sets.as_ref().expect("full plans carry a set system");
    let dims = &plan.dims;
    let m = plan.params.m;

    // Letter per message: desired first, then the rest in index order.
    let mut letters = vec![' '; m];
    letters[sets.desired] = 'a';
    let mut next = b'b';
    for msg in 0..m {
        if msg != sets.desired {
            letters[msg] = next as char;
            next += 1;
        }
    }

    let x_offsets: Vec<usize> = dims
        .x_lens
        .iter()
        .scan(0usize, |acc, &len| {
            let here = *acc;
            *acc += len as usize;
            Some(here)
        })
        .collect();
    // Per message, the 1-based start of each K-layer inside its own stacked
    // codeword (u and sigma blocks in K-set order).
    let mut layer_starts: Vec<Vec<Option<usize>>> = vec![vec![None; sets.k_sets.len()]; m];
    for msg in 0..m {
        if msg == sets.desired {
            continue;
        }
        let mut offset = 0usize;
        for (i, k_set) in sets.k_sets.iter().enumerate() {
            if k_set.contains(&msg) {
                layer_starts[msg][i] = Some(offset);
                offset += dims.k_dims[i].gen_len as usize;
            }
        }
    }

    let label = |slot: &SpecSlot| -> String {
        match slot.kind {
            SpecKind::Desired { l_idx, coord } => {
                format!("{}{}", letters[sets.desired], x_offsets[l_idx] + coord + 1)
            }
            SpecKind::Mixed { l_idx, k_idx, coord } => {
                let mut parts =
                    vec![(sets.desired, x_offsets[l_idx] + coord + 1)];
                for &msg in &sets.k_sets[k_idx] {
                    let start = layer_starts[msg][k_idx].expect("member layer");
                    parts.push((msg, start + dims.k_dims[k_idx].u_len as usize + coord + 1));
                }
                parts.sort_by_key(|(msg, _)| *msg);
                parts
                    .iter()
                    .map(|(msg, pos)| format!("{}{}", letters[*msg], pos))
                    .collect::<Vec<_>>()
                    .join("+")
            }
            SpecKind::Undesired { k_idx, coord } => sets.k_sets[k_idx]
                .iter()
                .map(|&msg| {
                    let start = layer_starts[msg][k_idx].expect("member layer");
                    format!("{}{}", letters[msg], start + coord + 1)
                })
                .collect::<Vec<_>>()
                .join("+"),
            SpecKind::FullContent { message } => format!("W{}", message + 1),
        }
    };

    let rows_total = dims.per_db_total as usize;
    let mut cells: Vec<Vec<String>> = Vec::with_capacity(rows_total + 1);
    cells.push((1..=plan.params.n).map(|d| format!("DB {d}")).collect());
    for r in 0..rows_total {
        cells.push(
            (0..plan.params.n)
                .map(|db| label(&plan.per_db_slots[db][r]))
                .collect(),
        );
    }
    let widths: Vec<usize> = (0..plan.params.n)
        .map(|c| cells.iter().map(|row| row[c].len()).max().unwrap_or(0))
        .collect();
    let render = |row: &[String]| -> String {
        row.iter()
            .enumerate()
            .map(|(c, s)| format!("{:<width$}", s, width = widths[c]))
            .collect::<Vec<_>>()
            .join(" | ")
    };
    let total_width = widths.iter().sum::<usize>() + 3 * (plan.params.n - 1);
    let dash = "-".repeat(total_width);

    let mut out = String::new();
    out.push_str(&render(&cells[0]));
    out.push('\n');
    out.push_str(&dash);
    out.push('\n');
    let mut row = 0usize;
    for (round_idx, &count) in dims.per_db_rounds.iter().enumerate() {
        for _ in 0..count {
            row += 1;
            out.push_str(&render(&cells[row]));
            out.push('\n');
        }
        if round_idx + 1 < dims.per_db_rounds.len() {
            out.push_str(&dash);
            out.push('\n');
        }
    }
    Ok(out)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn regime_classification_examples() {
        assert_eq!(Params::new(5, 2, 2, 1).unwrap().regime(), Regime::Full);
        assert_eq!(Params::new(4, 2, 3, 1).unwrap().regime(), Regime::Trivial);
        assert_eq!(Params::new(2, 2, 1, 1).unwrap().regime(), Regime::Infeasible);
        // Unresponsive databases shift the boundary.
        assert_eq!(
            Params::with_all(7, 2, 2, 1, 1, DEFAULT_MODULUS, 0).unwrap().regime(),
            Regime::Full
        );
        assert_eq!(
            Params::with_all(6, 2, 2, 1, 2, DEFAULT_MODULUS, 0).unwrap().regime(),
            Regime::Trivial
        );
    }

    #[test]
    fn regimes_partition_the_parameter_space() {
        for n in 1..=12usize {
            for m in 1..=12usize {
                for t in 1..=12usize {
                    for b in 0..=12usize {
                        let p = Params::new(n, m, t, b).unwrap();
                        let full = 2 * b + t < n;
                        let trivial = 2 * b + 1 <= n && n <= 2 * b + t;
                        let infeasible = n < 2 * b + 1;
                        assert_eq!(
                            [full, trivial, infeasible].iter().filter(|&&x| x).count(),
                            1,
                            "N={n} M={m} T={t} B={b}"
                        );
                        let expect = if full {
                            Regime::Full
                        } else if trivial {
                            Regime::Trivial
                        } else {
                            Regime::Infeasible
                        };
                        assert_eq!(p.regime(), expect);
                    }
                }
            }
        }
    }

    #[test]
    fn set_enumeration_matches_hand_examples() {
        let ss = enumerate_sets(3, 0).unwrap();
        assert_eq!(ss.l_sets, vec![vec![0], vec![0, 1], vec![0, 2], vec![0, 1, 2]]);
        assert_eq!(ss.k_sets, vec![vec![1], vec![2], vec![1, 2]]);

        let single = enumerate_sets(1, 0).unwrap();
        assert_eq!(single.l_sets, vec![vec![0]]);
        assert!(single.k_sets.is_empty());

        let second = enumerate_sets(2, 1).unwrap();
        assert_eq!(second.l_sets, vec![vec![1], vec![0, 1]]);
        assert_eq!(second.k_sets, vec![vec![0]]);
    }

    #[test]
    fn set_counts_and_membership() {
        for m in 1..=5usize {
            for desired in 0..m {
                let ss = enumerate_sets(m, desired).unwrap();
                assert_eq!(ss.l_sets.len(), 1 << (m - 1));
                assert_eq!(ss.k_sets.len(), (1 << (m - 1)) - 1);
                assert_eq!(ss.l_sets[0], vec![desired]);
                if m >= 2 {
                    let per_message = 1 << (m - 2);
                    for k in (0..m).filter(|&k| k != desired) {
                        let count = ss.k_sets.iter().filter(|s| s.contains(&k)).count();
                        assert_eq!(count, per_message);
                    }
                }
            }
        }
    }

    #[test]
    fn dims_match_worked_examples() {
        // M=2, N=5, T=2, B=1
        let p = Params::new(5, 2, 2, 1).unwrap();
        let ss = enumerate_sets(2, 0).unwrap();
        let d = compute_dims(&p, &ss).unwrap();
        assert_eq!(d.message_len, 9);
        assert_eq!(d.k_dims[0].alpha, 6);
        assert_eq!(d.k_dims[0].u_len, 10);
        assert_eq!(d.k_dims[0].sigma_len, 5);
        assert_eq!(d.k_dims[0].gen_len, 15);
        assert_eq!(d.outer_len, 15);
        assert_eq!(d.download, 25);

        // M=3, N=6, T=2, B=1
        let p = Params::new(6, 3, 2, 1).unwrap();
        let ss = enumerate_sets(3, 0).unwrap();
        let d = compute_dims(&p, &ss).unwrap();
        assert_eq!(d.message_len, 64);
        assert!(d.k_dims.iter().all(|kd| kd.alpha == 16));
        assert!(d.k_dims.iter().all(|kd| kd.gen_len == 48));
        assert_eq!(d.outer_len, 96);
        assert_eq!(d.download, 168);

        // M=3, N=6, T=1, B=2
        let p = Params::new(6, 3, 1, 2).unwrap();
        let ss = enumerate_sets(3, 0).unwrap();
        let d = compute_dims(&p, &ss).unwrap();
        assert_eq!(d.message_len, 8);
        assert!(d.k_dims.iter().all(|kd| kd.alpha == 2));
        assert!(d.k_dims.iter().all(|kd| kd.gen_len == 12));
        assert_eq!(d.outer_len, 24);
        assert_eq!(d.download, 42);
    }

    #[test]
    fn dims_require_full_regime() {
        let p = Params::new(4, 2, 3, 1).unwrap();
        let ss = enumerate_sets(2, 0).unwrap();
        assert!(matches!(
            compute_dims(&p, &ss),
            Err(SchemeError::Regime { .. })
        ));
    }

    #[test]
    fn plan_is_even_and_covers_every_coordinate() {
        for (n, m, t, b, u) in [(5, 2, 2, 1, 0), (6, 3, 2, 1, 0), (6, 3, 1, 2, 0), (6, 2, 2, 1, 1)] {
            let p = Params::with_all(n, m, t, b, u, DEFAULT_MODULUS, 7).unwrap();
            let plan = build_plan(&p, 0).unwrap();
            let per_db = plan.dims.per_db_total as usize;
            for db in 0..n {
                assert_eq!(plan.slots_of(db), per_db, "config ({n},{m},{t},{b},{u})");
            }
            for locs in plan.x_location.iter().chain(plan.u_location.iter()) {
                for &(db, slot) in locs {
                    assert!(db < n);
                    assert!(slot < per_db);
                }
            }
            // Every (db, slot) is hit exactly once across all coordinates
            // except the sigma part of mixed specs, which shares its slot
            // with a desired coordinate.
            let mut seen = vec![vec![false; per_db]; n];
            for locs in plan.x_location.iter() {
                for &(db, slot) in locs {
                    assert!(!seen[db][slot]);
                    seen[db][slot] = true;
                }
            }
            for locs in plan.u_location.iter() {
                for &(db, slot) in locs {
                    assert!(!seen[db][slot]);
                    seen[db][slot] = true;
                }
            }
            assert!(seen.iter().flatten().all(|&x| x));
        }
    }

    #[test]
    fn per_round_type_multisets_are_symmetric() {
        let p = Params::new(6, 3, 2, 1).unwrap();
        let plan = build_plan_skeleton(&p, 0).unwrap();
        let fingerprint = |db: usize| -> Vec<(usize, usize, usize)> {
            // (round position, l-idx-or-max, k-idx-or-max) counts in order
            plan.per_db_slots[db]
                .iter()
                .map(|s| match s.kind {
                    SpecKind::Desired { l_idx, .. } => (0, l_idx, usize::MAX),
                    SpecKind::Mixed { l_idx, k_idx, .. } => (1, l_idx, k_idx),
                    SpecKind::Undesired { k_idx, .. } => (2, usize::MAX, k_idx),
                    SpecKind::FullContent { .. } => unreachable!(),
                })
                .collect()
        };
        let base = fingerprint(0);
        for db in 1..6 {
            assert_eq!(fingerprint(db), base);
        }
    }

    #[test]
    fn plans_are_deterministic_per_seed() {
        let p = Params::with_all(5, 2, 2, 1, 0, DEFAULT_MODULUS, 99).unwrap();
        let a = build_plan(&p, 0).unwrap();
        let b = build_plan(&p, 0).unwrap();
        assert_eq!(a.per_db_slots, b.per_db_slots);
        assert_eq!(
            a.material.as_ref().unwrap().per_db_specs,
            b.material.as_ref().unwrap().per_db_specs
        );
        let skel = build_plan_skeleton(&p, 0).unwrap();
        assert_eq!(a.per_db_slots, skel.per_db_slots);

        let p2 = Params::with_all(5, 2, 2, 1, 0, DEFAULT_MODULUS, 100).unwrap();
        let c = build_plan(&p2, 0).unwrap();
        assert_ne!(
            a.material.as_ref().unwrap().per_db_specs,
            c.material.as_ref().unwrap().per_db_specs
        );
    }

    #[test]
    fn field_too_small_is_rejected() {
        // 6 * 4^5 = 6144 < 65537 is accepted; q = 4099 is not.
        let ok = Params::with_all(6, 6, 2, 1, 0, 65537, 0).unwrap();
        assert_eq!(ok.max_codeword_len().unwrap(), 6144);
        assert!(ok.validate_field_size().is_ok());
        assert!(build_plan_skeleton(&ok, 0).is_ok());
        let small = Params::with_all(6, 6, 2, 1, 0, 4099, 0).unwrap();
        assert!(matches!(
            build_plan_skeleton(&small, 0),
            Err(SchemeError::FieldTooSmall { needed: 6144, .. })
        ));
    }

    #[test]
    fn table_one_shape() {
        let p = Params::new(5, 2, 2, 1).unwrap();
        let plan = build_plan(&p, 0).unwrap();
        // Per database: 2 pure desired, 2 pure undesired, 1 mixed.
        for db in 0..5 {
            let kinds: Vec<_> = plan.per_db_slots[db].iter().map(|s| s.kind).collect();
            let pure_a = kinds
                .iter()
                .filter(|k| matches!(k, SpecKind::Desired { .. }))
                .count();
            let pure_b = kinds
                .iter()
                .filter(|k| matches!(k, SpecKind::Undesired { .. }))
                .count();
            let mixed = kinds
                .iter()
                .filter(|k| matches!(k, SpecKind::Mixed { .. }))
                .count();
            assert_eq!((pure_a, pure_b, mixed), (2, 2, 1));
        }
        let table = dump_query_table(&plan).unwrap();
        let content: Vec<&str> = table
            .lines()
            .filter(|l| !l.starts_with('-') && !l.starts_with("DB"))
            .collect();
        assert_eq!(content.len(), 5);
        for line in &content {
            assert_eq!(line.split(" | ").count(), 5);
        }
        let last = content.last().unwrap();
        assert!(last.split(" | ").all(|cell| {
            let cell = cell.trim();
            cell.contains('+') && cell.starts_with('a') && cell.contains('b')
        }));
    }

    #[test]
    fn table_two_shape() {
        let p = Params::new(6, 3, 1, 2).unwrap();
        let plan = build_plan(&p, 0).unwrap();
        let table = dump_query_table(&plan).unwrap();
        let content: Vec<&str> = table
            .lines()
            .filter(|l| !l.starts_with('-') && !l.starts_with("DB"))
            .collect();
        assert_eq!(content.len(), 7);
        for line in &content {
            assert_eq!(line.split(" | ").count(), 6);
        }
        let last = content.last().unwrap();
        assert!(last.split(" | ").all(|cell| {
            let cell = cell.trim();
            cell.starts_with('a') && cell.contains('b') && cell.contains('c')
        }));
        // Rounds of sizes 3 / 3 / 1 per database.
        assert_eq!(plan.dims.per_db_rounds, vec![3, 3, 1]);
    }

    #[test]
    fn single_message_plan_is_all_desired() {
        let p = Params::new(4, 1, 1, 1).unwrap();
        let plan = build_plan(&p, 0).unwrap();
        assert!(plan
            .per_db_slots
            .iter()
            .flatten()
            .all(|s| matches!(s.kind, SpecKind::Desired { .. })));
        let table = dump_query_table(&plan).unwrap();
        assert!(!table.contains('+'));
    }

    #[test]
    fn trivial_plan_requests_full_copies() {
        let p = Params::with_all(4, 2, 3, 1, 0, DEFAULT_MODULUS, 5).unwrap();
        let plan = build_trivial_plan(&p).unwrap();
        assert_eq!(plan.queried.len(), 3);
        for &db in &plan.queried {
            assert_eq!(plan.slots_of(db), 2);
            // The request is the same regardless of which message is wanted.
            let specs = plan.specs_for(db);
            assert_eq!(specs[0].coeffs, vec![(0, vec![1])]);
            assert_eq!(specs[1].coeffs, vec![(1, vec![1])]);
        }
        assert_eq!(plan.dims.download, 6);
        assert!(matches!(
            build_trivial_plan(&Params::new(5, 2, 2, 1).unwrap()),
            Err(SchemeError::Regime { .. })
        ));
    }

    #[test]
    fn trivial_plan_with_no_byzantine_uses_one_copy() {
        // N <= T with B = 0: a single full download suffices.
        let p = Params::with_all(2, 2, 3, 0, 0, DEFAULT_MODULUS, 1).unwrap();
        assert_eq!(p.regime(), Regime::Trivial);
        let plan = build_trivial_plan(&p).unwrap();
        assert_eq!(plan.queried.len(), 1);
        assert_eq!(plan.dims.download, 2); // rate 1/M = 1/2
    }

    #[test]
    fn trivial_plan_download_formula() {
        // (N=5, T=4, B=1, M=3): three copies, rate 1/((2B+1)M) = 1/9.
        let p = Params::with_all(5, 3, 4, 1, 0, DEFAULT_MODULUS, 2).unwrap();
        assert_eq!(p.regime(), Regime::Trivial);
        let plan = build_trivial_plan(&p).unwrap();
        assert_eq!(plan.queried.len(), 3);
        assert_eq!(plan.dims.download, 9);
    }
}
