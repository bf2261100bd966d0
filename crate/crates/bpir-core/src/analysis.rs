//! Closed-form capacity and rate formulas for every regime, exact-rational
//! rate accounting against built plans, the collusion privacy audits (rank
//! and Monte Carlo), and the cut-set confusability probe.
//!
//! All capacity arithmetic is exact rational; floating point appears only
//! in the Monte Carlo statistics.

use num_bigint::BigInt;
use num_rational::BigRational;
use num_traits::{One, Signed, ToPrimitive, Zero};
use thiserror::Error;

use crate::field::{FieldMatrix, PrimeField, SeededRng};
use crate::scheme::{build_plan, Params, QueryPlan, Regime, SchemeError};
use crate::sim::{collect, AdversaryConfig, MessageSet};

/// Exact rational with arbitrary-precision terms.
pub type Rational = BigRational;

#[derive(Debug, Error)]
pub enum AnalysisError {
    #[error("operation outside its regime: {0}")]
    Regime(String),
    #[error("instance too large: {0}")]
    InstanceTooLarge(String),
    #[error("invalid argument: {0}")]
    Argument(String),
    #[error(transparent)]
    Scheme(#[from] SchemeError),
}

fn ratio(num: i128, den: i128) -> Rational {
    Rational::new(BigInt::from(num), BigInt::from(den))
}

fn rational_pow(base: &Rational, exp: u32) -> Rational {
    let mut acc = Rational::one();
    for _ in 0..exp {
        acc *= base.clone();
    }
    acc
}

/// Capacity of the scheme for `(N, M, T, B)`:
/// the layered-scheme rate when `2B + T < N`, the majority-download rate
/// `1 / ((2B+1) M)` when `2B + 1 <= N <= 2B + T`, and zero otherwise.
pub fn capacity(n: usize, m: usize, t: usize, b: usize) -> (Regime, Rational) {
    assert!(n >= 1 && m >= 1 && t >= 1, "need N, M, T >= 1");
    let params = Params {
        n,
        m,
        t,
        b,
        u: 0,
        q: crate::scheme::DEFAULT_MODULUS,
        seed: 0,
    };
    let regime = params.regime();
    let value = match regime {
        Regime::Full => full_capacity(n as i128, m as u32, t as i128, b as i128, 0),
        Regime::Trivial => ratio(1, (2 * b as i128 + 1) * m as i128),
        Regime::Infeasible => Rational::zero(),
    };
    (regime, value)
}

fn full_capacity(n: i128, m: u32, t: i128, b: i128, u: i128) -> Rational {
    let eff = n - 2 * b - u; // effective database count
    let served = n - u; // databases that actually deliver symbols
    let head = ratio(eff, served);
    let r = ratio(t, eff);
    head * (Rational::one() - r.clone()) / (Rational::one() - rational_pow(&r, m))
}

/// Capacity with `U` unresponsive databases on top of the Byzantine ones;
/// requires the full regime `2B + T + U < N`.
pub fn capacity_unresponsive(
    n: usize,
    m: usize,
    t: usize,
    b: usize,
    u: usize,
) -> Result<Rational, AnalysisError> {
    if 2 * b + t + u >= n {
        return Err(AnalysisError::Regime(format!(
            "need 2B + T + U < N, got 2*{b} + {t} + {u} >= {n}"
        )));
    }
    Ok(full_capacity(n as i128, m as u32, t as i128, b as i128, u as i128))
}

/// Rate available after `b_tilde` Byzantine databases have been identified
/// and removed from the system.
pub fn post_expurgation_rate(
    n: usize,
    m: usize,
    t: usize,
    b: usize,
    b_tilde: usize,
) -> Result<Rational, AnalysisError> {
    if b_tilde > b {
        return Err(AnalysisError::Argument(format!(
            "cannot expurgate {b_tilde} of {b} Byzantine databases"
        )));
    }
    let n_left = n - b_tilde;
    let b_left = b - b_tilde;
    if 2 * b_left + t >= n_left {
        return Err(AnalysisError::Regime(format!(
            "after expurgation: need 2B' + T < N', got 2*{b_left} + {t} >= {n_left}"
        )));
    }
    Ok(full_capacity(n_left as i128, m as u32, t as i128, b_left as i128, 0))
}

/// Limit capacity when the Byzantine fraction is `gamma = B / N` and `N`
/// grows: `1 - 2 gamma`, dropping to zero at `gamma >= 1/2`.
pub fn asymptotic_capacity(gamma: &Rational) -> Result<Rational, AnalysisError> {
    if gamma.is_negative() {
        return Err(AnalysisError::Argument("gamma must be nonnegative".into()));
    }
    if *gamma >= ratio(1, 2) {
        return Ok(Rational::zero());
    }
    Ok(Rational::one() - ratio(2, 1) * gamma.clone())
}

/// Exact download accounting of one plan against the capacity formula.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct RateReport {
    pub regime: Regime,
    pub message_len: u64,
    pub download: u64,
    pub rate: Rational,
    pub capacity: Rational,
    pub matches: bool,
}

impl RateReport {
    /// JSON form with the fraction terms as decimal strings (they can
    /// exceed any fixed-width integer). The fraction is authoritative; the
    /// 6-digit decimals are a convenience.
    pub fn to_json(&self) -> serde_json::Value {
        serde_json::json!({
            "regime": format!("{:?}", self.regime).to_uppercase(),
            "L": self.message_len,
            "D": self.download,
            "R_num": self.rate.numer().to_string(),
            "R_den": self.rate.denom().to_string(),
            "R_decimal": rational_to_decimal(&self.rate, 6),
            "C_num": self.capacity.numer().to_string(),
            "C_den": self.capacity.denom().to_string(),
            "C_decimal": rational_to_decimal(&self.capacity, 6),
            "match": self.matches,
        })
    }
}

/// Decimal rendering of a rational, for human-readable report lines.
pub fn rational_to_decimal(r: &Rational, digits: usize) -> String {
    let scale = BigInt::from(10u32).pow(digits as u32);
    let scaled = (r.clone() * Rational::from_integer(scale)).round();
    let int = scaled.to_integer();
    let negative = int.is_negative();
    let mag = int.abs().to_string();
    let padded = format!("{:0>width$}", mag, width = digits + 1);
    let split = padded.len() - digits;
    format!(
        "{}{}.{}",
        if negative { "-" } else { "" },
        &padded[..split],
        &padded[split..]
    )
}

/// Measures the achieved rate of a plan: downloaded symbols are counted
/// over the databases that actually answer (unresponsive ones contribute
/// nothing), and the exact ratio is compared with the capacity formula.
pub fn measure_rate(plan: &QueryPlan) -> RateReport {
    let p = plan.params;
    let message_len = plan.dims.message_len;
    let download = plan.dims.download;
    let rate = Rational::new(BigInt::from(message_len), BigInt::from(download));
    let capacity = match plan.regime {
        Regime::Full => full_capacity(p.n as i128, p.m as u32, p.t as i128, p.b as i128, p.u as i128),
        Regime::Trivial => ratio(1, (2 * p.b as i128 + 1) * p.m as i128),
        Regime::Infeasible => Rational::zero(),
    };
    let matches = rate == capacity;
    RateReport {
        regime: plan.regime,
        message_len,
        download,
        rate,
        capacity,
        matches,
    }
}

/// Outcome of the collusion rank audit for one T-subset.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct PrivacyAudit {
    pub subset: Vec<usize>,
    pub per_message_counts: Vec<usize>,
    pub per_message_ranks: Vec<usize>,
    pub expected_rank: usize,
    pub pass: bool,
}

/// Stacks, for each message, every coefficient row the colluding subset
/// observes, and checks that the counts agree and each stack has full rank
/// `T * (N - 2B - U)^{M-1}`; full rank makes the observed symbols uniform
/// and independent, hence independent of the desired index.
pub fn privacy_rank_audit(plan: &QueryPlan, subset: &[usize]) -> Result<PrivacyAudit, AnalysisError> {
    if !plan.is_materialized() {
        return Err(AnalysisError::Argument("plan is not materialized".into()));
    }
    if subset.len() != plan.params.t {
        return Err(AnalysisError::Argument(format!(
            "audit subset has {} databases but T = {}",
            subset.len(),
            plan.params.t
        )));
    }
    let field = plan.params.field()?;
    let m = plan.params.m;
    let eff = plan.params.effective();
    let expected_rank = plan.params.t * eff.pow(plan.params.m as u32 - 1);

    let mut rows: Vec<Vec<Vec<u64>>> = vec![Vec::new(); m];
    for &db in subset {
        for spec in plan.specs_for(db) {
            for (msg, coeff) in &spec.coeffs {
                rows[*msg].push(coeff.clone());
            }
        }
    }
    let per_message_counts: Vec<usize> = rows.iter().map(|r| r.len()).collect();
    let mut per_message_ranks = Vec::with_capacity(m);
    for msg_rows in &rows {
        let stack = FieldMatrix::from_rows(msg_rows, field)
            .map_err(|e| AnalysisError::Argument(e.to_string()))?;
        per_message_ranks.push(stack.rank());
    }
    let pass = per_message_counts.iter().all(|&c| c == expected_rank)
        && per_message_ranks.iter().all(|&r| r == expected_rank);
    Ok(PrivacyAudit {
        subset: subset.to_vec(),
        per_message_counts,
        per_message_ranks,
        expected_rank,
        pass,
    })
}

/// Statistics of the Monte Carlo privacy check.
#[derive(Debug, Clone, PartialEq)]
pub struct MonteCarloReport {
    pub trials: u64,
    pub outcome_space: u64,
    /// Max over (desired index, message) of the total-variation distance
    /// between the observed tuple distribution and the uniform target that
    /// full-rank mixing dictates.
    pub max_tv_to_uniform: f64,
    /// Max over messages of the pairwise total-variation distance between
    /// the empirical distributions under different desired indices.
    pub max_tv_between_views: f64,
}

/// Empirically checks that a fixed database's observed symbol tuples are
/// distributed independently of the desired index: over fresh
/// mixing-matrix draws, the per-message observation tuple must be uniform
/// whichever message is desired. Returns both the distance of every
/// empirical distribution to the uniform target and the direct pairwise
/// distance between the per-desired-index views.
pub fn privacy_monte_carlo(
    params: &Params,
    trials: u64,
) -> Result<MonteCarloReport, AnalysisError> {
    if trials == 0 {
        return Ok(MonteCarloReport {
            trials: 0,
            outcome_space: 0,
            max_tv_to_uniform: 0.0,
            max_tv_between_views: 0.0,
        });
    }
    if params.regime() != Regime::Full {
        return Err(AnalysisError::Regime(
            "Monte Carlo privacy check needs the full regime".into(),
        ));
    }
    let eff = params.effective();
    let per_message = eff.pow(params.m as u32 - 1) as u64;
    let space = u32::try_from(per_message)
        .ok()
        .and_then(|e| params.q.checked_pow(e))
        .filter(|&s| s <= 10_000)
        .ok_or_else(|| {
            AnalysisError::InstanceTooLarge(format!(
                "observation space q^{per_message} exceeds 10^4"
            ))
        })?;
    let field = PrimeField::new(params.q).map_err(SchemeError::from)?;

    // One fixed nonzero message set for all trials; the randomness under
    // test is the mixing, not the data.
    let mut data_rng = SeededRng::derived(params.seed, 0xDA7A);
    let probe_len = eff.pow(params.m as u32);
    let mut truth = MessageSet::sample(params.m, probe_len, field, &mut data_rng);
    for w in truth.messages.iter_mut() {
        while w.iter().all(|&v| v == 0) {
            *w = data_rng.vector(field, probe_len);
        }
    }

    let observed_db = 0usize;
    let mut tallies: Vec<Vec<Vec<u64>>> =
        vec![vec![vec![0u64; space as usize]; params.m]; params.m];

    for desired in 0..params.m {
        for trial in 0..trials {
            let mut p = *params;
            p.seed = SeededRng::derived(params.seed, (desired as u64) << 40 | trial).seed();
            let plan = build_plan(&p, desired)?;
            // Per-message contribution tuple at the observed database, in
            // slot order.
            let mut tuples: Vec<u64> = vec![0; params.m];
            for spec in plan.specs_for(observed_db) {
                for (msg, coeff) in &spec.coeffs {
                    let v = field.dot(coeff, &truth.messages[*msg]);
                    tuples[*msg] = tuples[*msg] * params.q + v;
                }
            }
            for msg in 0..params.m {
                tallies[desired][msg][tuples[msg] as usize] += 1;
            }
        }
    }

    let uniform = 1.0 / space as f64;
    let mut max_tv_to_uniform: f64 = 0.0;
    for desired in 0..params.m {
        for msg in 0..params.m {
            let tv: f64 = tallies[desired][msg]
                .iter()
                .map(|&c| (c as f64 / trials as f64 - uniform).abs())
                .sum::<f64>()
                / 2.0;
            max_tv_to_uniform = max_tv_to_uniform.max(tv);
        }
    }
    let mut max_tv_between_views: f64 = 0.0;
    for msg in 0..params.m {
        for d1 in 0..params.m {
            for d2 in d1 + 1..params.m {
                let tv: f64 = tallies[d1][msg]
                    .iter()
                    .zip(&tallies[d2][msg])
                    .map(|(&a, &b)| (a as f64 - b as f64).abs() / trials as f64)
                    .sum::<f64>()
                    / 2.0;
                max_tv_between_views = max_tv_between_views.max(tv);
            }
        }
    }

    Ok(MonteCarloReport {
        trials,
        outcome_space: space,
        max_tv_to_uniform,
        max_tv_between_views,
    })
}

/// Result of the cut-set confusability probe.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct ProbeReport {
    pub pairs: u64,
    pub collisions: u64,
}

/// Samples random distinct message-set pairs and counts how many produce
/// identical honest answer tuples on some `(N - 2B)`-subset of databases.
/// Decodability forces the desired-message part of the answers to separate
/// realizations, so collisions here would falsify the cut-set uniqueness
/// argument for the desired message; the expected count is zero.
pub fn confusability_probe(
    params: &Params,
    pairs: u64,
) -> Result<ProbeReport, AnalysisError> {
    if params.regime() != Regime::Full {
        return Err(AnalysisError::Regime(
            "confusability probe needs the full regime".into(),
        ));
    }
    let field = PrimeField::new(params.q).map_err(SchemeError::from)?;
    let plan = build_plan(params, 0)?;
    let len = plan.dims.message_len as usize;
    let need = params.n - 2 * params.b;
    let mut rng = SeededRng::derived(params.seed, 0xC0117);
    let mut collisions = 0u64;
    for _ in 0..pairs {
        let w1 = MessageSet::sample(params.m, len, field, &mut rng);
        let mut w2 = MessageSet::sample(params.m, len, field, &mut rng);
        while w2 == w1 {
            w2 = MessageSet::sample(params.m, len, field, &mut rng);
        }
        let a1 = collect(&plan, &w1, &AdversaryConfig::honest())
            .map_err(|e| AnalysisError::Argument(e.to_string()))?;
        let a2 = collect(&plan, &w2, &AdversaryConfig::honest())
            .map_err(|e| AnalysisError::Argument(e.to_string()))?;
        let agreeing = (0..params.n)
            .filter(|&db| a1.per_db[db] == a2.per_db[db])
            .count();
        if agreeing >= need {
            collisions += 1;
        }
    }
    Ok(ProbeReport { pairs, collisions })
}

/// One row of a capacity sweep.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct SweepRow {
    pub b: usize,
    pub n: usize,
    pub regime: Regime,
    pub capacity: Rational,
}

/// Capacity as a function of `N` for each Byzantine count in the list.
pub fn sweep_capacity(t: usize, m: usize, b_list: &[usize], n_range: (usize, usize)) -> Vec<SweepRow> {
    let mut rows = Vec::new();
    for &b in b_list {
        for n in n_range.0..=n_range.1 {
            let (regime, c) = capacity(n, m, t, b);
            rows.push(SweepRow {
                b,
                n,
                regime,
                capacity: c,
            });
        }
    }
    rows
}

/// One row of the asymptotic (gamma) sweep.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct GammaRow {
    pub gamma: Rational,
    pub n: usize,
    pub b: usize,
    pub capacity: Rational,
    pub asymptote: Rational,
}

/// Capacity at `B = floor(gamma * N)` against the `1 - 2 gamma` asymptote.
pub fn sweep_gamma(n: usize, m: usize, t: usize, gammas: &[Rational]) -> Result<Vec<GammaRow>, AnalysisError> {
    let mut rows = Vec::new();
    for gamma in gammas {
        let b_big = (gamma.clone() * Rational::from_integer(BigInt::from(n))).floor();
        let b = b_big
            .to_integer()
            .to_usize()
            .ok_or_else(|| AnalysisError::Argument("gamma out of range".into()))?;
        let (_, c) = capacity(n, m, t, b);
        rows.push(GammaRow {
            gamma: gamma.clone(),
            n,
            b,
            capacity: c,
            asymptote: asymptotic_capacity(gamma)?,
        });
    }
    Ok(rows)
}

/// All T-subsets of the N databases, for exhaustive rank audits.
pub fn all_t_subsets(n: usize, t: usize) -> Vec<Vec<usize>> {
    crate::codec::Combinations::new(n, t).collect()
}
