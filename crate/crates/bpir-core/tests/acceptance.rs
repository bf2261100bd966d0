//! Acceptance suite: one test per criterion, each printing a single
//! pass/fail line. Run with `cargo test --test acceptance -- --nocapture`
//! to see the lines for passing criteria too.

use std::collections::BTreeSet;

use num_bigint::BigInt;
use num_traits::{One, Signed};

use bpir_core::analysis::{
    capacity, capacity_unresponsive, confusability_probe, measure_rate, privacy_monte_carlo,
    privacy_rank_audit, sweep_capacity, sweep_gamma, Rational,
};
use bpir_core::codec::{make_generator, Combinations, PuncturePattern, ReceivedWord};
use bpir_core::field::{PrimeField, SeededRng};
use bpir_core::retrieve::retrieve;
use bpir_core::scheme::{
    build_plan, build_plan_skeleton, build_trivial_plan, Params, Regime, DEFAULT_MODULUS,
};
use bpir_core::sim::{collect, AdversaryConfig, MessageSet};

fn rat(a: i64, b: i64) -> Rational {
    Rational::new(BigInt::from(a), BigInt::from(b))
}

fn pass(criterion: usize, detail: &str) {
    println!("[criterion {criterion:2}] PASS: {detail}");
}

macro_rules! check {
    ($criterion:expr, $cond:expr, $($why:tt)*) => {
        if !$cond {
            println!("[criterion {:2}] FAIL: {}", $criterion, format!($($why)*));
            panic!("criterion {} failed: {}", $criterion, format!($($why)*));
        }
    };
}

#[test]
fn criterion_01_exact_capacity_reproduction() {
    let cases = [
        ((5, 2, 2, 1), rat(9, 25)),
        ((6, 3, 1, 2), rat(4, 21)),
        ((6, 3, 2, 1), rat(8, 21)),
    ];
    for ((n, m, t, b), want) in cases {
        let (regime, got) = capacity(n, m, t, b);
        check!(1, regime == Regime::Full, "({n},{m},{t},{b}) not in the full regime");
        check!(1, got == want, "capacity({n},{m},{t},{b}) = {got} != {want}");
    }
    pass(1, "capacity(5,2,2,1)=9/25, capacity(6,3,1,2)=4/21, capacity(6,3,2,1)=8/21 exactly");
}

#[test]
fn criterion_02_end_to_end_resilience() {
    let configs = [(5usize, 2usize, 2usize, 1usize), (6, 3, 1, 2), (6, 3, 2, 1)];
    for (n, m, t, b) in configs {
        for trial in 0..200u64 {
            let seed = SeededRng::derived(0xACC2, (n as u64) << 32 | trial).seed();
            let params = Params::with_all(n, m, t, b, 0, DEFAULT_MODULUS, seed).unwrap();
            let plan = build_plan(&params, 0).unwrap();
            let field = PrimeField::new(params.q).unwrap();
            let mut msg_rng = SeededRng::derived(seed, 2);
            let truth = MessageSet::sample(m, plan.dims.message_len as usize, field, &mut msg_rng);
            let mut pick = SeededRng::derived(seed, 3);
            let byzantine: BTreeSet<usize> = pick.sample_distinct(n, b).into_iter().collect();
            let cfg = AdversaryConfig::worst(byzantine.iter().copied(), seed);
            let answers = collect(&plan, &truth, &cfg).unwrap();
            let result = retrieve(&plan, &answers).unwrap();
            check!(
                2,
                result.message == truth.messages[0],
                "({n},{m},{t},{b}) trial {trial}: decoded message differs from ground truth"
            );
            check!(
                2,
                result.identified_byzantine == byzantine,
                "({n},{m},{t},{b}) trial {trial}: identified {:?} != {:?}",
                result.identified_byzantine,
                byzantine
            );
        }
    }
    pass(2, "200/200 exact decodes and exact Byzantine identification for all three configurations");
}

#[test]
fn criterion_03_scheme_meets_converse_sweep() {
    let mut checked = 0usize;
    let mut materialized = 0usize;
    for n in 1..=12usize {
        for m in 1..=4usize {
            for t in 1..=n {
                for b in 0..=(n / 2) {
                    let params = Params::new(n, m, t, b).unwrap();
                    if params.regime() != Regime::Full {
                        continue;
                    }
                    let (_, cap) = capacity(n, m, t, b);
                    // Materialize when the mixing matrices stay small; the
                    // skeleton carries the identical counts either way.
                    let message_len = (n - 2 * b).pow(m as u32) as u64;
                    let plan = if message_len <= 256 {
                        materialized += 1;
                        build_plan(&params, 0).unwrap()
                    } else {
                        build_plan_skeleton(&params, 0).unwrap()
                    };
                    let report = measure_rate(&plan);
                    check!(
                        3,
                        report.rate == cap && report.matches,
                        "(N={n},M={m},T={t},B={b}): rate {} != capacity {cap}",
                        report.rate
                    );
                    checked += 1;
                }
            }
        }
    }
    check!(3, checked > 400, "sweep unexpectedly small: {checked} configs");
    pass(
        3,
        &format!("rate = capacity exactly for all {checked} full-regime configs (N<=12, M<=4; {materialized} fully materialized)"),
    );
}

#[test]
fn criterion_04_privacy_rank_audit() {
    // Expected per-message rank T * (N - 2B)^{M-1} for every T-subset.
    let configs = [
        ((5usize, 2usize, 2usize, 1usize), 6usize),
        ((6, 3, 1, 2), 4),
        ((6, 3, 2, 1), 32),
    ];
    for ((n, m, t, b), expected) in configs {
        let params = Params::with_all(n, m, t, b, 0, DEFAULT_MODULUS, 4).unwrap();
        let plan = build_plan(&params, 0).unwrap();
        let subsets = bpir_core::analysis::all_t_subsets(n, t);
        for subset in &subsets {
            let audit = privacy_rank_audit(&plan, subset).unwrap();
            check!(
                4,
                audit.expected_rank == expected,
                "({n},{m},{t},{b}): expected rank {expected}, audit wants {}",
                audit.expected_rank
            );
            check!(
                4,
                audit.pass,
                "({n},{m},{t},{b}) subset {subset:?}: counts {:?} ranks {:?}",
                audit.per_message_counts,
                audit.per_message_ranks
            );
        }
    }
    pass(4, "all T-subsets pass the rank audit with per-message rank T(N-2B)^(M-1) = 6 / 4 / 32");
}

#[test]
fn criterion_05_monte_carlo_privacy() {
    let params = Params::with_all(4, 2, 1, 1, 0, 11, 0x3C5).unwrap();
    let report = privacy_monte_carlo(&params, 100_000).unwrap();
    check!(
        5,
        report.outcome_space == 121,
        "observation space {} != 121",
        report.outcome_space
    );
    check!(
        5,
        report.max_tv_to_uniform < 0.02,
        "max TV to the uniform target {:.4} >= 0.02",
        report.max_tv_to_uniform
    );
    check!(
        5,
        report.max_tv_between_views < 0.04,
        "pairwise TV between views {:.4} >= 0.04 (triangle bound)",
        report.max_tv_between_views
    );
    pass(
        5,
        &format!(
            "10^5 trials: max TV to uniform {:.4} < 0.02; pairwise view TV {:.4}",
            report.max_tv_to_uniform, report.max_tv_between_views
        ),
    );
}

#[test]
fn criterion_06_codec_properties() {
    let field = PrimeField::new(DEFAULT_MODULUS).unwrap();
    // (a) Exhaustive puncturing property: every pattern of every legal
    // depth leaves every k x k minor invertible, for all n <= 10.
    let mut minors = 0u64;
    for n in 2..=10usize {
        for k in 1..n {
            let gen = make_generator(n, k, field).unwrap();
            for z in 0..(n - k) {
                for pattern in Combinations::new(n, z) {
                    let punctured = gen.puncture(&PuncturePattern::new(pattern)).unwrap();
                    for rows in Combinations::new(punctured.n(), k) {
                        check!(
                            6,
                            punctured.row_submatrix(&rows).inverse().is_ok(),
                            "singular {k}x{k} minor in punctured ({},{k}) code",
                            punctured.n()
                        );
                        minors += 1;
                    }
                }
            }
        }
    }

    // (b) Decoder vs oracle on 1000 random (10,6) instances with <= 2 errors.
    let gen = make_generator(10, 6, field).unwrap();
    let mut rng = SeededRng::new(66);
    for trial in 0..1000 {
        let msg = rng.vector(field, 6);
        let mut word = gen.encode(&msg).unwrap();
        let nerr = (trial % 3) as usize;
        for &pos in rng.sample_distinct(10, nerr).iter() {
            word[pos] = field.add(word[pos], 1 + rng.below(DEFAULT_MODULUS - 1));
        }
        let rec = ReceivedWord::clean(word);
        let a = gen.decode(&rec).unwrap();
        let o = gen.oracle_decode(&rec).unwrap();
        check!(6, a.message == o.message && a.message == msg, "trial {trial}: mismatch");
    }

    // (b) continued: full (tau, rho) grid with 2 tau + rho <= d - 1 on (12,8).
    let gen = make_generator(12, 8, field).unwrap();
    let d = gen.min_distance();
    for tau in 0..=(d - 1) / 2 {
        for rho in 0..=(d - 1 - 2 * tau) {
            for rep in 0..40 {
                let msg = rng.vector(field, 8);
                let mut word = gen.encode(&msg).unwrap();
                let positions = rng.sample_distinct(12, tau + rho);
                let (errs, erases) = positions.split_at(tau);
                for &pos in errs {
                    word[pos] = field.add(word[pos], 1 + rng.below(DEFAULT_MODULUS - 1));
                }
                let rec = ReceivedWord::with_erasures(word, erases.iter().copied());
                let a = gen.decode(&rec).unwrap();
                let o = gen.oracle_decode(&rec).unwrap();
                check!(
                    6,
                    a.message == msg && o.message == msg,
                    "tau={tau} rho={rho} rep={rep}: decode failed"
                );
            }
        }
    }
    pass(
        6,
        &format!("{minors} punctured minors invertible; 1000 decode/oracle equivalences; full (tau,rho) grid exact"),
    );
}

#[test]
fn criterion_07_confusability_probe() {
    let params = Params::with_all(4, 2, 1, 1, 0, 11, 7).unwrap();
    let report = confusability_probe(&params, 10_000).unwrap();
    check!(
        7,
        report.collisions == 0,
        "{} answer collisions on (N-2B)-subsets",
        report.collisions
    );
    pass(7, "10^4 random distinct message-set pairs, zero (N-2B)-subset answer collisions");
}

#[test]
fn criterion_08_trivial_regime() {
    let params = Params::with_all(4, 2, 3, 1, 0, DEFAULT_MODULUS, 8).unwrap();
    check!(8, params.regime() == Regime::Trivial, "parameters not in the trivial regime");
    let plan = build_trivial_plan(&params).unwrap();
    let report = measure_rate(&plan);
    check!(8, report.rate == rat(1, 6), "trivial rate {} != 1/6", report.rate);
    check!(8, report.matches, "trivial rate does not match capacity");
    let field = PrimeField::new(params.q).unwrap();
    let mut rng = SeededRng::new(88);
    for trial in 0..50 {
        let truth = MessageSet::sample(2, 1, field, &mut rng);
        let bad = plan.queried[trial % plan.queried.len()];
        let cfg = AdversaryConfig::worst([bad], trial as u64);
        let answers = collect(&plan, &truth, &cfg).unwrap();
        for desired in 0..2 {
            let result = bpir_core::retrieve::majority_decode(&plan, &answers, desired).unwrap();
            check!(
                8,
                result.message == vec![truth.messages[desired][0]],
                "trial {trial}: majority decode wrong for message {desired}"
            );
        }
    }
    pass(8, "single-copy worst-case corruption: exact majority decode, rate exactly 1/6");
}

#[test]
fn criterion_09_unresponsive_variant() {
    let want = rat(9, 25);
    let cap = capacity_unresponsive(6, 2, 2, 1, 1).unwrap();
    check!(9, cap == want, "capacity_unresponsive(6,2,2,1,1) = {cap} != 9/25");
    for trial in 0..100u64 {
        let seed = SeededRng::derived(0xACC9, trial).seed();
        let params = Params::with_all(6, 2, 2, 1, 1, DEFAULT_MODULUS, seed).unwrap();
        let plan = build_plan(&params, 0).unwrap();
        let report = measure_rate(&plan);
        check!(9, report.rate == want && report.matches, "measured rate {} != 9/25", report.rate);
        let field = PrimeField::new(params.q).unwrap();
        let mut msg_rng = SeededRng::derived(seed, 2);
        let truth = MessageSet::sample(2, plan.dims.message_len as usize, field, &mut msg_rng);
        let mut pick = SeededRng::derived(seed, 3);
        let chosen = pick.sample_distinct(6, 2);
        let (worst_db, missing_db) = (chosen[0], chosen[1]);
        let cfg = AdversaryConfig::worst([worst_db], seed).with_unresponsive([missing_db]);
        let answers = collect(&plan, &truth, &cfg).unwrap();
        check!(9, answers.per_db[missing_db].is_none(), "trial {trial}: missing answer present");
        let result = retrieve(&plan, &answers).unwrap();
        check!(
            9,
            result.message == truth.messages[0],
            "trial {trial}: decode with one missing and one worst-case database failed"
        );
        check!(
            9,
            result.identified_byzantine == BTreeSet::from([worst_db]),
            "trial {trial}: identified {:?}",
            result.identified_byzantine
        );
        check!(9, result.download_actual == 25, "trial {trial}: download {}", result.download_actual);
    }
    pass(9, "100/100 exact decodes with one missing + one worst-case database; rate = 9/25 = capacity");
}

#[test]
fn criterion_10_figure_reproduction() {
    // Capacity curves over N for B in {0,1,2}: strictly ordered and
    // nondecreasing in N.
    let rows = sweep_capacity(2, 3, &[0, 1, 2], (5, 20));
    for n in 5..=20usize {
        let at = |b: usize| {
            rows.iter()
                .find(|r| r.b == b && r.n == n)
                .unwrap()
                .capacity
                .clone()
        };
        check!(10, at(0) > at(1) && at(1) > at(2), "curves not strictly ordered at N={n}");
    }
    for b in [0usize, 1, 2] {
        let mut prev: Option<Rational> = None;
        for n in 5..=20usize {
            let row = rows.iter().find(|r| r.b == b && r.n == n).unwrap();
            if let Some(p) = &prev {
                check!(10, row.capacity >= *p, "B={b}: capacity decreases at N={n}");
            }
            prev = Some(row.capacity.clone());
        }
    }
    // Asymptote: at N = 1000 the capacity sits within 0.01 of 1 - 2 gamma.
    let gammas: Vec<Rational> = (0..=9).map(|i| rat(i, 20)).collect();
    let bound = rat(1, 100);
    for row in sweep_gamma(1000, 3, 2, &gammas).unwrap() {
        let gap = (row.capacity.clone() - row.asymptote.clone()).abs();
        check!(10, gap < bound, "gamma {}: |C - (1-2g)| = {gap}", row.gamma);
    }
    pass(10, "capacity curves ordered B=0 > B=1 > B=2, nondecreasing in N; gamma sweep within 0.01 of 1-2*gamma");
}

#[test]
fn criterion_11_asymptotic_in_m() {
    let (_, cap) = capacity(10, 64, 2, 1);
    let limit = Rational::one() - rat(4, 10);
    let gap = (cap - limit).abs();
    let tol = Rational::new(BigInt::one(), BigInt::from(1_000_000u64));
    check!(11, gap < tol, "|capacity(10,64,2,1) - 0.6| = {gap} >= 1e-6");
    pass(11, "capacity at M=64 within 1e-6 of 1 - (2B+T)/N = 3/5 (exact rational evaluation)");
}
