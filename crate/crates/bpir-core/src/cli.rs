//! Experiment configuration, orchestration and report emission.
//!
//! One binary drives everything: single runs, adversary trials, privacy
//! audits, the confusability probe, query-table dumps and capacity sweeps.
//! Outputs are byte-identical for identical configuration and seed; timing
//! goes to stderr only.

use std::collections::BTreeSet;
use std::fmt::Write as _;
use std::path::PathBuf;

use clap::Parser;
use serde::Deserialize;
use thiserror::Error;

use crate::analysis::{
    all_t_subsets, confusability_probe, measure_rate, privacy_rank_audit, rational_to_decimal,
    sweep_capacity, sweep_gamma, AnalysisError, RateReport, Rational,
};
use crate::field::SeededRng;
use crate::retrieve::{retrieve, RetrievalError};
use crate::scheme::{
    build_plan, build_plan_skeleton, build_trivial_plan, dump_query_table, Params, Regime,
    SchemeError, DEFAULT_MODULUS,
};
use crate::sim::{collect, AdversaryConfig, Behavior, MessageSet, SimError};

#[derive(Debug, Error)]
pub enum CliError {
    #[error("configuration error: {0}")]
    Config(String),
    #[error("could not read config file: {0}")]
    Io(#[from] std::io::Error),
    #[error("could not parse config file: {0}")]
    Json(#[from] serde_json::Error),
    #[error("decode failure: {0}")]
    Decode(String),
    #[error("audit failure: {0}")]
    Audit(String),
    #[error(transparent)]
    Scheme(#[from] SchemeError),
    #[error(transparent)]
    Analysis(#[from] AnalysisError),
    #[error("simulation error: {0}")]
    Sim(String),
}

impl From<RetrievalError> for CliError {
    fn from(e: RetrievalError) -> Self {
        match e {
            RetrievalError::LayerDecode { .. } | RetrievalError::OuterDecode(_) => {
                CliError::Decode(e.to_string())
            }
            other => CliError::Sim(other.to_string()),
        }
    }
}

impl From<SimError> for CliError {
    fn from(e: SimError) -> Self {
        CliError::Sim(e.to_string())
    }
}

/// Exit code taxonomy: 0 success, 2 configuration or regime error,
/// 3 decode failure (an invariant breach), 4 audit failure.
pub fn exit_code_for(err: &CliError) -> i32 {
    match err {
        CliError::Config(_) | CliError::Io(_) | CliError::Json(_) | CliError::Scheme(_) => 2,
        CliError::Decode(_) => 3,
        CliError::Audit(_) => 4,
        CliError::Analysis(_) | CliError::Sim(_) => 2,
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Emit {
    Table,
    Json,
    Csv,
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub enum AdversarySpec {
    None,
    Content,
    Random(f64),
    Worst,
}

impl AdversarySpec {
    fn parse(s: &str) -> Result<Self, CliError> {
        match s {
            "none" => Ok(AdversarySpec::None),
            "content" => Ok(AdversarySpec::Content),
            "worst" => Ok(AdversarySpec::Worst),
            other => {
                if let Some(rate) = other.strip_prefix("random:") {
                    let rate: f64 = rate.parse().map_err(|_| {
                        CliError::Config(format!("bad corruption rate in --adversary {other}"))
                    })?;
                    if !(0.0..=1.0).contains(&rate) {
                        return Err(CliError::Config(
                            "corruption rate must be within [0, 1]".into(),
                        ));
                    }
                    Ok(AdversarySpec::Random(rate))
                } else {
                    Err(CliError::Config(format!(
                        "unknown adversary {other:?}; expected none|content|random:<rate>|worst"
                    )))
                }
            }
        }
    }

    fn label(&self) -> String {
        match self {
            AdversarySpec::None => "none".into(),
            AdversarySpec::Content => "content".into(),
            AdversarySpec::Random(r) => format!("random:{r}"),
            AdversarySpec::Worst => "worst".into(),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub enum DesiredChoice {
    /// 0-based message index.
    Index(usize),
    SweepAll,
}

/// A fully validated experiment description.
#[derive(Debug, Clone)]
pub struct ExperimentConfig {
    pub params: Params,
    pub desired: DesiredChoice,
    pub adversary: AdversarySpec,
    /// 0-based database indices; sampled per trial when absent.
    pub byzantine_set: Option<Vec<usize>>,
    pub unresponsive_set: Option<Vec<usize>>,
    pub trials: u64,
    pub emit: Emit,
    pub dump_queries: bool,
    pub audit_privacy: bool,
    pub probe_confusability: bool,
    pub trivial: bool,
    pub run_trials: bool,
}

/// Flat JSON file form of a configuration; flags override file values.
#[derive(Debug, Default, Deserialize)]
#[serde(deny_unknown_fields)]
struct FileConfig {
    n: Option<usize>,
    m: Option<usize>,
    t: Option<usize>,
    b: Option<usize>,
    u: Option<usize>,
    q: Option<u64>,
    seed: Option<u64>,
    desired: Option<serde_json::Value>,
    adversary: Option<String>,
    byzantine_set: Option<Vec<usize>>,
    unresponsive_set: Option<Vec<usize>>,
    trials: Option<u64>,
    emit: Option<String>,
    dump_queries: Option<bool>,
    audit_privacy: Option<bool>,
    probe_confusability: Option<bool>,
    trivial: Option<bool>,
}

/// Command-line flags. Database and message indices are 1-based here, as in
/// the usual query-table notation.
#[derive(Debug, Parser)]
#[command(
    name = "bpir",
    about = "Byzantine-resilient private information retrieval simulator",
    disable_help_subcommand = true
)]
pub struct Cli {
    /// JSON config file; explicit flags override its values.
    #[arg(long)]
    pub config: Option<PathBuf>,
    /// Number of databases.
    #[arg(long)]
    pub n: Option<usize>,
    /// Number of messages.
    #[arg(long)]
    pub m: Option<usize>,
    /// Collusion threshold.
    #[arg(long)]
    pub t: Option<usize>,
    /// Byzantine database count.
    #[arg(long)]
    pub b: Option<usize>,
    /// Unresponsive database count.
    #[arg(long)]
    pub u: Option<usize>,
    /// Field modulus (prime).
    #[arg(long)]
    pub q: Option<u64>,
    /// Master seed.
    #[arg(long)]
    pub seed: Option<u64>,
    /// Desired message: 1-based index, or "all".
    #[arg(long)]
    pub desired: Option<String>,
    /// Adversary strategy: none | content | random:RATE | worst.
    #[arg(long)]
    pub adversary: Option<String>,
    /// Byzantine databases (1-based, comma separated); random per trial if absent.
    #[arg(long, value_delimiter = ',')]
    pub byzantine_set: Option<Vec<usize>>,
    /// Unresponsive databases (1-based, comma separated).
    #[arg(long, value_delimiter = ',')]
    pub unresponsive_set: Option<Vec<usize>>,
    /// Trial count (also the pair count for the confusability probe).
    #[arg(long)]
    pub trials: Option<u64>,
    /// Output format: table | json | csv.
    #[arg(long)]
    pub emit: Option<String>,
    /// Print the symbolic query table.
    #[arg(long)]
    pub dump_queries: bool,
    /// Run the collusion rank audit over every T-subset.
    #[arg(long)]
    pub audit_privacy: bool,
    /// Run the cut-set confusability probe.
    #[arg(long)]
    pub probe_confusability: bool,
    /// Capacity sweep over --b-list and --n-range.
    #[arg(long)]
    pub sweep_capacity: bool,
    /// Byzantine counts for the capacity sweep, e.g. 0,1,2.
    #[arg(long, value_delimiter = ',')]
    pub b_list: Option<Vec<usize>>,
    /// Database range for the capacity sweep, e.g. 5:20.
    #[arg(long)]
    pub n_range: Option<String>,
    /// Asymptotic sweep: capacity at B = floor(gamma N) against 1 - 2 gamma.
    #[arg(long)]
    pub sweep_gamma: bool,
    /// Database count for the gamma sweep.
    #[arg(long, default_value_t = 1000)]
    pub gamma_n: usize,
    /// Use the trivial-regime plan (full downloads + majority decoding).
    #[arg(long)]
    pub trivial: bool,
}

/// Merges the config file (if any) with flag overrides, fills defaults,
/// and validates against the regime rules.
pub fn validate_and_load(cli: &Cli) -> Result<ExperimentConfig, CliError> {
    let file: FileConfig = match &cli.config {
        Some(path) => serde_json::from_str(&std::fs::read_to_string(path)?)?,
        None => FileConfig::default(),
    };
    let n = cli.n.or(file.n).ok_or_else(|| CliError::Config("missing --n".into()))?;
    let m = cli.m.or(file.m).ok_or_else(|| CliError::Config("missing --m".into()))?;
    let t = cli.t.or(file.t).ok_or_else(|| CliError::Config("missing --t".into()))?;
    let b = cli.b.or(file.b).ok_or_else(|| CliError::Config("missing --b".into()))?;
    let u = cli.u.or(file.u).unwrap_or(0);
    let q = cli.q.or(file.q).unwrap_or(DEFAULT_MODULUS);
    let seed = cli.seed.or(file.seed).unwrap_or(0);
    let params = Params::with_all(n, m, t, b, u, q, seed).map_err(|e| CliError::Config(e.to_string()))?;

    let desired_raw: Option<String> = cli.desired.clone().or_else(|| {
        file.desired.as_ref().map(|v| match v {
            serde_json::Value::String(s) => s.clone(),
            other => other.to_string(),
        })
    });
    let desired = match desired_raw.as_deref() {
        None => DesiredChoice::Index(0),
        Some("all") => DesiredChoice::SweepAll,
        Some(s) => {
            let idx: usize = s
                .parse()
                .map_err(|_| CliError::Config(format!("bad --desired value {s:?}")))?;
            if idx < 1 || idx > m {
                return Err(CliError::Config(format!(
                    "--desired {idx} out of range 1..={m}"
                )));
            }
            DesiredChoice::Index(idx - 1)
        }
    };

    let adversary = match cli.adversary.clone().or(file.adversary) {
        None => AdversarySpec::None,
        Some(s) => AdversarySpec::parse(&s)?,
    };

    let convert_set = |set: Option<Vec<usize>>, what: &str| -> Result<Option<Vec<usize>>, CliError> {
        set.map(|list| {
            list.into_iter()
                .map(|db| {
                    if db < 1 || db > n {
                        Err(CliError::Config(format!(
                            "{what} index {db} out of range 1..={n}"
                        )))
                    } else {
                        Ok(db - 1)
                    }
                })
                .collect::<Result<Vec<usize>, CliError>>()
        })
        .transpose()
    };
    let byzantine_set = convert_set(cli.byzantine_set.clone().or(file.byzantine_set), "--byzantine-set")?;
    let unresponsive_set = convert_set(
        cli.unresponsive_set.clone().or(file.unresponsive_set),
        "--unresponsive-set",
    )?;
    if let Some(set) = &byzantine_set {
        if set.len() > b {
            return Err(CliError::Config(format!(
                "--byzantine-set names {} databases but B = {b}",
                set.len()
            )));
        }
    }
    if let Some(set) = &unresponsive_set {
        if set.len() > u {
            return Err(CliError::Config(format!(
                "--unresponsive-set names {} databases but U = {u}",
                set.len()
            )));
        }
    }

    let trials_explicit = cli.trials.or(file.trials);
    let trials = trials_explicit.unwrap_or(1);
    let emit = match cli
        .emit
        .clone()
        .or(file.emit)
        .unwrap_or_else(|| "table".into())
        .as_str()
    {
        "table" => Emit::Table,
        "json" => Emit::Json,
        "csv" => Emit::Csv,
        other => {
            return Err(CliError::Config(format!(
                "unknown --emit {other:?}; expected table|json|csv"
            )))
        }
    };

    let dump_queries = cli.dump_queries || file.dump_queries.unwrap_or(false);
    let audit_privacy = cli.audit_privacy || file.audit_privacy.unwrap_or(false);
    let probe_confusability = cli.probe_confusability || file.probe_confusability.unwrap_or(false);
    let trivial = cli.trivial || file.trivial.unwrap_or(false);

    // Regime validation with the violated inequality named.
    match params.regime() {
        Regime::Infeasible => {
            return Err(CliError::Config(format!(
                "N - U < 2B + 1 ({} - {} < {}): infeasible, capacity is zero",
                n,
                u,
                2 * b + 1
            )));
        }
        Regime::Trivial if !trivial => {
            return Err(CliError::Config(format!(
                "2B + T >= N - U (2*{b} + {t} >= {} - {u}): trivial regime — use --trivial",
                n
            )));
        }
        Regime::Full if trivial => {
            return Err(CliError::Config(format!(
                "--trivial given but 2B + T + U < N (2*{b} + {t} + {u} < {n}): use the general scheme"
            )));
        }
        _ => {}
    }
    params
        .validate_field_size()
        .map_err(|e| CliError::Config(e.to_string()))?;

    let aux = dump_queries || audit_privacy || probe_confusability;
    Ok(ExperimentConfig {
        params,
        desired,
        adversary,
        byzantine_set,
        unresponsive_set,
        trials,
        emit,
        dump_queries,
        audit_privacy,
        probe_confusability,
        trivial,
        run_trials: trials_explicit.is_some() || !aux,
    })
}

/// Per-layer worst usage across the trials of one run.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct LayerUsage {
    pub layer: String,
    pub max_errors: usize,
    pub budget: u64,
}

/// Aggregated outcome of an experiment.
#[derive(Debug, Clone)]
pub struct RunReport {
    pub params: Params,
    pub adversary: String,
    pub desired: Vec<usize>,
    pub trials_per_desired: u64,
    pub attempts: u64,
    pub successes: u64,
    pub identification_exact: u64,
    pub layer_usage: Vec<LayerUsage>,
    pub rate: RateReport,
    pub seeds_used: Vec<u64>,
}

/// Runs the configured experiment: build plan, sample messages, simulate
/// the network, decode, and compare against ground truth, for every trial
/// and desired index.
pub fn run(config: &ExperimentConfig) -> Result<RunReport, CliError> {
    let params = config.params;
    let desired_list: Vec<usize> = match &config.desired {
        DesiredChoice::Index(i) => vec![*i],
        DesiredChoice::SweepAll => (0..params.m).collect(),
    };
    let mut attempts = 0u64;
    let mut successes = 0u64;
    let mut identification_exact = 0u64;
    let mut layer_usage: Vec<LayerUsage> = Vec::new();
    let mut seeds_used = Vec::new();
    let mut rate: Option<RateReport> = None;

    for &desired in &desired_list {
        for trial in 0..config.trials {
            let trial_seed = SeededRng::derived(params.seed, (desired as u64) << 32 | trial).seed();
            let mut p = params;
            p.seed = trial_seed;
            seeds_used.push(trial_seed);

            let mut plan = if config.trivial {
                build_trivial_plan(&p)?
            } else {
                build_plan(&p, desired)?
            };
            plan.desired = desired;
            if rate.is_none() {
                rate = Some(measure_rate(&plan));
            }

            let field = p.field()?;
            let mut msg_rng = SeededRng::derived(trial_seed, 2);
            let truth = MessageSet::sample(
                p.m,
                plan.dims.message_len as usize,
                field,
                &mut msg_rng,
            );

            let mut pick_rng = SeededRng::derived(trial_seed, 3);
            let byzantine: Vec<usize> = match &config.byzantine_set {
                Some(set) => set.clone(),
                None => pick_rng.sample_distinct(p.n, p.b),
            };
            let unresponsive: Vec<usize> = match &config.unresponsive_set {
                Some(set) => set.clone(),
                None => {
                    let taken: BTreeSet<usize> = byzantine.iter().copied().collect();
                    let free: Vec<usize> = (0..p.n).filter(|db| !taken.contains(db)).collect();
                    let mut order = free;
                    pick_rng.shuffle(&mut order);
                    order.into_iter().take(p.u).collect()
                }
            };

            let behavior = match config.adversary {
                AdversarySpec::None => None,
                AdversarySpec::Worst => Some(Behavior::AnswerWorst),
                AdversarySpec::Random(r) => Some(Behavior::AnswerRandom(r)),
                AdversarySpec::Content => {
                    let mut alt_rng = SeededRng::derived(trial_seed, 5);
                    Some(Behavior::ContentSwap(MessageSet::sample(
                        p.m,
                        plan.dims.message_len as usize,
                        field,
                        &mut alt_rng,
                    )))
                }
            };
            let mut cfg = match behavior {
                Some(b) => AdversaryConfig::uniform(
                    byzantine.iter().copied(),
                    b,
                    SeededRng::derived(trial_seed, 4).seed(),
                ),
                None => AdversaryConfig::honest(),
            };
            cfg = cfg.with_unresponsive(unresponsive.iter().copied());

            let answers = collect(&plan, &truth, &cfg)?;
            let result = retrieve(&plan, &answers)?;

            attempts += 1;
            if result.message == truth.messages[desired] {
                successes += 1;
            }
            let expected_byzantine: BTreeSet<usize> = cfg.byzantine_set();
            if result.identified_byzantine == expected_byzantine {
                identification_exact += 1;
            }
            for tally in &result.layer_tallies {
                match layer_usage.iter_mut().find(|l| l.layer == tally.layer) {
                    Some(l) => l.max_errors = l.max_errors.max(tally.errors),
                    None => layer_usage.push(LayerUsage {
                        layer: tally.layer.clone(),
                        max_errors: tally.errors,
                        budget: tally.budget,
                    }),
                }
            }
        }
    }

    Ok(RunReport {
        params,
        adversary: config.adversary.label(),
        desired: desired_list.iter().map(|d| d + 1).collect(),
        trials_per_desired: config.trials,
        attempts,
        successes,
        identification_exact,
        layer_usage,
        rate: rate.expect("at least one trial builds a plan"),
        seeds_used,
    })
}

impl RunReport {
    pub fn to_json(&self) -> serde_json::Value {
        serde_json::json!({
            "params": {
                "n": self.params.n, "m": self.params.m, "t": self.params.t,
                "b": self.params.b, "u": self.params.u, "q": self.params.q,
                "seed": self.params.seed, "rng": crate::field::RNG_ALGORITHM,
            },
            "adversary": self.adversary,
            "desired": self.desired,
            "trials_per_desired": self.trials_per_desired,
            "attempts": self.attempts,
            "successes": self.successes,
            "identification_exact": self.identification_exact,
            "layers": self.layer_usage.iter().map(|l| serde_json::json!({
                "layer": l.layer, "max_errors": l.max_errors, "budget": l.budget,
            })).collect::<Vec<_>>(),
            "rate": self.rate.to_json(),
        })
    }

    pub fn to_table(&self) -> String {
        let p = self.params;
        let mut out = String::new();
        let _ = writeln!(
            out,
            "BPIR run: N={} M={} T={} B={} U={} q={} seed={}",
            p.n, p.m, p.t, p.b, p.u, p.q, p.seed
        );
        let _ = writeln!(
            out,
            "regime: {:?}; adversary: {}; desired: {:?}",
            self.rate.regime, self.adversary, self.desired
        );
        let _ = writeln!(
            out,
            "decode: {}/{} exact; identification: {}/{} exact",
            self.successes, self.attempts, self.identification_exact, self.attempts
        );
        let _ = writeln!(
            out,
            "rate:     {}/{} = {}",
            self.rate.rate.numer(),
            self.rate.rate.denom(),
            rational_to_decimal(&self.rate.rate, 6)
        );
        let _ = writeln!(
            out,
            "capacity: {}/{} = {} ({})",
            self.rate.capacity.numer(),
            self.rate.capacity.denom(),
            rational_to_decimal(&self.rate.capacity, 6),
            if self.rate.matches { "match" } else { "MISMATCH" }
        );
        for l in &self.layer_usage {
            let _ = writeln!(
                out,
                "layer {:<8} worst errors {} of budget {}",
                l.layer, l.max_errors, l.budget
            );
        }
        out
    }

    pub fn to_csv(&self) -> String {
        let p = self.params;
        let mut out = String::from(
            "n,m,t,b,u,q,seed,adversary,attempts,successes,identification_exact,L,D,R,R_decimal,C,C_decimal,match\n",
        );
        let _ = writeln!(
            out,
            "{},{},{},{},{},{},{},{},{},{},{},{},{},{}/{},{},{}/{},{},{}",
            p.n,
            p.m,
            p.t,
            p.b,
            p.u,
            p.q,
            p.seed,
            self.adversary,
            self.attempts,
            self.successes,
            self.identification_exact,
            self.rate.message_len,
            self.rate.download,
            self.rate.rate.numer(),
            self.rate.rate.denom(),
            rational_to_decimal(&self.rate.rate, 6),
            self.rate.capacity.numer(),
            self.rate.capacity.denom(),
            rational_to_decimal(&self.rate.capacity, 6),
            self.rate.matches,
        );
        out
    }
}

fn parse_range(s: &str) -> Result<(usize, usize), CliError> {
    let parts: Vec<&str> = if s.contains("..") {
        s.splitn(2, "..").collect()
    } else {
        s.splitn(2, ':').collect()
    };
    if parts.len() != 2 {
        return Err(CliError::Config(format!(
            "bad range {s:?}; expected lo:hi"
        )));
    }
    let lo = parts[0]
        .parse()
        .map_err(|_| CliError::Config(format!("bad range bound {:?}", parts[0])))?;
    let hi = parts[1]
        .parse()
        .map_err(|_| CliError::Config(format!("bad range bound {:?}", parts[1])))?;
    if lo > hi {
        return Err(CliError::Config(format!("empty range {s:?}")));
    }
    Ok((lo, hi))
}

/// Entry point used by the binary; returns the process exit code.
pub fn main_entry() -> i32 {
    let cli = match Cli::try_parse() {
        Ok(cli) => cli,
        Err(e) => {
            // clap renders its own help/usage text.
            let _ = e.print();
            return if e.use_stderr() { 2 } else { 0 };
        }
    };
    match dispatch(&cli) {
        Ok(output) => {
            print!("{output}");
            0
        }
        Err(e) => {
            eprintln!("error: {e}");
            exit_code_for(&e)
        }
    }
}

fn dispatch(cli: &Cli) -> Result<String, CliError> {
    let mut out = String::new();

    if cli.sweep_capacity {
        let t = cli.t.ok_or_else(|| CliError::Config("--sweep-capacity needs --t".into()))?;
        let m = cli.m.ok_or_else(|| CliError::Config("--sweep-capacity needs --m".into()))?;
        let b_list = cli.b_list.clone().unwrap_or_else(|| vec![cli.b.unwrap_or(0)]);
        let range = parse_range(cli.n_range.as_deref().unwrap_or("5:20"))?;
        out.push_str("b,n,regime,C,C_decimal\n");
        for row in sweep_capacity(t, m, &b_list, range) {
            let _ = writeln!(
                out,
                "{},{},{:?},{}/{},{}",
                row.b,
                row.n,
                row.regime,
                row.capacity.numer(),
                row.capacity.denom(),
                rational_to_decimal(&row.capacity, 6)
            );
        }
        return Ok(out);
    }

    if cli.sweep_gamma {
        let t = cli.t.ok_or_else(|| CliError::Config("--sweep-gamma needs --t".into()))?;
        let m = cli.m.ok_or_else(|| CliError::Config("--sweep-gamma needs --m".into()))?;
        let gammas: Vec<Rational> = (0..=9)
            .map(|i| Rational::new(i.into(), 20.into()))
            .collect();
        out.push_str("gamma,n,b,C_decimal,asymptote\n");
        for row in sweep_gamma(cli.gamma_n, m, t, &gammas)? {
            let _ = writeln!(
                out,
                "{}/{},{},{},{},{}",
                row.gamma.numer(),
                row.gamma.denom(),
                row.n,
                row.b,
                rational_to_decimal(&row.capacity, 6),
                rational_to_decimal(&row.asymptote, 6)
            );
        }
        return Ok(out);
    }

    let config = validate_and_load(cli)?;
    let started = std::time::Instant::now();

    if config.dump_queries {
        let desired = match config.desired {
            DesiredChoice::Index(i) => i,
            DesiredChoice::SweepAll => 0,
        };
        let plan = build_plan_skeleton(&config.params, desired)?;
        out.push_str(&dump_query_table(&plan)?);
    }

    if config.audit_privacy {
        let desired = match config.desired {
            DesiredChoice::Index(i) => i,
            DesiredChoice::SweepAll => 0,
        };
        let plan = build_plan(&config.params, desired)?;
        let subsets = all_t_subsets(config.params.n, config.params.t);
        let mut all_pass = true;
        for subset in &subsets {
            let audit = privacy_rank_audit(&plan, subset)?;
            all_pass &= audit.pass;
            let shown: Vec<usize> = subset.iter().map(|d| d + 1).collect();
            let _ = writeln!(
                out,
                "audit T-subset {:?}: counts {:?} ranks {:?} expected {} -> {}",
                shown,
                audit.per_message_counts,
                audit.per_message_ranks,
                audit.expected_rank,
                if audit.pass { "pass" } else { "FAIL" }
            );
        }
        if !all_pass {
            print!("{out}");
            return Err(CliError::Audit("privacy rank audit failed".into()));
        }
        let _ = writeln!(out, "privacy rank audit: {} subsets pass", subsets.len());
    }

    if config.probe_confusability {
        let report = confusability_probe(&config.params, config.trials)?;
        let _ = writeln!(
            out,
            "confusability probe: {} pairs, {} collisions",
            report.pairs, report.collisions
        );
        if report.collisions > 0 {
            print!("{out}");
            return Err(CliError::Audit(format!(
                "confusability probe found {} collisions",
                report.collisions
            )));
        }
    }

    if config.run_trials {
        let report = run(&config)?;
        match config.emit {
            Emit::Table => out.push_str(&report.to_table()),
            Emit::Json => {
                let _ = writeln!(out, "{}", serde_json::to_string_pretty(&report.to_json())?);
            }
            Emit::Csv => out.push_str(&report.to_csv()),
        }
    }

    eprintln!("elapsed: {} ms", started.elapsed().as_millis());
    Ok(out)
}
