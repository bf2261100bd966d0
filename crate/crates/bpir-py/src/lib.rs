//! Python bindings for the retrieval library.
//!
//! The surface mirrors the library: capacity formulas, plan construction,
//! a one-call simulated retrieval, and the privacy/confusability audits.
//! Message and database indices are 0-based here.

use std::collections::BTreeSet;

use num_bigint::BigInt;
use pyo3::exceptions::{PyRuntimeError, PyValueError};
use pyo3::prelude::*;
use pyo3::types::PyDict;

use bpir_core::analysis;
use bpir_core::field::{PrimeField, SeededRng};
use bpir_core::retrieve;
use bpir_core::scheme;
use bpir_core::sim;

fn value_err<E: std::fmt::Display>(e: E) -> PyErr {
    PyValueError::new_err(e.to_string())
}

fn runtime_err<E: std::fmt::Display>(e: E) -> PyErr {
    PyRuntimeError::new_err(e.to_string())
}

fn regime_name(r: scheme::Regime) -> &'static str {
    match r {
        scheme::Regime::Full => "full",
        scheme::Regime::Trivial => "trivial",
        scheme::Regime::Infeasible => "infeasible",
    }
}

/// System parameters (N databases, M messages, T-collusion, B Byzantine,
/// U unresponsive, field modulus q, master seed).
#[pyclass(frozen)]
#[derive(Clone)]
struct Params {
    inner: scheme::Params,
}

#[pymethods]
impl Params {
    #[new]
    #[pyo3(signature = (n, m, t, b, u=0, q=65537, seed=0))]
    fn new(n: usize, m: usize, t: usize, b: usize, u: usize, q: u64, seed: u64) -> PyResult<Self> {
        Ok(Params {
            inner: scheme::Params::with_all(n, m, t, b, u, q, seed).map_err(value_err)?,
        })
    }

    #[getter]
    fn n(&self) -> usize {
        self.inner.n
    }

    #[getter]
    fn m(&self) -> usize {
        self.inner.m
    }

    #[getter]
    fn t(&self) -> usize {
        self.inner.t
    }

    #[getter]
    fn b(&self) -> usize {
        self.inner.b
    }

    #[getter]
    fn u(&self) -> usize {
        self.inner.u
    }

    #[getter]
    fn q(&self) -> u64 {
        self.inner.q
    }

    #[getter]
    fn seed(&self) -> u64 {
        self.inner.seed
    }

    fn regime(&self) -> &'static str {
        regime_name(self.inner.regime())
    }

    fn __repr__(&self) -> String {
        let p = self.inner;
        format!(
            "Params(n={}, m={}, t={}, b={}, u={}, q={}, seed={})",
            p.n, p.m, p.t, p.b, p.u, p.q, p.seed
        )
    }
}

/// A built query plan.
#[pyclass(frozen)]
struct QueryPlan {
    inner: scheme::QueryPlan,
}

#[pymethods]
impl QueryPlan {
    #[getter]
    fn message_len(&self) -> u64 {
        self.inner.dims.message_len
    }

    #[getter]
    fn download(&self) -> u64 {
        self.inner.dims.download
    }

    #[getter]
    fn desired(&self) -> usize {
        self.inner.desired
    }

    fn slots_of(&self, db: usize) -> PyResult<usize> {
        if db >= self.inner.params.n {
            return Err(value_err(format!("database {db} out of range")));
        }
        Ok(self.inner.slots_of(db))
    }

    fn dump_query_table(&self) -> PyResult<String> {
        scheme::dump_query_table(&self.inner).map_err(value_err)
    }

    /// Exact rate accounting: L, D, R and C as integer fractions.
    fn measure_rate<'py>(&self, py: Python<'py>) -> PyResult<Bound<'py, PyDict>> {
        let report = analysis::measure_rate(&self.inner);
        let out = PyDict::new(py);
        out.set_item("regime", regime_name(report.regime))?;
        out.set_item("L", report.message_len)?;
        out.set_item("D", report.download)?;
        out.set_item("R", (report.rate.numer().clone(), report.rate.denom().clone()))?;
        out.set_item(
            "C",
            (report.capacity.numer().clone(), report.capacity.denom().clone()),
        )?;
        out.set_item("match", report.matches)?;
        Ok(out)
    }
}

/// Builds the general-scheme plan for retrieving message `desired`.
#[pyfunction]
fn build_plan(params: &Params, desired: usize) -> PyResult<QueryPlan> {
    Ok(QueryPlan {
        inner: scheme::build_plan(&params.inner, desired).map_err(value_err)?,
    })
}

/// Builds the trivial-regime plan (full copies, majority decoding).
#[pyfunction]
fn build_trivial_plan(params: &Params) -> PyResult<QueryPlan> {
    Ok(QueryPlan {
        inner: scheme::build_trivial_plan(&params.inner).map_err(value_err)?,
    })
}

/// Capacity as an exact fraction `(numerator, denominator)`.
#[pyfunction]
fn capacity(n: usize, m: usize, t: usize, b: usize) -> (BigInt, BigInt) {
    let (_, c) = analysis::capacity(n, m, t, b);
    (c.numer().clone(), c.denom().clone())
}

/// Regime classification: "full", "trivial" or "infeasible".
#[pyfunction]
#[pyo3(signature = (n, m, t, b, u=0))]
fn regime(n: usize, m: usize, t: usize, b: usize, u: usize) -> PyResult<&'static str> {
    let p = scheme::Params::with_all(n, m, t, b, u, 65537, 0).map_err(value_err)?;
    Ok(regime_name(p.regime()))
}

/// Capacity with unresponsive databases, as an exact fraction.
#[pyfunction]
fn capacity_unresponsive(
    n: usize,
    m: usize,
    t: usize,
    b: usize,
    u: usize,
) -> PyResult<(BigInt, BigInt)> {
    let c = analysis::capacity_unresponsive(n, m, t, b, u).map_err(value_err)?;
    Ok((c.numer().clone(), c.denom().clone()))
}

/// One simulated retrieval: builds the plan, samples messages, runs the
/// adversary, decodes, and reports whether the decoded message equals the
/// ground truth and which databases were identified as Byzantine.
#[pyfunction]
#[pyo3(signature = (params, desired, adversary="worst", byzantine=None, unresponsive=None))]
fn run_trial<'py>(
    py: Python<'py>,
    params: &Params,
    desired: usize,
    adversary: &str,
    byzantine: Option<Vec<usize>>,
    unresponsive: Option<Vec<usize>>,
) -> PyResult<Bound<'py, PyDict>> {
    let p = params.inner;
    let plan = if p.regime() == scheme::Regime::Trivial {
        let mut plan = scheme::build_trivial_plan(&p).map_err(value_err)?;
        plan.desired = desired;
        plan
    } else {
        scheme::build_plan(&p, desired).map_err(value_err)?
    };
    let field = PrimeField::new(p.q).map_err(value_err)?;
    let mut msg_rng = SeededRng::derived(p.seed, 2);
    let truth = sim::MessageSet::sample(p.m, plan.dims.message_len as usize, field, &mut msg_rng);

    let mut pick = SeededRng::derived(p.seed, 3);
    let byz: Vec<usize> = match byzantine {
        Some(list) => list,
        None => pick.sample_distinct(p.n, p.b),
    };
    if byz.len() > p.b || byz.iter().any(|&db| db >= p.n) {
        return Err(value_err(format!("byzantine set {byz:?} invalid for B={}", p.b)));
    }
    let miss: Vec<usize> = match unresponsive {
        Some(list) => list,
        None => {
            let taken: BTreeSet<usize> = byz.iter().copied().collect();
            let mut free: Vec<usize> = (0..p.n).filter(|db| !taken.contains(db)).collect();
            pick.shuffle(&mut free);
            free.into_iter().take(p.u).collect()
        }
    };

    let behavior = match adversary {
        "none" => None,
        "worst" => Some(sim::Behavior::AnswerWorst),
        "content" => {
            let mut alt_rng = SeededRng::derived(p.seed, 5);
            Some(sim::Behavior::ContentSwap(sim::MessageSet::sample(
                p.m,
                plan.dims.message_len as usize,
                field,
                &mut alt_rng,
            )))
        }
        other => {
            if let Some(rate) = other.strip_prefix("random:") {
                let rate: f64 = rate.parse().map_err(value_err)?;
                Some(sim::Behavior::AnswerRandom(rate))
            } else {
                return Err(value_err(format!("unknown adversary {other:?}")));
            }
        }
    };
    let cfg = match behavior {
        Some(b) => sim::AdversaryConfig::uniform(byz.iter().copied(), b, p.seed),
        None => sim::AdversaryConfig::honest(),
    }
    .with_unresponsive(miss.iter().copied());

    let answers = sim::collect(&plan, &truth, &cfg).map_err(runtime_err)?;
    let result = retrieve::retrieve(&plan, &answers).map_err(runtime_err)?;

    let out = PyDict::new(py);
    out.set_item("success", result.message == truth.messages[desired])?;
    out.set_item(
        "identified",
        result.identified_byzantine.iter().copied().collect::<Vec<usize>>(),
    )?;
    out.set_item("byzantine", cfg.byzantine_set().into_iter().collect::<Vec<usize>>())?;
    out.set_item("unresponsive", miss)?;
    out.set_item("download", result.download_actual)?;
    out.set_item(
        "layer_errors",
        result
            .layer_tallies
            .iter()
            .map(|t| (t.layer.clone(), t.errors))
            .collect::<Vec<(String, usize)>>(),
    )?;
    Ok(out)
}

/// Runs the collusion rank audit over every T-subset; returns overall pass,
/// the expected rank, and the number of subsets checked.
#[pyfunction]
fn privacy_rank_audit<'py>(
    py: Python<'py>,
    params: &Params,
    desired: usize,
) -> PyResult<Bound<'py, PyDict>> {
    let plan = scheme::build_plan(&params.inner, desired).map_err(value_err)?;
    let subsets = analysis::all_t_subsets(params.inner.n, params.inner.t);
    let mut pass = true;
    let mut expected = 0usize;
    for subset in &subsets {
        let audit = analysis::privacy_rank_audit(&plan, subset).map_err(value_err)?;
        expected = audit.expected_rank;
        pass &= audit.pass;
    }
    let out = PyDict::new(py);
    out.set_item("pass", pass)?;
    out.set_item("expected_rank", expected)?;
    out.set_item("subsets", subsets.len())?;
    Ok(out)
}

/// Counts answer collisions between distinct message sets on
/// `(N - 2B)`-subsets; any nonzero count falsifies the cut-set argument.
#[pyfunction]
fn confusability_probe(params: &Params, pairs: u64) -> PyResult<u64> {
    Ok(analysis::confusability_probe(&params.inner, pairs)
        .map_err(value_err)?
        .collisions)
}

#[pymodule]
fn bpir(m: &Bound<'_, PyModule>) -> PyResult<()> {
    m.add_class::<Params>()?;
    m.add_class::<QueryPlan>()?;
    m.add_function(wrap_pyfunction!(capacity, m)?)?;
    m.add_function(wrap_pyfunction!(capacity_unresponsive, m)?)?;
    m.add_function(wrap_pyfunction!(regime, m)?)?;
    m.add_function(wrap_pyfunction!(build_plan, m)?)?;
    m.add_function(wrap_pyfunction!(build_trivial_plan, m)?)?;
    m.add_function(wrap_pyfunction!(run_trial, m)?)?;
    m.add_function(wrap_pyfunction!(privacy_rank_audit, m)?)?;
    m.add_function(wrap_pyfunction!(confusability_probe, m)?)?;
    Ok(())
}
