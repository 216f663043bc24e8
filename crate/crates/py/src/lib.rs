//! Python bindings: instances, relaxation solving, rounding simulations,
//! and the exact oracle, driven in-process from Python.

use budget_assign::colgen::{solve_relaxation, LpMode, SolveLimits};
use budget_assign::exact;
use budget_assign::gen::{
    self, BudgetSpec, GenParams, GridRlppParams, MaxKCoverInstance, WelfareRule,
};
use budget_assign::harness::{self, RunOptions};
use budget_assign::model::{self, scale_budget};
use budget_assign::rounding::Algorithm;
use pyo3::exceptions::PyValueError;
use pyo3::prelude::*;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use std::str::FromStr;
use std::time::Duration;

fn value_err(e: impl std::fmt::Display) -> PyErr {
    PyValueError::new_err(e.to_string())
}

/// A problem instance: bins with capacities and opening costs, items with
/// weight intervals, rewards, assignment costs, and one budget.
#[pyclass(name = "Instance")]
struct PyInstance {
    inner: model::Instance,
}

#[pymethods]
impl PyInstance {
    #[staticmethod]
    fn from_json(text: &str) -> PyResult<Self> {
        Ok(PyInstance { inner: model::Instance::from_json(text).map_err(value_err)? })
    }

    fn to_json(&self) -> String {
        self.inner.to_json()
    }

    /// Invariant violations as messages; empty means well-formed.
    fn validate(&self) -> Vec<String> {
        self.inner.validate()
    }

    #[getter]
    fn num_bins(&self) -> usize {
        self.inner.num_bins()
    }

    #[getter]
    fn num_items(&self) -> usize {
        self.inner.num_items()
    }

    #[getter]
    fn budget(&self) -> f64 {
        self.inner.budget()
    }

    fn set_budget(&mut self, budget: f64) {
        self.inner.set_budget(budget);
    }

    /// Budget in units of the most expensive configuration.
    fn normalized_budget(&self) -> PyResult<f64> {
        Ok(scale_budget(&self.inner).map_err(value_err)?.normalized_budget())
    }

    fn __repr__(&self) -> String {
        format!(
            "Instance(bins={}, items={}, budget={})",
            self.inner.num_bins(),
            self.inner.num_items(),
            self.inner.budget()
        )
    }
}

/// Fractional solution of the configuration LP.
#[pyclass(name = "LpSolution")]
struct PyLpSolution {
    #[pyo3(get)]
    lp_value: f64,
    #[pyo3(get)]
    converged: bool,
    #[pyo3(get)]
    budget_used: f64,
    /// `(bin, items, cost, value)` per column.
    #[pyo3(get)]
    columns: Vec<(usize, Vec<usize>, f64, f64)>,
}

/// Aggregates of a rounding simulation.
#[pyclass(name = "SimulationStats")]
struct PySimulationStats {
    #[pyo3(get)]
    algorithm: String,
    #[pyo3(get)]
    lp_value: f64,
    #[pyo3(get)]
    mean: f64,
    #[pyo3(get)]
    std_error: f64,
    #[pyo3(get)]
    discard_rate: f64,
    #[pyo3(get)]
    objectives: Vec<f64>,
    #[pyo3(get)]
    paths: Vec<String>,
    #[pyo3(get)]
    best_so_far: Vec<f64>,
}

#[pyfunction]
#[pyo3(signature = (bins, items, seed, budget_ratio=4.0, uniform_rewards=false, zero_assign_costs=false))]
fn generate_random(
    bins: usize,
    items: usize,
    seed: u64,
    budget_ratio: f64,
    uniform_rewards: bool,
    zero_assign_costs: bool,
) -> PyResult<PyInstance> {
    let params = GenParams {
        bins,
        items,
        assign_cost: if zero_assign_costs { (0.0, 0.0) } else { (0.0, 0.5) },
        uniform_rewards,
        budget: BudgetSpec::TargetRatio(budget_ratio),
        ..GenParams::default()
    };
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    Ok(PyInstance { inner: gen::random_instance(&params, &mut rng).map_err(value_err)? })
}

/// Encodes a max-k-cover family in the core model; the exact optimum equals
/// the cover optimum.
#[pyfunction]
fn max_k_cover_instance(elements: usize, sets: Vec<Vec<usize>>, k: usize) -> PyResult<PyInstance> {
    let mkc = MaxKCoverInstance::new(elements, sets, k).map_err(value_err)?;
    Ok(PyInstance { inner: gen::from_max_k_cover(&mkc) })
}

/// Random grid line-planning instance, mapped onto the core model.
#[pyfunction]
#[pyo3(signature = (width, height, lines, trips, budget, seed, capacity=4, welfare="car-miles"))]
#[allow(clippy::too_many_arguments)]
fn line_planning_grid(
    width: usize,
    height: usize,
    lines: usize,
    trips: usize,
    budget: f64,
    seed: u64,
    capacity: u32,
    welfare: &str,
) -> PyResult<PyInstance> {
    let welfare = match welfare {
        "binary" => WelfareRule::Binary { walk_radius: 0.0 },
        "car-miles" => WelfareRule::CarMilesSaved,
        other => return Err(value_err(format!("unknown welfare rule '{other}'"))),
    };
    let params = GridRlppParams {
        width,
        height,
        lines,
        trips,
        bus_capacity: capacity,
        budget,
        welfare,
        ..GridRlppParams::default()
    };
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let rlpp = gen::rlpp_grid(&params, &mut rng).map_err(value_err)?;
    Ok(PyInstance { inner: gen::rlpp_build(&rlpp).map_err(value_err)? })
}

/// Solves the configuration-LP relaxation by column generation.
/// `mode` is `"exact"` or `"scaled"` (the epsilon-shrunk budget).
#[pyfunction]
#[pyo3(signature = (instance, mode="exact", epsilon=0.25, max_rounds=None, timeout_secs=None))]
fn solve_lp(
    instance: &PyInstance,
    mode: &str,
    epsilon: f64,
    max_rounds: Option<usize>,
    timeout_secs: Option<f64>,
) -> PyResult<PyLpSolution> {
    let mode = match mode {
        "exact" => LpMode::Exact,
        "scaled" => LpMode::Scaled { epsilon },
        other => return Err(value_err(format!("unknown mode '{other}'"))),
    };
    let mut limits = SolveLimits::default();
    if let Some(n) = max_rounds {
        limits.max_rounds = n;
    }
    if let Some(secs) = timeout_secs {
        limits.timeout = Some(Duration::from_secs_f64(secs));
    }
    let scaled = scale_budget(&instance.inner).map_err(value_err)?;
    let frac = solve_relaxation(&scaled, mode, &limits).map_err(value_err)?;
    Ok(PyLpSolution {
        lp_value: frac.lp_value,
        converged: frac.converged,
        budget_used: frac.budget_used,
        columns: frac
            .columns
            .iter()
            .zip(&frac.values)
            .map(|(c, &x)| (c.bin, c.items.clone(), c.cost, x))
            .collect(),
    })
}

/// Runs seeded rounding trials of one algorithm
/// (`alg1|alg2|baseline|alg6|alg3|alg4`) and returns the statistics.
#[pyfunction]
#[pyo3(signature = (instance, alg, trials, seed, epsilon=0.25, shared_randomness=true))]
fn simulate(
    instance: &PyInstance,
    alg: &str,
    trials: u64,
    seed: u64,
    epsilon: f64,
    shared_randomness: bool,
) -> PyResult<PySimulationStats> {
    let algorithm = Algorithm::from_str(alg).map_err(value_err)?;
    let opts = RunOptions {
        epsilon,
        trials,
        seed,
        shared_streams: shared_randomness,
        ..RunOptions::default()
    };
    let stats = harness::simulate(&instance.inner, algorithm, &opts).map_err(value_err)?;
    Ok(PySimulationStats {
        algorithm: algorithm.cli_name().to_string(),
        lp_value: stats.lp_value,
        mean: stats.mean,
        std_error: stats.std_error,
        discard_rate: stats.discard_rate,
        objectives: stats.records.iter().map(|r| r.objective).collect(),
        paths: stats.records.iter().map(|r| r.path.as_str().to_string()).collect(),
        best_so_far: stats.best_so_far,
    })
}

/// Brute-force optimum of a tiny instance:
/// `(objective, open, assigned_items_per_bin)`.
#[pyfunction]
fn brute_force(instance: &PyInstance) -> PyResult<(f64, Vec<bool>, Vec<Vec<usize>>)> {
    let sol = exact::brute_force(&instance.inner).map_err(value_err)?;
    Ok((sol.objective, sol.open, sol.assigned))
}

#[pymodule]
fn budget_assign_py(m: &Bound<'_, PyModule>) -> PyResult<()> {
    m.add_class::<PyInstance>()?;
    m.add_class::<PyLpSolution>()?;
    m.add_class::<PySimulationStats>()?;
    m.add_function(wrap_pyfunction!(generate_random, m)?)?;
    m.add_function(wrap_pyfunction!(max_k_cover_instance, m)?)?;
    m.add_function(wrap_pyfunction!(line_planning_grid, m)?)?;
    m.add_function(wrap_pyfunction!(solve_lp, m)?)?;
    m.add_function(wrap_pyfunction!(simulate, m)?)?;
    m.add_function(wrap_pyfunction!(brute_force, m)?)?;
    Ok(())
}
