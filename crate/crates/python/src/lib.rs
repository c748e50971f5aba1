//! Python bindings: instances, radii, the Laplace mechanism, the tree
//! counter and full runs driven by a TOML config string.

use pyo3::exceptions::{PyRuntimeError, PyValueError};
use pyo3::prelude::*;
use pyo3::types::PyDict;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

use privcsb::env::{make_coverage, make_kpath, make_public_arm};
use privcsb::harness::output::{csv_string, rows_from_results};
use privcsb::harness::RunConfig;
use privcsb::{policy, privacy, Error, InstanceSpec, LaplaceScale, SuperArm};

fn to_py(e: Error) -> PyErr {
    if e.is_config() {
        PyValueError::new_err(e.to_string())
    } else {
        PyRuntimeError::new_err(e.to_string())
    }
}

/// Problem instance: decision set, arm means and reward function.
#[pyclass(name = "Instance", frozen)]
struct PyInstance {
    inner: InstanceSpec,
}

#[pymethods]
impl PyInstance {
    #[staticmethod]
    #[pyo3(signature = (m, k, delta, b1 = 1.0))]
    fn kpath(m: usize, k: usize, delta: f64, b1: f64) -> PyResult<Self> {
        Ok(PyInstance {
            inner: make_kpath(m, k, delta, b1).map_err(to_py)?,
        })
    }

    #[staticmethod]
    #[pyo3(signature = (m, k, delta, b1 = 1.0))]
    fn public_arm(m: usize, k: usize, delta: f64, b1: f64) -> PyResult<Self> {
        Ok(PyInstance {
            inner: make_public_arm(m, k, delta, b1).map_err(to_py)?,
        })
    }

    #[staticmethod]
    fn coverage(
        num_arms: usize,
        num_items: usize,
        edges: Vec<(usize, usize)>,
        k: usize,
        mu: Vec<f64>,
    ) -> PyResult<Self> {
        Ok(PyInstance {
            inner: make_coverage(num_arms, num_items, &edges, k, mu).map_err(to_py)?,
        })
    }

    #[getter]
    fn name(&self) -> &str {
        self.inner.name()
    }

    #[getter]
    fn m(&self) -> usize {
        self.inner.m()
    }

    #[getter]
    fn k(&self) -> usize {
        self.inner.k()
    }

    #[getter]
    fn mu(&self) -> Vec<f64> {
        self.inner.mu().to_vec()
    }

    /// Feasible super arms as sorted arm-id lists.
    fn super_arms(&self) -> PyResult<Vec<Vec<usize>>> {
        let members = self.inner.decision_set().members().map_err(to_py)?;
        Ok(members.iter().map(|s| s.arms().to_vec()).collect())
    }

    fn expected_reward(&self, arms: Vec<usize>) -> PyResult<f64> {
        let s = SuperArm::new(arms).map_err(to_py)?;
        self.inner
            .reward()
            .expected_reward(&s, self.inner.mu())
            .map_err(to_py)
    }

    /// `(opt, argmax)` with ties broken lexicographically.
    fn opt_value(&self) -> PyResult<(f64, Vec<usize>)> {
        let (v, s) = self.inner.opt_value().map_err(to_py)?;
        Ok((v, s.arms().to_vec()))
    }

    /// Dict with `alpha`, `opt`, `delta_min`, `delta_max` (None for arms in
    /// no bad super arm) and `delta`.
    #[pyo3(signature = (alpha = 1.0))]
    fn gap_profile<'py>(&self, py: Python<'py>, alpha: f64) -> PyResult<Bound<'py, PyDict>> {
        let g = self.inner.gap_profile(alpha).map_err(to_py)?;
        let d = PyDict::new(py);
        d.set_item("alpha", g.alpha)?;
        d.set_item("opt", g.opt)?;
        d.set_item("delta_min", g.delta_min)?;
        d.set_item("delta_max", g.delta_max)?;
        d.set_item("delta", g.delta)?;
        Ok(d)
    }

    fn __repr__(&self) -> String {
        format!("Instance({})", self.inner.name())
    }
}

/// Binary-tree prefix-sum counter with Laplace noise per node. `b = None`
/// disables the noise.
#[pyclass(name = "TreeAggregator")]
struct PyTree {
    inner: privacy::TreeAggregator,
    rng: ChaCha8Rng,
}

#[pymethods]
impl PyTree {
    #[new]
    #[pyo3(signature = (horizon, b = None, seed = 0))]
    fn new(horizon: usize, b: Option<f64>, seed: u64) -> PyResult<Self> {
        let inner = match b {
            Some(b) => {
                let scale = LaplaceScale::new(b).map_err(to_py)?;
                privacy::TreeAggregator::new(horizon, scale)
            }
            None => privacy::TreeAggregator::noiseless(horizon),
        }
        .map_err(to_py)?;
        Ok(PyTree {
            inner,
            rng: ChaCha8Rng::seed_from_u64(seed),
        })
    }

    fn insert(&mut self, value: f64) -> PyResult<()> {
        self.inner.insert(value, &mut self.rng).map_err(to_py)
    }

    /// Noisy sum of the first `t` values.
    fn query(&self, t: usize) -> PyResult<f64> {
        self.inner.query(t).map_err(to_py)
    }

    fn exact_prefix_sum(&self, t: usize) -> PyResult<f64> {
        self.inner.exact_prefix_sum(t).map_err(to_py)
    }

    #[getter]
    fn count(&self) -> usize {
        self.inner.count()
    }

    #[getter]
    fn draws(&self) -> u64 {
        self.inner.draws()
    }

    #[staticmethod]
    fn nodes_touched(t: usize) -> usize {
        privacy::TreeAggregator::nodes_touched(t)
    }
}

#[pyfunction]
fn radius_cucb(t_i: u64, horizon: u64) -> f64 {
    policy::radius_cucb(t_i, horizon)
}

#[pyfunction]
fn radius_ldp1(t_i: u64, horizon: u64, k: usize, epsilon: f64) -> f64 {
    policy::radius_ldp1(t_i, horizon, k, epsilon)
}

#[pyfunction]
fn radius_ldp2(t_i: u64, horizon: u64, epsilon: f64) -> f64 {
    policy::radius_ldp2(t_i, horizon, epsilon)
}

#[pyfunction]
fn radius_dp(t_i: u64, horizon: u64, m: usize, k: usize, epsilon: f64) -> f64 {
    policy::radius_dp(t_i, horizon, m, k, epsilon)
}

/// `n` Laplace(0, b) draws from a seeded stream.
#[pyfunction]
#[pyo3(signature = (b, n, seed = 0))]
fn sample_laplace(b: f64, n: usize, seed: u64) -> PyResult<Vec<f64>> {
    let scale = LaplaceScale::new(b).map_err(to_py)?;
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    Ok((0..n)
        .map(|_| privacy::sample_laplace(scale, &mut rng))
        .collect())
}

/// Runs one TOML config. Returns a dict with `checkpoints` as
/// `(t, cum_regret, cum_reward)` tuples, `final_regret`, `pull_counts`,
/// `opt`, `alpha` and the rendered `csv`.
#[pyfunction]
#[pyo3(signature = (config, seed = None))]
fn run<'py>(py: Python<'py>, config: &str, seed: Option<u64>) -> PyResult<Bound<'py, PyDict>> {
    let mut cfg = RunConfig::from_toml_str(config).map_err(to_py)?;
    if let Some(s) = seed {
        cfg.seed = s;
    }
    let result = py.detach(|| privcsb::harness::run(&cfg)).map_err(to_py)?;
    let csv = csv_string(&rows_from_results(std::slice::from_ref(&result))).map_err(to_py)?;
    let d = PyDict::new(py);
    let cps: Vec<(u64, f64, f64)> = result
        .checkpoints
        .iter()
        .map(|c| (c.t, c.cum_regret, c.cum_reward))
        .collect();
    d.set_item("algorithm", cfg.algorithm.name())?;
    d.set_item("instance", &result.instance)?;
    d.set_item("checkpoints", cps)?;
    d.set_item("final_regret", result.final_regret())?;
    d.set_item("pull_counts", &result.pull_counts)?;
    d.set_item("opt", result.opt)?;
    d.set_item("alpha", result.alpha)?;
    d.set_item("csv", csv)?;
    Ok(d)
}

#[pymodule]
fn privcsb_py(m: &Bound<'_, PyModule>) -> PyResult<()> {
    m.add_class::<PyInstance>()?;
    m.add_class::<PyTree>()?;
    m.add_function(wrap_pyfunction!(radius_cucb, m)?)?;
    m.add_function(wrap_pyfunction!(radius_ldp1, m)?)?;
    m.add_function(wrap_pyfunction!(radius_ldp2, m)?)?;
    m.add_function(wrap_pyfunction!(radius_dp, m)?)?;
    m.add_function(wrap_pyfunction!(sample_laplace, m)?)?;
    m.add_function(wrap_pyfunction!(run, m)?)?;
    Ok(())
}
