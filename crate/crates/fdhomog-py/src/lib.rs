//! Python bindings for the functional-data homogeneity tests.
//!
//! Exposes the main types and operations: sample construction, simulation,
//! CSV I/O, the three functional depths, DD-plots, the bootstrap-t test,
//! and the deepest-curve baseline test.
//!
//! ```python
//! import fdhomog_py as fd
//!
//! a = fd.simulate_model(0, n=50, grid_size=30, seed=1)
//! b = fd.simulate_model(1, n=50, grid_size=30, seed=2)
//! res = fd.bootstrap_test(a, b, "fd2", seed=3)
//! print(res.reject, res.p_adjusted)
//! ```

use pyo3::exceptions::PyValueError;
use pyo3::prelude::*;

use fdhomog::curves::{
    self, make_grid, simulate_sample, CsvLayout, FunctionalSample as RsSample, Grid, MeanFunction,
    ModelSpec,
};
use fdhomog::ddplot::{self, NullScheme, TestResult as RsTestResult};
use fdhomog::depth::{DepthConfig, Fd2Config, PairBudget, RpConfig, DEFAULT_NUM_PROJECTIONS};
use fdhomog::flores;
use fdhomog::halfspace;
use fdhomog::plot::render_ddplot_svg;
use fdhomog::sim::builtin_model;
use fdhomog::{Error, RngSeed};

// same internal fan-out tags as the CLI
const TAG_RP_DIRECTIONS: u64 = 101;
const TAG_FD2_PAIRS: u64 = 102;

fn to_py_err(e: Error) -> PyErr {
    PyValueError::new_err(e.to_string())
}

/// A set of curves discretized on a shared grid.
#[pyclass(name = "FunctionalSample", from_py_object)]
#[derive(Clone)]
struct PySample {
    inner: RsSample,
}

#[pymethods]
impl PySample {
    /// Build a sample from grid points and one list of values per curve.
    #[new]
    #[pyo3(signature = (grid, rows, labels=None))]
    fn new(grid: Vec<f64>, rows: Vec<Vec<f64>>, labels: Option<Vec<String>>) -> PyResult<Self> {
        let grid = Grid::new(grid).map_err(to_py_err)?;
        let mut sample = RsSample::new(grid, rows).map_err(to_py_err)?;
        if let Some(labels) = labels {
            sample = sample.with_labels(labels).map_err(to_py_err)?;
        }
        Ok(PySample { inner: sample })
    }

    /// Parse a curve CSV file (header row of grid values, one curve per
    /// row, optional leading `label` column).
    #[staticmethod]
    fn from_csv(path: &str) -> PyResult<Self> {
        let inner = curves::load_sample_csv(path, CsvLayout::Auto).map_err(to_py_err)?;
        Ok(PySample { inner })
    }

    fn to_csv(&self, path: &str) -> PyResult<()> {
        curves::write_sample_csv(&self.inner, path).map_err(to_py_err)
    }

    /// Split a labeled sample into (curves matching `label`, the rest).
    fn split_by_label(&self, label: &str) -> PyResult<(PySample, PySample)> {
        let (hit, rest) = curves::split_by_label(&self.inner, label).map_err(to_py_err)?;
        Ok((PySample { inner: hit }, PySample { inner: rest }))
    }

    #[getter]
    fn grid(&self) -> Vec<f64> {
        self.inner.grid().points().to_vec()
    }

    #[getter]
    fn values(&self) -> Vec<Vec<f64>> {
        self.inner.curves().map(|c| c.to_vec()).collect()
    }

    #[getter]
    fn labels(&self) -> Option<Vec<String>> {
        self.inner.labels().map(|l| l.to_vec())
    }

    fn __len__(&self) -> usize {
        self.inner.len()
    }

    fn __repr__(&self) -> String {
        format!(
            "FunctionalSample(n={}, points={})",
            self.inner.len(),
            self.inner.num_points()
        )
    }
}

/// Outcome of a homogeneity test.
#[pyclass(name = "TestResult")]
struct PyTestResult {
    inner: RsTestResult,
}

#[pymethods]
impl PyTestResult {
    #[getter]
    fn method(&self) -> String {
        self.inner.method.clone()
    }

    #[getter]
    fn t0(&self) -> f64 {
        self.inner.t0
    }

    #[getter]
    fn t1(&self) -> Option<f64> {
        self.inner.t1
    }

    #[getter]
    fn p0(&self) -> f64 {
        self.inner.p0
    }

    #[getter]
    fn p1(&self) -> Option<f64> {
        self.inner.p1
    }

    #[getter]
    fn p_adjusted(&self) -> f64 {
        self.inner.p_adjusted
    }

    #[getter]
    fn reject(&self) -> bool {
        self.inner.reject
    }

    #[getter]
    fn alpha(&self) -> f64 {
        self.inner.alpha
    }

    #[getter]
    fn num_boot(&self) -> usize {
        self.inner.num_boot
    }

    #[getter]
    fn null_scheme(&self) -> String {
        self.inner.null_scheme.to_string()
    }

    fn to_json(&self) -> String {
        self.inner.to_json()
    }

    fn __repr__(&self) -> String {
        format!(
            "TestResult(method={:?}, reject={}, p_adjusted={})",
            self.inner.method, self.inner.reject, self.inner.p_adjusted
        )
    }
}

fn parse_depth(method: &str, num_projections: usize, seed: RngSeed) -> PyResult<DepthConfig> {
    match method {
        "fm" => Ok(DepthConfig::Fm),
        "rp" => Ok(DepthConfig::Rp(RpConfig {
            num_projections,
            direction_seed: seed.derive(TAG_RP_DIRECTIONS),
        })),
        "fd2" => Ok(DepthConfig::Fd2(Fd2Config {
            pair_budget: PairBudget::Auto,
            pair_seed: seed.derive(TAG_FD2_PAIRS),
        })),
        other => Err(PyValueError::new_err(format!(
            "unknown depth method {other:?} (expected fm, rp, or fd2)"
        ))),
    }
}

fn parse_scheme(name: &str) -> PyResult<NullScheme> {
    match name {
        "relabel" => Ok(NullScheme::Relabel),
        "literal-H*" | "literal-h-star" => Ok(NullScheme::LiteralHStar),
        other => Err(PyValueError::new_err(format!(
            "unknown null scheme {other:?} (expected relabel or literal-H*)"
        ))),
    }
}

/// Simulate `n` curves from one of the six builtin models on a uniform
/// grid over [0, 1].
#[pyfunction]
#[pyo3(signature = (model_id, n=50, grid_size=30, seed=0))]
fn simulate_model(model_id: u8, n: usize, grid_size: usize, seed: u64) -> PyResult<PySample> {
    let spec = builtin_model(model_id).map_err(to_py_err)?;
    let grid = make_grid(0.0, 1.0, grid_size).map_err(to_py_err)?;
    let inner = simulate_sample(&spec, n, &grid, RngSeed(seed)).map_err(to_py_err)?;
    Ok(PySample { inner })
}

/// Simulate from an explicit model: mean in {"peak32", "peak12"}, mean
/// shift `delta`, exponential covariance `amp * exp(-rate |t - s|)`.
#[pyfunction]
#[pyo3(signature = (mean, delta, amp, rate, n=50, grid_size=30, seed=0))]
#[allow(clippy::too_many_arguments)]
fn simulate(
    mean: &str,
    delta: f64,
    amp: f64,
    rate: f64,
    n: usize,
    grid_size: usize,
    seed: u64,
) -> PyResult<PySample> {
    let mean = match mean {
        "peak32" => MeanFunction::Peak32,
        "peak12" => MeanFunction::Peak12,
        other => {
            return Err(PyValueError::new_err(format!(
                "unknown mean {other:?} (expected peak32 or peak12)"
            )))
        }
    };
    let spec = ModelSpec { mean, delta, amp, rate };
    let grid = make_grid(0.0, 1.0, grid_size).map_err(to_py_err)?;
    let inner = simulate_sample(&spec, n, &grid, RngSeed(seed)).map_err(to_py_err)?;
    Ok(PySample { inner })
}

/// Per-curve depth of `eval`'s curves with respect to `reference`.
#[pyfunction]
#[pyo3(signature = (eval, reference, method="fm", num_projections=DEFAULT_NUM_PROJECTIONS, seed=0))]
fn depth(
    eval: &PySample,
    reference: &PySample,
    method: &str,
    num_projections: usize,
    seed: u64,
) -> PyResult<Vec<f64>> {
    let config = parse_depth(method, num_projections, RngSeed(seed))?;
    let d = config
        .evaluate(&eval.inner, &reference.inner)
        .map_err(to_py_err)?;
    Ok(d.values().to_vec())
}

/// Exact bivariate halfspace (Tukey) depth.
#[pyfunction]
fn halfspace_depth_2d(point: (f64, f64), cloud: Vec<(f64, f64)>) -> PyResult<f64> {
    halfspace::halfspace_depth_2d(point, &cloud).map_err(to_py_err)
}

/// DD-plot points: `(depth wrt f, depth wrt g)` for every pooled curve,
/// f's curves first.
#[pyfunction]
#[pyo3(signature = (f, g, method="fm", num_projections=DEFAULT_NUM_PROJECTIONS, seed=0))]
fn build_ddplot(
    f: &PySample,
    g: &PySample,
    method: &str,
    num_projections: usize,
    seed: u64,
) -> PyResult<Vec<(f64, f64)>> {
    let config = parse_depth(method, num_projections, RngSeed(seed))?;
    let dd = ddplot::build_ddplot(&f.inner, &g.inner, &config).map_err(to_py_err)?;
    Ok(dd.points().to_vec())
}

/// Render the DD-plot of two samples as an SVG document.
#[pyfunction]
#[pyo3(signature = (f, g, method="fm", label_a="sample A", label_b="sample B", num_projections=DEFAULT_NUM_PROJECTIONS, seed=0))]
fn ddplot_svg(
    f: &PySample,
    g: &PySample,
    method: &str,
    label_a: &str,
    label_b: &str,
    num_projections: usize,
    seed: u64,
) -> PyResult<String> {
    let config = parse_depth(method, num_projections, RngSeed(seed))?;
    let dd = ddplot::build_ddplot(&f.inner, &g.inner, &config).map_err(to_py_err)?;
    Ok(render_ddplot_svg(&dd, label_a, label_b))
}

/// Bootstrap-t test of DD-plot diagonality.
#[pyfunction]
#[pyo3(signature = (f, g, method="fd2", alpha=0.05, num_boot=500, seed=0, null_scheme="relabel", num_projections=DEFAULT_NUM_PROJECTIONS))]
#[allow(clippy::too_many_arguments)]
fn bootstrap_test(
    f: &PySample,
    g: &PySample,
    method: &str,
    alpha: f64,
    num_boot: usize,
    seed: u64,
    null_scheme: &str,
    num_projections: usize,
) -> PyResult<PyTestResult> {
    let seed = RngSeed(seed);
    let config = parse_depth(method, num_projections, seed)?;
    let scheme = parse_scheme(null_scheme)?;
    let inner = ddplot::bootstrap_test(&f.inner, &g.inner, &config, alpha, num_boot, seed, scheme)
        .map_err(to_py_err)?;
    Ok(PyTestResult { inner })
}

/// The deepest-curve baseline statistics (P1..P4).
#[pyfunction]
#[pyo3(signature = (f, g, method="fm", num_projections=DEFAULT_NUM_PROJECTIONS, seed=0))]
fn flores_statistics(
    f: &PySample,
    g: &PySample,
    method: &str,
    num_projections: usize,
    seed: u64,
) -> PyResult<(f64, f64, f64, f64)> {
    let config = parse_depth(method, num_projections, RngSeed(seed))?;
    let s = flores::flores_statistics(&f.inner, &g.inner, &config).map_err(to_py_err)?;
    Ok((s.p1, s.p2, s.p3, s.p4))
}

/// The deepest-curve baseline test on the P4 statistic (FM depth by
/// default), with pooled resampling.
#[pyfunction]
#[pyo3(signature = (f, g, alpha=0.05, num_boot=500, seed=0))]
fn flores_test(
    f: &PySample,
    g: &PySample,
    alpha: f64,
    num_boot: usize,
    seed: u64,
) -> PyResult<PyTestResult> {
    let inner = flores::flores_test(
        &f.inner,
        &g.inner,
        &DepthConfig::Fm,
        alpha,
        num_boot,
        RngSeed(seed),
    )
    .map_err(to_py_err)?;
    Ok(PyTestResult { inner })
}

#[pymodule]
fn fdhomog_py(m: &Bound<'_, PyModule>) -> PyResult<()> {
    // FDHOMOG_THREADS caps worker parallelism, as in the CLI
    if let Ok(value) = std::env::var("FDHOMOG_THREADS") {
        if let Ok(n) = value.parse::<usize>() {
            if n >= 1 {
                let _ = rayon::ThreadPoolBuilder::new().num_threads(n).build_global();
            }
        }
    }
    m.add("__version__", env!("CARGO_PKG_VERSION"))?;
    m.add_class::<PySample>()?;
    m.add_class::<PyTestResult>()?;
    m.add_function(wrap_pyfunction!(simulate_model, m)?)?;
    m.add_function(wrap_pyfunction!(simulate, m)?)?;
    m.add_function(wrap_pyfunction!(depth, m)?)?;
    m.add_function(wrap_pyfunction!(halfspace_depth_2d, m)?)?;
    m.add_function(wrap_pyfunction!(build_ddplot, m)?)?;
    m.add_function(wrap_pyfunction!(ddplot_svg, m)?)?;
    m.add_function(wrap_pyfunction!(bootstrap_test, m)?)?;
    m.add_function(wrap_pyfunction!(flores_statistics, m)?)?;
    m.add_function(wrap_pyfunction!(flores_test, m)?)?;
    Ok(())
}
