use coxflow_core::erm::{self, FitOptions, Method};
use coxflow_core::oracle;
use coxflow_core::select::{self, SelectionPlan, SelectionSettings, Selector};
use coxflow_core::simulate::{self, CovariateKind, SimConfig};
use coxflow_core::{
    cosine_dictionary, features, model, paths, Coefficients, CountingPath, CovariatePath, Error,
    FeatureMatrix, IntensityModel, Label, LabeledSample,
};
use pyo3::exceptions::{PyRuntimeError, PyValueError};
use pyo3::prelude::*;

fn to_py(e: Error) -> PyErr {
    if e.is_invariant_failure() {
        PyRuntimeError::new_err(e.to_string())
    } else {
        PyValueError::new_err(e.to_string())
    }
}

fn label_from_int(y: i64) -> PyResult<Label> {
    match y {
        1 => Ok(Label::Plus),
        -1 => Ok(Label::Minus),
        other => Err(PyValueError::new_err(format!("label must be 1 or -1, got {other}"))),
    }
}

fn label_to_int(y: Label) -> i64 {
    match y {
        Label::Plus => 1,
        Label::Minus => -1,
    }
}

#[pyclass(name = "CountingPath", frozen, from_py_object)]
#[derive(Clone)]
struct PyCountingPath {
    inner: CountingPath,
}

#[pymethods]
impl PyCountingPath {
    #[new]
    fn new(horizon: f64, jump_times: Vec<f64>, cap: u32) -> PyResult<Self> {
        Ok(Self {
            inner: CountingPath::new(horizon, jump_times, cap).map_err(to_py)?,
        })
    }

    #[getter]
    fn horizon(&self) -> f64 {
        self.inner.horizon()
    }

    #[getter]
    fn jump_times(&self) -> Vec<f64> {
        self.inner.jump_times().to_vec()
    }

    #[getter]
    fn cap(&self) -> u32 {
        self.inner.cap()
    }

    fn tau(&self) -> f64 {
        self.inner.tau()
    }

    fn count_at(&self, t: f64) -> usize {
        self.inner.count_at(t)
    }

    fn __len__(&self) -> usize {
        self.inner.len()
    }

    fn __repr__(&self) -> String {
        format!(
            "CountingPath(T={}, jumps={}, u={})",
            self.inner.horizon(),
            self.inner.len(),
            self.inner.cap()
        )
    }
}

#[pyclass(name = "CovariatePath", frozen, from_py_object)]
#[derive(Clone)]
struct PyCovariatePath {
    inner: CovariatePath,
}

#[pymethods]
impl PyCovariatePath {
    /// `values` holds one row of length `d` per grid segment.
    #[new]
    fn new(grid: Vec<f64>, values: Vec<Vec<f64>>) -> PyResult<Self> {
        let dim = values.first().map_or(0, Vec::len);
        if values.iter().any(|row| row.len() != dim) {
            return Err(PyValueError::new_err("all value rows must have the same length"));
        }
        let flat = values.into_iter().flatten().collect();
        Ok(Self {
            inner: CovariatePath::new(grid, flat, dim).map_err(to_py)?,
        })
    }

    #[getter]
    fn grid(&self) -> Vec<f64> {
        self.inner.grid().to_vec()
    }

    #[getter]
    fn dim(&self) -> usize {
        self.inner.dim()
    }

    #[getter]
    fn values(&self) -> Vec<Vec<f64>> {
        self.inner.values().chunks(self.inner.dim()).map(<[f64]>::to_vec).collect()
    }

    fn value_at(&self, t: f64) -> Vec<f64> {
        self.inner.value_at(t).to_vec()
    }

    fn stopped_at(&self, tau: f64) -> Self {
        Self {
            inner: self.inner.stopped_at(tau),
        }
    }
}

#[pyclass(name = "LabeledSample", frozen, from_py_object)]
#[derive(Clone)]
struct PyLabeledSample {
    inner: LabeledSample,
}

#[pymethods]
impl PyLabeledSample {
    /// Stops `z` at `τ(x)` before storing.
    #[new]
    fn new(x: PyCountingPath, z: PyCovariatePath, y: i64) -> PyResult<Self> {
        Ok(Self {
            inner: LabeledSample::stopped(x.inner, z.inner, label_from_int(y)?).map_err(to_py)?,
        })
    }

    #[getter]
    fn x(&self) -> PyCountingPath {
        PyCountingPath {
            inner: self.inner.x.clone(),
        }
    }

    #[getter]
    fn z(&self) -> PyCovariatePath {
        PyCovariatePath {
            inner: self.inner.z.clone(),
        }
    }

    #[getter]
    fn y(&self) -> i64 {
        label_to_int(self.inner.y)
    }
}

#[pyclass(name = "IntensityModel", frozen)]
struct PyIntensityModel {
    inner: IntensityModel,
}

#[pymethods]
impl PyIntensityModel {
    /// One of the built-in scenarios.
    #[new]
    #[pyo3(signature = (name, horizon = 1.0, p_plus = 0.5))]
    fn new(name: &str, horizon: f64, p_plus: f64) -> PyResult<Self> {
        Ok(Self {
            inner: model::scenario(name, horizon, p_plus).map_err(to_py)?,
        })
    }

    #[getter]
    fn name(&self) -> String {
        self.inner.name().to_string()
    }

    #[getter]
    fn horizon(&self) -> f64 {
        self.inner.horizon()
    }

    #[getter]
    fn dim(&self) -> usize {
        self.inner.dim()
    }

    #[getter]
    fn p_plus(&self) -> f64 {
        self.inner.p_plus()
    }

    fn lambda_plus(&self, t: f64, z: Vec<f64>) -> f64 {
        self.inner.lambda_plus(t, &z)
    }

    fn lambda_minus(&self, t: f64, z: Vec<f64>) -> f64 {
        self.inner.lambda_minus(t, &z)
    }

    fn xi(&self, sample: &PyLabeledSample) -> PyResult<f64> {
        oracle::xi(&sample.inner.x, &sample.inner.z, &self.inner).map_err(to_py)
    }

    /// `(P(Y = 1 | x, z), P(Y = -1 | x, z))`.
    fn posterior(&self, sample: &PyLabeledSample) -> PyResult<(f64, f64)> {
        oracle::posterior(&sample.inner.x, &sample.inner.z, &self.inner).map_err(to_py)
    }

    fn bayes_classify(&self, sample: &PyLabeledSample) -> PyResult<i64> {
        oracle::bayes_classify(&sample.inner.x, &sample.inner.z, &self.inner)
            .map(label_to_int)
            .map_err(to_py)
    }

    /// Monte-Carlo Bayes risk `E min(η, 1 − η)` and its standard error.
    fn bayes_risk(&self, py: Python<'_>, samples: Vec<PyLabeledSample>) -> PyResult<(f64, f64)> {
        let samples = unwrap_samples(samples);
        let est = py
            .detach(|| oracle::mc_bayes_risk(&self.inner, &samples))
            .map_err(to_py)?;
        Ok((est.value, est.std_error))
    }

    /// `girsanov_log_weight` of the class-`y` intensity along `sample`.
    fn log_weight(&self, sample: &PyLabeledSample, y: i64) -> PyResult<f64> {
        let quad = coxflow_core::quadrature::SegmentQuadrature::for_horizon(self.inner.horizon());
        simulate::girsanov_log_weight(
            self.inner.rate(label_from_int(y)?).as_ref(),
            &sample.inner.x,
            &sample.inner.z,
            &quad,
        )
        .map_err(to_py)
    }
}

fn unwrap_samples(samples: Vec<PyLabeledSample>) -> Vec<LabeledSample> {
    samples.into_iter().map(|s| s.inner).collect()
}

fn wrap_samples(samples: Vec<LabeledSample>) -> Vec<PyLabeledSample> {
    samples.into_iter().map(|inner| PyLabeledSample { inner }).collect()
}

#[pyclass(name = "FeatureMatrix", frozen, from_py_object)]
#[derive(Clone)]
struct PyFeatureMatrix {
    inner: FeatureMatrix,
}

#[pymethods]
impl PyFeatureMatrix {
    #[getter]
    fn n(&self) -> usize {
        self.inner.n()
    }

    #[getter]
    fn b(&self) -> usize {
        self.inner.b()
    }

    #[getter]
    fn bound(&self) -> Option<f64> {
        self.inner.bound()
    }

    #[getter]
    fn labels(&self) -> Vec<i64> {
        self.inner.labels().iter().map(|&y| label_to_int(y)).collect()
    }

    fn phi(&self) -> Vec<Vec<f64>> {
        (0..self.inner.n()).map(|i| self.inner.phi_row(i).to_vec()).collect()
    }

    fn psi(&self) -> Vec<Vec<f64>> {
        (0..self.inner.n()).map(|i| self.inner.psi_row(i).to_vec()).collect()
    }
}

#[pyclass(name = "Coefficients", frozen, from_py_object)]
#[derive(Clone)]
struct PyCoefficients {
    inner: Coefficients,
}

#[pymethods]
impl PyCoefficients {
    #[new]
    fn new(a: Vec<f64>, b: Vec<f64>, c: f64) -> PyResult<Self> {
        if a.len() != b.len() || a.is_empty() {
            return Err(PyValueError::new_err("a and b must be non-empty and of equal length"));
        }
        let radius = a.len();
        Ok(Self {
            inner: Coefficients { a, b, c, radius },
        })
    }

    #[getter]
    fn a(&self) -> Vec<f64> {
        self.inner.a.clone()
    }

    #[getter]
    fn b(&self) -> Vec<f64> {
        self.inner.b.clone()
    }

    #[getter]
    fn c(&self) -> f64 {
        self.inner.c
    }

    #[getter]
    fn radius(&self) -> usize {
        self.inner.radius
    }

    fn is_feasible(&self) -> bool {
        self.inner.is_feasible()
    }

    fn scores(&self, features: &PyFeatureMatrix) -> Vec<f64> {
        self.inner.scores(&features.inner)
    }

    fn to_text(&self) -> String {
        self.inner.to_text()
    }

    #[staticmethod]
    fn from_text(text: &str) -> PyResult<Self> {
        Ok(Self {
            inner: Coefficients::from_text(text).map_err(to_py)?,
        })
    }
}

#[pyfunction]
#[pyo3(signature = (scenario, n, seed = 0, horizon = 1.0, cap = 10, grid_steps = 50, covariate_kind = "logistic-ou", p_plus = 0.5))]
#[allow(clippy::too_many_arguments)]
fn simulate_dataset(
    py: Python<'_>,
    scenario: &str,
    n: usize,
    seed: u64,
    horizon: f64,
    cap: u32,
    grid_steps: usize,
    covariate_kind: &str,
    p_plus: f64,
) -> PyResult<Vec<PyLabeledSample>> {
    let model = model::scenario(scenario, horizon, p_plus).map_err(to_py)?;
    let config = SimConfig {
        seed,
        n,
        horizon,
        cap,
        grid_steps,
        covariate_kind: CovariateKind::parse(covariate_kind).map_err(to_py)?,
    };
    let samples = py
        .detach(|| simulate::simulate_dataset(&config, &model))
        .map_err(to_py)?;
    Ok(wrap_samples(samples))
}

#[pyfunction]
fn read_dataset(path: &str) -> PyResult<Vec<PyLabeledSample>> {
    Ok(wrap_samples(paths::read_dataset(path).map_err(to_py)?))
}

#[pyfunction]
fn write_dataset(path: &str, samples: Vec<PyLabeledSample>) -> PyResult<()> {
    paths::write_dataset(path, &unwrap_samples(samples)).map_err(to_py)
}

/// Features over the cosine dictionary on `[0, T] × [0, 1]^d`.
#[pyfunction]
fn feature_matrix(py: Python<'_>, samples: Vec<PyLabeledSample>, b: usize) -> PyResult<PyFeatureMatrix> {
    let samples = unwrap_samples(samples);
    let first = samples
        .first()
        .ok_or_else(|| to_py(Error::EmptyDataset))?;
    let dict = cosine_dictionary(first.z.dim(), first.x.horizon());
    let inner = py
        .detach(|| features::feature_matrix(&samples, &dict, b))
        .map_err(to_py)?;
    Ok(PyFeatureMatrix { inner })
}

#[pyfunction]
#[pyo3(signature = (features, radius, accelerated = true, max_iters = 50_000, tol = 1e-9))]
fn fit_erm(
    py: Python<'_>,
    features: &PyFeatureMatrix,
    radius: usize,
    accelerated: bool,
    max_iters: usize,
    tol: f64,
) -> PyResult<(PyCoefficients, f64)> {
    let options = FitOptions {
        max_iters,
        tol,
        method: if accelerated { Method::Accelerated } else { Method::Projected },
        ..FitOptions::default()
    };
    let report = py
        .detach(|| erm::fit_erm(&features.inner, radius, &options))
        .map_err(to_py)?;
    Ok((PyCoefficients { inner: report.coefficients }, report.risk))
}

#[pyfunction]
fn empirical_risk(coeffs: &PyCoefficients, features: &PyFeatureMatrix) -> PyResult<f64> {
    erm::empirical_risk(&coeffs.inner, &features.inner).map_err(to_py)
}

#[pyfunction]
fn logit_loss(t: f64) -> f64 {
    erm::logit_loss(t)
}

#[pyfunction]
fn project_l1(v: Vec<f64>, radius: f64) -> Vec<f64> {
    erm::project_l1(&v, radius)
}

#[pyfunction]
fn default_schedule(alpha: f64, k: usize) -> PyResult<usize> {
    if !(alpha > 0.0) || k == 0 {
        return Err(PyValueError::new_err("alpha must be positive and k at least 1"));
    }
    Ok(select::default_schedule(alpha, k))
}

#[pyfunction]
#[pyo3(signature = (k, n, bound, alpha = 1.0, k_max = 8, c_pen = 1.0, delta = None))]
fn penalty(k: usize, n: usize, bound: f64, alpha: f64, k_max: usize, c_pen: f64, delta: Option<f64>) -> PyResult<f64> {
    let plan = SelectionPlan::new(alpha, k_max, c_pen, delta, n, bound).map_err(to_py)?;
    if k == 0 || k > plan.k_max() {
        return Err(PyValueError::new_err(format!("k must lie in 1..={}", plan.k_max())));
    }
    Ok(select::penalty(k, &plan))
}

/// Returns `(chosen_k, coefficients, rows)` with rows `(k, B_k, risk, pen, score)`.
#[pyfunction]
#[pyo3(signature = (samples, alpha = 1.0, k_max = 8, c_pen = 1.0, delta = None, selector = "penalized", holdout_fraction = 0.25))]
#[allow(clippy::type_complexity)]
fn select_model(
    py: Python<'_>,
    samples: Vec<PyLabeledSample>,
    alpha: f64,
    k_max: usize,
    c_pen: f64,
    delta: Option<f64>,
    selector: &str,
    holdout_fraction: f64,
) -> PyResult<(usize, PyCoefficients, Vec<(usize, usize, f64, f64, f64)>)> {
    let samples = unwrap_samples(samples);
    let first = samples
        .first()
        .ok_or_else(|| to_py(Error::EmptyDataset))?;
    let dict = cosine_dictionary(first.z.dim(), first.x.horizon());
    let settings = SelectionSettings {
        alpha,
        k_max,
        c_pen,
        delta,
        selector: Selector::parse(selector, holdout_fraction).map_err(to_py)?,
        fit: FitOptions::default(),
    };
    let (_, report) = py
        .detach(|| select::fit_penalized(&samples, &dict, &settings))
        .map_err(to_py)?;
    let rows = report
        .rows
        .iter()
        .map(|r| (r.k, r.b_k, r.risk, r.pen, r.score))
        .collect();
    Ok((report.chosen_k, PyCoefficients { inner: report.coefficients }, rows))
}

#[pyfunction]
fn eta_from_xi(xi: f64, p_plus: f64) -> f64 {
    model::eta_from_xi(xi, p_plus)
}

#[pymodule(name = "coxflow")]
fn coxflow_module(m: &Bound<'_, PyModule>) -> PyResult<()> {
    m.add_class::<PyCountingPath>()?;
    m.add_class::<PyCovariatePath>()?;
    m.add_class::<PyLabeledSample>()?;
    m.add_class::<PyIntensityModel>()?;
    m.add_class::<PyFeatureMatrix>()?;
    m.add_class::<PyCoefficients>()?;
    m.add_function(wrap_pyfunction!(simulate_dataset, m)?)?;
    m.add_function(wrap_pyfunction!(read_dataset, m)?)?;
    m.add_function(wrap_pyfunction!(write_dataset, m)?)?;
    m.add_function(wrap_pyfunction!(feature_matrix, m)?)?;
    m.add_function(wrap_pyfunction!(fit_erm, m)?)?;
    m.add_function(wrap_pyfunction!(empirical_risk, m)?)?;
    m.add_function(wrap_pyfunction!(logit_loss, m)?)?;
    m.add_function(wrap_pyfunction!(project_l1, m)?)?;
    m.add_function(wrap_pyfunction!(default_schedule, m)?)?;
    m.add_function(wrap_pyfunction!(penalty, m)?)?;
    m.add_function(wrap_pyfunction!(select_model, m)?)?;
    m.add_function(wrap_pyfunction!(eta_from_xi, m)?)?;
    m.add("SCENARIOS", model::SCENARIOS.to_vec())?;
    Ok(())
}
