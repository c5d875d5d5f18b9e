//! Python bindings. Matrices cross the boundary as lists of rows of
//! complex numbers, so `numpy.array(...)` and `.tolist()` round-trip.

use homentropy::cli::SpaceConfig;
use homentropy::entropy::{covering_number_bounds, greedy_net, greedy_packing, NetResult};
use homentropy::groups::{self, GroupElement, GroupKind, GroupSpec, SkewElement};
use homentropy::invariants::{invariant_report, InvariantBudget, InvariantReport};
use homentropy::matcore::{self, CMatrix, DenseMatrix, Field, NormSpec};
use homentropy::metrics::{self, CosetPoint, QuotientOptions};
use homentropy::verify;
use num_complex::Complex64;
use pyo3::exceptions::{PyRuntimeError, PyValueError};
use pyo3::prelude::*;
use pyo3::types::PyAny;

type Rows = Vec<Vec<Complex64>>;

fn err(e: homentropy::Error) -> PyErr {
    match e {
        homentropy::Error::Convergence(_) | homentropy::Error::Io(_) => PyRuntimeError::new_err(e.to_string()),
        _ => PyValueError::new_err(e.to_string()),
    }
}

fn to_matrix(rows: &Rows) -> PyResult<CMatrix> {
    let n = rows.len();
    if n == 0 || rows.iter().any(|r| r.len() != n) {
        return Err(PyValueError::new_err("expected a non-empty square matrix"));
    }
    Ok(CMatrix::from_fn(n, n, |i, j| rows[i][j]))
}

fn to_rows(m: &CMatrix) -> Rows {
    (0..m.nrows()).map(|i| (0..m.ncols()).map(|j| m[(i, j)]).collect()).collect()
}

fn group_spec(group: &str, n: usize) -> PyResult<GroupSpec> {
    let kind = match group.to_ascii_uppercase().as_str() {
        "U" => GroupKind::U,
        "SO" => GroupKind::SO,
        other => return Err(PyValueError::new_err(format!("unknown group {other:?}"))),
    };
    GroupSpec::new(kind, n).map_err(err)
}

fn element(g: &GroupSpec, rows: &Rows) -> PyResult<GroupElement> {
    let m = DenseMatrix::new(g.field(), to_matrix(rows)?).map_err(err)?;
    GroupElement::new(m, g.clone()).map_err(err)
}

fn norm(spec: &str) -> PyResult<NormSpec> {
    spec.parse().map_err(err)
}

fn json_to_py<'py, T: serde::Serialize>(py: Python<'py>, value: &T) -> PyResult<Bound<'py, PyAny>> {
    let text = serde_json::to_string(value).map_err(|e| PyRuntimeError::new_err(e.to_string()))?;
    py.import("json")?.call_method1("loads", (text,))
}

fn net_summary<'py>(py: Python<'py>, r: &NetResult) -> PyResult<Bound<'py, PyAny>> {
    json_to_py(
        py,
        &serde_json::json!({
            "epsilon": r.epsilon,
            "count": r.count,
            "budget_exhausted": r.budget_exhausted,
            "samples_used": r.samples_used,
            "min_separation": r.min_separation,
            "probe_count": r.probe_count,
            "probe_max_dist": r.probe_max_dist,
        }),
    )
}

/// Haar-random element of U(n) or SO(n).
#[pyfunction]
#[pyo3(signature = (group, n, seed=0))]
fn haar_sample(group: &str, n: usize, seed: u64) -> PyResult<Rows> {
    let g = group_spec(group, n)?;
    Ok(to_rows(groups::haar_sample(&g, seed).matrix().as_matrix()))
}

/// Principal eigenphases of a unitary, sorted by decreasing magnitude.
#[pyfunction]
fn eigenphases(u: Rows) -> PyResult<Vec<f64>> {
    let g = group_spec("U", u.len())?;
    Ok(matcore::eigenphases(&element(&g, &u)?).map_err(err)?.phases().to_vec())
}

/// Exponential of a skew-Hermitian matrix.
#[pyfunction]
fn expm(x: Rows) -> PyResult<Rows> {
    let s = SkewElement::new(DenseMatrix::new(Field::Complex, to_matrix(&x)?).map_err(err)?).map_err(err)?;
    Ok(to_rows(matcore::expm_skew(&s).matrix().as_matrix()))
}

/// Principal logarithm of a unitary.
#[pyfunction]
fn logm(u: Rows) -> PyResult<Rows> {
    let g = group_spec("U", u.len())?;
    Ok(to_rows(matcore::logm_unitary(&element(&g, &u)?).map_err(err)?.matrix().as_matrix()))
}

/// Bi-invariant path-length distance on U(n).
#[pyfunction]
#[pyo3(signature = (u, v, norm_spec="operator"))]
fn intrinsic_dist(u: Rows, v: Rows, norm_spec: &str) -> PyResult<f64> {
    let g = group_spec("U", u.len())?;
    metrics::intrinsic_dist(&element(&g, &u)?, &element(&g, &v)?, &norm(norm_spec)?).map_err(err)
}

/// Norm of the difference, `||u - v||`.
#[pyfunction]
#[pyo3(signature = (u, v, norm_spec="operator"))]
fn extrinsic_dist(u: Rows, v: Rows, norm_spec: &str) -> PyResult<f64> {
    let g = group_spec("U", u.len())?;
    metrics::extrinsic_dist(&element(&g, &u)?, &element(&g, &v)?, &norm(norm_spec)?).map_err(err)
}

/// A homogeneous space G/H with a unitarily invariant norm.
#[pyclass(name = "HomSpace", module = "homentropy_py", frozen)]
struct PyHomSpace {
    inner: groups::HomSpace,
}

#[pymethods]
impl PyHomSpace {
    #[new]
    #[pyo3(signature = (group, n, subgroup="trivial", k=None, m=None, partition=None, norm="operator"))]
    fn new(
        group: &str,
        n: usize,
        subgroup: &str,
        k: Option<usize>,
        m: Option<usize>,
        partition: Option<Vec<usize>>,
        norm: &str,
    ) -> PyResult<Self> {
        let cfg = SpaceConfig { group: group.into(), n, subgroup: subgroup.into(), k, m, partition, norm: norm.into() };
        Ok(PyHomSpace { inner: cfg.build().map_err(err)? })
    }

    #[getter]
    fn dim_g(&self) -> usize {
        self.inner.dim_g()
    }

    #[getter]
    fn dim_h(&self) -> usize {
        self.inner.dim_h()
    }

    #[getter]
    fn dim_m(&self) -> usize {
        self.inner.dim_m()
    }

    #[getter]
    fn n(&self) -> usize {
        self.inner.n()
    }

    fn __repr__(&self) -> String {
        format!("HomSpace('{}', norm='{}')", self.inner, self.inner.norm())
    }

    fn haar_sample(&self, seed: u64) -> Rows {
        to_rows(groups::haar_sample(self.inner.group(), seed).matrix().as_matrix())
    }

    /// `(distance, exact)`: closed form where known, else the optimizer's upper bound.
    #[pyo3(signature = (u, v, restarts=8, max_iter=200, seed=0x5eed))]
    fn quotient_dist(&self, u: Rows, v: Rows, restarts: usize, max_iter: usize, seed: u64) -> PyResult<(f64, bool)> {
        let (p, q) = self.points(&u, &v)?;
        metrics::quotient_dist(&p, &q, &QuotientOptions { restarts, max_iter, seed }).map_err(err)
    }

    fn quotient_dist_lower(&self, u: Rows, v: Rows) -> PyResult<f64> {
        let (p, q) = self.points(&u, &v)?;
        metrics::quotient_dist_lower(&p, &q).map_err(err)
    }

    #[pyo3(signature = (u, v, restarts=8, max_iter=200, seed=0x5eed))]
    fn quotient_dist_upper(&self, u: Rows, v: Rows, restarts: usize, max_iter: usize, seed: u64) -> PyResult<f64> {
        let (p, q) = self.points(&u, &v)?;
        metrics::quotient_dist_upper(&p, &q, &QuotientOptions { restarts, max_iter, seed }).map_err(err)
    }

    /// Known and sampled values of kappa, theta and the diameter.
    #[pyo3(signature = (seed=0, kappa_samples=64, theta_candidates=4096, diam_samples=64))]
    fn invariants<'py>(
        &self,
        py: Python<'py>,
        seed: u64,
        kappa_samples: usize,
        theta_candidates: usize,
        diam_samples: usize,
    ) -> PyResult<Bound<'py, PyAny>> {
        let inv = self.report(seed, kappa_samples, theta_candidates, diam_samples)?;
        json_to_py(py, &inv)
    }

    #[pyo3(signature = (epsilon, budget=10_000, seed=0))]
    fn greedy_packing<'py>(
        &self,
        py: Python<'py>,
        epsilon: f64,
        budget: usize,
        seed: u64,
    ) -> PyResult<Bound<'py, PyAny>> {
        let r = py.detach(|| greedy_packing(&self.inner, epsilon, budget, seed)).map_err(err)?;
        net_summary(py, &r)
    }

    #[pyo3(signature = (epsilon, sampler=10_000, probe=10_000, seed=0))]
    fn greedy_net<'py>(
        &self,
        py: Python<'py>,
        epsilon: f64,
        sampler: usize,
        probe: usize,
        seed: u64,
    ) -> PyResult<Bound<'py, PyAny>> {
        let r = py.detach(|| greedy_net(&self.inner, epsilon, sampler, probe, seed)).map_err(err)?;
        net_summary(py, &r)
    }

    /// Two-sided covering-number bounds at `epsilon` with the default constants.
    #[pyo3(signature = (epsilon, seed=0))]
    fn covering_bounds<'py>(&self, py: Python<'py>, epsilon: f64, seed: u64) -> PyResult<Bound<'py, PyAny>> {
        let inv = self.report(seed, 64, 4096, 64)?;
        let b = covering_number_bounds(
            &self.inner,
            &inv,
            epsilon,
            homentropy::entropy::DEFAULT_LOWER_CONSTANT,
            homentropy::entropy::DEFAULT_UPPER_CONSTANT,
        );
        json_to_py(py, &b)
    }

    /// Runs every numerical check applicable to this space.
    #[pyo3(signature = (seed=0))]
    fn verify_all<'py>(&self, py: Python<'py>, seed: u64) -> PyResult<Bound<'py, PyAny>> {
        let reports =
            py.detach(|| verify::verify_all(&self.inner, &verify::VerifyBudget::default(), seed)).map_err(err)?;
        json_to_py(py, &reports)
    }
}

impl PyHomSpace {
    fn points(&self, u: &Rows, v: &Rows) -> PyResult<(CosetPoint, CosetPoint)> {
        let g = self.inner.group();
        Ok((
            CosetPoint::new(element(g, u)?, &self.inner).map_err(err)?,
            CosetPoint::new(element(g, v)?, &self.inner).map_err(err)?,
        ))
    }

    fn report(&self, seed: u64, kappa: usize, theta: usize, diam: usize) -> PyResult<InvariantReport> {
        let budget = InvariantBudget { kappa_samples: kappa, theta_candidates: theta, diam_samples: diam };
        invariant_report(&self.inner, &budget, seed).map_err(err)
    }
}

#[pymodule]
fn homentropy_py(m: &Bound<'_, PyModule>) -> PyResult<()> {
    m.add_class::<PyHomSpace>()?;
    m.add_function(wrap_pyfunction!(haar_sample, m)?)?;
    m.add_function(wrap_pyfunction!(eigenphases, m)?)?;
    m.add_function(wrap_pyfunction!(expm, m)?)?;
    m.add_function(wrap_pyfunction!(logm, m)?)?;
    m.add_function(wrap_pyfunction!(intrinsic_dist, m)?)?;
    m.add_function(wrap_pyfunction!(extrinsic_dist, m)?)?;
    Ok(())
}
