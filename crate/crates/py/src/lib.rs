//! Python bindings: the bump parameterization, curvature norms for the
//! catalog metrics, the exact coefficient tables, norm scans over the
//! deformed metric, obstruction certificates, and the verification suite.

use num_rational::BigRational;
use pyo3::exceptions::PyValueError;
use pyo3::prelude::*;
use pyo3::types::{PyDict, PyList};

use curvelab::aubin::{self, NormKind};
use curvelab::catalog::catalog_metric;
use curvelab::curvature::{tensor_norm_sq, CurvatureBundle};
use curvelab::error::Error;
use curvelab::harness;
use curvelab::jets::{eval_metric_jet, ChartPoint};
use curvelab::obstruction::{self, BachParamMode, CertOutcome};

fn err(e: Error) -> PyErr {
    PyValueError::new_err(e.to_string())
}

fn parse_alpha(alpha: Vec<String>) -> PyResult<Vec<BigRational>> {
    alpha
        .iter()
        .map(|s| {
            if let Some((n, d)) = s.split_once('/') {
                let n: i64 = n.trim().parse().map_err(|_| {
                    PyValueError::new_err(format!("bad rational '{s}'"))
                })?;
                let d: i64 = d.trim().parse().map_err(|_| {
                    PyValueError::new_err(format!("bad rational '{s}'"))
                })?;
                Ok(BigRational::new(n.into(), d.into()))
            } else {
                let n: i64 = s.trim().parse().map_err(|_| {
                    PyValueError::new_err(format!("bad rational '{s}' (use p/q or an integer)"))
                })?;
                Ok(BigRational::from_integer(n.into()))
            }
        })
        .collect()
}

fn parse_kind(kind: &str, t: f64) -> PyResult<NormKind> {
    match kind {
        "weyl" => Ok(NormKind::Weyl),
        "wplus" => Ok(NormKind::WeylPlus),
        "wminus" => Ok(NormKind::WeylMinus),
        "mixed" => Ok(NormKind::Mixed(t)),
        "cotton" => Ok(NormKind::Cotton),
        "bach" => Ok(NormKind::Bach),
        other => Err(PyValueError::new_err(format!("unknown kind '{other}'"))),
    }
}

/// The bump parameterization (λ, r, b, α, center).
#[pyclass(name = "BumpParams")]
struct PyBumpParams {
    inner: aubin::BumpParams,
}

#[pymethods]
impl PyBumpParams {
    #[new]
    #[pyo3(signature = (lambda_, r, b, alpha, center=None))]
    fn new(
        lambda_: f64,
        r: f64,
        b: f64,
        alpha: Vec<String>,
        center: Option<Vec<f64>>,
    ) -> PyResult<Self> {
        let alpha = parse_alpha(alpha)?;
        let center = match center {
            Some(c) => ChartPoint::new(c).map_err(err)?,
            None => ChartPoint::origin(alpha.len()),
        };
        Ok(PyBumpParams {
            inner: aubin::BumpParams::new(lambda_, r, b, alpha, center).map_err(err)?,
        })
    }

    #[getter]
    fn lambda_(&self) -> f64 {
        self.inner.lambda()
    }
    #[getter]
    fn r(&self) -> f64 {
        self.inner.r()
    }
    #[getter]
    fn b(&self) -> f64 {
        self.inner.b()
    }
    #[getter]
    fn alpha(&self) -> Vec<f64> {
        self.inner.alpha().to_vec()
    }

    fn y_at(&self, point: Vec<f64>) -> PyResult<f64> {
        Ok(self.inner.y_at(&ChartPoint::new(point).map_err(err)?))
    }

    fn in_support(&self, point: Vec<f64>) -> PyResult<bool> {
        Ok(self.inner.in_support(&ChartPoint::new(point).map_err(err)?))
    }

    /// φ value, gradient, and Hessian at a point.
    fn phi_jet<'py>(&self, py: Python<'py>, point: Vec<f64>) -> PyResult<Bound<'py, PyDict>> {
        let n = point.len();
        let p = ChartPoint::new(point).map_err(err)?;
        let jet = aubin::phi(&p, &self.inner).map_err(err)?;
        let out = PyDict::new(py);
        out.set_item("value", jet.value())?;
        let grad: Vec<f64> = (0..n)
            .map(|i| jet.partial(&[i]).unwrap())
            .collect();
        out.set_item("gradient", grad)?;
        let hess: Vec<Vec<f64>> = (0..n)
            .map(|i| (0..n).map(|j| jet.partial(&[i, j]).unwrap()).collect())
            .collect();
        out.set_item("hessian", hess)?;
        Ok(out)
    }
}

/// Scalar curvature of a catalog metric at a point.
#[pyfunction]
fn scalar_curvature(metric: &str, point: Vec<f64>) -> PyResult<f64> {
    let m = catalog_metric(metric).map_err(err)?;
    let p = ChartPoint::new(point).map_err(err)?;
    let bundle = CurvatureBundle::compute(&m.field, &p, 2).map_err(err)?;
    Ok(bundle.scalar)
}

/// Scalar curvature and squared tensor norms of a catalog metric.
#[pyfunction]
#[pyo3(signature = (metric, point, order=4))]
fn curvature_norms<'py>(
    py: Python<'py>,
    metric: &str,
    point: Vec<f64>,
    order: usize,
) -> PyResult<Bound<'py, PyDict>> {
    let m = catalog_metric(metric).map_err(err)?;
    let p = ChartPoint::new(point).map_err(err)?;
    let bundle = CurvatureBundle::compute(&m.field, &p, order).map_err(err)?;
    let mj = eval_metric_jet(&m.field, &p, order).map_err(err)?;
    let out = PyDict::new(py);
    out.set_item("scalar", bundle.scalar)?;
    out.set_item("ricci_sq", tensor_norm_sq(&bundle.ricci, &mj))?;
    out.set_item("weyl_sq", tensor_norm_sq(&bundle.weyl, &mj))?;
    out.set_item(
        "cotton_sq",
        bundle.cotton.as_ref().map(|c| tensor_norm_sq(c, &mj)),
    )?;
    out.set_item(
        "bach_sq",
        bundle.bach.as_ref().map(|b| tensor_norm_sq(b, &mj)),
    )?;
    Ok(out)
}

/// Exact principal-part coefficient tables; every value is a rational
/// string in the r-free normalization over ξ = x/r.
#[pyfunction]
#[pyo3(signature = (alpha, n=4, family="weyl"))]
fn coeff_table<'py>(
    py: Python<'py>,
    alpha: Vec<String>,
    n: usize,
    family: &str,
) -> PyResult<Bound<'py, PyDict>> {
    let alpha = parse_alpha(alpha)?;
    let coeffs = match family {
        "weyl" => aubin::weyl_coeffs(&alpha, n).map_err(err)?,
        "cotton" => aubin::cotton_coeffs(&alpha, n).map_err(err)?,
        other => return Err(PyValueError::new_err(format!("unknown family '{other}'"))),
    };
    let out = PyDict::new(py);
    let a = PyDict::new(py);
    let a3 = PyDict::new(py);
    for i in 0..n {
        for j in 0..n {
            if i != j {
                a.set_item(format!("{},{}", i + 1, j + 1), coeffs.a(i, j).to_string())?;
                for k in 0..n {
                    if k != i && k != j {
                        a3.set_item(
                            format!("{},{},{}", i + 1, j + 1, k + 1),
                            coeffs.a3(i, j, k).to_string(),
                        )?;
                    }
                }
            }
        }
    }
    out.set_item("family", family)?;
    out.set_item("a", a)?;
    out.set_item("a3", a3)?;
    Ok(out)
}

/// Derivatives (f, f′, …, f⁗) of the bump profile at y.
#[pyfunction]
fn bump_jet(y: f64, b: f64) -> PyResult<Vec<f64>> {
    aubin::bump_derivs_public(y, b, 4).map_err(err)
}

/// Minimum squared tensor norm of the deformed catalog metric over
/// low-discrepancy in-ball samples.
#[pyfunction]
#[pyo3(signature = (kind, params, metric="flat4", count=500, seed=7, mix_t=-0.5))]
fn min_norm_scan<'py>(
    py: Python<'py>,
    kind: &str,
    params: &PyBumpParams,
    metric: &str,
    count: usize,
    seed: u64,
    mix_t: f64,
) -> PyResult<Bound<'py, PyDict>> {
    let m = catalog_metric(metric).map_err(err)?;
    let kind = parse_kind(kind, mix_t)?;
    let deformed = aubin::deform_metric(&m.field, &params.inner).map_err(err)?;
    let points = harness::sample_ball(
        params.inner.center(),
        params.inner.r(),
        params.inner.alpha(),
        count,
        seed,
    );
    let scan = harness::min_norm_scan(&deformed, kind, &points).map_err(err)?;
    let out = PyDict::new(py);
    out.set_item("kind", scan.kind)?;
    out.set_item("count", scan.count)?;
    out.set_item("min", scan.min)?;
    out.set_item("argmin", scan.argmin)?;
    Ok(out)
}

/// Build and certify an obstruction system ("wplus", "bach", "bach-free",
/// or "weyl-single" with a 1-based coordinate).
#[pyfunction]
#[pyo3(signature = (system, alpha, budget=1_000_000, coordinate=1))]
fn certify<'py>(
    py: Python<'py>,
    system: &str,
    alpha: Vec<String>,
    budget: u64,
    coordinate: usize,
) -> PyResult<Bound<'py, PyDict>> {
    let alpha = parse_alpha(alpha)?;
    let sys = match system {
        "wplus" => obstruction::wplus_system(&alpha).map_err(err)?,
        "bach" => obstruction::bach_system(&alpha, BachParamMode::SignConstrained).map_err(err)?,
        "bach-free" => {
            obstruction::bach_system(&alpha, BachParamMode::FreeNonzero).map_err(err)?
        }
        "weyl-single" => {
            obstruction::weyl_single_coordinate_system(&alpha, 4, coordinate - 1).map_err(err)?
        }
        other => return Err(PyValueError::new_err(format!("unknown system '{other}'"))),
    };
    let outcome = obstruction::certify_no_nonzero_solution(&sys, budget).map_err(err)?;
    let out = PyDict::new(py);
    out.set_item("system", sys.name.clone())?;
    match outcome {
        CertOutcome::Infeasible(cert) => {
            let replay = obstruction::replay_certificate(&sys, &cert).map_err(err)?;
            out.set_item("outcome", "infeasible")?;
            out.set_item("method", cert.method)?;
            out.set_item("subdivisions", cert.subdivisions)?;
            out.set_item("region", cert.region)?;
            out.set_item("replay", replay)?;
        }
        CertOutcome::Counterexample { point, residual } => {
            out.set_item("outcome", "counterexample")?;
            out.set_item("point", point)?;
            out.set_item("residual", residual)?;
        }
        CertOutcome::Inconclusive { processed, budget } => {
            out.set_item("outcome", "inconclusive")?;
            out.set_item("processed", processed)?;
            out.set_item("budget", budget)?;
        }
    }
    Ok(out)
}

/// Run named verification checks (all when names is None).
#[pyfunction]
#[pyo3(signature = (names=None, seed=None))]
fn run_checks<'py>(
    py: Python<'py>,
    names: Option<Vec<String>>,
    seed: Option<u64>,
) -> PyResult<Bound<'py, PyDict>> {
    let mut config = harness::SuiteConfig::default();
    config.checks = names;
    if let Some(seed) = seed {
        config.seed = seed;
    }
    let report = harness::run_suite(&config).map_err(err)?;
    let out = PyDict::new(py);
    out.set_item("verdict", report.verdict)?;
    out.set_item("seed", report.seed)?;
    let checks = PyList::empty(py);
    for c in &report.checks {
        let entry = PyDict::new(py);
        entry.set_item("name", c.name.clone())?;
        entry.set_item("passed", c.passed())?;
        entry.set_item("runtime_ms", c.runtime_ms)?;
        checks.append(entry)?;
    }
    out.set_item("checks", checks)?;
    Ok(out)
}

/// Names of the catalog metrics.
#[pyfunction]
fn catalog_names() -> Vec<String> {
    curvelab::catalog::catalog()
        .iter()
        .map(|m| m.name.to_string())
        .collect()
}

#[pymodule]
fn curvelab_py(m: &Bound<'_, PyModule>) -> PyResult<()> {
    m.add_class::<PyBumpParams>()?;
    m.add_function(wrap_pyfunction!(scalar_curvature, m)?)?;
    m.add_function(wrap_pyfunction!(curvature_norms, m)?)?;
    m.add_function(wrap_pyfunction!(coeff_table, m)?)?;
    m.add_function(wrap_pyfunction!(bump_jet, m)?)?;
    m.add_function(wrap_pyfunction!(min_norm_scan, m)?)?;
    m.add_function(wrap_pyfunction!(certify, m)?)?;
    m.add_function(wrap_pyfunction!(run_checks, m)?)?;
    m.add_function(wrap_pyfunction!(catalog_names, m)?)?;
    Ok(())
}
