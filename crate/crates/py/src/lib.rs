use std::collections::BTreeSet;

use pyo3::exceptions::PyValueError;
use pyo3::prelude::*;

use qmobius_core::chains::{critical_theta, find_theta_chain};
use qmobius_core::covering::{doubling_constant, CoverMode};
use qmobius_core::distortion::{cross_ratio, distortion_scatter, identity_map, Quadruple};
use qmobius_core::document::SpaceDocument;
use qmobius_core::generators::{cantor_space, inversion_ray, random_space, CantorSpec, RandomModel};
use qmobius_core::space::{index_labels, AnySpace};
use qmobius_core::transforms::{inversion_kernel, lambda_transform, LambdaWeighting};
use qmobius_core::verify::{suite_report, Suite, SuiteOptions};
use qmobius_core::{
    chain_metric, sphericalized_metric, ExtendedMetricSpace, FiniteSpace, PointId,
    QuasiMetricSpace,
};

fn err(e: impl std::fmt::Display) -> PyErr {
    PyValueError::new_err(e.to_string())
}

fn point(space: &impl FiniteSpace, label: &str) -> PyResult<PointId> {
    space
        .find_label(label)
        .ok_or_else(|| err(format!("unknown label `{label}`")))
}

fn labels_of(space: &impl FiniteSpace, ids: &[PointId]) -> Vec<String> {
    ids.iter().map(|&x| space.label(x).to_string()).collect()
}

fn rows_of(space: &impl FiniteSpace) -> Vec<Vec<f64>> {
    space.matrix().to_rows()
}

fn doubling(space: &(impl FiniteSpace + Sync), mode: &str) -> PyResult<(usize, String, f64)> {
    let mode: CoverMode = mode.parse().map_err(err)?;
    let rep = doubling_constant(space, mode).map_err(err)?;
    Ok((rep.constant, space.label(rep.witness.center).to_string(), rep.witness.radius))
}

type CriticalTheta = (f64, (String, String), Option<Vec<String>>);

/// Extended metric space on labelled points.
#[pyclass(name = "Space", frozen, skip_from_py_object)]
#[derive(Clone)]
struct PySpace {
    inner: ExtendedMetricSpace,
}

#[pymethods]
impl PySpace {
    #[new]
    #[pyo3(signature = (rows, labels=None, remote=None))]
    fn new(rows: Vec<Vec<f64>>, labels: Option<Vec<String>>, remote: Option<&str>) -> PyResult<Self> {
        let labels = labels.unwrap_or_else(|| index_labels(rows.len()));
        let remote = remote
            .map(|r| {
                labels
                    .iter()
                    .position(|l| l == r)
                    .map(PointId)
                    .ok_or_else(|| err(format!("unknown label `{r}`")))
            })
            .transpose()?;
        let inner = ExtendedMetricSpace::new(labels, &rows, remote).map_err(err)?;
        Ok(PySpace { inner })
    }

    #[staticmethod]
    fn from_document(text: &str) -> PyResult<Self> {
        match SpaceDocument::parse(text).and_then(|d| d.to_space()).map_err(err)? {
            AnySpace::Metric(inner) => Ok(PySpace { inner }),
            AnySpace::Quasi(_) => Err(err("document describes a quasi-metric space")),
        }
    }

    #[pyo3(signature = (name=""))]
    fn document(&self, name: &str) -> String {
        SpaceDocument::from_metric(name, &self.inner).to_string()
    }

    #[getter]
    fn labels(&self) -> Vec<String> {
        self.inner.labels().to_vec()
    }

    #[getter]
    fn remote(&self) -> Option<String> {
        self.inner.remote().map(|p| self.inner.label(p).to_string())
    }

    fn rows(&self) -> Vec<Vec<f64>> {
        rows_of(&self.inner)
    }

    fn dist(&self, a: &str, b: &str) -> PyResult<f64> {
        Ok(self.inner.dist(point(&self.inner, a)?, point(&self.inner, b)?))
    }

    fn __len__(&self) -> usize {
        self.inner.len()
    }

    fn __repr__(&self) -> String {
        format!("Space({} points)", self.inner.len())
    }

    /// Adds the remote point.
    fn complete(&self) -> PyResult<Self> {
        Ok(PySpace {
            inner: self.inner.complete_with_remote().map_err(err)?,
        })
    }

    /// Inversion kernel at `p` as rows over the remaining points.
    fn inversion_kernel(&self, p: &str) -> PyResult<Vec<Vec<f64>>> {
        let k = inversion_kernel(&self.inner, point(&self.inner, p)?).map_err(err)?;
        let ids = k.point_ids();
        Ok(ids.iter().map(|&x| ids.iter().map(|&y| k.value(x, y)).collect()).collect())
    }

    /// Chain metric of the inversion kernel at `p`.
    fn invert(&self, p: &str) -> PyResult<Self> {
        let inner = chain_metric(&self.inner, point(&self.inner, p)?).map_err(err)?;
        Ok(PySpace { inner })
    }

    fn sphericalize(&self, p: &str) -> PyResult<Self> {
        let inner = sphericalized_metric(&self.inner, point(&self.inner, p)?).map_err(err)?;
        Ok(PySpace { inner })
    }

    /// `(D, witness center, witness radius)`.
    #[pyo3(signature = (mode="exact"))]
    fn doubling_constant(&self, mode: &str) -> PyResult<(usize, String, f64)> {
        doubling(&self.inner, mode)
    }

    /// `(θ*, witness pair, witness chain or None)`.
    fn critical_theta(&self) -> PyResult<CriticalTheta> {
        let rep = critical_theta(&self.inner).map_err(err)?;
        let (a, b) = rep.witness_pair;
        Ok((
            rep.theta_star,
            (self.inner.label(a).to_string(), self.inner.label(b).to_string()),
            rep.witness_chain.map(|c| labels_of(&self.inner, c.points())),
        ))
    }

    fn find_theta_chain(&self, theta: f64, a: &str, b: &str) -> PyResult<Option<Vec<String>>> {
        let pair = (point(&self.inner, a)?, point(&self.inner, b)?);
        let chain = find_theta_chain(&self.inner, theta, pair).map_err(err)?;
        Ok(chain.map(|c| labels_of(&self.inner, c.points())))
    }

    fn cross_ratio(&self, x1: &str, x2: &str, x3: &str, x4: &str) -> PyResult<f64> {
        let ids = [
            point(&self.inner, x1)?,
            point(&self.inner, x2)?,
            point(&self.inner, x3)?,
            point(&self.inner, x4)?,
        ];
        let q = Quadruple::new(ids).map_err(err)?;
        cross_ratio(&self.inner, q).map_err(err)
    }

    /// Smallest and largest `crt(f(Q)) / crt(Q)` for the identity-by-position
    /// map onto `other`.
    #[pyo3(signature = (other, seed=0))]
    fn cross_ratio_distortion(&self, other: &PySpace, seed: u64) -> PyResult<Option<(f64, f64)>> {
        let f = identity_map(self.inner.len());
        Ok(distortion_scatter(&self.inner, &other.inner, &f, seed).map_err(err)?.ratio_range())
    }
}

/// K-quasi-metric space with a set of remote points.
#[pyclass(name = "QuasiSpace", frozen, skip_from_py_object)]
#[derive(Clone)]
struct PyQuasiSpace {
    inner: QuasiMetricSpace,
}

#[pymethods]
impl PyQuasiSpace {
    #[new]
    #[pyo3(signature = (rows, k, labels=None, remote_set=None))]
    fn new(
        rows: Vec<Vec<f64>>,
        k: f64,
        labels: Option<Vec<String>>,
        remote_set: Option<Vec<String>>,
    ) -> PyResult<Self> {
        let labels = labels.unwrap_or_else(|| index_labels(rows.len()));
        let set = remote_set
            .unwrap_or_default()
            .iter()
            .map(|r| {
                labels
                    .iter()
                    .position(|l| l == r)
                    .map(PointId)
                    .ok_or_else(|| err(format!("unknown label `{r}`")))
            })
            .collect::<PyResult<BTreeSet<_>>>()?;
        let inner = QuasiMetricSpace::new(labels, &rows, k, set).map_err(err)?;
        Ok(PyQuasiSpace { inner })
    }

    #[getter]
    fn k(&self) -> f64 {
        self.inner.k()
    }

    #[getter]
    fn labels(&self) -> Vec<String> {
        self.inner.labels().to_vec()
    }

    fn rows(&self) -> Vec<Vec<f64>> {
        rows_of(&self.inner)
    }

    fn __len__(&self) -> usize {
        self.inner.len()
    }

    #[pyo3(signature = (mode="exact"))]
    fn doubling_constant(&self, mode: &str) -> PyResult<(usize, String, f64)> {
        doubling(&self.inner, mode)
    }

    /// `d(x,y) / (λ(x)λ(y))`; the result is a `K'²`-quasi-metric.
    fn lambda_transform(&self, weights: Vec<f64>, l: f64, k_prime: f64) -> PyResult<Self> {
        let w = LambdaWeighting::new(weights, l, k_prime).map_err(err)?;
        Ok(PyQuasiSpace {
            inner: lambda_transform(&self.inner, &w).map_err(err)?,
        })
    }

    /// Smallest `K'` admissible for the given weights.
    fn minimal_k_prime(&self, weights: Vec<f64>, l: f64) -> f64 {
        LambdaWeighting::minimal_k_prime(&self.inner, &weights, l)
    }
}

#[pyfunction]
fn cantor(k: usize, depth: u32, a: f64) -> PyResult<PySpace> {
    Ok(PySpace {
        inner: cantor_space(CantorSpec::new(k, depth, a)).map_err(err)?,
    })
}

/// Basepoint `p` followed by `n` points whose inverted images are evenly
/// spaced on `[u_lo, u_hi]`.
#[pyfunction]
fn ray(n: usize, u_lo: f64, u_hi: f64) -> PyResult<PySpace> {
    let (inner, _) = inversion_ray(n, u_lo, u_hi).map_err(err)?;
    Ok(PySpace { inner })
}

/// Random metric space: `ultrametric`, `euclidean`, `grid` or `graph`.
#[pyfunction]
#[pyo3(signature = (seed, n, model="ultrametric"))]
fn random_metric(seed: u64, n: usize, model: &str) -> PyResult<PySpace> {
    let model = match model {
        "ultrametric" => RandomModel::Ultrametric,
        "euclidean" => RandomModel::Euclidean { dim: 2 },
        "grid" => RandomModel::PerturbedGrid { jitter: 0.3 },
        "graph" => RandomModel::Graph,
        other => return Err(err(format!("unknown model `{other}`"))),
    };
    let inner = random_space(seed, n, model)
        .map_err(err)?
        .into_metric()
        .expect("metric models");
    Ok(PySpace { inner })
}

#[pyfunction]
fn random_quasi(seed: u64, n: usize, k: f64) -> PyResult<PyQuasiSpace> {
    Ok(PyQuasiSpace {
        inner: random_space(seed, n, RandomModel::Quasi { k }).map_err(err)?.into_quasi(),
    })
}

/// Runs the certificate suite; returns `(passed, report JSON)`.
#[pyfunction]
#[pyo3(signature = (suite="default", seed=qmobius_core::verify::DEFAULT_SEED))]
fn verify(py: Python<'_>, suite: &str, seed: u64) -> PyResult<(bool, String)> {
    let suite: Suite = suite.parse().map_err(err)?;
    let (report, passed) = py.detach(|| suite_report(&SuiteOptions::new(suite, seed)));
    Ok((passed, report.to_json()))
}

#[pymodule]
fn qmobius(m: &Bound<'_, PyModule>) -> PyResult<()> {
    m.add_class::<PySpace>()?;
    m.add_class::<PyQuasiSpace>()?;
    m.add_function(wrap_pyfunction!(cantor, m)?)?;
    m.add_function(wrap_pyfunction!(ray, m)?)?;
    m.add_function(wrap_pyfunction!(random_metric, m)?)?;
    m.add_function(wrap_pyfunction!(random_quasi, m)?)?;
    m.add_function(wrap_pyfunction!(verify, m)?)?;
    Ok(())
}
