//! Python bindings for the `nijenhuis` crate.
//!
//! Verdicts come back as plain dicts built from their serialized form.

use std::path::PathBuf;
use std::sync::Arc;

use nalgebra::{DMatrix, DVector};
use nijenhuis::cli::{self, Command, Overrides};
use nijenhuis::dsl::Coords;
use nijenhuis::fibration::{self, SplitFibration};
use nijenhuis::geometry::{self, NOperatorField, StructureKind, VectorField};
use nijenhuis::liealg::{self, LieAlgebra};
use nijenhuis::sampling::Sampler;
use nijenhuis::tangent::{self, TT2Point};
use pyo3::create_exception;
use pyo3::exceptions::PyValueError;
use pyo3::prelude::*;
use serde::Serialize;

create_exception!(nijenhuis, NijenhuisError, PyValueError);

fn err(e: ::nijenhuis::Error) -> PyErr {
    NijenhuisError::new_err(e.to_string())
}

fn to_dict<T: Serialize>(py: Python<'_>, v: &T) -> PyResult<Py<PyAny>> {
    let text = serde_json::to_string(v).map_err(|e| NijenhuisError::new_err(e.to_string()))?;
    Ok(py.import("json")?.call_method1("loads", (text,))?.unbind())
}

fn rows(m: &DMatrix<f64>) -> Vec<Vec<f64>> {
    (0..m.nrows())
        .map(|i| m.row(i).iter().copied().collect())
        .collect()
}

fn matrix(rows: &[Vec<f64>]) -> PyResult<DMatrix<f64>> {
    let n = rows.len();
    if rows.iter().any(|r| r.len() != n) {
        return Err(NijenhuisError::new_err(format!(
            "expected a square {n}x{n} matrix"
        )));
    }
    Ok(DMatrix::from_fn(n, n, |i, j| rows[i][j]))
}

/// Matrix entry: a number or an expression in the chart coordinates.
#[derive(FromPyObject)]
enum Entry {
    Num(f64),
    Text(String),
}

impl Entry {
    fn text(&self) -> String {
        match self {
            Entry::Num(v) => format!("{v:?}"),
            Entry::Text(s) => s.clone(),
        }
    }
}

fn make_coords(names: Vec<String>) -> PyResult<Arc<Coords>> {
    Coords::new(names).map_err(err)
}

/// Random sample set in a box.
#[pyclass(name = "Sampler", frozen, skip_from_py_object)]
#[derive(Clone)]
struct PySampler {
    inner: Sampler,
}

#[pymethods]
impl PySampler {
    #[new]
    #[pyo3(signature = (dim, lo=-1.0, hi=1.0, count=64, seed=42))]
    fn new(dim: usize, lo: f64, hi: f64, count: usize, seed: u64) -> PyResult<Self> {
        let inner = Sampler::new(vec![lo; dim], vec![hi; dim], count, seed).map_err(err)?;
        Ok(Self { inner })
    }

    #[getter]
    fn dim(&self) -> usize {
        self.inner.dim()
    }

    fn points(&self) -> Vec<Vec<f64>> {
        self.inner.points()
    }

    /// Same samples lifted to the doubled chart.
    fn lifted(&self) -> Self {
        Self {
            inner: tangent::lifted_sampler(&self.inner),
        }
    }

    fn __repr__(&self) -> String {
        format!("Sampler(dim={})", self.inner.dim())
    }
}

#[pyclass(name = "VectorField", frozen, skip_from_py_object)]
#[derive(Clone)]
struct PyVectorField {
    inner: VectorField,
}

#[pymethods]
impl PyVectorField {
    #[new]
    fn new(coords: Vec<String>, components: Vec<Entry>) -> PyResult<Self> {
        let texts: Vec<String> = components.iter().map(Entry::text).collect();
        let inner = VectorField::parse(make_coords(coords)?, &texts).map_err(err)?;
        Ok(Self { inner })
    }

    #[getter]
    fn dim(&self) -> usize {
        self.inner.dim()
    }

    #[getter]
    fn coords(&self) -> Vec<String> {
        self.inner.coords().names().to_vec()
    }

    fn components(&self) -> Vec<String> {
        self.inner.display()
    }

    fn eval(&self, p: Vec<f64>) -> PyResult<Vec<f64>> {
        Ok(self.inner.eval(&p).map_err(err)?.as_slice().to_vec())
    }

    /// `[self, other]` as a symbolic field.
    fn bracket(&self, other: &PyVectorField) -> PyResult<Self> {
        let inner = self.inner.bracket_field(&other.inner).map_err(err)?;
        Ok(Self { inner })
    }

    /// Complete lift to the doubled chart.
    fn complete_lift(&self) -> PyResult<Self> {
        let inner = tangent::complete_lift_vf(&self.inner).map_err(err)?;
        Ok(Self { inner })
    }

    fn __repr__(&self) -> String {
        format!("VectorField({:?})", self.inner.display())
    }
}

/// Field of endomorphisms `N` of the tangent bundle on a chart.
#[pyclass(name = "Operator", frozen, skip_from_py_object)]
#[derive(Clone)]
struct PyOperator {
    inner: NOperatorField,
}

#[pymethods]
impl PyOperator {
    #[new]
    fn new(coords: Vec<String>, matrix: Vec<Vec<Entry>>) -> PyResult<Self> {
        let texts: Vec<Vec<String>> = matrix
            .iter()
            .map(|r| r.iter().map(Entry::text).collect())
            .collect();
        let inner = NOperatorField::parse(make_coords(coords)?, &texts).map_err(err)?;
        Ok(Self { inner })
    }

    #[getter]
    fn dim(&self) -> usize {
        self.inner.dim()
    }

    #[getter]
    fn coords(&self) -> Vec<String> {
        self.inner.coords().names().to_vec()
    }

    fn entries(&self) -> Vec<Vec<String>> {
        self.inner.display()
    }

    fn eval(&self, p: Vec<f64>) -> PyResult<Vec<Vec<f64>>> {
        Ok(rows(&self.inner.eval(&p).map_err(err)?))
    }

    fn apply(&self, x: &PyVectorField) -> PyResult<PyVectorField> {
        let inner = self.inner.apply_field(&x.inner).map_err(err)?;
        Ok(PyVectorField { inner })
    }

    /// Torsion tensor on tangent vectors `u`, `v` at `p`.
    fn torsion(&self, u: Vec<f64>, v: Vec<f64>, p: Vec<f64>) -> PyResult<Vec<f64>> {
        Ok(geometry::torsion_tensor(&self.inner, &u, &v, &p)
            .map_err(err)?
            .as_slice()
            .to_vec())
    }

    /// Torsion from the bracket definition on fields `x`, `y` at `p`.
    fn torsion_definition(
        &self,
        x: &PyVectorField,
        y: &PyVectorField,
        p: Vec<f64>,
    ) -> PyResult<Vec<f64>> {
        let t = geometry::torsion_definition(&self.inner, &x.inner, &y.inner, &p).map_err(err)?;
        Ok(t.as_slice().to_vec())
    }

    /// `[X, Y]_N = [NX, Y] + [X, NY] - N[X, Y]` at `p`.
    fn contracted_bracket(
        &self,
        x: &PyVectorField,
        y: &PyVectorField,
        p: Vec<f64>,
    ) -> PyResult<Vec<f64>> {
        let b = geometry::contracted_bracket(&self.inner, &x.inner, &y.inner, &p).map_err(err)?;
        Ok(b.as_slice().to_vec())
    }

    #[pyo3(signature = (sampler, tol=1e-9))]
    fn is_nijenhuis(&self, py: Python<'_>, sampler: &PySampler, tol: f64) -> PyResult<Py<PyAny>> {
        let v = geometry::is_nijenhuis(&self.inner, &sampler.inner, tol).map_err(err)?;
        to_dict(py, &v)
    }

    /// `kind` is one of `almost_complex`, `almost_product`, `almost_tangent`.
    #[pyo3(signature = (kind, sampler, tol=1e-9))]
    fn check_structure(
        &self,
        py: Python<'_>,
        kind: &str,
        sampler: &PySampler,
        tol: f64,
    ) -> PyResult<Py<PyAny>> {
        let kind = StructureKind::from_name(kind)
            .ok_or_else(|| NijenhuisError::new_err(format!("unknown structure `{kind}`")))?;
        let v = geometry::check_structure(&self.inner, kind, &sampler.inner, tol).map_err(err)?;
        to_dict(py, &v)
    }

    fn tangent_lift(&self) -> PyResult<Self> {
        let inner = tangent::tangent_lift_n(&self.inner).map_err(err)?;
        Ok(Self { inner })
    }

    /// Bracket, operator and torsion lift identities on `sampler`, which
    /// lives on the base chart.
    #[pyo3(signature = (x, y, sampler, tol=1e-9))]
    fn verify_lift_identities(
        &self,
        py: Python<'_>,
        x: &PyVectorField,
        y: &PyVectorField,
        sampler: &PySampler,
        tol: f64,
    ) -> PyResult<Py<PyAny>> {
        let lifted = tangent::lifted_sampler(&sampler.inner);
        let v = tangent::verify_lift_identities(&self.inner, &x.inner, &y.inner, &lifted, tol)
            .map_err(err)?;
        to_dict(py, &v)
    }

    /// Projectability along the split `(x, y)` with `base_dim` base
    /// coordinates. The projected operator, if any, is under `"projected"`.
    #[pyo3(signature = (base_dim, sampler, tol=1e-9, anchor=None))]
    fn check_projectable(
        &self,
        py: Python<'_>,
        base_dim: usize,
        sampler: &PySampler,
        tol: f64,
        anchor: Option<Vec<f64>>,
    ) -> PyResult<Py<PyAny>> {
        let fib = split(base_dim, self.inner.dim(), anchor)?;
        let v =
            fibration::check_projectable(&self.inner, &fib, &sampler.inner, tol).map_err(err)?;
        let out = to_dict(py, &v)?;
        let projected = v.projected.map(|inner| PyOperator { inner });
        out.bind(py).set_item("projected", projected)?;
        Ok(out)
    }

    /// Torsion verticality against the base torsion; fails on a
    /// non-projectable operator.
    #[pyo3(signature = (base_dim, sampler, tol=1e-9, anchor=None))]
    fn check_projection(
        &self,
        py: Python<'_>,
        base_dim: usize,
        sampler: &PySampler,
        tol: f64,
        anchor: Option<Vec<f64>>,
    ) -> PyResult<Py<PyAny>> {
        let fib = split(base_dim, self.inner.dim(), anchor)?;
        let v =
            fibration::check_theorem_main(&self.inner, &fib, &sampler.inner, tol).map_err(err)?;
        to_dict(py, &v)
    }

    fn __repr__(&self) -> String {
        format!("Operator({:?})", self.inner.display())
    }
}

fn split(base_dim: usize, dim: usize, anchor: Option<Vec<f64>>) -> PyResult<SplitFibration> {
    match anchor {
        Some(a) => SplitFibration::with_anchor(base_dim, a),
        None => SplitFibration::new(base_dim, dim.saturating_sub(base_dim)),
    }
    .map_err(err)
}

/// `[X, Y]` at `p`.
#[pyfunction]
fn lie_bracket(x: &PyVectorField, y: &PyVectorField, p: Vec<f64>) -> PyResult<Vec<f64>> {
    Ok(geometry::lie_bracket(&x.inner, &y.inner, &p)
        .map_err(err)?
        .as_slice()
        .to_vec())
}

/// `(x, ẋ, δx, δẋ) -> (x, δx, ẋ, δẋ)`.
#[pyfunction]
#[allow(clippy::type_complexity)]
fn canonical_flip(
    x: Vec<f64>,
    xdot: Vec<f64>,
    deltax: Vec<f64>,
    deltaxdot: Vec<f64>,
) -> PyResult<(Vec<f64>, Vec<f64>, Vec<f64>, Vec<f64>)> {
    let w = tangent::canonical_flip(&TT2Point::new(x, xdot, deltax, deltaxdot).map_err(err)?);
    Ok((w.x, w.xdot, w.deltax, w.deltaxdot))
}

/// Real Lie algebra given by structure constants `c[k][i][j]`.
#[pyclass(name = "LieAlgebra", frozen, skip_from_py_object)]
#[derive(Clone)]
struct PyLieAlgebra {
    inner: LieAlgebra,
}

#[pymethods]
impl PyLieAlgebra {
    #[new]
    fn new(name: String, structure_constants: Vec<Vec<Vec<f64>>>) -> PyResult<Self> {
        let inner = LieAlgebra::new(name, &structure_constants).map_err(err)?;
        Ok(Self { inner })
    }

    /// `so3`, `affine_2d`, `heisenberg_3` or `abelian_<n>`.
    #[staticmethod]
    fn catalogue(name: &str) -> PyResult<Self> {
        let inner = LieAlgebra::catalogue(name).map_err(err)?;
        Ok(Self { inner })
    }

    #[getter]
    fn name(&self) -> String {
        self.inner.name().to_string()
    }

    #[getter]
    fn dim(&self) -> usize {
        self.inner.dim()
    }

    fn structure_constants(&self) -> Vec<Vec<Vec<f64>>> {
        self.inner.structure_constants()
    }

    fn direct_sum(&self, other: &PyLieAlgebra) -> Self {
        Self {
            inner: self.inner.direct_sum(&other.inner),
        }
    }

    fn bracket(&self, x: Vec<f64>, y: Vec<f64>) -> PyResult<Vec<f64>> {
        let b = liealg::alg_bracket(&self.inner, &DVector::from_vec(x), &DVector::from_vec(y))
            .map_err(err)?;
        Ok(b.as_slice().to_vec())
    }

    fn torsion(&self, n: Vec<Vec<f64>>, x: Vec<f64>, y: Vec<f64>) -> PyResult<Vec<f64>> {
        let t = liealg::alg_torsion(
            &self.inner,
            &matrix(&n)?,
            &DVector::from_vec(x),
            &DVector::from_vec(y),
        )
        .map_err(err)?;
        Ok(t.as_slice().to_vec())
    }

    #[pyo3(signature = (n, tol=liealg::DATUM_TOL))]
    fn is_nijenhuis(&self, py: Python<'_>, n: Vec<Vec<f64>>, tol: f64) -> PyResult<Py<PyAny>> {
        let v = liealg::alg_is_nijenhuis(&self.inner, &matrix(&n)?, tol).map_err(err)?;
        to_dict(py, &v)
    }

    fn __repr__(&self) -> String {
        format!(
            "LieAlgebra({:?}, dim={})",
            self.inner.name(),
            self.inner.dim()
        )
    }
}

/// Runs a CLI command on a problem file and returns `(exit_code, report)`
/// with the report as JSON text.
#[pyfunction]
#[pyo3(signature = (command, file, operator=None, tol=None, seed=None, samples=None))]
fn run(
    command: &str,
    file: PathBuf,
    operator: Option<&str>,
    tol: Option<f64>,
    seed: Option<u64>,
    samples: Option<usize>,
) -> PyResult<(i32, String)> {
    let cmd = match command {
        "torsion" => Command::Torsion,
        "lift" => Command::Lift,
        "project" => Command::Project,
        "liealg" => Command::Liealg,
        "verify-all" => Command::VerifyAll,
        other => {
            return Err(NijenhuisError::new_err(format!(
                "unknown command `{other}`"
            )))
        }
    };
    let overrides = Overrides { tol, seed, samples };
    let report = cli::execute(cmd, &file, operator, &overrides);
    Ok((report.exit_code, report.to_json()))
}

#[pymodule(name = "nijenhuis")]
pub fn nijenhuis_module(m: &Bound<'_, PyModule>) -> PyResult<()> {
    m.add("NijenhuisError", m.py().get_type::<NijenhuisError>())?;
    m.add_class::<PySampler>()?;
    m.add_class::<PyVectorField>()?;
    m.add_class::<PyOperator>()?;
    m.add_class::<PyLieAlgebra>()?;
    m.add_function(wrap_pyfunction!(lie_bracket, m)?)?;
    m.add_function(wrap_pyfunction!(canonical_flip, m)?)?;
    m.add_function(wrap_pyfunction!(run, m)?)?;
    Ok(())
}
