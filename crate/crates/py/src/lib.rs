//! Python bindings: load a fixture, validate it, compute ℒ-invariants.

use linv_core::engine::{Engine, EngineError, Verdict};
use linv_core::fixtures::{load_fixture_with_precision, validate_arithmetic, FixtureError, GaloisProblem, Param};
use linv_core::galois::GaloisError;
use linv_core::linalg::LinalgError;
use linv_core::padic::{FieldElement, PadicError};
use linv_core::special::{cm_data, cm_line, cross_checks, LineValue};
use num_bigint::BigInt;
use pyo3::create_exception;
use pyo3::exceptions::{PyException, PyValueError};
use pyo3::prelude::*;
use pyo3::types::PyList;

create_exception!(linv, LinvError, PyException);
create_exception!(linv, InvalidFixture, LinvError);
create_exception!(linv, SingularRefinement, LinvError);
create_exception!(linv, PrecisionShortfall, LinvError);

fn fixture_err(e: FixtureError) -> PyErr {
    InvalidFixture::new_err(e.to_string())
}

fn engine_err(e: EngineError) -> PyErr {
    match e {
        EngineError::Singular(name) => SingularRefinement::new_err(name),
        e @ (EngineError::Padic(PadicError::PrecisionExhausted)
        | EngineError::NoRegularRefinement { .. }
        | EngineError::Linalg(LinalgError::AmbiguousRank { .. })
        | EngineError::Linalg(LinalgError::Padic(PadicError::PrecisionExhausted))
        | EngineError::Galois(GaloisError::Linalg(LinalgError::AmbiguousRank { .. }))) => {
            PrecisionShortfall::new_err(e.to_string())
        }
        e => LinvError::new_err(e.to_string()),
    }
}

fn to_py(py: Python<'_>, value: &impl serde::Serialize) -> PyResult<Py<PyAny>> {
    let text = serde_json::to_string(value).map_err(|e| LinvError::new_err(e.to_string()))?;
    Ok(py.import("json")?.call_method1("loads", (text,))?.unbind())
}

fn parse_param(prob: &GaloisProblem, token: &str) -> PyResult<Param> {
    let token = token.trim();
    if matches!(token, "∞" | "inf" | "infinity") {
        return Ok(Param::Infinity);
    }
    let (num, den) = token.split_once('/').unwrap_or((token, "1"));
    let parse = |s: &str| {
        s.trim()
            .parse::<BigInt>()
            .map_err(|_| PyValueError::new_err(format!("bad parameter `{token}`")))
    };
    let (num, den) = (parse(num)?, parse(den)?);
    if den == BigInt::from(0) {
        return Ok(Param::Infinity);
    }
    let q = num_rational::BigRational::new(num, den);
    Ok(Param::Finite(FieldElement::from_rational(&prob.working, &q)))
}

/// A loaded fixture.
#[pyclass(module = "linv", frozen)]
struct Problem {
    inner: GaloisProblem,
}

#[pymethods]
impl Problem {
    #[staticmethod]
    #[pyo3(signature = (path, precision = None))]
    fn load(path: &str, precision: Option<i64>) -> PyResult<Self> {
        let bytes = std::fs::read(path).map_err(|e| InvalidFixture::new_err(format!("{path}: {e}")))?;
        let inner = load_fixture_with_precision(&bytes, precision).map_err(fixture_err)?;
        Ok(Problem { inner })
    }

    #[staticmethod]
    #[pyo3(signature = (text, precision = None))]
    fn from_json(text: &str, precision: Option<i64>) -> PyResult<Self> {
        let inner = load_fixture_with_precision(text.as_bytes(), precision).map_err(fixture_err)?;
        Ok(Problem { inner })
    }

    #[getter]
    fn p(&self) -> u64 {
        self.inner.p
    }

    #[getter]
    fn precision(&self) -> i64 {
        self.inner.precision
    }

    #[getter]
    fn d(&self) -> usize {
        self.inner.d()
    }

    #[getter]
    fn d_plus(&self) -> usize {
        self.inner.d_plus()
    }

    #[getter]
    fn f(&self) -> usize {
        self.inner.f()
    }

    #[getter]
    fn refinements(&self) -> Vec<String> {
        self.inner.refinements.iter().map(|r| r.name.clone()).collect()
    }

    /// Arithmetic consistency checks as a dict with `checks` and `warnings`.
    fn validate(&self, py: Python<'_>) -> PyResult<Py<PyAny>> {
        to_py(py, &validate_arithmetic(&self.inner))
    }

    /// Report for one stored refinement; singular refinements raise `SingularRefinement`.
    #[pyo3(signature = (refinement = None, cross_check = false))]
    fn compute(&self, py: Python<'_>, refinement: Option<&str>, cross_check: bool) -> PyResult<Py<PyAny>> {
        let r = match refinement {
            Some(name) => self
                .inner
                .refinement(name)
                .ok_or_else(|| PyValueError::new_err(format!("no refinement `{name}`")))?,
            None => self.inner.refinements.first().ok_or_else(|| PyValueError::new_err("fixture has no refinements"))?,
        };
        let engine = Engine::new(&self.inner).map_err(engine_err)?;
        let verdict = engine.l_invariant(r).map_err(engine_err)?;
        let summary = to_py(py, &verdict.summary(&self.inner))?;
        let report = verdict.into_report().map_err(engine_err)?;
        if cross_check {
            let checks: Vec<_> = cross_checks(&self.inner, r, &report)
                .into_iter()
                .map(|c| c.map_err(LinvError::new_err))
                .collect::<PyResult<_>>()?;
            summary.bind(py).set_item("cross_checks", to_py(py, &checks)?)?;
        }
        Ok(summary)
    }

    /// Engine reports along the stored family, one per parameter (`"∞"` allowed); `None` marks a singular point.
    #[pyo3(signature = (values, t = None))]
    fn sweep(&self, py: Python<'_>, values: Vec<String>, t: Option<&str>) -> PyResult<Py<PyList>> {
        let family = self
            .inner
            .special
            .family
            .as_ref()
            .ok_or_else(|| PyValueError::new_err("fixture has no family"))?;
        let t = match t {
            Some(t) => match parse_param(&self.inner, t)? {
                Param::Finite(x) => Some(x),
                Param::Infinity => return Err(PyValueError::new_err("t must be finite")),
            },
            None => None,
        };
        let engine = Engine::new(&self.inner).map_err(engine_err)?;
        let out = PyList::empty(py);
        for token in &values {
            let s = parse_param(&self.inner, token)?;
            match engine.l_invariant(&family.refinement(&s, t.as_ref())).map_err(engine_err)? {
                Verdict::Regular(rep) => out.append(to_py(py, &Verdict::Regular(rep).summary(&self.inner))?)?,
                Verdict::Singular { .. } => out.append(py.None())?,
            }
        }
        Ok(out.unbind())
    }

    /// Closed-form value on the CM line at `s`, as a p-adic string; `None` at the singular slope.
    fn cm_line(&self, s: &str) -> PyResult<Option<String>> {
        let data = cm_data(&self.inner).map_err(|e| LinvError::new_err(e.to_string()))?;
        let s = parse_param(&self.inner, s)?;
        match cm_line(&data, &s).map_err(|e| LinvError::new_err(e.to_string()))? {
            LineValue::Value(v) => Ok(Some(v.to_string())),
            LineValue::Singular => Ok(None),
        }
    }

    fn to_json(&self) -> String {
        self.inner.to_json_string()
    }

    fn __repr__(&self) -> String {
        let p = &self.inner;
        format!("Problem(p={}, d={}, d_plus={}, f={}, precision={})", p.p, p.d(), p.d_plus(), p.f(), p.precision)
    }
}

#[pymodule]
fn linv(m: &Bound<'_, PyModule>) -> PyResult<()> {
    let py = m.py();
    m.add_class::<Problem>()?;
    m.add("LinvError", py.get_type::<LinvError>())?;
    m.add("InvalidFixture", py.get_type::<InvalidFixture>())?;
    m.add("SingularRefinement", py.get_type::<SingularRefinement>())?;
    m.add("PrecisionShortfall", py.get_type::<PrecisionShortfall>())?;
    Ok(())
}
