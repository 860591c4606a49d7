use std::ffi::CString;

use pyo3::prelude::*;
use pyo3::types::PyDict;

fn with_module<F: FnOnce(Python<'_>, &Bound<'_, PyDict>)>(f: F) {
    Python::initialize();
    Python::attach(|py| {
        let m = PyModule::new(py, "nijenhuis").unwrap();
        nijenhuis_python::nijenhuis_module(&m).unwrap();
        let globals = PyDict::new(py);
        globals.set_item("nj", m).unwrap();
        f(py, &globals);
    });
}

fn run(py: Python<'_>, globals: &Bound<'_, PyDict>, code: &str) {
    let code = CString::new(code).unwrap();
    if let Err(e) = py.run(&code, Some(globals), None) {
        panic!("{e}");
    }
}

#[test]
fn operators_and_verdicts() {
    with_module(|py, g| {
        run(
            py,
            g,
            r#"
s = nj.Sampler(2, count=16, seed=3)
n = nj.Operator(["x", "y"], [[0, 1], ["x", 0]])
v = n.is_nijenhuis(s)
assert not v["holds"] and v["worst"]["torsion_value"] == [0.0, 1.0], v
assert n.tangent_lift().entries()[3] == ["v1", "0", "x1", "0"]
d = nj.Operator(["x", "y"], [["x", 0], [0, "y^2"]])
assert d.is_nijenhuis(s)["holds"]
"#,
        );
    });
}

#[test]
fn errors_map_to_python_exceptions() {
    with_module(|py, g| {
        run(
            py,
            g,
            r#"
for bad in (lambda: nj.Operator(["x"], [["1/"]]),
            lambda: nj.Operator(["x", "x"], [[1, 0], [0, 1]]),
            lambda: nj.LieAlgebra.catalogue("e8"),
            lambda: nj.run("nope", "x.toml")):
    try:
        bad()
        raise AssertionError("no error")
    except nj.NijenhuisError:
        pass
"#,
        );
    });
}

#[test]
fn lie_algebra_and_cli() {
    let problem = concat!(
        env!("CARGO_MANIFEST_DIR"),
        "/../core/problems/so3_diag.toml"
    );
    with_module(|py, g| {
        g.set_item("problem", problem).unwrap();
        run(
            py,
            g,
            r#"
import json
so3 = nj.LieAlgebra.catalogue("so3")
assert so3.torsion([[1, 0, 0], [0, 2, 0], [0, 0, 3]], [1, 0, 0], [0, 1, 0]) == [0.0, 0.0, 2.0]
code, text = nj.run("liealg", problem)
assert code == 1 and json.loads(text)["checks"][0]["witness"] == "T(e1, e2) = [0, 0, 1]"
"#,
        );
    });
}
