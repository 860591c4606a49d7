"""Smoke test for the nijenhuis Python bindings.

Build and install first, e.g. `pip install --no-build-isolation -e crates/python`.
"""

import json
import math
import pathlib
import sys

import nijenhuis as nj

ROOT = pathlib.Path(__file__).resolve().parent.parent
PROBLEMS = ROOT / "crates" / "core" / "problems"


def close(a, b, tol=1e-9):
    return all(abs(x - y) <= tol * (1 + abs(x)) for x, y in zip(a, b)) and len(a) == len(b)


def main():
    s = nj.Sampler(2, count=32, seed=7)
    assert s.dim == 2 and len(s.points()) == 32

    shear = nj.Operator(["x", "y"], [[0, 1], ["x", 0]])
    v = shear.is_nijenhuis(s)
    assert not v["holds"] and v["worst"]["norm"] > 0.1, v
    assert close(shear.torsion([1, 0], [0, 1], [0.3, -0.2]), [0.0, 1.0])

    diag = nj.Operator(["x", "y"], [["x", 0], [0, "y^2"]])
    assert diag.is_nijenhuis(s)["holds"]

    x = nj.VectorField(["x", "y"], ["y", "sin(x)"])
    y = nj.VectorField(["x", "y"], [1, "x*y"])
    p = [0.4, -0.7]
    t_def = shear.torsion_definition(x, y, p)
    t_ten = shear.torsion(x.eval(p), y.eval(p), p)
    assert close(t_def, t_ten), (t_def, t_ten)
    assert close(nj.lie_bracket(x, y, p), x.bracket(y).eval(p))

    lifted = diag.tangent_lift()
    assert lifted.dim == 4 and lifted.coords == ["x1", "x2", "v1", "v2"]
    assert lifted.is_nijenhuis(s.lifted())["holds"]
    lift = shear.verify_lift_identities(x, y, s)
    assert lift["holds"], lift

    assert nj.canonical_flip([1.0], [2.0], [3.0], [4.0]) == ([1.0], [3.0], [2.0], [4.0])

    block = nj.Operator(["x", "y", "z"], [["x", 0, 0], [0, "y", 0], ["z", "x", "x*z"]])
    pv = block.check_projectable(2, nj.Sampler(3, count=16))
    assert pv["holds"] and pv["projected"].entries() == [["x", "0"], ["0", "y"]], pv
    bad = nj.Operator(["x", "y", "z"], [["x", "z", 0], [0, "y", 0], [0, 0, 1]])
    assert not bad.check_projectable(2, nj.Sampler(3, count=16))["holds"]
    try:
        bad.check_projection(2, nj.Sampler(3, count=16))
        raise AssertionError("expected NijenhuisError")
    except nj.NijenhuisError:
        pass

    so3 = nj.LieAlgebra.catalogue("so3")
    assert so3.dim == 3 and close(so3.bracket([1, 0, 0], [0, 1, 0]), [0, 0, 1])
    assert so3.is_nijenhuis([[1, 0, 0], [0, 1, 0], [0, 0, 1]])["holds"]
    w = so3.is_nijenhuis([[1, 0, 0], [0, 2, 0], [0, 0, 3]])
    assert not w["holds"] and w["witness"][0] == [0, 1], w
    aff = nj.LieAlgebra("aff", [[[0, 0], [0, 0]], [[0, 1], [-1, 0]]])
    assert close(aff.bracket([1, 0], [0, 1]), [0, 1])
    try:
        nj.LieAlgebra("bad", [[[0, 1], [1, 0]], [[0, 0], [0, 0]]])
        raise AssertionError("expected NijenhuisError")
    except nj.NijenhuisError as e:
        assert "antisymmetry" in str(e)

    try:
        nj.Operator(["x"], [["log(x"]])
        raise AssertionError("expected NijenhuisError")
    except ValueError:
        pass

    for name, cmd, code in [
        ("flat_complex", "verify-all", 0),
        ("counterexample_x_shear", "torsion", 1),
        ("so3_diag", "liealg", 1),
        ("empty", "verify-all", 2),
    ]:
        got, text = nj.run(cmd, str(PROBLEMS / f"{name}.toml"))
        report = json.loads(text)
        assert got == code == report["exit_code"], (name, got, report["errors"])

    assert not math.isnan(v["worst"]["norm"])
    print("python smoke test: ok")
    return 0


if __name__ == "__main__":
    sys.exit(main())
