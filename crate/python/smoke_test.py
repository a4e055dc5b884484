"""Smoke test for the `linv` extension module.

Build it first with `pip install --no-build-isolation -e crates/py`, then run `pytest python/`.
"""

from pathlib import Path

import pytest

import linv

FIXTURES = Path(__file__).resolve().parent.parent / "crates" / "core" / "fixtures"


def load(name, precision=None):
    return linv.Problem.load(str(FIXTURES / f"{name}.json"), precision)


def test_gaussian():
    prob = load("qi_p5")
    assert (prob.p, prob.d, prob.d_plus, prob.f) == (5, 1, 0, 1)
    assert all(c["passed"] for c in prob.validate()["checks"])
    out = prob.compute("default", cross_check=True)
    assert out["regular"] and out["e"] == 1
    assert out["certified_precision"] >= 30
    assert all(c["agrees"] for c in out["cross_checks"])


def test_sweep_and_singular_point():
    prob = load("cm")
    rows = prob.sweep(["0", "1", "2/3", "∞"])
    assert len(rows) == 4 and all(r is not None and r["e"] == 1 for r in rows)
    assert prob.cm_line("1") is not None


def test_adjoint_order():
    prob = load("adjcm")
    assert prob.compute("theta")["e"] == 2


def test_errors():
    with pytest.raises(linv.InvalidFixture):
        linv.Problem.from_json('{"p": 5}')
    with pytest.raises(ValueError):
        load("qi_p5").compute("missing")
    assert issubclass(linv.SingularRefinement, linv.LinvError)


def test_precision_override():
    low, high = load("qi_p5", 40), load("qi_p5", 80)
    assert high.precision == 80
    a = low.compute()["value"]
    b = high.compute()["value"]
    assert a.split("+ O(")[0].strip() in b
