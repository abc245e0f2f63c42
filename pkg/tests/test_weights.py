import numpy as np
import pytest

from vexlab.expr import eval_on_grid, grad_on_grid
from vexlab.grid import build_grid
from vexlab.spaces import ExponentField
from vexlab.weights import SingularSpec, build_weights, validate_A, validate_P, validate_Q


@pytest.fixture
def grid3():
    return build_grid(3, [0, 1], 9)


def test_weights_formulas(grid3):
    a_src, p_src = "norm(x1 - 0.5, x2 - 0.5, x3 - 0.5)^1.1", "2.2 + 0.1*x1"
    a = eval_on_grid(a_src, grid3)
    p = ExponentField(eval_on_grid(p_src, grid3))
    w = build_weights(grid3, a, grad_on_grid(a_src, grid3), p, grad_on_grid(p_src, grid3))
    r = np.sqrt(sum((c - 0.5) ** 2 for c in grid3.coords))
    pv = p.values
    # |grad a| = 1.1 r^0.1 for a = r^1.1
    np.testing.assert_allclose(w.A, r ** (1.1 * (pv - 1)) * 1.1 * r**0.1, rtol=1e-12, atol=1e-300)
    np.testing.assert_allclose(w.B, r ** (1.1 * pv), rtol=1e-12)
    np.testing.assert_allclose(w.C, r ** (1.1 * (pv - 1)) * 0.1, rtol=1e-12)
    np.testing.assert_allclose(w.D, w.B * 0.1, rtol=1e-12)
    assert all(np.all(f >= 0) for f in w)
    centre = grid3.nearest_node([0.5] * 3)
    assert all(f[centre] == 0 for f in w)


def test_constant_p_kills_C_and_D(grid3):
    a = eval_on_grid("1 + x1", grid3)
    p = ExponentField.constant(grid3, 2.5)
    w = build_weights(grid3, a, grad_on_grid("1 + x1", grid3), p, np.zeros((3, *grid3.shape)))
    assert not w.C.any() and not w.D.any()
    with pytest.raises(ValueError):
        w.B[0, 0, 0] = 1.0


def test_validate_A_accepts_power_of_distance(grid3):
    a = eval_on_grid("norm(x1 - 0.5, x2 - 0.5, x3 - 0.5)^1.1", grid3)
    assert validate_A(grid3, a, SingularSpec((0.5, 0.5, 0.5), 0.25, 1.1)).passed


def test_validate_A_rejects_extra_zero_and_weak_growth(grid3):
    spec = SingularSpec((0.5, 0.5, 0.5), 0.25, 1.1)
    a = eval_on_grid("norm(x1 - 0.5, x2 - 0.5, x3 - 0.5)^1.1 * x1", grid3)
    report = validate_A(grid3, a, spec)
    assert not report.passed
    weak = eval_on_grid("norm(x1 - 0.5, x2 - 0.5, x3 - 0.5)^1.1 * 0.5", grid3)
    assert validate_A(grid3, weak, spec).violations["|a| < |x-x0|^s in the ball"]


def test_validate_A_rejects_outside_centre(grid3):
    a = eval_on_grid("1 + x1", grid3)
    assert not validate_A(grid3, a, SingularSpec((2.0, 0.5, 0.5), 0.25, 1.1)).passed


@pytest.mark.parametrize("s", [1.0, 0.5])
def test_singular_order_must_exceed_one(s):
    with pytest.raises(ValueError):
        SingularSpec((0.5,), 0.2, s)


@pytest.mark.parametrize(
    "pmin,pmax,dim,mode,ok",
    [(2.2, 2.8, 3, "strict", True), (2.0, 2.8, 3, "strict", False), (2.2, 3.0, 3, "strict", False),
     (2.5, 2.5, 2, "strict", False), (2.5, 3.5, 1, "relaxed", True), (1.9, 2.5, 1, "relaxed", False)],
)
def test_validate_P(pmin, pmax, dim, mode, ok):
    assert validate_P(np.array([pmin, pmax]), dim, mode).passed is ok


def test_planar_strict_reports_infeasible():
    report = validate_P(np.array([2.5]), 2, "strict")
    assert any("(P) infeasible" in n for n in report.notes)


def test_validate_Q_chain():
    spec = SingularSpec((0.5, 0.5, 0.5), 0.25, 1.1)
    p = np.full(4, 2.2)
    good = validate_Q(np.array([1.1, 1.21]), p, spec, 3)
    assert good.passed, good.lines()
    # the bound 3 p- / (3 + s p+) for p = 2.5 sits below p- - 1: no admissible q
    bad = validate_Q(np.array([1.3, 1.303]), np.full(4, 2.5), spec, 3)
    failing = [c.name for c in bad.comparisons if not c.holds]
    assert failing == ["min(p-1) < q+"]


def test_report_serialises(grid3):
    report = validate_Q(np.array([1.1, 1.21]), np.full(2, 2.2), SingularSpec((0.5,) * 3, 0.25, 1.1), 3)
    d = report.to_dict()
    assert d["passed"] and len(d["comparisons"]) == 5
    assert report.lines()[0].startswith("(Q) PASS")
