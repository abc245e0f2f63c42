import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from vexlab.grid import build_grid, integrate
from vexlab.spaces import (
    ExponentField,
    check_modular_convergence,
    check_trichotomy,
    holder_pairing,
    luxemburg_norm,
    modular,
)

GRID = build_grid(1, [0, 1], 201)
X = GRID.coords[0]


def test_exponent_field_bounds():
    p = ExponentField(2 + X)
    assert p.minus == 2.0 and p.plus == 3.0 and not p.is_constant
    assert ExponentField.constant(GRID, 2.5).is_constant
    with pytest.raises(ValueError):
        ExponentField(np.full(3, 1.0))
    with pytest.raises(ValueError):
        ExponentField(np.array([2.0, np.nan]))


def test_modular_of_constant_field():
    assert modular(GRID, np.full(GRID.shape, 2.0), 3.0) == pytest.approx(8.0)


@pytest.mark.parametrize("p", [1.5, 2.0, 2.5, 3.0, 4.0])
def test_constant_exponent_gives_lp_norm(p, rng):
    u = rng.standard_normal(GRID.shape) * 3
    expected = integrate(GRID, np.abs(u) ** p) ** (1 / p)
    assert luxemburg_norm(GRID, u, p) == pytest.approx(expected, rel=1e-10)


def test_norm_is_fixed_point_of_modular(rng):
    p = ExponentField(2.0 + np.sin(3 * X) ** 2)
    for _ in range(20):
        u = np.exp(rng.normal(0, 2)) * rng.standard_normal(GRID.shape)
        mu = luxemburg_norm(GRID, u, p)
        assert abs(modular(GRID, u / mu, p) - 1) <= 1e-10


def test_zero_field_has_zero_norm():
    assert luxemburg_norm(GRID, np.zeros(GRID.shape), 2.5) == 0.0


@settings(max_examples=40, deadline=None)
@given(
    scale=st.floats(1e-6, 1e6),
    t=st.floats(-100, 100).filter(lambda v: abs(v) > 1e-3),
    amp=st.floats(0, 1.5),
)
def test_norm_homogeneity(scale, t, amp):
    p = ExponentField(2.0 + amp * X)
    u = scale * np.cos(5 * X)
    n1 = luxemburg_norm(GRID, u, p)
    assert luxemburg_norm(GRID, t * u, p) == pytest.approx(abs(t) * n1, rel=1e-9)


@settings(max_examples=40, deadline=None)
@given(scale=st.floats(1e-4, 1e4), amp=st.floats(0.01, 2.0), phase=st.floats(0, 3))
def test_trichotomy_property(scale, amp, phase):
    p = ExponentField(1.5 + amp * np.sin(4 * X + phase) ** 2)
    u = scale * np.sin(7 * X + phase)
    assert check_trichotomy(GRID, u, p).passed


def test_triangle_inequality(rng):
    p = ExponentField(2.2 + X)
    for _ in range(10):
        u, v = rng.standard_normal((2, *GRID.shape))
        assert luxemburg_norm(GRID, u + v, p) <= luxemburg_norm(GRID, u, p) + luxemburg_norm(GRID, v, p) + 1e-12


def test_holder_with_conjugate_exponents(rng):
    p = 2.0 + X
    q = p / (p - 1)
    for _ in range(10):
        u, v = rng.standard_normal((2, *GRID.shape))
        assert holder_pairing(GRID, u, v, p, q).holds


def test_holder_rejects_non_conjugate():
    with pytest.raises(ValueError, match="conjugate"):
        holder_pairing(GRID, X, X, 2.0, 3.0)


def test_modular_convergence_agrees_with_norm():
    p = ExponentField(2.0 + X)
    u = np.sin(np.pi * X)
    conv = check_modular_convergence(GRID, [u + 2.0**-k * X for k in range(40)], u, p)
    assert conv.verdict == "convergence"
    stuck = check_modular_convergence(GRID, [u + X for _ in range(5)], u, p)
    assert stuck.verdict == "no convergence"
