import numpy as np
import pytest

from conftest import make_context, random_dirichlet
from vexlab.energy import (
    dual_norm,
    energy_terms,
    eval_I,
    eval_T,
    grad_I,
    grad_T,
    monotonicity_gap,
    pairing,
    simon_check,
    simon_constant,
)


def direct_energy_1d(ctx, u):
    """Loop-based T and q-term for a 1D context, written without the sparse operators."""
    x = ctx.grid.axes[0]
    h = x[1] - x[0]
    n = len(x)
    A, B, C, D = ctx.weights
    p, q = ctx.p.values, ctx.q.values
    total_T = total_q = 0.0
    for i in range(n):
        if i == 0:
            du = (u[1] - u[0]) / h
        elif i == n - 1:
            du = (u[-1] - u[-2]) / h
        else:
            du = (u[i + 1] - u[i - 1]) / (2 * h)
        w = h / 2 if i in (0, n - 1) else h
        au = abs(u[i])
        total_T += w * (B[i] * abs(du) ** p[i] / p[i] + A[i] * au ** p[i] / p[i]
                        + D[i] * au ** (p[i] + 1) / (p[i] + 1) + C[i] * au ** (p[i] - 1) / (p[i] - 1))
        total_q += w * au ** q[i] / q[i]
    return total_T, total_q


def test_energy_matches_direct_loop(ctx1d, rng):
    for _ in range(5):
        u = random_dirichlet(ctx1d.grid, rng)
        T, Q = direct_energy_1d(ctx1d, u)
        assert eval_T(ctx1d, u) == pytest.approx(T, rel=1e-12)
        assert eval_I(ctx1d, u) == pytest.approx(T - ctx1d.lam * Q, rel=1e-12)


def test_zero_field():
    ctx = make_context(1, 21, "abs(x1 - 0.5)^1.5", "2.5", "1.3 + 0.2*x1", lam=1.0)
    u = np.zeros(ctx.grid.shape)
    assert eval_T(ctx, u) == 0.0 and eval_I(ctx, u) == 0.0
    assert not grad_I(ctx, u).any()


@pytest.mark.parametrize("which", ["1d", "2d"])
def test_gradients_match_central_differences(which, ctx1d, ctx2d, rng):
    ctx = ctx1d if which == "1d" else ctx2d
    grid = ctx.grid
    h = 1e-5
    for _ in range(10):
        u = random_dirichlet(grid, rng)
        v = random_dirichlet(grid, rng)
        for f, df in ((eval_T, grad_T), (eval_I, grad_I)):
            fd = (f(ctx, u + h * v) - f(ctx, u - h * v)) / (2 * h)
            an = pairing(grid, df(ctx, u), v)
            assert abs(fd - an) <= 1e-5 * max(1.0, abs(an))


def test_per_term_scaling_under_constant_p(rng):
    ctx = make_context(1, 51, "abs(x1 - 0.5)^1.5 + 0.1", "2.5 + 0*x1", "1.4", lam=0.5)
    u = random_dirichlet(ctx.grid, rng)
    t1, t2 = energy_terms(ctx, u), energy_terms(ctx, 2 * u)
    assert t2.gradient == pytest.approx(2**2.5 * t1.gradient, rel=1e-12)
    assert t2.a_term == pytest.approx(2**2.5 * t1.a_term, rel=1e-12)
    assert t2.q_term == pytest.approx(2**1.4 * t1.q_term, rel=1e-12)


def test_dirichlet_class_enforced(ctx1d):
    u = np.ones(ctx1d.grid.shape)
    with pytest.raises(ValueError, match="boundary"):
        eval_T(ctx1d, u)


def test_interior_vector_accepted(ctx1d, rng):
    v = rng.standard_normal(ctx1d.grid.n_interior)
    assert eval_T(ctx1d, v) == eval_T(ctx1d, ctx1d.grid.embed(v))


def test_negative_lambda_rejected(ctx1d):
    with pytest.raises(ValueError):
        ctx1d.with_lambda(-1.0)


def test_dual_norm_does_not_depend_on_mesh():
    # the dual vector of the L2 pairing with f is w * f; its dual norm is |f|_L2
    vals = []
    for n in (51, 201):
        ctx = make_context(1, n, "1", "2.5", "1.5")
        grid = ctx.grid
        f = np.sin(np.pi * grid.coords[0])
        g = grid.weights[grid.interior_mask] * grid.restrict(f)
        vals.append(dual_norm(grid, g))
    assert vals == pytest.approx([np.sqrt(0.5)] * 2, rel=1e-2)


def test_monotonicity_gap_positive(ctx2d, rng):
    for _ in range(10):
        u, v = random_dirichlet(ctx2d.grid, rng), random_dirichlet(ctx2d.grid, rng, 0.1)
        assert monotonicity_gap(ctx2d, u, v) > 0


def test_monotonicity_gap_needs_distinct(ctx1d, rng):
    u = random_dirichlet(ctx1d.grid, rng)
    with pytest.raises(ValueError):
        monotonicity_gap(ctx1d, u, u)


# -- Simon inequalities ------------------------------------------------------------

@pytest.mark.parametrize("p,expected", [(2.0, 4.0), (3.0, 8.0), (1.5, 2.0), (1.25, 4.0)])
def test_simon_constant(p, expected):
    assert simon_constant(p) == expected


def test_simon_equality_case_at_p2():
    # for p = 2, |x - y|^2 = <x - y, x - y> and the constant 4 leaves room
    x, y = np.array([1.0, 0, 0]), np.array([0, 1.0, 0])
    r = simon_check(x, y, 2.0)
    assert r.lhs == pytest.approx(2.0) and r.rhs == pytest.approx(8.0) and r.holds


def test_simon_handles_zero_vectors():
    z = np.zeros(3)
    for p in (1.5, 3.0):
        r = simon_check(z, z, p)
        assert r.holds and r.lhs == 0
        assert simon_check(z, np.ones(3), p).holds


def test_simon_random_batch(rng):
    x = rng.standard_normal((20000, 3)) * np.exp(rng.standard_normal((20000, 1)))
    y = rng.standard_normal((20000, 3)) * np.exp(rng.standard_normal((20000, 1)))
    p = rng.uniform(1.01, 4.0, 20000)
    assert simon_check(x, y, p).violations == 0


def test_simon_rejects_p_at_most_one():
    with pytest.raises(ValueError):
        simon_check(np.ones(3), np.zeros(3), 1.0)
