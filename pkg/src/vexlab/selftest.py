"""Built-in invariant suite run by ``vexlab selftest``."""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from . import eigen, energy, spaces
from .expr import eval_on_grid, grad_on_grid
from .grid import build_grid
from .spaces import ExponentField
from .weights import build_weights


@dataclass
class CheckResult:
    name: str
    passed: bool
    detail: str


def _context(dim: int, n: int, lam: float = 0.5):
    grid = build_grid(dim, [0.0, 1.0], n)
    if dim == 1:
        a_src, p_src, q_src = "abs(x1 - 0.5)^1.5 + 0.05", "2.2 + 0.6*x1", "1.3 + 0.2*x1"
    else:
        a_src, p_src, q_src = "norm(x1 - 0.5, x2 - 0.5)^1.2", "2.3 + 0.3*x1*x2", "1.3 + 0.1*x2"
    a = eval_on_grid(a_src, grid)
    p = ExponentField(eval_on_grid(p_src, grid))
    q = ExponentField(eval_on_grid(q_src, grid))
    weights = build_weights(grid, a, grad_on_grid(a_src, grid), p, grad_on_grid(p_src, grid))
    return energy.EnergyContext(grid, weights, p, q, lam)


def check_trichotomy(rng) -> CheckResult:
    grid = build_grid(1, [0.0, 1.0], 101)
    x = grid.coords[0]
    bad = 0
    for _ in range(100):
        p = ExponentField(2.0 + rng.uniform(0, 1) * np.sin(3 * x + rng.uniform(0, 3)) ** 2 + 0.1)
        u = np.exp(rng.normal(0, 1.5)) * np.cos(rng.uniform(1, 6) * x + rng.uniform(0, 3))
        bad += not spaces.check_trichotomy(grid, u, p).passed
    return CheckResult("trichotomy", bad == 0, f"{bad} violation(s) in 100 fields")


def check_gradients(rng) -> CheckResult:
    worst = 0.0
    for dim, n in ((1, 41), (2, 13)):
        ctx = _context(dim, n)
        grid = ctx.grid
        for _ in range(5):
            u = grid.embed(rng.normal(size=grid.n_interior))
            v = grid.embed(rng.normal(size=grid.n_interior))
            h = 1e-5
            for f, df in ((energy.eval_T, energy.grad_T), (energy.eval_I, energy.grad_I)):
                fd = (f(ctx, u + h * v) - f(ctx, u - h * v)) / (2 * h)
                an = energy.pairing(grid, df(ctx, u), v)
                worst = max(worst, abs(fd - an) / (1 + abs(an)))
    return CheckResult("gradient consistency", worst <= 1e-5, f"worst relative mismatch {worst:.2e}")


def check_simon(rng) -> CheckResult:
    n = 10000
    x = rng.normal(size=(n, 3)) * np.exp(rng.normal(size=(n, 1)))
    y = rng.normal(size=(n, 3)) * np.exp(rng.normal(size=(n, 1)))
    p = np.where(rng.random(n) < 0.5, rng.uniform(1.0 + 1e-6, 2.0, n), rng.uniform(2.0, 4.0, n))
    report = energy.simon_check(x, y, p)
    return CheckResult("simon", report.violations == 0, f"{report.violations} violation(s) in {n} pairs")


def check_homogeneity(rng) -> CheckResult:
    ctx = _context(1, 61)
    grid = ctx.grid
    worst = 0.0
    for _ in range(10):
        u = grid.embed(rng.normal(size=grid.n_interior))
        t = float(rng.uniform(-3, 3))
        n1 = spaces.luxemburg_norm(grid, u, ctx.p)
        worst = max(worst, abs(spaces.luxemburg_norm(grid, t * u, ctx.p) - abs(t) * n1) / max(n1, 1e-300))
        e1 = eigen.e1_norm(ctx, u).total
        worst = max(worst, abs(eigen.e1_norm(ctx, t * u).total - abs(t) * e1) / e1)
    return CheckResult("homogeneity", worst <= 1e-8, f"worst relative deviation {worst:.2e}")


def check_monotonicity(rng) -> CheckResult:
    ctx = _context(2, 13)
    grid = ctx.grid
    bad = 0
    for _ in range(20):
        u = grid.embed(rng.normal(size=grid.n_interior))
        v = grid.embed(rng.normal(size=grid.n_interior))
        bad += not energy.monotonicity_gap(ctx, u, v) > 0
    return CheckResult("monotonicity", bad == 0, f"{bad} nonpositive gap(s) in 20 pairs")


CHECKS = {
    "trichotomy": check_trichotomy,
    "gradient consistency": check_gradients,
    "simon": check_simon,
    "homogeneity": check_homogeneity,
    "monotonicity": check_monotonicity,
}


def run_selftest(name_filter: str | None = None, seed: int = 0) -> list[CheckResult]:
    results = []
    for name, check in CHECKS.items():
        if name_filter and name_filter.lower() not in name:
            continue
        try:
            results.append(check(np.random.default_rng(seed)))
        except Exception as exc:  # a crashing check is a failing check
            results.append(CheckResult(name, False, f"raised {type(exc).__name__}: {exc}"))
    return results
