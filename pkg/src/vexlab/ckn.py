"""Empirical constants for the classical and variable-exponent CKN inequalities."""

from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np

from .eigen import sine_samples
from .grid import Grid, discrete_gradient, integrate
from .spaces import ExponentField
from .weights import WeightFields

__all__ = [
    "CknReport",
    "ckn_variable_ratio",
    "ckn_ratios",
    "estimate_beta_ckn",
    "ReplicationReport",
    "replicate_ckn",
    "ClassicalReport",
    "classical_exponent",
    "ckn_classical_check",
    "annular_bumps",
]


@dataclass
class CknReport:
    lhs: float
    rhs_terms: tuple[float, float, float, float]
    sample_id: int | None = None

    @property
    def rhs(self) -> float:
        return float(sum(self.rhs_terms))

    @property
    def ratio(self) -> float:
        if self.rhs <= 0:
            raise ValueError("ratio undefined: right-hand side vanishes")
        return self.lhs / self.rhs


def ckn_variable_ratio(grid: Grid, weights: WeightFields, p, u, sample_id: int | None = None) -> CknReport:
    """Left side int |a|^p |u|^p against the four right-side integrals.

    The right-side terms are, in order, int A|u|^p, int B|grad u|^p,
    int D|u|^(p+1) and int C|u|^(p-1).
    """
    pv = p.values if isinstance(p, ExponentField) else grid.check_field(p, "p")
    u = grid.check_field(u, "u")
    if not np.any(u):
        raise ValueError("u vanishes identically; the ratio is undefined")
    A, B, C, D = weights
    au = np.abs(u)
    grad_len = np.sqrt(np.sum(discrete_gradient(grid, u) ** 2, axis=0))
    lhs = integrate(grid, B * au**pv)
    terms = (
        integrate(grid, A * au**pv),
        integrate(grid, B * grad_len**pv),
        integrate(grid, D * au ** (pv + 1.0)),
        integrate(grid, C * au ** (pv - 1.0)),
    )
    report = CknReport(lhs=lhs, rhs_terms=terms, sample_id=sample_id)
    if report.rhs == 0 and lhs > 0:
        raise ValueError("inconsistent configuration: right-hand side vanishes while the left does not")
    return report


def ckn_ratios(grid: Grid, weights: WeightFields, p, n_samples: int, seed) -> np.ndarray:
    rng = np.random.default_rng(seed)
    ratios = []
    for i, u in enumerate(sine_samples(grid, rng, n_samples)):
        try:
            report = ckn_variable_ratio(grid, weights, p, u, sample_id=i)
        except ValueError:
            continue
        if report.rhs > 0:
            ratios.append(report.ratio)
    return np.asarray(ratios)


def estimate_beta_ckn(grid: Grid, weights: WeightFields, p, n_samples: int = 200, seed=0) -> float:
    """Largest sampled ratio over the sine-mode family."""
    ratios = ckn_ratios(grid, weights, p, n_samples, seed)
    if ratios.size == 0:
        raise ValueError("all samples were degenerate")
    return float(ratios.max())


@dataclass
class ReplicationReport:
    beta: float
    margin: float
    batches: list = field(default_factory=list)  # (seed, max_ratio, n_violations)

    @property
    def fraction_ok(self) -> float:
        if not self.batches:
            return 0.0
        return sum(1 for _, _, v in self.batches if v == 0) / len(self.batches)


def replicate_ckn(grid: Grid, weights: WeightFields, p, n_samples: int = 200, seed: int = 0,
                  repetitions: int = 20, margin: float = 2.0) -> ReplicationReport:
    """Estimate the constant from one batch, then count fresh batches exceeding margin * estimate."""
    beta = estimate_beta_ckn(grid, weights, p, n_samples, seed)
    report = ReplicationReport(beta=beta, margin=margin)
    for k in range(1, repetitions + 1):
        batch_seed = [seed, k]
        ratios = ckn_ratios(grid, weights, p, n_samples, batch_seed)
        report.batches.append((k, float(ratios.max()), int(np.sum(ratios > margin * beta))))
    return report


# -- classical inequality with power weights ----------------------------------------

@dataclass
class ClassicalReport:
    q: float
    lhs: float
    rhs_core: float

    @property
    def ratio(self) -> float:
        return self.lhs / self.rhs_core


def classical_exponent(a_exp: float, b_exp: float, p: float, dim: int) -> float:
    """The exponent q = Np / (N - p(1 + a - b)), after checking the parameter window."""
    if not 1 < p < dim:
        raise ValueError(f"need 1 < p < N, got p={p}, N={dim}")
    if not a_exp < (dim - p) / p:
        raise ValueError(f"need a < (N-p)/p = {(dim - p) / p}, got a={a_exp}")
    if not a_exp <= b_exp <= a_exp + 1:
        raise ValueError(f"need a <= b <= a+1, got a={a_exp}, b={b_exp}")
    denom = dim - p * (1 + a_exp - b_exp)
    if denom <= 0:
        raise ValueError("q denominator N - p(1+a-b) is not positive")
    return dim * p / denom


def _distance(grid: Grid, centre) -> np.ndarray:
    centre = np.zeros(grid.dim) if centre is None else np.asarray(centre, dtype=float).reshape(grid.dim)
    return np.sqrt(sum((c - x) ** 2 for c, x in zip(grid.coords, centre)))


def ckn_classical_check(grid: Grid, u, a_exp: float, b_exp: float, p: float, centre=None) -> ClassicalReport:
    """(int |x|^(-bq)|u|^q)^(p/q) and int |x|^(-ap)|grad u|^p for u vanishing near the centre.

    The power weights are singular at ``centre`` (the origin by default); the
    node sitting there, if any, is left out of the quadrature.
    """
    q = classical_exponent(a_exp, b_exp, p, grid.dim)
    u = grid.check_field(u, "u")
    if not np.any(u):
        raise ValueError("u vanishes identically")
    r = _distance(grid, centre)
    near = r <= max(grid.h) * (1 + 1e-12)
    if np.any(u[near] != 0):
        raise ValueError("u must vanish on a neighbourhood of the singular point")
    with np.errstate(divide="ignore"):
        w_lhs = np.where(r > 0, r ** (-b_exp * q), 0.0) if b_exp * q > 0 else r ** (-b_exp * q)
        w_rhs = np.where(r > 0, r ** (-a_exp * p), 0.0) if a_exp * p > 0 else r ** (-a_exp * p)
    grad_len = np.sqrt(np.sum(discrete_gradient(grid, u) ** 2, axis=0))
    lhs = integrate(grid, w_lhs * np.abs(u) ** q) ** (p / q)
    rhs = integrate(grid, w_rhs * grad_len**p)
    return ClassicalReport(q=q, lhs=lhs, rhs_core=rhs)


def _bump_profile(s):
    """exp(1 - 1/(1 - s^2)) on |s| < 1, zero outside; peak value 1."""
    s = np.asarray(s, dtype=float)
    inside = np.abs(s) < 1
    out = np.zeros_like(s)
    out[inside] = np.exp(1.0 - 1.0 / (1.0 - s[inside] ** 2))
    return out


def annular_bumps(grid: Grid, rng: np.random.Generator, count: int, avoid=None):
    """Smooth bumps supported in balls missing the boundary and the point ``avoid`` (origin by default)."""
    h = max(grid.h)
    lo, hi = np.asarray(grid.lo), np.asarray(grid.hi)
    avoid = np.zeros(grid.dim) if avoid is None else np.asarray(avoid, dtype=float).reshape(grid.dim)
    made = attempts = 0
    while made < count:
        attempts += 1
        if attempts > 1000 * (made + 1):
            raise ValueError("grid too coarse: no ball of radius >= 3h avoids both the boundary and the centre")
        centre = rng.uniform(lo, hi)
        room = min(np.min(centre - lo), np.min(hi - centre)) - h
        radius = min(room, np.linalg.norm(centre - avoid) - 2 * h)
        if radius < 3 * h:
            continue
        radius *= rng.uniform(0.5, 1.0)
        dist = np.sqrt(sum((c - x) ** 2 for c, x in zip(grid.coords, centre)))
        u = _bump_profile(dist / radius)
        u[grid.boundary_mask] = 0.0
        made += 1
        yield u
