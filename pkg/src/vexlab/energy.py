"""The weighted energy T, the eigen-energy I_lambda and their exact discrete gradients.

Both functionals are discretized first (trapezoidal quadrature, finite-difference
gradients from :mod:`vexlab.grid`) and then differentiated exactly, so the dual
vectors returned here are true gradients of the discrete energies with respect
to the interior nodal values.
"""

from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np

from .grid import Grid
from .spaces import ExponentField
from .weights import WeightFields

__all__ = [
    "EnergyContext",
    "EnergyTerms",
    "energy_terms",
    "eval_T",
    "grad_T",
    "eval_I",
    "grad_I",
    "pairing",
    "dual_norm",
    "SimonReport",
    "simon_check",
    "monotonicity_gap",
]


def _spow(u, e):
    """sign(u) |u|^e, finite at u = 0 for e > 0."""
    return np.sign(u) * np.abs(u) ** e


@dataclass(frozen=True, eq=False)
class EnergyContext:
    grid: Grid
    weights: WeightFields
    p: ExponentField
    q: ExponentField
    lam: float = 0.0
    eps: float = 0.0
    _c: dict = field(init=False, repr=False)

    def __post_init__(self):
        g = self.grid
        if self.lam < 0:
            raise ValueError(f"lambda must be nonnegative, got {self.lam}")
        if self.eps < 0:
            raise ValueError("eps must be nonnegative")
        for name in ("p", "q"):
            if getattr(self, name).values.shape != g.shape:
                raise ValueError(f"{name} is not sampled on this grid")
        for name, f in zip("ABCD", self.weights):
            g.check_field(f, name)
            if np.any(f < 0):
                raise ValueError(f"weight {name} has negative entries")
        w = g.weights.ravel()
        p = self.p.values.ravel()
        A, B, C, D = (f.ravel() for f in self.weights)
        c = {
            "w": w,
            "p": p,
            "q": self.q.values.ravel(),
            "wB": w * B,
            "wA": w * A,
            "wC": w * C,
            "wD": w * D,
            "cB": w * B / p,
            "cA": w * A / p,
            "cD": w * D / (p + 1.0),
            "cC": w * C / (p - 1.0),
            "cQ": w / self.q.values.ravel(),
            "w_int": g.weights[g.interior_mask],
        }
        object.__setattr__(self, "_c", c)

    def with_lambda(self, lam: float) -> "EnergyContext":
        return EnergyContext(self.grid, self.weights, self.p, self.q, lam, self.eps)

    def _field(self, u) -> np.ndarray:
        u = np.asarray(u, dtype=float)
        if u.shape == (self.grid.n_interior,):
            return self.grid.embed(u)
        u = self.grid.check_field(u, "u")
        if np.any(u[self.grid.boundary_mask] != 0.0):
            raise ValueError("u must vanish on the boundary (Dirichlet class)")
        return u

    def _grad_sq(self, flat):
        gs = [op @ flat for op in self.grid.diff_ops]
        s2 = sum(g * g for g in gs)
        if self.eps:
            s2 = s2 + self.eps**2
        return gs, s2


@dataclass
class EnergyTerms:
    gradient: float
    a_term: float
    d_term: float
    c_term: float
    q_term: float

    @property
    def T(self) -> float:
        return self.gradient + self.a_term + self.d_term + self.c_term


def energy_terms(ctx: EnergyContext, u) -> EnergyTerms:
    """The four integrals of T and the integral of |u|^q/q, separately."""
    c = ctx._c
    flat = ctx._field(u).ravel()
    p = c["p"]
    _, s2 = ctx._grad_sq(flat)
    dens = s2 ** (p / 2.0)
    if ctx.eps:
        dens = dens - ctx.eps**p
    au = np.abs(flat)
    return EnergyTerms(
        gradient=float(c["cB"] @ dens),
        a_term=float(c["cA"] @ au**p),
        d_term=float(c["cD"] @ au ** (p + 1.0)),
        c_term=float(c["cC"] @ au ** (p - 1.0)),
        q_term=float(c["cQ"] @ au ** c["q"]),
    )


def eval_T(ctx: EnergyContext, u) -> float:
    return energy_terms(ctx, u).T


def eval_I(ctx: EnergyContext, u) -> float:
    t = energy_terms(ctx, u)
    return t.T - ctx.lam * t.q_term


def _grad_T_full(ctx: EnergyContext, flat: np.ndarray) -> np.ndarray:
    c = ctx._c
    p = c["p"]
    gs, s2 = ctx._grad_sq(flat)
    scale = c["wB"] * s2 ** ((p - 2.0) / 2.0)
    out = c["wA"] * _spow(flat, p - 1.0) + c["wD"] * _spow(flat, p) + c["wC"] * _spow(flat, p - 2.0)
    for op_t, gk in zip(ctx.grid.diff_ops_t, gs):
        out = out + op_t @ (scale * gk)
    return out


def grad_T(ctx: EnergyContext, u) -> np.ndarray:
    """Gradient of the discrete T with respect to the interior nodal values."""
    flat = ctx._field(u).ravel()
    return _grad_T_full(ctx, flat)[ctx.grid.interior_mask.ravel()]


def grad_I(ctx: EnergyContext, u) -> np.ndarray:
    c = ctx._c
    flat = ctx._field(u).ravel()
    full = _grad_T_full(ctx, flat)
    if ctx.lam:
        full = full - ctx.lam * c["w"] * _spow(flat, c["q"] - 1.0)
    return full[ctx.grid.interior_mask.ravel()]


def pairing(grid: Grid, g: np.ndarray, v) -> float:
    """Duality pairing of an interior dual vector with a Dirichlet field."""
    v = np.asarray(v, dtype=float)
    if v.shape == grid.shape:
        v = grid.restrict(v)
    return float(np.dot(g, v))


def dual_norm(grid: Grid, g: np.ndarray) -> float:
    """Quadrature-weighted Euclidean norm, sqrt(sum g_i^2 / w_i).

    This is the discrete L2 norm of the nodal function whose quadrature pairing
    reproduces g, so it does not scale with the mesh size.
    """
    return float(np.sqrt(np.sum(g * g / grid.weights[grid.interior_mask])))


@dataclass
class SimonReport:
    lhs: np.ndarray
    rhs: np.ndarray
    holds: np.ndarray

    @property
    def violations(self) -> int:
        return int(np.size(self.holds) - np.count_nonzero(self.holds))


def simon_constant(p: float) -> float:
    return 2.0**p if p >= 2 else 1.0 / (p - 1.0)


def simon_check(x, y, p, slack: float = 1e-12) -> SimonReport:
    """Evaluate both sides of the Simon inequalities.

    ``x`` and ``y`` have shape (..., N) and ``p`` broadcasts against the
    leading dimensions. For p >= 2 the right side is 2^p <x|x|^(p-2) - y|y|^(p-2), x - y>;
    for 1 < p < 2 it is (p-1)^-1 <...>^(p/2) (|x|^p + |y|^p)^((2-p)/2).
    """
    x, y = np.asarray(x, dtype=float), np.asarray(y, dtype=float)
    p = np.asarray(p, dtype=float)
    if np.any(p <= 1):
        raise ValueError("Simon inequalities need p > 1")
    nx = np.linalg.norm(x, axis=-1)
    ny = np.linalg.norm(y, axis=-1)
    with np.errstate(divide="ignore", invalid="ignore"):
        fx = np.where(nx > 0, nx ** (p - 2.0), 0.0)[..., None] * x
        fy = np.where(ny > 0, ny ** (p - 2.0), 0.0)[..., None] * y
    mono = np.maximum(np.sum((fx - fy) * (x - y), axis=-1), 0.0)
    lhs = np.linalg.norm(x - y, axis=-1) ** p
    high = 2.0**p * mono
    with np.errstate(divide="ignore", invalid="ignore"):
        low = mono ** (p / 2.0) * (nx**p + ny**p) ** ((2.0 - p) / 2.0) / (p - 1.0)
    rhs = np.where(p >= 2.0, high, np.nan_to_num(low))
    holds = lhs <= rhs + slack * (1.0 + np.abs(rhs))
    if lhs.ndim == 0:
        return SimonReport(float(lhs), float(rhs), bool(holds))
    return SimonReport(lhs, rhs, holds)


def monotonicity_gap(ctx: EnergyContext, u, v) -> float:
    """<T'(u) - T'(v), u - v>, strictly positive for u != v."""
    u, v = ctx._field(u), ctx._field(v)
    if np.array_equal(u, v):
        raise ValueError("monotonicity gap needs u != v")
    diff = ctx.grid.restrict(u - v)
    return float(np.dot(grad_T(ctx, u) - grad_T(ctx, v), diff))
