"""Modulars and Luxemburg norms of variable-exponent Lebesgue spaces on a grid."""

from __future__ import annotations

import math
from dataclasses import dataclass, field

import numpy as np

from .grid import Grid, integrate

__all__ = [
    "ExponentField",
    "ConvergenceError",
    "modular",
    "luxemburg_norm",
    "holder_pairing",
    "check_trichotomy",
    "check_modular_convergence",
]

MAX_BISECTION_STEPS = 200


class ConvergenceError(RuntimeError):
    pass


@dataclass(frozen=True, eq=False)
class ExponentField:
    """Nodal samples of an exponent p(x) with 1 < p- <= p+ < inf."""

    values: np.ndarray

    def __post_init__(self):
        values = np.array(self.values, dtype=float)
        if not np.all(np.isfinite(values)):
            raise ValueError("exponent field has non-finite values")
        if values.size == 0:
            raise ValueError("exponent field is empty")
        if values.min() <= 1.0:
            raise ValueError(f"exponent must exceed 1 everywhere, minimum is {values.min()}")
        values.setflags(write=False)
        object.__setattr__(self, "values", values)

    @classmethod
    def constant(cls, grid: Grid, value: float) -> "ExponentField":
        return cls(np.full(grid.shape, float(value)))

    @property
    def minus(self) -> float:
        return float(self.values.min())

    @property
    def plus(self) -> float:
        return float(self.values.max())

    @property
    def is_constant(self) -> bool:
        return self.minus == self.plus

    def shifted(self, delta: float) -> "ExponentField":
        return ExponentField(self.values + delta)


def _exponent_values(grid: Grid, p) -> np.ndarray:
    if isinstance(p, ExponentField):
        values = p.values
    else:
        values = np.asarray(p, dtype=float)
    if values.ndim == 0:
        return np.full(grid.shape, float(values))
    return grid.check_field(values, "exponent")


def modular(grid: Grid, u: np.ndarray, p) -> float:
    """The integral of |u|^p(x) over the box."""
    u = grid.check_field(u)
    return integrate(grid, np.abs(u) ** _exponent_values(grid, p))


class _ScaledModular:
    """mu -> modular(u / mu), evaluated through logs so huge or tiny mu stay finite."""

    def __init__(self, grid: Grid, u: np.ndarray, p: np.ndarray):
        nz = u != 0.0
        self.w = grid.weights[nz]
        self.p = p[nz]
        self.log_abs = np.log(np.abs(u[nz]))

    def __call__(self, log_mu: float) -> float:
        return float(np.sum(self.w * np.exp(self.p * (self.log_abs - log_mu))))


def luxemburg_norm(grid: Grid, u: np.ndarray, p, tol: float = 1e-12) -> float:
    """inf{mu > 0 : modular(u/mu) <= 1}, by bracketing and bisection in log(mu).

    Returns mu* with |modular(u/mu*) - 1| <= tol; the zero field has norm 0.
    """
    if not tol > 0:
        raise ValueError("tol must be positive")
    u = grid.check_field(u)
    pv = _exponent_values(grid, p)
    if not np.any(u):
        return 0.0
    rho = _ScaledModular(grid, u, pv)
    p_minus = float(pv.min())

    # modular(u/mu) is continuous and strictly decreasing in mu
    log_mu = math.log(np.abs(u).max()) + math.log(grid.volume) / p_minus
    lo = hi = log_mu
    step = math.log(2.0)
    val = rho(log_mu)
    if abs(val - 1.0) <= tol:
        return math.exp(log_mu)
    if val > 1.0:
        while rho(hi) > 1.0:
            hi += step
    else:
        while rho(lo) < 1.0:
            lo -= step

    for _ in range(MAX_BISECTION_STEPS):
        mid = 0.5 * (lo + hi)
        if not lo < mid < hi:
            break
        val = rho(mid)
        if abs(val - 1.0) <= tol:
            return math.exp(mid)
        if val > 1.0:
            lo = mid
        else:
            hi = mid
    raise ConvergenceError(
        f"bisection stalled at mu={math.exp(0.5 * (lo + hi))!r} with modular-1={val - 1.0:.3e} > tol={tol:g}"
    )


@dataclass
class HolderReport:
    lhs: float
    rhs: float
    norm_u: float
    norm_v: float
    holds: bool


def holder_pairing(grid: Grid, u, v, p, q, tol: float = 1e-12) -> HolderReport:
    """Compare |int uv| with (1/p- + 1/q-) |u|_p |v|_q for conjugate exponents."""
    pv, qv = _exponent_values(grid, p), _exponent_values(grid, q)
    if np.max(np.abs(1.0 / pv + 1.0 / qv - 1.0)) > 1e-12:
        raise ValueError("p and q are not conjugate exponents")
    u, v = grid.check_field(u), grid.check_field(v)
    lhs = abs(integrate(grid, u * v))
    nu = luxemburg_norm(grid, u, pv, tol)
    nv = luxemburg_norm(grid, v, qv, tol)
    rhs = (1.0 / pv.min() + 1.0 / qv.min()) * nu * nv
    return HolderReport(lhs=lhs, rhs=rhs, norm_u=nu, norm_v=nv, holds=lhs <= rhs + 1e-10)


@dataclass
class TrichotomyReport:
    norm: float
    modular: float
    p_minus: float
    p_plus: float
    sign_consistent: bool
    bounds_hold: bool

    @property
    def passed(self) -> bool:
        return self.sign_consistent and self.bounds_hold


def _side(x: float, slack: float) -> int:
    if abs(x - 1.0) <= slack:
        return 0
    return 1 if x > 1.0 else -1


def check_trichotomy(grid: Grid, u, p, slack: float = 1e-9, tol: float = 1e-13) -> TrichotomyReport:
    """Check the norm/modular relations on one field.

    Norm and modular lie on the same side of 1, and the modular is squeezed
    between the norm raised to p- and p+ (order depending on that side).
    Comparisons use a relative slack.
    """
    pv = _exponent_values(grid, p)
    norm = luxemburg_norm(grid, u, pv, tol)
    rho = modular(grid, u, pv)
    pm, pp = float(pv.min()), float(pv.max())
    sign_ok = _side(norm, slack) * _side(rho, slack) >= 0
    if norm >= 1.0:
        lower, upper = norm**pm, norm**pp
    else:
        lower, upper = norm**pp, norm**pm
    bounds_ok = lower <= rho * (1 + slack) and rho <= upper * (1 + slack)
    return TrichotomyReport(norm, rho, pm, pp, bool(sign_ok), bool(bounds_ok))


@dataclass
class ModularConvergenceReport:
    norms: list[float] = field(default_factory=list)
    modulars: list[float] = field(default_factory=list)
    norm_converges: bool = False
    modular_converges: bool = False

    @property
    def agree(self) -> bool:
        return self.norm_converges == self.modular_converges

    @property
    def verdict(self) -> str:
        if self.norm_converges and self.modular_converges:
            return "convergence"
        if not self.norm_converges and not self.modular_converges:
            return "no convergence"
        return "mismatch"


def check_modular_convergence(grid: Grid, seq, u, p, tol: float = 1e-6) -> ModularConvergenceReport:
    """Track |u_n - u| and modular(u_n - u) along a finite sequence.

    A sequence counts as convergent when its last entry is at most ``tol`` and
    its tail (second half) never increases.
    """
    u = grid.check_field(u)
    pv = _exponent_values(grid, p)
    report = ModularConvergenceReport()
    for un in seq:
        diff = grid.check_field(un) - u
        report.norms.append(luxemburg_norm(grid, diff, pv))
        report.modulars.append(modular(grid, diff, pv))

    def converges(values):
        if not values:
            return False
        tail = values[len(values) // 2:]
        monotone = all(b <= a for a, b in zip(tail, tail[1:]))
        return values[-1] <= tol and monotone

    report.norm_converges = converges(report.norms)
    report.modular_converges = converges(report.modulars)
    return report
