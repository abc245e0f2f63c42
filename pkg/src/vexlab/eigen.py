"""Mountain-geometry certificates and the constrained descent solver for I_lambda."""

from __future__ import annotations

import math
from dataclasses import dataclass, field

import numpy as np

from .energy import EnergyContext, dual_norm, eval_I, grad_I
from .grid import Grid, discrete_gradient
from .spaces import luxemburg_norm

__all__ = [
    "E1Breakdown",
    "e1_norm",
    "e1_upper_bound",
    "sine_samples",
    "embedding_ratios",
    "estimate_beta",
    "Lambda0",
    "compute_lambda0",
    "GeometryCertificate",
    "BoundaryReport",
    "check_boundary_bound",
    "NoNegativeDirection",
    "NegativeDirection",
    "find_negative_direction",
    "SolverOptions",
    "EigenResult",
    "minimize_in_ball",
    "eigen_residual",
]


@dataclass
class E1Breakdown:
    term_B: float
    term_A: float
    term_D: float
    term_C: float

    @property
    def total(self) -> float:
        return self.term_B + self.term_A + self.term_D + self.term_C


def e1_norm(ctx: EnergyContext, u, tol: float = 1e-12) -> E1Breakdown:
    """The four weighted Luxemburg norms making up the E1 norm of u."""
    grid = ctx.grid
    u = ctx._field(u)
    p = ctx.p.values
    A, B, C, D = ctx.weights
    grad_len = np.sqrt(np.sum(discrete_gradient(grid, u) ** 2, axis=0))
    au = np.abs(u)
    return E1Breakdown(
        term_B=luxemburg_norm(grid, B ** (1.0 / p) * grad_len, p, tol),
        term_A=luxemburg_norm(grid, A ** (1.0 / p) * au, p, tol),
        term_D=luxemburg_norm(grid, D ** (1.0 / (p + 1.0)) * au, p + 1.0, tol),
        term_C=luxemburg_norm(grid, C ** (1.0 / (p - 1.0)) * au, p - 1.0, tol),
    )


def e1_upper_bound(ctx: EnergyContext, u) -> float:
    """Cheap upper bound on the E1 norm from the four modulars.

    A field with modular m has norm at most m^(1/e+) when m <= 1 and at most
    m^(1/e-) otherwise, e being its exponent field.
    """
    grid = ctx.grid
    u = ctx._field(u)
    p = ctx.p.values
    A, B, C, D = ctx.weights
    grad_sq = np.sum(discrete_gradient(grid, u) ** 2, axis=0)
    au = np.abs(u)
    total = 0.0
    for weight, base, expo in ((B, grad_sq ** 0.5, p), (A, au, p), (D, au, p + 1.0), (C, au, p - 1.0)):
        m = float(np.sum(grid.weights * weight * base**expo))
        total += m ** (1.0 / (expo.max() if m <= 1.0 else expo.min()))
    return total


def sine_samples(grid: Grid, rng: np.random.Generator, count: int, max_wavenumber: int = 8,
                 max_modes: int = 4):
    """Yield random Dirichlet fields built from tensor-product sine modes.

    Each field combines 1..max_modes modes with wavenumbers 1..max_wavenumber per
    axis and standard normal coefficients. Consuming a prefix of the stream is
    reproducible, so nested sample sets share their first members.
    """
    basis = []
    for k in range(grid.dim):
        t = (grid.axes[k] - grid.lo[k]) / (grid.hi[k] - grid.lo[k])
        basis.append(np.sin(np.pi * np.outer(np.arange(1, max_wavenumber + 1), t)))
    for _ in range(count):
        n_modes = int(rng.integers(1, max_modes + 1))
        ks = rng.integers(0, max_wavenumber, size=(n_modes, grid.dim))
        coef = rng.standard_normal(n_modes)
        u = np.zeros(grid.shape)
        for c, kvec in zip(coef, ks):
            mode = np.ones(())
            for axis in range(grid.dim):
                shape = [1] * grid.dim
                shape[axis] = grid.n[axis]
                mode = mode * basis[axis][kvec[axis]].reshape(shape)
            u = u + c * mode
        u[grid.boundary_mask] = 0.0
        yield u


def embedding_ratios(ctx: EnergyContext, n_samples: int, seed: int) -> np.ndarray:
    """|u|_q / ||u|| over the sine-mode sample family; degenerate samples dropped."""
    if n_samples < 1:
        raise ValueError("n_samples must be at least 1")
    rng = np.random.default_rng(seed)
    ratios = []
    for u in sine_samples(ctx.grid, rng, n_samples):
        norm = e1_norm(ctx, u).total
        if norm > 0:
            ratios.append(luxemburg_norm(ctx.grid, u, ctx.q) / norm)
    return np.asarray(ratios)


def estimate_beta(ctx: EnergyContext, n_samples: int = 200, seed: int = 0, safety_factor: float = 2.0) -> float:
    """Safety factor times the largest sampled embedding ratio."""
    ratios = embedding_ratios(ctx, n_samples, seed)
    if ratios.size == 0:
        raise ValueError("every sample had zero E1 norm")
    return float(safety_factor * ratios.max())


@dataclass(frozen=True)
class Lambda0:
    lambda0: float
    alpha: float


def compute_lambda0(rho: float, p_plus: float, q_minus: float, beta: float) -> Lambda0:
    """Threshold lambda0 and sphere level alpha for radius rho in (0, min(1, 1/beta))."""
    if not beta > 0:
        raise ValueError(f"beta must be positive, got {beta}")
    if not 0 < rho < min(1.0, 1.0 / beta):
        raise ValueError(f"rho={rho} outside (0, min(1, 1/beta)) = (0, {min(1.0, 1.0 / beta)})")
    if not p_plus > 2:
        raise ValueError(f"p+ must exceed 2, got {p_plus}")
    if not q_minus > 1:
        raise ValueError(f"q- must exceed 1, got {q_minus}")
    denom = 4.0**p_plus * (2.0 * p_plus + 2.0)
    lambda0 = rho ** (p_plus + 1.0 - q_minus) / denom * q_minus / beta**q_minus
    alpha = rho ** (p_plus + 1.0) / denom
    return Lambda0(lambda0=lambda0, alpha=alpha)


@dataclass
class NegativeDirection:
    phi: np.ndarray
    t: float
    energy: float


@dataclass
class GeometryCertificate:
    beta_embed: float
    rho: float
    lambda0: float
    alpha: float
    boundary_samples: list = field(default_factory=list)
    negative_direction: NegativeDirection | None = None

    @classmethod
    def from_beta(cls, beta: float, p_plus: float, q_minus: float, rho_factor: float = 0.9):
        rho = rho_factor * min(1.0, 1.0 / beta)
        l0 = compute_lambda0(rho, p_plus, q_minus, beta)
        return cls(beta_embed=beta, rho=rho, lambda0=l0.lambda0, alpha=l0.alpha)

    def to_dict(self) -> dict:
        nd = self.negative_direction
        return {
            "beta_embed": self.beta_embed,
            "rho": self.rho,
            "lambda0": self.lambda0,
            "alpha": self.alpha,
            "boundary_samples": [[int(i), float(e)] for i, e in self.boundary_samples],
            "negative_direction": None if nd is None else {"t": nd.t, "energy": nd.energy},
        }


@dataclass
class BoundaryReport:
    min_energy: float
    alpha: float
    n_samples: int
    violations: list[int]
    max_rescale_error: float
    samples: list

    @property
    def passed(self) -> bool:
        return not self.violations

    @property
    def advice(self) -> str:
        if self.passed:
            return ""
        return "I_lambda dipped below alpha on the sphere: beta was probably underestimated, re-estimate it"


def check_boundary_bound(ctx: EnergyContext, cert: GeometryCertificate, n_samples: int = 100,
                         seed: int = 1) -> BoundaryReport:
    """Sample fields on the sphere ||u|| = rho and compare I_lambda with alpha."""
    rng = np.random.default_rng(seed)
    samples, violations, max_err = [], [], 0.0
    for i, u in enumerate(sine_samples(ctx.grid, rng, n_samples)):
        norm = e1_norm(ctx, u).total
        if norm == 0:
            continue
        u = u * (cert.rho / norm)
        max_err = max(max_err, abs(e1_norm(ctx, u).total - cert.rho))
        energy = eval_I(ctx, u)
        samples.append((i, energy))
        if energy < cert.alpha:
            violations.append(i)
    min_energy = min((e for _, e in samples), default=math.inf)
    return BoundaryReport(min_energy, cert.alpha, len(samples), violations, max_err, samples)


class NoNegativeDirection(RuntimeError):
    pass


def _smoothstep(t):
    """C-infinity transition from 0 (t <= 0) to 1 (t >= 1)."""
    t = np.clip(t, 0.0, 1.0)
    with np.errstate(divide="ignore", over="ignore"):
        f = np.where(t > 0, np.exp(-1.0 / np.where(t > 0, t, 1.0)), 0.0)
        g = np.where(t < 1, np.exp(-1.0 / np.where(t < 1, 1.0 - t, 1.0)), 0.0)
    return f / (f + g)


def plateau_bump(ctx: EnergyContext) -> np.ndarray:
    """A smooth bump, 1 on a box around a point of {q < p- - 1}, 0 on the boundary."""
    grid = ctx.grid
    region = (ctx.q.values < ctx.p.minus - 1.0) & grid.interior_mask
    if not np.any(region):
        raise NoNegativeDirection("the region where q(x) < p- - 1 has no interior node")
    depth = np.full(grid.shape, np.inf)
    for k in range(grid.dim):
        c = grid.coords[k]
        depth = np.minimum(depth, np.minimum(c - grid.lo[k], grid.hi[k] - c) / (grid.hi[k] - grid.lo[k]))
    depth = np.where(region, depth, -np.inf)
    centre = np.unravel_index(int(np.argmax(depth)), grid.shape)
    phi = np.ones(grid.shape)
    for k in range(grid.dim):
        ck = grid.axes[k][centre[k]]
        outer = min(ck - grid.lo[k], grid.hi[k] - ck)
        inner = 0.5 * outer
        phi = phi * _smoothstep((outer - np.abs(grid.coords[k] - ck)) / (outer - inner))
    phi[grid.boundary_mask] = 0.0
    return phi


def find_negative_direction(ctx: EnergyContext, rho: float | None = None, max_halvings: int = 40) -> NegativeDirection:
    """Scan t = 2^-k for the largest t with I_lambda(t phi) < 0.

    With ``rho`` given, t phi must also lie strictly inside the ball of that radius.
    """
    if not ctx.lam > 0:
        raise NoNegativeDirection("lambda must be positive: I_0 = T is nonnegative")
    phi = plateau_bump(ctx)
    for k in range(max_halvings + 1):
        t = 2.0**-k
        energy = eval_I(ctx, t * phi)
        if energy < 0 and (rho is None or e1_norm(ctx, t * phi).total < rho):
            return NegativeDirection(phi=phi, t=t, energy=energy)
    raise NoNegativeDirection(
        f"I_lambda(t phi) >= 0 for all t down to 2^-{max_halvings}; lambda too small for this grid or empty q-region"
    )


@dataclass
class SolverOptions:
    max_iters: int = 20000
    tol: float = 1e-8
    armijo_c: float = 1e-4
    shrink: float = 0.5
    step0: float = 1.0
    min_step: float = 1e-20
    max_step: float = 1e20


@dataclass
class EigenResult:
    lam: float
    u: np.ndarray
    energy: float
    residual: float
    e1_norm: float
    iterations: int
    converged: bool
    inside_ball: bool
    message: str
    trace: list = field(default_factory=list)

    @property
    def certified(self) -> bool:
        """Stationary, strictly negative energy and inside the ball."""
        return self.converged and self.energy < 0 and self.inside_ball

    def to_dict(self, include_field: bool = True) -> dict:
        out = {
            "lambda": self.lam,
            "energy": self.energy,
            "residual": self.residual,
            "e1_norm": self.e1_norm,
            "iterations": self.iterations,
            "converged": self.converged,
            "certified": self.certified,
            "message": self.message,
            "trace": [{"energy": e, "residual": r, "step": s} for e, r, s in self.trace],
        }
        if include_field:
            out["u"] = self.u.tolist()
        return out


def minimize_in_ball(ctx: EnergyContext, cert: GeometryCertificate, u0=None,
                     opts: SolverOptions | None = None) -> EigenResult:
    """Projected gradient descent for I_lambda on the ball ||u|| <= rho.

    Steps follow the quadrature-weighted (L2) gradient with Barzilai-Borwein
    trial lengths and Armijo backtracking on the projected point, so energies
    never increase. Points leaving the ball are rescaled onto the sphere.
    """
    opts = opts or SolverOptions()
    grid = ctx.grid
    w = grid.weights[grid.interior_mask]
    rho = cert.rho
    x = np.zeros(grid.n_interior) if u0 is None else grid.restrict(ctx._field(u0))

    def norm_of(v):
        return e1_norm(ctx, grid.embed(v)).total

    def outside(v):
        # exact norm only when the modular bound cannot rule out leaving the ball
        if e1_upper_bound(ctx, grid.embed(v)) <= rho:
            return None
        n_v = norm_of(v)
        return n_v if n_v > rho else None

    nx = norm_of(x)
    if nx > rho:
        raise ValueError(f"start point has E1 norm {nx:.6g} > rho = {rho:.6g}")
    energy = eval_I(ctx, grid.embed(x))
    g = grad_I(ctx, grid.embed(x))
    residual = dual_norm(grid, g)
    trace = [(energy, residual, 0.0)]
    sigma = opts.step0
    converged, message, it = False, "max_iters reached", 0

    for it in range(1, opts.max_iters + 1):
        if residual <= opts.tol:
            converged, message, it = True, "residual below tolerance", it - 1
            break
        d = -g / w
        step = sigma
        while True:
            cand = x + step * d
            n_cand = outside(cand)
            if n_cand is not None:
                cand = cand * (rho / n_cand)
            e_cand = eval_I(ctx, grid.embed(cand))
            moved = cand - x
            decrease = opts.armijo_c * float(np.sum(w * moved * moved)) / step
            if e_cand <= energy - decrease and e_cand < energy:
                break
            step *= opts.shrink
            if step < opts.min_step:
                break
        if step < opts.min_step:
            message = "line search failed: step underflow"
            it -= 1
            break
        g_new = grad_I(ctx, grid.embed(cand))
        s = cand - x
        y = (g_new - g) / w
        sy = float(np.sum(w * s * y))
        ss = float(np.sum(w * s * s))
        sigma = ss / sy if sy > 0 else 2.0 * step
        sigma = min(max(sigma, opts.min_step), opts.max_step)
        x, energy, g = cand, e_cand, g_new
        residual = dual_norm(grid, g)
        trace.append((energy, residual, step))
    else:
        if residual <= opts.tol:
            converged, message = True, "residual below tolerance"

    u = grid.embed(x)
    final_norm = norm_of(x)
    return EigenResult(
        lam=ctx.lam,
        u=u,
        energy=energy,
        residual=residual,
        e1_norm=final_norm,
        iterations=it,
        converged=converged,
        inside_ball=final_norm <= rho * (1 + 1e-10),
        message=message,
        trace=trace,
    )


def eigen_residual(ctx: EnergyContext, u, lam: float | None = None) -> float:
    """Weighted dual norm of I_lambda'(u); zero exactly at discrete weak solutions."""
    if lam is not None and lam != ctx.lam:
        ctx = ctx.with_lambda(lam)
    return dual_norm(ctx.grid, grad_I(ctx, u))
