"""Coefficient fields A, B, C, D built from a(x) and p(x), and hypothesis validators."""

from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np

from .grid import Grid
from .spaces import ExponentField

__all__ = [
    "SingularSpec",
    "WeightFields",
    "Comparison",
    "ValidationReport",
    "validate_A",
    "validate_P",
    "validate_Q",
    "build_weights",
]


@dataclass(frozen=True)
class SingularSpec:
    """Location x0, radius r and order s > 1 of the degeneracy of a(x)."""

    x0: tuple[float, ...]
    r: float
    s: float

    def __post_init__(self):
        object.__setattr__(self, "x0", tuple(float(v) for v in np.atleast_1d(self.x0)))
        if not self.r > 0:
            raise ValueError(f"radius r must be positive, got {self.r}")
        if not self.s > 1:
            raise ValueError(f"singularity exponent s must exceed 1, got {self.s}")

    def ball_inside(self, grid: Grid) -> bool:
        x0 = np.asarray(self.x0)
        if x0.shape != (grid.dim,):
            return False
        return all(grid.lo[k] <= x0[k] - self.r and x0[k] + self.r <= grid.hi[k] for k in range(grid.dim))


@dataclass(frozen=True, eq=False)
class WeightFields:
    A: np.ndarray
    B: np.ndarray
    C: np.ndarray
    D: np.ndarray

    def __iter__(self):
        return iter((self.A, self.B, self.C, self.D))


@dataclass
class Comparison:
    """One strict inequality ``left < right`` checked numerically."""

    name: str
    left: float
    right: float

    @property
    def holds(self) -> bool:
        return bool(self.left < self.right)

    def __str__(self):
        mark = "ok" if self.holds else "FAIL"
        return f"{self.name}: {self.left:.6g} < {self.right:.6g} [{mark}]"


@dataclass
class ValidationReport:
    hypothesis: str
    mode: str = "strict"
    comparisons: list[Comparison] = field(default_factory=list)
    violations: dict[str, list] = field(default_factory=dict)
    notes: list[str] = field(default_factory=list)
    advisory: set = field(default_factory=set)

    @property
    def passed(self) -> bool:
        blocking = [c for c in self.comparisons if c.name not in self.advisory]
        return all(c.holds for c in blocking) and not any(
            v for k, v in self.violations.items() if k not in self.advisory
        )

    def lines(self) -> list[str]:
        out = [f"({self.hypothesis}) {'PASS' if self.passed else 'FAIL'} [{self.mode}]"]
        for c in self.comparisons:
            tag = " (advisory)" if c.name in self.advisory else ""
            out.append(f"  {c}{tag}")
        for name, nodes in self.violations.items():
            if nodes:
                out.append(f"  {name}: {len(nodes)} violating node(s), first {nodes[0]}")
        out.extend(f"  note: {n}" for n in self.notes)
        return out

    def to_dict(self) -> dict:
        return {
            "hypothesis": self.hypothesis,
            "mode": self.mode,
            "passed": self.passed,
            "comparisons": [
                {"name": c.name, "left": c.left, "right": c.right, "holds": c.holds,
                 "advisory": c.name in self.advisory}
                for c in self.comparisons
            ],
            "violations": {k: [list(map(int, v)) for v in vs] for k, vs in self.violations.items()},
            "notes": list(self.notes),
        }


def validate_A(grid: Grid, a: np.ndarray, spec: SingularSpec, grad_a: np.ndarray | None = None,
               rtol: float = 1e-12) -> ValidationReport:
    """Check that a vanishes only at x0 and dominates |x - x0|^s on B(x0, r)."""
    a = grid.check_field(a, "a")
    report = ValidationReport("A")
    if len(spec.x0) != grid.dim or not grid.contains(spec.x0):
        report.comparisons.append(Comparison("x0 inside the domain", 0.0, float(grid.contains(spec.x0))))
        return report
    if not spec.ball_inside(grid):
        report.notes.append("B(x0, r) is not contained in the box")
    x0_node = grid.nearest_node(spec.x0)

    zero = np.abs(a) == 0.0
    zero[x0_node] = False
    report.violations["a vanishes away from x0"] = [tuple(i) for i in np.argwhere(zero)]

    dist = np.sqrt(sum((c - x) ** 2 for c, x in zip(grid.coords, spec.x0)))
    in_ball = dist < spec.r
    lower = dist**spec.s
    below = in_ball & (np.abs(a) < lower * (1.0 - rtol))
    report.violations["|a| < |x-x0|^s in the ball"] = [tuple(i) for i in np.argwhere(below)]

    if grad_a is not None and not np.all(np.isfinite(grid.check_vector(grad_a, "grad a"))):
        report.violations["grad a not finite"] = [tuple(i) for i in np.argwhere(~np.isfinite(grad_a).all(axis=0))]
    return report


def validate_P(p, dim: int, mode: str = "strict") -> ValidationReport:
    """strict: 2 < p(x) < N everywhere; relaxed: only p(x) > 2."""
    if mode not in ("strict", "relaxed"):
        raise ValueError(f"mode must be 'strict' or 'relaxed', got {mode!r}")
    pv = p.values if isinstance(p, ExponentField) else np.asarray(p, dtype=float)
    report = ValidationReport("P", mode=mode)
    report.comparisons.append(Comparison("2 < p-", 2.0, float(pv.min())))
    if mode == "strict":
        report.comparisons.append(Comparison("p+ < N", float(pv.max()), float(dim)))
        if dim <= 2:
            report.notes.append(f"(P) infeasible: the window 2 < p(x) < {dim} is empty")
    else:
        report.notes.append("relaxed mode: only p > 2 is enforced (non-conforming with p < N)")
    report.violations["p outside the window"] = [
        tuple(i) for i in np.argwhere((pv <= 2.0) | ((pv >= dim) if mode == "strict" else False))
    ]
    return report


def validate_Q(q, p, spec: SingularSpec, dim: int) -> ValidationReport:
    """Check 1 < q- < min(p - 1) < q+ < N p- / (N + s p+) and p- > 1 + s."""
    qv = q.values if isinstance(q, ExponentField) else np.asarray(q, dtype=float)
    pv = p.values if isinstance(p, ExponentField) else np.asarray(p, dtype=float)
    q_minus, q_plus = float(qv.min()), float(qv.max())
    p_minus, p_plus = float(pv.min()), float(pv.max())
    bound = dim * p_minus / (dim + spec.s * p_plus)
    report = ValidationReport("Q")
    report.comparisons += [
        Comparison("1 < q-", 1.0, q_minus),
        Comparison("q- < min(p-1)", q_minus, p_minus - 1.0),
        Comparison("min(p-1) < q+", p_minus - 1.0, q_plus),
        Comparison("q+ < N p-/(N + s p+)", q_plus, bound),
        Comparison("1 + s < p- (embedding)", 1.0 + spec.s, p_minus),
    ]
    return report


def build_weights(grid: Grid, a, grad_a, p, grad_p) -> WeightFields:
    """A = |a|^(p-1)|grad a|, B = |a|^p, C = |a|^(p-1)|grad p|, D = B|grad p|."""
    a = grid.check_field(a, "a")
    pv = p.values if isinstance(p, ExponentField) else grid.check_field(p, "p")
    grad_a = grid.check_vector(grad_a, "grad a")
    grad_p = grid.check_vector(grad_p, "grad p")
    abs_a = np.abs(a)
    # 0^(p-1) = 0 since p > 1
    a_pm1 = abs_a ** (pv - 1.0)
    norm_ga = np.sqrt(np.sum(grad_a**2, axis=0))
    norm_gp = np.sqrt(np.sum(grad_p**2, axis=0))
    B = abs_a**pv
    fields = WeightFields(A=a_pm1 * norm_ga, B=B, C=a_pm1 * norm_gp, D=B * norm_gp)
    for f in fields:
        f.setflags(write=False)
    return fields
