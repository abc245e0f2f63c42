"""TOML run configuration and instance assembly.

A configuration file describes one instance::

    mode = "strict"                 # or "relaxed"

    [domain]
    dim = 3
    extent = [0.0, 1.0]             # one [lo, hi] pair, or one per axis
    n = 17                          # node count, or one per axis

    [fields]                        # expressions in x1..xN, see vexlab.expr
    a = "norm(x1 - 0.5, x2 - 0.5, x3 - 0.5)^1.1"
    p = "2.2"
    q = "1.1 + 0.11*x1"

    [singular]
    x0 = [0.5, 0.5, 0.5]
    r = 0.25
    s = 1.1

    [solver]
    lambda_fraction = 0.5           # or lambda = <absolute value>
    sweep_fractions = [0.25, 0.5]   # or sweep = [<absolute values>]
    rho_factor = 0.9
    max_iters = 20000
    tol = 1e-8
    seed = 0
    beta_samples = 200
    boundary_samples = 100
    safety_factor = 2.0

    [ckn]
    samples = 200
    repetitions = 20
    classical = { a = 0.0, b = 1.0, p = 2.0, bumps = 50 }

    [output]
    path = "result.json"
    format = "json"
"""

from __future__ import annotations

import sys
from dataclasses import dataclass, field
from pathlib import Path

import numpy as np

from .energy import EnergyContext
from .expr import ExprError, FieldExpression, eval_on_grid, grad_on_grid, parse
from .grid import Grid, build_grid
from .spaces import ExponentField
from .weights import SingularSpec, WeightFields, build_weights

if sys.version_info >= (3, 11):
    import tomllib
else:
    import tomli as tomllib

__all__ = ["ConfigError", "RunConfig", "load_config", "parse_config", "Instance", "build_instance"]


class ConfigError(ValueError):
    pass


@dataclass
class SolverConfig:
    lam: float | None = None
    lambda_fraction: float | None = None
    sweep: list[float] = field(default_factory=list)
    sweep_fractions: list[float] = field(default_factory=list)
    rho_factor: float = 0.9
    max_iters: int = 20000
    tol: float = 1e-8
    seed: int = 0
    beta_samples: int = 200
    boundary_samples: int = 100
    safety_factor: float = 2.0


@dataclass
class CknConfig:
    samples: int = 200
    repetitions: int = 20
    classical: dict | None = None


@dataclass
class RunConfig:
    dim: int
    extent: list
    n: list
    a_expr: str
    p_expr: str
    q_expr: str
    x0: list[float]
    r: float
    s: float
    solver: SolverConfig
    ckn: CknConfig
    mode: str = "strict"
    output_path: str | None = None
    output_format: str = "json"

    def to_dict(self) -> dict:
        return {
            "mode": self.mode,
            "domain": {"dim": self.dim, "extent": self.extent, "n": self.n},
            "fields": {"a": self.a_expr, "p": self.p_expr, "q": self.q_expr},
            "singular": {"x0": self.x0, "r": self.r, "s": self.s},
            "solver": {
                "lambda": self.solver.lam,
                "lambda_fraction": self.solver.lambda_fraction,
                "sweep": self.solver.sweep,
                "sweep_fractions": self.solver.sweep_fractions,
                "rho_factor": self.solver.rho_factor,
                "max_iters": self.solver.max_iters,
                "tol": self.solver.tol,
                "seed": self.solver.seed,
                "beta_samples": self.solver.beta_samples,
                "boundary_samples": self.solver.boundary_samples,
                "safety_factor": self.solver.safety_factor,
            },
        }


def _section(data: dict, name: str, required: bool = True) -> dict:
    if name not in data:
        if required:
            raise ConfigError(f"missing section [{name}]")
        return {}
    value = data[name]
    if not isinstance(value, dict):
        raise ConfigError(f"[{name}] must be a table")
    return value


def _get(section: dict, key: str, where: str, kind=None, default=...):
    if key not in section:
        if default is ...:
            raise ConfigError(f"missing key '{key}' in [{where}]")
        return default
    value = section[key]
    if kind is float and isinstance(value, int) and not isinstance(value, bool):
        value = float(value)
    if kind is not None and not isinstance(value, kind):
        raise ConfigError(f"[{where}] {key} must be {getattr(kind, '__name__', kind)}, got {value!r}")
    return value


def _expr_text(value, key: str) -> str:
    if isinstance(value, bool) or not isinstance(value, (str, int, float)):
        raise ConfigError(f"[fields] {key} must be an expression string or a number")
    return str(value)


def parse_config(data: dict) -> RunConfig:
    domain = _section(data, "domain")
    fields_ = _section(data, "fields")
    singular = _section(data, "singular")
    solver = _section(data, "solver", required=False)
    ckn = _section(data, "ckn", required=False)
    output = _section(data, "output", required=False)

    dim = _get(domain, "dim", "domain", int)
    extent = _get(domain, "extent", "domain", list)
    n = _get(domain, "n", "domain", (int, list))
    a_expr = _expr_text(_get(fields_, "a", "fields"), "a")
    p_expr = _expr_text(_get(fields_, "p", "fields"), "p")
    q_expr = _expr_text(_get(fields_, "q", "fields"), "q")
    for key, text in (("a", a_expr), ("p", p_expr), ("q", q_expr)):
        try:
            parse(text, dim if dim in (1, 2, 3) else None)
        except ExprError as exc:
            raise ConfigError(f"[fields] {key}: {exc}") from exc

    x0 = _get(singular, "x0", "singular", (list, int, float))
    x0 = [float(v) for v in (x0 if isinstance(x0, list) else [x0])]

    sc = SolverConfig(
        lam=_get(solver, "lambda", "solver", float, None),
        lambda_fraction=_get(solver, "lambda_fraction", "solver", float, None),
        sweep=[float(v) for v in _get(solver, "sweep", "solver", list, [])],
        sweep_fractions=[float(v) for v in _get(solver, "sweep_fractions", "solver", list, [])],
        rho_factor=_get(solver, "rho_factor", "solver", float, 0.9),
        max_iters=_get(solver, "max_iters", "solver", int, 20000),
        tol=_get(solver, "tol", "solver", float, 1e-8),
        seed=_get(solver, "seed", "solver", int, 0),
        beta_samples=_get(solver, "beta_samples", "solver", int, 200),
        boundary_samples=_get(solver, "boundary_samples", "solver", int, 100),
        safety_factor=_get(solver, "safety_factor", "solver", float, 2.0),
    )
    if sc.lam is not None and sc.lambda_fraction is not None:
        raise ConfigError("[solver] give either lambda or lambda_fraction, not both")
    if not 0 < sc.rho_factor < 1:
        raise ConfigError("[solver] rho_factor must lie in (0, 1)")

    cc = CknConfig(
        samples=_get(ckn, "samples", "ckn", int, 200),
        repetitions=_get(ckn, "repetitions", "ckn", int, 20),
        classical=_get(ckn, "classical", "ckn", dict, None),
    )
    mode = _get(data, "mode", "top level", str, "strict")
    if mode not in ("strict", "relaxed"):
        raise ConfigError(f"mode must be 'strict' or 'relaxed', got {mode!r}")
    fmt = _get(output, "format", "output", str, "json")
    if fmt != "json":
        raise ConfigError(f"[output] format {fmt!r} is not supported (json only)")
    try:
        cfg = RunConfig(
            dim=dim, extent=extent, n=n if isinstance(n, list) else [n],
            a_expr=a_expr, p_expr=p_expr, q_expr=q_expr,
            x0=x0, r=float(_get(singular, "r", "singular", float)), s=float(_get(singular, "s", "singular", float)),
            solver=sc, ckn=cc, mode=mode,
            output_path=_get(output, "path", "output", str, None), output_format=fmt,
        )
        build_grid(cfg.dim, cfg.extent, cfg.n)
        SingularSpec(tuple(cfg.x0), cfg.r, cfg.s)
    except (TypeError, ValueError) as exc:
        raise ConfigError(str(exc)) from exc
    return cfg


def load_config(path) -> RunConfig:
    try:
        with open(path, "rb") as fh:
            data = tomllib.load(fh)
    except FileNotFoundError as exc:
        raise ConfigError(f"config file not found: {path}") from exc
    except tomllib.TOMLDecodeError as exc:
        raise ConfigError(f"{path}: {exc}") from exc
    return parse_config(data)


@dataclass
class Instance:
    config: RunConfig
    grid: Grid
    a: np.ndarray
    grad_a: np.ndarray
    p: ExponentField
    grad_p: np.ndarray
    q: ExponentField
    spec: SingularSpec
    weights: WeightFields
    exprs: dict

    def context(self, lam: float = 0.0) -> EnergyContext:
        return EnergyContext(self.grid, self.weights, self.p, self.q, lam)


def build_instance(cfg: RunConfig) -> Instance:
    """Sample the fields on the grid (analytic gradients) and assemble the weights."""
    grid = build_grid(cfg.dim, cfg.extent, cfg.n)
    exprs: dict[str, FieldExpression] = {k: parse(v, cfg.dim) for k, v in
                                         (("a", cfg.a_expr), ("p", cfg.p_expr), ("q", cfg.q_expr))}
    a = eval_on_grid(exprs["a"], grid)
    grad_a = grad_on_grid(exprs["a"], grid)
    p = ExponentField(eval_on_grid(exprs["p"], grid))
    grad_p = grad_on_grid(exprs["p"], grid)
    q = ExponentField(eval_on_grid(exprs["q"], grid))
    spec = SingularSpec(tuple(cfg.x0), cfg.r, cfg.s)
    weights = build_weights(grid, a, grad_a, p, grad_p)
    return Instance(cfg, grid, a, grad_a, p, grad_p, q, spec, weights, exprs)


def default_output(cfg: RunConfig, fallback: str) -> Path:
    return Path(cfg.output_path or fallback)
