"""Uniform box grids with trapezoidal quadrature and finite-difference gradients.

Scalar fields are plain ``ndarray`` objects of shape ``grid.shape``; vector
fields have shape ``(grid.dim, *grid.shape)``.  Fields in the Dirichlet class
vanish on ``grid.boundary_mask``.
"""

from __future__ import annotations

from dataclasses import dataclass
from functools import cached_property

import numpy as np
import scipy.sparse as sp

__all__ = ["Grid", "build_grid", "integrate", "discrete_gradient"]


@dataclass(frozen=True, eq=False)
class Grid:
    dim: int
    lo: tuple[float, ...]
    hi: tuple[float, ...]
    n: tuple[int, ...]

    def __post_init__(self):
        if self.dim not in (1, 2, 3):
            raise ValueError(f"dim must be 1, 2 or 3, got {self.dim}")
        if not (len(self.lo) == len(self.hi) == len(self.n) == self.dim):
            raise ValueError("extent and node counts must have one entry per axis")
        for k in range(self.dim):
            if self.n[k] < 3:
                raise ValueError(f"axis {k}: need at least 3 nodes for an interior, got {self.n[k]}")
            if not self.lo[k] < self.hi[k]:
                raise ValueError(f"axis {k}: empty interval [{self.lo[k]}, {self.hi[k]}]")

    @property
    def shape(self) -> tuple[int, ...]:
        return self.n

    @property
    def size(self) -> int:
        return int(np.prod(self.n))

    @cached_property
    def h(self) -> tuple[float, ...]:
        return tuple((self.hi[k] - self.lo[k]) / (self.n[k] - 1) for k in range(self.dim))

    @property
    def volume(self) -> float:
        return float(np.prod([self.hi[k] - self.lo[k] for k in range(self.dim)]))

    @cached_property
    def axes(self) -> tuple[np.ndarray, ...]:
        return tuple(np.linspace(self.lo[k], self.hi[k], self.n[k]) for k in range(self.dim))

    @cached_property
    def coords(self) -> tuple[np.ndarray, ...]:
        """Nodal coordinate arrays, one per axis, each of shape ``grid.shape``."""
        return tuple(np.meshgrid(*self.axes, indexing="ij"))

    @cached_property
    def points(self) -> np.ndarray:
        """Node coordinates as an ``(size, dim)`` array in C order."""
        return np.stack([c.ravel() for c in self.coords], axis=1)

    @cached_property
    def boundary_mask(self) -> np.ndarray:
        mask = np.zeros(self.n, dtype=bool)
        for k in range(self.dim):
            index = [slice(None)] * self.dim
            index[k] = 0
            mask[tuple(index)] = True
            index[k] = -1
            mask[tuple(index)] = True
        mask.setflags(write=False)
        return mask

    @cached_property
    def interior_mask(self) -> np.ndarray:
        mask = ~self.boundary_mask
        mask.setflags(write=False)
        return mask

    @property
    def n_interior(self) -> int:
        return int(np.prod([m - 2 for m in self.n]))

    @cached_property
    def weights(self) -> np.ndarray:
        """Tensor-product trapezoidal weights; they sum to the box volume."""
        w = np.ones(self.n)
        for k in range(self.dim):
            w1 = np.full(self.n[k], self.h[k])
            w1[[0, -1]] *= 0.5
            shape = [1] * self.dim
            shape[k] = self.n[k]
            w = w * w1.reshape(shape)
        w.setflags(write=False)
        return w

    @cached_property
    def diff_ops(self) -> tuple[sp.csr_matrix, ...]:
        """Sparse partial-derivative operators acting on C-order flattened fields.

        Central differences in the interior, first-order one-sided at the two
        ends of every axis.
        """
        ops = []
        for k in range(self.dim):
            m, hk = self.n[k], self.h[k]
            d = sp.lil_matrix((m, m))
            d[0, 0], d[0, 1] = -1.0 / hk, 1.0 / hk
            d[m - 1, m - 2], d[m - 1, m - 1] = -1.0 / hk, 1.0 / hk
            for i in range(1, m - 1):
                d[i, i - 1], d[i, i + 1] = -0.5 / hk, 0.5 / hk
            op = sp.identity(1, format="csr")
            for j in range(self.dim):
                factor = d.tocsr() if j == k else sp.identity(self.n[j], format="csr")
                op = sp.kron(op, factor, format="csr")
            ops.append(op.tocsr())
        return tuple(ops)

    @cached_property
    def diff_ops_t(self) -> tuple[sp.csr_matrix, ...]:
        return tuple(op.T.tocsr() for op in self.diff_ops)

    def check_field(self, f: np.ndarray, name: str = "field") -> np.ndarray:
        f = np.asarray(f, dtype=float)
        if f.shape != self.shape:
            raise ValueError(f"{name} has shape {f.shape}, grid expects {self.shape}")
        return f

    def check_vector(self, g: np.ndarray, name: str = "vector field") -> np.ndarray:
        g = np.asarray(g, dtype=float)
        if g.shape != (self.dim, *self.shape):
            raise ValueError(f"{name} has shape {g.shape}, grid expects {(self.dim, *self.shape)}")
        return g

    def restrict(self, f: np.ndarray) -> np.ndarray:
        """Interior values of a nodal field as a flat vector."""
        return self.check_field(f)[self.interior_mask]

    def embed(self, v: np.ndarray) -> np.ndarray:
        """Inverse of :meth:`restrict`: a Dirichlet-class field with zero boundary."""
        v = np.asarray(v, dtype=float)
        if v.shape != (self.n_interior,):
            raise ValueError(f"expected {self.n_interior} interior values, got shape {v.shape}")
        f = np.zeros(self.shape)
        f[self.interior_mask] = v
        return f

    def is_dirichlet(self, f: np.ndarray) -> bool:
        return bool(np.all(self.check_field(f)[self.boundary_mask] == 0.0))

    def nearest_node(self, x) -> tuple[int, ...]:
        x = np.asarray(x, dtype=float).reshape(self.dim)
        idx = []
        for k in range(self.dim):
            i = int(round((x[k] - self.lo[k]) / self.h[k]))
            idx.append(min(max(i, 0), self.n[k] - 1))
        return tuple(idx)

    def contains(self, x) -> bool:
        x = np.asarray(x, dtype=float).reshape(self.dim)
        return all(self.lo[k] < x[k] < self.hi[k] for k in range(self.dim))

    def describe(self) -> dict:
        return {"dim": self.dim, "extent": [[lo, hi] for lo, hi in zip(self.lo, self.hi)], "n": list(self.n)}


def _per_axis(value, dim, name):
    arr = np.atleast_1d(np.asarray(value))
    if arr.ndim == 1 and len(arr) == 1:
        arr = np.repeat(arr, dim)
    if len(arr) != dim:
        raise ValueError(f"{name} must have one entry per axis ({dim}), got {value!r}")
    return arr


def build_grid(dim: int, extent, n) -> Grid:
    """Build a uniform box grid.

    ``extent`` is a single ``[lo, hi]`` pair (reused on every axis) or one pair
    per axis; ``n`` is a node count or one count per axis.
    """
    if dim not in (1, 2, 3):
        raise ValueError(f"dim must be 1, 2 or 3, got {dim}")
    ext = np.asarray(extent, dtype=float)
    if ext.shape == (2,):
        ext = np.tile(ext, (dim, 1))
    if ext.shape != (dim, 2):
        raise ValueError(f"extent must be [lo, hi] or {dim} such pairs, got {extent!r}")
    counts = _per_axis(n, dim, "n").astype(int)
    return Grid(
        dim=dim,
        lo=tuple(float(v) for v in ext[:, 0]),
        hi=tuple(float(v) for v in ext[:, 1]),
        n=tuple(int(v) for v in counts),
    )


def integrate(grid: Grid, f: np.ndarray) -> float:
    """Composite trapezoidal rule over the box."""
    f = grid.check_field(f)
    return float(np.sum(grid.weights * f))


def discrete_gradient(grid: Grid, u: np.ndarray) -> np.ndarray:
    u = grid.check_field(u).ravel()
    return np.stack([(op @ u).reshape(grid.shape) for op in grid.diff_ops])
