import numpy as np
import pytest

from vexlab.energy import EnergyContext
from vexlab.expr import eval_on_grid, grad_on_grid
from vexlab.grid import build_grid
from vexlab.spaces import ExponentField
from vexlab.weights import build_weights


def make_context(dim, n, a_src, p_src, q_src, lam=0.0, extent=(0.0, 1.0)):
    grid = build_grid(dim, list(extent), n)
    a = eval_on_grid(a_src, grid)
    p = ExponentField(eval_on_grid(p_src, grid))
    q = ExponentField(eval_on_grid(q_src, grid))
    weights = build_weights(grid, a, grad_on_grid(a_src, grid), p, grad_on_grid(p_src, grid))
    return EnergyContext(grid, weights, p, q, lam)


@pytest.fixture
def rng():
    return np.random.default_rng(1234)


@pytest.fixture
def ctx1d():
    return make_context(1, 41, "abs(x1 - 0.5)^1.5 + 0.05", "2.2 + 0.6*x1", "1.3 + 0.2*x1", lam=0.3)


@pytest.fixture
def ctx2d():
    return make_context(2, 13, "norm(x1 - 0.5, x2 - 0.5)^1.2", "2.3 + 0.3*x1*x2", "1.3 + 0.1*x2", lam=0.3)


def random_dirichlet(grid, rng, scale=1.0):
    return grid.embed(scale * rng.standard_normal(grid.n_interior))


# -- acceptance reporting: one pass/fail line per criterion in the terminal summary --

ACCEPTANCE_LINES: list[str] = []


class _Recorder:
    def __init__(self, number: int, title: str):
        self.number, self.title, self.done = number, title, False

    def __call__(self, ok: bool, detail: str) -> bool:
        ACCEPTANCE_LINES.append(f"criterion {self.number:>2} {'PASS' if ok else 'FAIL'}  {self.title}: {detail}")
        print(ACCEPTANCE_LINES[-1])
        self.done = True
        return ok


@pytest.fixture
def criterion(request):
    marker = request.node.get_closest_marker("criterion")
    rec = _Recorder(*marker.args)
    yield rec
    if not rec.done:
        ACCEPTANCE_LINES.append(f"criterion {rec.number:>2} FAIL  {rec.title}: raised before reporting")


def pytest_terminal_summary(terminalreporter):
    if ACCEPTANCE_LINES:
        terminalreporter.section("acceptance criteria")
        for line in sorted(ACCEPTANCE_LINES, key=lambda s: int(s.split()[1])):
            terminalreporter.write_line(line)
