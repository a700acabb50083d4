"""Benchmark registry: initial data, exact solutions and fine-mesh references."""
from __future__ import annotations

import logging
import math
import os
from dataclasses import dataclass, field as dc_field
from pathlib import Path
from typing import Callable, Optional

import numpy as np

from . import _stage
from .csvio import read_solution_csv, write_solution_csv
from .errors import ConfigurationError, NumericalError, SolverAbort
from .grid import BoundaryCondition, DoFField, Grid1D, build_grid
from .models import make_model

log = logging.getLogger(__name__)

PERIODIC = BoundaryCondition.PERIODIC
OUTFLOW = BoundaryCondition.OUTFLOW

_GL_X, _GL_W = np.polynomial.legendre.leggauss(5)
# point values at a discontinuity node take the left limit
_LEFT_SHIFT = 1e-9


@dataclass(frozen=True)
class ProblemSpec:
    id: str
    domain: tuple
    bc: BoundaryCondition
    t_final: float
    model: str
    initial: Callable = dc_field(repr=False, compare=False)
    gamma: Optional[float] = None
    breakpoints: tuple = ()
    bounds: Optional[tuple] = None
    default_cells: int = 100
    period: Optional[float] = None

    @property
    def is_euler(self) -> bool:
        return self.model == "euler"

    def make_model(self):
        return make_model(self.model, self.gamma)

    def make_grid(self, n_cells: Optional[int] = None) -> Grid1D:
        return build_grid(self.domain[0], self.domain[1], n_cells or self.default_cells)


def conserved(rho, v, p, gamma):
    rho, v, p = np.broadcast_arrays(np.asarray(rho, float), np.asarray(v, float), np.asarray(p, float))
    return np.stack([rho, rho * v, p / (gamma - 1.0) + 0.5 * rho * v * v], axis=-1)


def primitive(u, gamma):
    u = np.asarray(u, dtype=float)
    rho, m, E = u[..., 0], u[..., 1], u[..., 2]
    v = m / rho
    return rho, v, (gamma - 1.0) * (E - 0.5 * m * v)


# {{{ initial data

def _jiang_shu(x):
    a, z, d, al = 0.5, -0.7, 0.005, 10.0
    be = math.log(2.0) / (36.0 * d * d)
    x = np.mod(np.asarray(x, float) + 1.0, 2.0) - 1.0
    g1 = lambda c: np.exp(-be * (x - c) ** 2)
    g2 = lambda c: np.sqrt(np.maximum(1.0 - al * al * (x - c) ** 2, 0.0))
    u = np.zeros_like(x)
    m = (x >= -0.8) & (x <= -0.6)
    u = np.where(m, (g1(z - d) + g1(z + d) + 4.0 * g1(z)) / 6.0, u)
    u = np.where((x >= -0.4) & (x <= -0.2), 1.0, u)
    u = np.where((x >= 0.0) & (x <= 0.2), 1.0 - np.abs(10.0 * (x - 0.1)), u)
    m = (x >= 0.4) & (x <= 0.6)
    return np.where(m, (g2(a - d) + g2(a + d) + 4.0 * g2(a)) / 6.0, u)


def _riemann(split, left, right, gamma):
    ul = conserved(*left, gamma)
    ur = conserved(*right, gamma)
    return lambda x: np.where(np.asarray(x)[..., None] <= split, ul, ur)


def _isentropic_rho0(x):
    return 1.0 + 0.999995 * np.sin(np.pi * x)


def _isentropic(x):
    rho = _isentropic_rho0(np.asarray(x, float))
    return conserved(rho, 0.0, rho ** 3, 3.0)


def _shu_osher(x):
    x = np.asarray(x, float)
    g = 1.4
    left = conserved(3.857143, 2.629369, 10.33333333333, g)
    right = conserved(1.0 + 0.2 * np.sin(5.0 * x), 0.0, 1.0, g)
    return np.where(x[..., None] < -4.0, left, right)


SEDOV_E_MIN = 1e-12
SEDOV_E_MAX_COEFF = 0.538548


@dataclass(frozen=True)
class _SedovSpec(ProblemSpec):
    def make_grid(self, n_cells: Optional[int] = None) -> Grid1D:
        """2N cells of width 2/N; cell N is centred on x = 0."""
        n_cells = n_cells or self.default_cells
        if n_cells % 2 or n_cells < 4:
            raise ConfigurationError("the Sedov mesh needs an even cell count 2N")
        half = n_cells // 2
        dx = 2.0 / half
        return build_grid(-half * dx - 0.5 * dx, half * dx - 0.5 * dx, n_cells)


def _registry():
    g = 1.4
    specs = [
        ProblemSpec("advect_cos", (0.0, 1.0), PERIODIC, 3.0, "linear_advection",
                    lambda x: np.cos(2.0 * np.pi * np.asarray(x, float)),
                    bounds=(-1.0, 1.0), default_cells=100, period=1.0),
        ProblemSpec("jiang_shu", (-1.0, 1.0), PERIODIC, 2.0, "linear_advection", _jiang_shu,
                    breakpoints=(-0.8, -0.6, -0.4, -0.2, 0.0, 0.2, 0.4, 0.6),
                    bounds=(0.0, 1.0), default_cells=400, period=2.0),
        ProblemSpec("burgers_square", (-1.0, 1.0), PERIODIC, 0.5, "burgers",
                    lambda x: np.where(np.abs(np.asarray(x, float)) <= 0.2, 2.0, -1.0),
                    breakpoints=(-0.2, 0.2), bounds=(-1.0, 2.0), default_cells=200),
        ProblemSpec("buckley", (-1.0, 1.0), PERIODIC, 0.4, "buckley_leverett",
                    lambda x: np.where((np.asarray(x, float) >= -0.5) & (np.asarray(x, float) <= 0.0),
                                       1.0, 0.0),
                    breakpoints=(-0.5, 0.0), bounds=(0.0, 1.0), default_cells=200),
        ProblemSpec("isentropic", (-1.0, 1.0), PERIODIC, 0.1, "euler", _isentropic,
                    gamma=3.0, default_cells=100),
        ProblemSpec("sod", (0.0, 1.0), OUTFLOW, 0.16, "euler",
                    _riemann(0.5, (1.0, 0.0, 1.0), (0.125, 0.0, 0.1), g),
                    gamma=g, breakpoints=(0.5,), default_cells=200),
        ProblemSpec("shu_osher", (-5.0, 5.0), OUTFLOW, 1.8, "euler", _shu_osher,
                    gamma=g, breakpoints=(-4.0,), default_cells=400),
        ProblemSpec("leblanc", (0.0, 9.0), OUTFLOW, 6.0, "euler",
                    _riemann(3.0, (1.0, 0.0, 0.1 * (2.0 / 3.0)), (0.001, 0.0, 1e-7 * (2.0 / 3.0)),
                             5.0 / 3.0),
                    gamma=5.0 / 3.0, breakpoints=(3.0,), default_cells=500),
        ProblemSpec("double_rarefaction", (0.0, 1.0), OUTFLOW, 0.15, "euler",
                    _riemann(0.5, (1.0, -2.0, 0.4), (1.0, 2.0, 0.4), 5.0 / 3.0),
                    gamma=5.0 / 3.0, breakpoints=(0.5,), default_cells=400),
        _SedovSpec("sedov", (-2.0, 2.0), OUTFLOW, 0.5, "euler", None,
                   gamma=5.0 / 3.0, default_cells=802),
    ]
    return {s.id: s for s in specs}


PROBLEMS = _registry()


def get_problem(problem_id: str) -> ProblemSpec:
    try:
        return PROBLEMS[problem_id]
    except KeyError:
        raise ConfigurationError(f"unknown problem {problem_id!r}; choose from {sorted(PROBLEMS)}") from None

# }}}


def cell_averages(func, grid: Grid1D, breakpoints=()):
    """5-point Gauss-Legendre cell means, with cells split at the given breakpoints."""
    edges = grid.nodes()
    n = grid.n_cells

    def integrate(lo, hi):
        half = 0.5 * (hi - lo)
        xq = 0.5 * (hi + lo)[:, None] + half[:, None] * _GL_X[None, :]
        vals = np.asarray(func(xq), dtype=float)
        w = (half[:, None] * _GL_W[None, :])
        if vals.ndim == 3:
            return np.einsum("nq,nqk->nk", w, vals)
        return np.sum(w * vals, axis=1)

    total = integrate(edges[:-1], edges[1:])
    for b in breakpoints:
        # breakpoints are mapped into the domain for periodic data
        cells = np.nonzero((edges[:-1] < b) & (b < edges[1:]))[0]
        for c in cells:
            lo = np.array([edges[c], b])
            hi = np.array([b, edges[c + 1]])
            total[c] = integrate(lo, hi).sum(axis=0)
    return total / grid.dx


def point_values(func, grid: Grid1D, bc: BoundaryCondition, breakpoints=()):
    x = grid.point_coordinates(bc).copy()
    for b in breakpoints:
        hit = np.abs(x - b) <= 1e-12 * max(1.0, abs(b))
        x[hit] -= _LEFT_SHIFT * grid.dx
    return np.asarray(func(x), dtype=float)


def _sedov_field(spec: ProblemSpec, grid: Grid1D) -> DoFField:
    g = spec.gamma
    n = grid.n_cells
    avg = np.tile([1.0, 0.0, SEDOV_E_MIN], (n, 1))
    avg[n // 2, 2] = SEDOV_E_MAX_COEFF / grid.dx / (g - 1.0)
    pts = np.tile(conserved(1.0, 0.0, SEDOV_E_MIN / (g - 1.0), g), (grid.n_nodes(spec.bc), 1))
    return DoFField(avg, pts)


def initialize(spec: ProblemSpec, grid: Grid1D) -> DoFField:
    """Quadrature cell averages and sampled point values of the initial data."""
    if isinstance(spec, str):
        spec = get_problem(spec)
    ref = spec.make_grid(grid.n_cells)
    if not (np.isclose(ref.x_left, grid.x_left) and np.isclose(ref.x_right, grid.x_right)):
        raise ConfigurationError(f"grid [{grid.x_left}, {grid.x_right}] does not match {spec.id}")
    if spec.id == "sedov":
        return _sedov_field(spec, grid)
    avg = cell_averages(spec.initial, grid, spec.breakpoints)
    pts = point_values(spec.initial, grid, spec.bc, spec.breakpoints)
    return DoFField(avg, pts)


def global_bounds(spec: ProblemSpec):
    return spec.bounds


# {{{ exact solutions

def _isentropic_foot(x, t, sign, tol=1e-13, max_iter=100):
    """Solve x + sign*sqrt(3)*rho0(y)*t - y = 0 for y (safeguarded Newton)."""
    x = np.asarray(x, dtype=float)
    c = sign * math.sqrt(3.0) * t
    g = lambda y: x + c * _isentropic_rho0(y) - y
    dg = lambda y: c * 0.999995 * np.pi * np.cos(np.pi * y) - 1.0
    # rho0 ranges over [5e-6, 1.999995], so the root is bracketed
    a = x + c * 5e-6
    b = x + c * 1.999995
    lo, hi = np.minimum(a, b), np.maximum(a, b)
    y = x + c
    for _ in range(max_iter):
        r = g(y)
        if np.all(np.abs(r) <= tol):
            return y
        # g is decreasing in y wherever |c| pi < 1
        lo = np.where(r > 0, np.maximum(lo, y), lo)
        hi = np.where(r < 0, np.minimum(hi, y), hi)
        d = dg(y)
        step = np.where(d != 0, r / np.where(d != 0, d, 1.0), 0.0)
        y_new = y - step
        outside = (y_new <= lo) | (y_new >= hi) | ~np.isfinite(y_new)
        y = np.where(np.abs(r) <= tol, y, np.where(outside, 0.5 * (lo + hi), y_new))
    r = g(y)
    if np.any(np.abs(r) > tol):
        raise NumericalError(f"characteristic foot did not converge (max residual {np.abs(r).max():.3e})")
    return y


def isentropic_exact(x, t):
    """Conserved state of the gamma = 3 isentropic problem by characteristics."""
    x = np.asarray(x, dtype=float)
    if t == 0:
        return _isentropic(x)
    if math.sqrt(3.0) * np.pi * 0.999995 * t >= 1.0:
        raise ConfigurationError("characteristics cross: exact solution unavailable")
    x1 = _isentropic_foot(x, t, +1.0)
    x2 = _isentropic_foot(x, t, -1.0)
    r1 = _isentropic_rho0(x1)
    rho = 0.5 * (r1 + _isentropic_rho0(x2))
    v = math.sqrt(3.0) * (rho - r1)
    return conserved(rho, v, rho ** 3, 3.0)


def exact_solution(spec: ProblemSpec, x, t: float):
    if isinstance(spec, str):
        spec = get_problem(spec)
    x = np.asarray(x, dtype=float)
    if t == 0 and spec.initial is not None:
        return np.asarray(spec.initial(x), dtype=float)
    if spec.id in ("advect_cos", "jiang_shu"):
        lo, hi = spec.domain
        return spec.initial(lo + np.mod(x - t - lo, hi - lo))
    if spec.id == "isentropic":
        return isentropic_exact(x, t)
    raise ConfigurationError(f"no exact solution for {spec.id}")


def has_exact_solution(spec: ProblemSpec) -> bool:
    return spec.id in ("advect_cos", "jiang_shu", "isentropic")


def exact_field(spec: ProblemSpec, grid: Grid1D, t: float) -> DoFField:
    """Exact cell means (quadrature) and exact point samples at time t."""
    func = lambda x: exact_solution(spec, x, t)
    bps = ()
    if spec.id == "jiang_shu":
        lo, hi = spec.domain
        bps = tuple(lo + np.mod(b + t - lo, hi - lo) for b in spec.breakpoints)
    return DoFField(cell_averages(func, grid, bps), point_values(func, grid, spec.bc, bps))

# }}}


# {{{ fine-mesh reference

REFERENCE_CFL = 0.9


def reference_dir() -> Path:
    return Path(os.environ.get("PAMPA_REF_DIR", Path.home() / ".cache" / "pampa"))


def reference_path(spec: ProblemSpec, n_fine: int) -> Path:
    return reference_dir() / "refs" / f"{spec.id}_{n_fine}.csv"


def compute_reference(spec: ProblemSpec, n_fine: int, cfl: float = REFERENCE_CFL):
    """First-order LLF finite-volume run on the averages; points are node means of adjacent cells."""
    grid = spec.make_grid(n_fine)
    f0 = initialize(spec, grid)
    avg = f0.averages.copy()
    periodic = spec.bc is PERIODIC
    model = spec.make_model()
    if spec.is_euler:
        steps, t = _stage.euler_average_run(model.gamma, avg, periodic, grid.dx, spec.t_final, cfl)
        if steps < 0:
            raise SolverAbort(f"reference run for {spec.id} left the invariant domain at t={t}")
    else:
        steps, t = _stage.scalar_average_run(model.code, avg, periodic, grid.dx, spec.t_final, cfl)
    log.info("reference %s n=%d: %d steps", spec.id, n_fine, steps)
    if periodic:
        pts = 0.5 * (np.roll(avg, 1, axis=0) + avg)
    else:
        padded = np.concatenate([avg[:1], avg, avg[-1:]])
        pts = 0.5 * (padded[:-1] + padded[1:])
    return grid, DoFField(avg, pts)


def reference_solution(spec: ProblemSpec, n_fine: int, use_cache: bool = True):
    """Cached fine-mesh reference: returns (grid, field)."""
    if isinstance(spec, str):
        spec = get_problem(spec)
    path = reference_path(spec, n_fine)
    if use_cache and path.exists():
        field, _, _ = read_solution_csv(path)
        return spec.make_grid(n_fine), field
    grid, field = compute_reference(spec, n_fine)
    if use_cache:
        write_solution_csv(path, field, grid, spec.bc)
    return grid, field

# }}}
