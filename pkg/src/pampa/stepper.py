"""Time stepping: CFL control, the blended forward-Euler stage and SSP-RK3."""
from __future__ import annotations

import logging
import math
from dataclasses import dataclass, field as dc_field
from typing import Callable, Optional

import numba as nb
import numpy as np

from . import _stage
from .errors import BoundViolationError, CFLViolationError, InvalidStateError, SolverAbort
from .grid import BoundaryCondition, DoFField, Grid1D
from .limiter import ScalarBounds
from .models import EULER, scalar_interval_speed
from ._stage import _euler_speed, _wrap

log = logging.getLogger(__name__)

LIMITER_MODES = {"bp": _stage.MODE_BP, "off": _stage.MODE_HIGH, "first_order": _stage.MODE_FIRST}
# an inner stage may use dt/dx * S up to this value before the step is retried
COURANT_LIMIT = 1.0 + 1e-12
MAX_RETRIES = 10


@dataclass(frozen=True)
class LimiterConfig:
    """How the blending coefficients are chosen.

    mode: "bp" (bound-preserving blend), "off" (pure high order) or
    "first_order" (coefficients pinned to zero).  ``bounds`` is required for
    bound-preserving runs of scalar problems.
    """

    mode: str = "bp"
    bounds: Optional[ScalarBounds] = None
    lmp: bool = True

    def __post_init__(self):
        if self.mode not in LIMITER_MODES:
            raise ValueError(f"unknown limiter mode {self.mode!r}")


@dataclass(frozen=True)
class StepControl:
    cfl: float = 0.2
    t_final: float = 1.0
    dt_cap: Optional[float] = None


@dataclass
class StageInfo:
    courant: float
    eta: np.ndarray
    theta: np.ndarray


# {{{ signal speed

@nb.njit(cache=True)
def _scalar_signal(code, avg, pts, periodic):
    n = avg.shape[0]
    nn = pts.shape[0]
    s = 0.0
    prev = scalar_interval_speed(code, avg[_wrap(-1, n, periodic)], avg[0])
    for c in range(n):
        nxt = scalar_interval_speed(code, avg[c], avg[_wrap(c + 1, n, periodic)])
        if c == n - 1 and not periodic:
            nxt = scalar_interval_speed(code, avg[c], avg[c])
        s = max(s, prev + nxt)
        prev = nxt
    for j in range(nn):
        u = pts[j]
        sl = scalar_interval_speed(code, u, avg[_wrap(j - 1, n, periodic)])
        sr = scalar_interval_speed(code, u, avg[_wrap(j, n, periodic)])
        s = max(s, 2.0 * (sl + sr))
    return s


@nb.njit(cache=True)
def _euler_signal(gamma, avg, pts, periodic):
    n = avg.shape[0]
    nn = pts.shape[0]
    cell = np.empty(n)
    for c in range(n):
        cell[c] = _euler_speed(avg[c, 0], avg[c, 1], avg[c, 2], gamma)
        if cell[c] < 0.0:
            return -1.0, c
    s = 0.0
    for c in range(n):
        a_left = max(cell[_wrap(c - 1, n, periodic)], cell[c])
        a_right = max(cell[c], cell[_wrap(c + 1, n, periodic)])
        s = max(s, a_left + a_right)
    for j in range(nn):
        su = _euler_speed(pts[j, 0], pts[j, 1], pts[j, 2], gamma)
        if su < 0.0:
            return -1.0, n + j
        sl = max(su, cell[_wrap(j - 1, n, periodic)])
        sr = max(su, cell[_wrap(j, n, periodic)])
        s = max(s, 2.0 * (sl + sr))
    return s, -1


def signal_speed(field: DoFField, model, bc: BoundaryCondition) -> float:
    """S = max over cells/nodes of max(alpha_j + alpha_{j+1}, 2 (beta_{j-1/2} + beta_{j+1/2}))."""
    periodic = BoundaryCondition(bc) is BoundaryCondition.PERIODIC
    if model.code == EULER:
        s, where = _euler_signal(model.gamma, field.averages, field.points, periodic)
        if s < 0:
            raise InvalidStateError(f"state outside the invariant domain at DoF {where}")
        return float(s)
    return float(_scalar_signal(model.code, field.averages, field.points, periodic))

# }}}


def compute_dt(field: DoFField, model, grid: Grid1D, bc: BoundaryCondition,
               control: StepControl, t: float = 0.0) -> float:
    remaining = control.t_final - t
    if remaining < 0:
        raise ValueError(f"time {t} is past the final time {control.t_final}")
    s = signal_speed(field, model, bc)
    dt = remaining if s == 0.0 else control.cfl * grid.dx / s
    if control.dt_cap is not None:
        dt = min(dt, control.dt_cap)
    return min(dt, remaining)


def forward_euler_stage(field: DoFField, model, grid: Grid1D, bc: BoundaryCondition,
                        config: LimiterConfig, dt: float, info: bool = False):
    """One blended forward-Euler update of averages and points.

    Raises CFLViolationError when dt/dx * S of this field exceeds 1, and
    BoundViolationError when an intermediate state leaves the admissible
    set.  With ``info=True`` returns (field, StageInfo).
    """
    periodic = BoundaryCondition(bc) is BoundaryCondition.PERIODIC
    lam = dt / grid.dx
    mode = LIMITER_MODES[config.mode]
    avg, pts = field.averages, field.points
    new_avg = np.empty_like(avg)
    new_pts = np.empty_like(pts)
    eta = np.empty(field.n_cells + 1)
    theta = np.empty((field.n_nodes, 2))
    if model.code == EULER:
        status, where, courant = _stage.euler_stage(
            model.gamma, avg, pts, periodic, lam, mode, config.lmp, new_avg, new_pts, eta, theta)
    else:
        bounds = config.bounds
        if bounds is None:
            if mode == _stage.MODE_BP:
                raise ValueError("bound-preserving scalar runs need ScalarBounds")
            lower, upper = -np.inf, np.inf
        else:
            lower, upper = bounds.lower, bounds.upper
        status, where, courant = _stage.scalar_stage(
            model.code, avg, pts, periodic, lam, mode, lower, upper, config.lmp,
            new_avg, new_pts, eta, theta)
    if status == _stage.INVALID_STATE:
        raise InvalidStateError(f"state outside the invariant domain at DoF {where}")
    if courant > COURANT_LIMIT:
        raise CFLViolationError(f"dt/dx*S = {courant:.6g} exceeds 1")
    if status == _stage.STAR_OUT_OF_BOUNDS:
        kind = "interface" if where <= field.n_cells else "node"
        loc = where if where <= field.n_cells else where - field.n_cells - 1
        raise BoundViolationError(f"intermediate state out of bounds at {kind} {loc}",
                                  location=loc, kind=kind)
    new = DoFField(new_avg, new_pts)
    if info:
        return new, StageInfo(courant, eta, theta)
    return new


Observer = Callable[[DoFField, str], None]


def ssprk3_step(field: DoFField, model, grid: Grid1D, bc: BoundaryCondition,
                config: LimiterConfig, dt: float, observer: Optional[Observer] = None) -> DoFField:
    """Three-stage SSP Runge-Kutta step built from blended forward-Euler stages."""
    fe = forward_euler_stage
    u1 = fe(field, model, grid, bc, config, dt)
    if observer:
        observer(u1, "stage1")
    f2 = fe(u1, model, grid, bc, config, dt)
    u2 = field.axpby(0.75, f2, 0.25)
    if observer:
        observer(f2, "fe2")
        observer(u2, "stage2")
    f3 = fe(u2, model, grid, bc, config, dt)
    u3 = field.axpby(1.0 / 3.0, f3, 2.0 / 3.0)
    if observer:
        observer(f3, "fe3")
        observer(u3, "stage3")
    return u3


def forward_euler_step(field, model, grid, bc, config, dt, observer=None):
    new = forward_euler_stage(field, model, grid, bc, config, dt)
    if observer:
        observer(new, "stage1")
    return new


@dataclass
class RunResult:
    field: DoFField
    t: float
    n_steps: int
    retries: int = 0
    dts: list = dc_field(default_factory=list)


def solve(field: DoFField, model, grid: Grid1D, bc: BoundaryCondition, config: LimiterConfig,
          control: StepControl, integrator: str = "ssprk3",
          observer: Optional[Callable[[DoFField, int, str], None]] = None,
          progress: Optional[Callable[[int, float, float, DoFField], None]] = None,
          max_steps: int = 50_000_000) -> RunResult:
    """Advance ``field`` to ``control.t_final``."""
    field.check_layout(grid, bc)
    step_fn = {"ssprk3": ssprk3_step, "euler": forward_euler_step}[integrator]
    t = 0.0
    n = 0
    retries = 0
    dts = []
    u = field
    while t < control.t_final:
        if n >= max_steps:
            raise SolverAbort(f"step limit {max_steps} reached at t={t}")
        try:
            dt = compute_dt(u, model, grid, bc, control, t)
        except InvalidStateError as exc:
            raise SolverAbort(f"step {n} at t={t:.6g}: {exc}") from exc
        if dt <= 0.0 or not math.isfinite(dt):
            raise SolverAbort(f"non-positive time step {dt} at t={t}")
        stage_obs = (lambda f, label, _n=n: observer(f, _n, label)) if observer else None
        for attempt in range(MAX_RETRIES + 1):
            try:
                new = step_fn(u, model, grid, bc, config, dt, stage_obs)
                break
            except CFLViolationError:
                if attempt == MAX_RETRIES:
                    raise SolverAbort(f"CFL retries exhausted at t={t}")
                dt *= 0.5
                retries += 1
                log.debug("halving dt to %g at t=%g", dt, t)
            except InvalidStateError as exc:
                raise SolverAbort(f"step {n} at t={t:.6g}: {exc}") from exc
        if not new.is_finite():
            raise SolverAbort(f"non-finite values after step {n} at t={t:.6g}")
        u = new
        n += 1
        dts.append(dt)
        if control.t_final - (t + dt) <= 1e-14 * max(1.0, control.t_final):
            t = control.t_final
        else:
            t += dt
        if progress:
            progress(n, t, dt, u)
    return RunResult(u, t, n, retries, dts)
