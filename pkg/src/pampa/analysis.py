"""Error norms, convergence tables, positivity audits and benchmark runs."""
from __future__ import annotations

import csv
import io
import logging
import math
from dataclasses import dataclass, field as dc_field, replace
from typing import Callable, Iterable, Optional, Sequence

import numpy as np

from .csvio import format_solution, read_solution_csv, write_solution_csv  # noqa: F401
from .errors import ConfigurationError
from .grid import BoundaryCondition, DoFField, Grid1D
from .limiter import ScalarBounds
from .problems import (ProblemSpec, cell_averages, exact_field, get_problem, has_exact_solution,
                       initialize, reference_solution)
from .stepper import LimiterConfig, RunResult, StepControl, solve

log = logging.getLogger(__name__)

NORMS = ("L1", "L2", "Linf")
KINDS = ("avg", "pt")


# {{{ error norms

@dataclass
class ErrorReport:
    n_cells: int
    dx: float
    errors: dict  # (kind, norm) -> value
    rates: dict = dc_field(default_factory=dict)

    def __getitem__(self, key):
        return self.errors[key]


def _norms(e, dx):
    e = np.abs(np.asarray(e, dtype=float))
    return {"L1": dx * e.sum(), "L2": math.sqrt(dx * np.sum(e * e)), "Linf": float(e.max())}


def _component(values, component):
    values = np.asarray(values, dtype=float)
    return values if values.ndim == 1 else values[:, component]


def restrict(fine: DoFField, fine_grid: Grid1D, grid: Grid1D, bc: BoundaryCondition) -> DoFField:
    """Aggregate fine cell averages and inject fine node values onto a coarser grid."""
    if not (np.isclose(fine_grid.x_left, grid.x_left) and np.isclose(fine_grid.x_right, grid.x_right)):
        raise ConfigurationError("reference grid covers a different domain")
    ratio, rem = divmod(fine_grid.n_cells, grid.n_cells)
    if rem or ratio < 1:
        raise ConfigurationError(f"{fine_grid.n_cells} cells is not a multiple of {grid.n_cells}")
    avg = fine.averages.reshape((grid.n_cells, ratio) + fine.averages.shape[1:]).mean(axis=1)
    pts = fine.points[::ratio][: grid.n_nodes(bc)]
    return DoFField(avg, pts)


def error_norms(numerical: DoFField, grid: Grid1D, bc: BoundaryCondition, reference,
                reference_grid: Optional[Grid1D] = None, component: int = 0,
                breakpoints=()) -> ErrorReport:
    """Discrete L1/L2/Linf errors of averages and points.

    ``reference`` is either a callable u(x) (averages are compared against
    its quadrature cell means, points against samples) or a DoFField,
    possibly on a finer grid given by ``reference_grid``.
    """
    if callable(reference):
        ref_avg = cell_averages(reference, grid, breakpoints)
        ref_pts = np.asarray(reference(grid.point_coordinates(bc)), dtype=float)
        ref = DoFField(ref_avg, ref_pts)
    else:
        ref = restrict(reference, reference_grid or grid, grid, bc)
    if ref.averages.shape != numerical.averages.shape or ref.points.shape != numerical.points.shape:
        raise ConfigurationError("reference and numerical fields have different layouts")
    errors = {}
    for kind, a, b in (("avg", numerical.averages, ref.averages), ("pt", numerical.points, ref.points)):
        for norm, v in _norms(_component(a, component) - _component(b, component), grid.dx).items():
            errors[(kind, norm)] = v
    return ErrorReport(grid.n_cells, grid.dx, errors)


def convergence_rate(e_coarse: float, e_fine: float, ratio: float = 2.0) -> float:
    return math.log(e_coarse / e_fine) / math.log(ratio)


@dataclass
class ConvergenceTable:
    reports: list

    def rate(self, kind: str, norm: str) -> list:
        return [r.rates.get((kind, norm)) for r in self.reports[1:]]

    def to_csv(self) -> str:
        buf = io.StringIO()
        w = csv.writer(buf, lineterminator="\n")
        w.writerow(["n_cells", "dx", "kind", "norm", "error", "rate"])
        for r in self.reports:
            for kind in KINDS:
                for norm in NORMS:
                    rate = r.rates.get((kind, norm))
                    w.writerow([r.n_cells, format(r.dx, ".17g"), kind, norm,
                                format(r.errors[(kind, norm)], ".17g"),
                                "" if rate is None else format(rate, ".6f")])
        return buf.getvalue()

    def to_text(self) -> str:
        cols = ["N", "dx"]
        for k in KINDS:
            for n in NORMS:
                cols += [f"{k} {n}", "rate"]
        rows = []
        for r in self.reports:
            row = [str(r.n_cells), f"{r.dx:.4g}"]
            for k in KINDS:
                for n in NORMS:
                    rate = r.rates.get((k, n))
                    row += [f"{r.errors[(k, n)]:.3e}", "" if rate is None else f"{rate:.2f}"]
            rows.append(row)
        widths = [max(len(c), *(len(row[i]) for row in rows)) for i, c in enumerate(cols)]
        fmt = lambda cells: "  ".join(c.rjust(w) for c, w in zip(cells, widths))
        return "\n".join([fmt(cols)] + [fmt(row) for row in rows]) + "\n"


def attach_rates(reports: Sequence[ErrorReport]) -> ConvergenceTable:
    for prev, cur in zip(reports, reports[1:]):
        ratio = cur.n_cells / prev.n_cells
        cur.rates = {}
        if ratio <= 1:
            continue
        for key, e in cur.errors.items():
            e0 = prev.errors[key]
            cur.rates[key] = convergence_rate(e0, e, ratio) if e > 0 and e0 > 0 else float("nan")
    return ConvergenceTable(list(reports))

# }}}


# {{{ positivity audit

@dataclass
class AuditReport:
    n_stages: int = 0
    min_density: float = math.inf
    min_internal_energy: float = math.inf
    scalar_min: float = math.inf
    scalar_max: float = -math.inf
    violation: Optional[dict] = None

    @property
    def clean(self) -> bool:
        return self.violation is None


class StageAuditor:
    """Streaming audit: feed every stage field to ``update``.

    Euler fields must keep rho > 0 and E - m^2/(2 rho) > 0; scalar fields
    must stay in [lower - tol, upper + tol] when bounds are given.
    """

    def __init__(self, lower: Optional[float] = None, upper: Optional[float] = None, tol: float = 0.0):
        self.lower = -math.inf if lower is None else lower
        self.upper = math.inf if upper is None else upper
        self.tol = tol
        self.report = AuditReport()

    def _flag(self, label, kind, index, quantity, value):
        if self.report.violation is None:
            self.report.violation = {"stage": self.report.n_stages, "label": label, "kind": kind,
                                     "index": int(index), "quantity": quantity, "value": float(value)}

    def update(self, field: DoFField, label: str = "") -> None:
        rep = self.report
        for kind, arr in (("avg", field.averages), ("pt", field.points)):
            if arr.ndim == 2 and arr.shape[1] == 3:
                rho = arr[:, 0]
                with np.errstate(divide="ignore", invalid="ignore"):
                    e = arr[:, 2] - 0.5 * arr[:, 1] ** 2 / rho
                rep.min_density = float(np.fmin(rep.min_density, np.min(rho)))
                rep.min_internal_energy = float(np.fmin(rep.min_internal_energy, np.min(e)))
                bad = np.nonzero(~(rho > 0))[0]
                if bad.size:
                    self._flag(label, kind, bad[0], "density", rho[bad[0]])
                bad = np.nonzero(~(e > 0))[0]
                if bad.size:
                    self._flag(label, kind, bad[0], "internal_energy", e[bad[0]])
            else:
                u = arr.reshape(-1)
                rep.scalar_min = min(rep.scalar_min, float(np.min(u)))
                rep.scalar_max = max(rep.scalar_max, float(np.max(u)))
                bad = np.nonzero(~((u >= self.lower - self.tol) & (u <= self.upper + self.tol)))[0]
                if bad.size:
                    self._flag(label, kind, bad[0], "scalar", u[bad[0]])
        rep.n_stages += 1

    def __call__(self, field: DoFField, step: int = 0, label: str = "") -> None:
        self.update(field, f"{step}:{label}" if label else str(step))


def positivity_audit(history: Iterable, lower=None, upper=None, tol: float = 0.0) -> AuditReport:
    """Scan stage fields (DoFField or (label, DoFField) pairs) and report minima and the first violation."""
    aud = StageAuditor(lower, upper, tol)
    for i, item in enumerate(history):
        label, fld = item if isinstance(item, tuple) else (str(i), item)
        aud.update(fld, label)
    return aud.report

# }}}


# {{{ benchmark runs

BOUND_MODES = ("strict", "relaxed")
LIMITERS = ("bp", "off", "first_order")


@dataclass(frozen=True)
class RunConfig:
    problem: str
    n_cells: Optional[int] = None
    cfl: float = 0.2
    bounds: str = "strict"
    lmp: bool = True
    limiter: str = "bp"
    t_final: Optional[float] = None
    out: Optional[str] = None
    unsafe: bool = False
    reference: Optional[str] = None

    def validate(self) -> "RunConfig":
        get_problem(self.problem)
        if self.bounds not in BOUND_MODES:
            raise ConfigurationError(f"bounds must be one of {BOUND_MODES}")
        if self.limiter not in LIMITERS:
            raise ConfigurationError(f"limiter must be one of {LIMITERS}")
        if self.limiter == "off" and not self.unsafe:
            raise ConfigurationError("the unlimited scheme can fail by design; pass --unsafe to allow it")
        if not (self.cfl > 0):
            raise ConfigurationError("cfl must be positive")
        if self.cfl > 1:
            raise ConfigurationError("cfl above 1 breaks the bound-preserving time-step condition")
        if self.n_cells is not None and self.n_cells < 3:
            raise ConfigurationError("need at least 3 cells")
        if self.t_final is not None and not self.t_final > 0:
            raise ConfigurationError("final time must be positive")
        return self


def scalar_bounds(spec: ProblemSpec, mode: str, field: Optional[DoFField] = None) -> Optional[ScalarBounds]:
    if spec.is_euler:
        return None
    if spec.bounds is not None:
        lo, hi = spec.bounds
    elif field is not None:
        lo = float(min(field.averages.min(), field.points.min()))
        hi = float(max(field.averages.max(), field.points.max()))
    else:
        return None
    return ScalarBounds.relaxed(lo, hi) if mode == "relaxed" else ScalarBounds.strict(lo, hi)


@dataclass
class RunOutput:
    config: RunConfig
    spec: ProblemSpec
    grid: Grid1D
    initial: DoFField
    result: RunResult
    audit: AuditReport
    bounds: Optional[ScalarBounds]

    @property
    def field(self) -> DoFField:
        return self.result.field


def run_problem(config: RunConfig, progress: Optional[Callable] = None, audit: bool = True) -> RunOutput:
    config.validate()
    spec = get_problem(config.problem)
    grid = spec.make_grid(config.n_cells)
    f0 = initialize(spec, grid)
    bounds = scalar_bounds(spec, config.bounds, f0)
    limiter = LimiterConfig(config.limiter, bounds, config.lmp)
    control = StepControl(config.cfl, config.t_final or spec.t_final)
    auditor = None
    if audit:
        if bounds is not None:
            auditor = StageAuditor(bounds.lower, bounds.upper, 1e-12)
        else:
            auditor = StageAuditor()
        auditor.update(f0, "initial")
    result = solve(f0, spec.make_model(), grid, spec.bc, limiter, control, observer=auditor, progress=progress)
    return RunOutput(config, spec, grid, f0, result, auditor.report if auditor else AuditReport(), bounds)


def reference_for(spec: ProblemSpec, n_fine: Optional[int] = None, t: Optional[float] = None):
    """(reference, reference_grid, breakpoints) for error_norms."""
    t = spec.t_final if t is None else t
    if n_fine is None and has_exact_solution(spec):
        from .problems import exact_solution
        bps = ()
        if spec.id == "jiang_shu":
            lo, hi = spec.domain
            bps = tuple(lo + np.mod(b + t - lo, hi - lo) for b in spec.breakpoints)
        return (lambda x: exact_solution(spec, x, t)), None, bps
    if t != spec.t_final:
        raise ConfigurationError("fine-mesh references exist only at the problem's final time")
    grid, field = reference_solution(spec, n_fine or 40000)
    return field, grid, ()


def convergence_study(template: RunConfig, meshes: Sequence[int], n_fine: Optional[int] = None,
                      component: int = 0, progress: Optional[Callable] = None) -> ConvergenceTable:
    """Run ``template`` on every mesh and compare against the exact or fine-mesh reference."""
    spec = get_problem(template.problem)
    t = template.t_final or spec.t_final
    ref, ref_grid, bps = reference_for(spec, n_fine, t)
    reports = []
    for n in meshes:
        out = run_problem(replace(template, n_cells=n), audit=False)
        reports.append(error_norms(out.field, out.grid, spec.bc, ref, ref_grid, component, bps))
        if progress:
            progress(n, reports[-1])
    return attach_rates(reports)


def shock_position(x, rho, threshold: float) -> float:
    """Rightmost crossing of ``threshold`` by a piecewise-linear density profile."""
    x = np.asarray(x, dtype=float)
    rho = np.asarray(rho, dtype=float)
    above = np.nonzero(rho > threshold)[0]
    if above.size == 0:
        raise ValueError("density never exceeds the threshold")
    i = above[-1]
    if i == len(rho) - 1:
        return float(x[-1])
    return float(x[i] + (rho[i] - threshold) / (rho[i] - rho[i + 1]) * (x[i + 1] - x[i]))

# }}}
