"""End-to-end acceptance checks. Each test prints one PASS/FAIL line."""
import math
import subprocess
import sys
import time
from dataclasses import replace
from pathlib import Path

import numpy as np
import pytest

from pampa.analysis import (RunConfig, attach_rates, convergence_study, error_norms, reference_for,
                            run_problem, shock_position)
from pampa.problems import get_problem, reference_path, reference_solution

pytestmark = pytest.mark.acceptance

NORMS = ("L1", "L2", "Linf")
STAGE_TOL = 1e-12


@pytest.fixture
def report(capsys):
    def emit(name, ok, detail, elapsed):
        with capsys.disabled():
            print(f"\n[{'PASS' if ok else 'FAIL'}] {name}: {detail} ({elapsed:.1f} s)")
    return emit


def _rates(table, kind, norm):
    return [round(r, 3) for r in table.rate(kind, norm)]


def test_relaxed_gmp_third_order(report):
    t0 = time.perf_counter()
    table = convergence_study(RunConfig("advect_cos", bounds="relaxed"), [50, 100, 200, 400, 800])
    elapsed = time.perf_counter() - t0
    rates = {(k, n): table.rate(k, n)[1:] for k in ("avg", "pt") for n in NORMS}
    ok_rates = all(abs(r - 3.0) <= 0.15 for rs in rates.values() for r in rs)
    e100 = table.reports[1]["avg", "L1"]
    ok_err = 4.229e-5 / 1.5 <= e100 <= 4.229e-5 * 1.5
    ok = ok_rates and ok_err and elapsed < 120
    worst = max(abs(r - 3.0) for rs in rates.values() for r in rs)
    report("1 relaxed GMP rates", ok, f"max |rate-3| {worst:.3f}, L1 avg N=100 {e100:.4e}", elapsed)
    assert ok_rates, rates
    assert ok_err, e100
    assert elapsed < 120


def test_strict_gmp_degradation(report):
    t0 = time.perf_counter()
    table = convergence_study(RunConfig("advect_cos", bounds="strict"), [50, 100, 200, 400, 800])
    elapsed = time.perf_counter() - t0
    l1 = table.rate("avg", "L1")[-2:]
    linf = table.rate("avg", "Linf")[-2:] + table.rate("pt", "Linf")[-2:]
    ok_l1 = all(2.3 <= r <= 2.8 for r in l1)
    ok_linf = all(1.6 <= r <= 2.1 for r in linf)
    ok = ok_l1 and ok_linf and elapsed < 120
    report("2 strict GMP rates", ok, f"L1 avg {_rates(table, 'avg', 'L1')[-2:]}, "
           f"Linf avg/pt {[round(r, 3) for r in linf]}", elapsed)
    assert ok_l1, l1
    assert ok_linf, linf
    assert elapsed < 120


def test_isentropic_accuracy_and_positivity(report):
    t0 = time.perf_counter()
    spec = get_problem("isentropic")
    ref, ref_grid, bps = reference_for(spec, None, spec.t_final)
    reports, clean = [], True
    for n in (50, 100, 200, 400):
        out = run_problem(RunConfig("isentropic", n_cells=n))
        clean &= out.audit.clean and out.audit.min_density > 0 and out.audit.min_internal_energy > 0
        reports.append(error_norms(out.field, out.grid, spec.bc, ref, ref_grid, 0, bps))
    table = attach_rates(reports)
    elapsed = time.perf_counter() - t0
    rates = table.rate("avg", "L1") + table.rate("pt", "L1")
    ok_rates = all(2.6 <= r <= 3.1 for r in rates)
    ok = ok_rates and clean and elapsed < 180
    report("3 isentropic rates", ok, f"L1 avg {_rates(table, 'avg', 'L1')}, pt {_rates(table, 'pt', 'L1')}, "
           f"audit {'clean' if clean else 'VIOLATED'}", elapsed)
    assert ok_rates, rates
    assert clean
    assert elapsed < 180


def test_jiang_shu_strict_bounds(report):
    t0 = time.perf_counter()
    out = run_problem(RunConfig("jiang_shu", n_cells=400, t_final=2.0, bounds="strict"))
    elapsed = time.perf_counter() - t0
    a = out.audit
    ok_b = a.clean and a.scalar_min >= -STAGE_TOL and a.scalar_max <= 1 + STAGE_TOL
    ok = ok_b and elapsed < 60
    report("4 Jiang-Shu bounds", ok, f"range [{a.scalar_min:.3e}, 1{a.scalar_max - 1:+.3e}] over "
           f"{a.n_stages} stages", elapsed)
    assert ok_b, a
    assert elapsed < 60


def test_burgers_spike_suppression(report):
    t0 = time.perf_counter()
    bp = run_problem(RunConfig("burgers_square", n_cells=200, t_final=0.5))
    raw = run_problem(RunConfig("burgers_square", n_cells=200, t_final=0.5, limiter="off", unsafe=True))
    elapsed = time.perf_counter() - t0
    delta = bp.bounds.relax_margin + STAGE_TOL
    ok_bp = bp.audit.scalar_max <= 2 + delta and bp.audit.scalar_min >= -1 - delta
    ok_raw = raw.audit.scalar_max > 2.05
    ok = ok_bp and ok_raw and elapsed < 30
    report("5 Burgers spike", ok, f"BP range [{bp.audit.scalar_min:.6f}, {bp.audit.scalar_max:.6f}], "
           f"unlimited max {raw.audit.scalar_max:.3f}", elapsed)
    assert ok_bp, bp.audit
    assert ok_raw, raw.audit
    assert elapsed < 30


def test_buckley_leverett_bounds(report):
    t0 = time.perf_counter()
    out = run_problem(RunConfig("buckley", n_cells=200, t_final=0.4))
    elapsed = time.perf_counter() - t0
    delta = out.bounds.relax_margin + STAGE_TOL
    a = out.audit
    ok_b = out.result.t == 0.4 and a.scalar_min >= -delta and a.scalar_max <= 1 + delta
    ok = ok_b and elapsed < 30
    report("6 Buckley-Leverett", ok, f"range [{a.scalar_min:.3e}, 1{a.scalar_max - 1:+.3e}]", elapsed)
    assert ok_b, a
    assert elapsed < 30


BATTERY = [("sod", 200, 0.16), ("shu_osher", 400, 1.8), ("leblanc", 500, 6.0),
           ("double_rarefaction", 400, 0.15), ("sedov", 802, 0.5)]


def test_euler_battery(report, tmp_path, monkeypatch):
    monkeypatch.setenv("PAMPA_REF_DIR", str(tmp_path))
    t0 = time.perf_counter()
    summary, clean = [], True
    for name, n, t in BATTERY:
        out = run_problem(RunConfig(name, n_cells=n, t_final=t))
        a = out.audit
        ok_run = out.result.t == t and a.clean and a.min_density > 0 and a.min_internal_energy > 0
        clean &= ok_run
        summary.append(f"{name} rho>={a.min_density:.1e} e>={a.min_internal_energy:.1e}")
    spec = get_problem("shu_osher")
    _, ref = reference_solution(spec, 40000)
    ref_ok = reference_path(spec, 40000).exists() and np.all(ref.averages[:, 0] > 0)
    elapsed = time.perf_counter() - t0
    ok = clean and ref_ok and elapsed < 600
    report("7 Euler battery", ok, "; ".join(summary) + ", 40k reference " + ("ok" if ref_ok else "missing"),
           elapsed)
    assert clean, summary
    assert ref_ok
    assert elapsed < 600


def _leblanc_exact_shock(t=6.0):
    """Exact shock location from the two-shock/rarefaction pressure equation, solved by bisection."""
    g = 5.0 / 3.0
    rl, pl, rr, pr = 1.0, 0.1 * (g - 1), 1e-3, 1e-7 * (g - 1)
    cl, cr = math.sqrt(g * pl / rl), math.sqrt(g * pr / rr)

    def branch(p, r, pk, c):
        if p > pk:
            return (p - pk) * math.sqrt(2 / ((g + 1) * r) / (p + (g - 1) / (g + 1) * pk))
        return 2 * c / (g - 1) * ((p / pk) ** ((g - 1) / (2 * g)) - 1)

    lo, hi = pr, pl
    for _ in range(200):
        mid = 0.5 * (lo + hi)
        if branch(mid, rl, pl, cl) + branch(mid, rr, pr, cr) > 0:
            hi = mid
        else:
            lo = mid
    ps = 0.5 * (lo + hi)
    speed = cr * math.sqrt((g + 1) / (2 * g) * ps / pr + (g - 1) / (2 * g))
    return 3.0 + speed * t


def test_leblanc_shock_position(report):
    t0 = time.perf_counter()
    pos = []
    for n in (500, 2000, 8000):
        out = run_problem(RunConfig("leblanc", n_cells=n, cfl=0.5), audit=False)
        pos.append(shock_position(out.grid.centers(), out.field.averages[:, 0], 2.5e-3))
    elapsed = time.perf_counter() - t0
    exact = _leblanc_exact_shock()
    dist = [abs(p - exact) for p in pos]
    steps = np.diff(pos)
    ok_mono = bool(np.all(steps < 0) or np.all(steps > 0)) and dist[0] > dist[1] > dist[2]
    ok_win = 7.5 <= pos[-1] <= 8.5
    ok = ok_mono and ok_win and elapsed < 300
    report("8 LeBlanc shock", ok, f"positions {[round(p, 4) for p in pos]}, exact {exact:.4f}", elapsed)
    assert ok_mono, (pos, exact)
    assert ok_win, pos
    assert elapsed < 300


def test_property_suites(report):
    root = Path(__file__).resolve().parent.parent
    t0 = time.perf_counter()
    proc = subprocess.run([sys.executable, "-m", "pytest", "-q", "-m", "property", "tests"], cwd=root,
                          capture_output=True, text=True)
    elapsed = time.perf_counter() - t0
    tail = proc.stdout.strip().splitlines()[-1] if proc.stdout.strip() else proc.stderr[-200:]
    ok = proc.returncode == 0 and elapsed < 60
    report("9 property suites", ok, tail, elapsed)
    assert proc.returncode == 0, proc.stdout[-3000:]
    assert elapsed < 60
