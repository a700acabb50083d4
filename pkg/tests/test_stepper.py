import numpy as np
import pytest

from pampa import (BoundaryCondition, BoundViolationError, CFLViolationError, DoFField, InvalidStateError,
                   ScalarModel, SolverAbort, build_grid)
from pampa import stepper
from pampa.kernels import interface_quantities, node_residuals
from pampa.limiter import ScalarBounds, eta_global_scalar
from pampa.problems import get_problem, initialize
from pampa.stepper import (LimiterConfig, StepControl, compute_dt, forward_euler_stage, signal_speed, solve,
                           ssprk3_step)

P = BoundaryCondition.PERIODIC
O = BoundaryCondition.OUTFLOW


def _setup(problem, n):
    spec = get_problem(problem)
    grid = spec.make_grid(n)
    return spec, grid, initialize(spec, grid), spec.make_model()


def _perturbed(problem, n, seed=0):
    """Initial data with independent noise on averages and points so no coefficient is trivially 1."""
    spec, grid, f, model = _setup(problem, n)
    rng = np.random.default_rng(seed)
    if spec.is_euler:
        avg = f.averages * (1 + 0.05 * rng.uniform(-1, 1, f.averages.shape))
        pts = f.points * (1 + 0.05 * rng.uniform(-1, 1, f.points.shape))
        avg[:, 2] += 0.1
        pts[:, 2] += 0.1
    else:
        lo, hi = spec.bounds
        avg = np.clip(f.averages + 0.05 * rng.normal(size=f.n_cells), lo, hi)
        pts = np.clip(f.points + 0.05 * rng.normal(size=f.n_nodes), lo, hi)
    return spec, grid, DoFField(avg, pts), model


# {{{ pinned reference steppers written directly from the residual definitions

def _interface_difference(F, n, bc):
    if BoundaryCondition(bc) is P:
        F = np.concatenate([F, F[:1]])
    return F[1:n + 1] - F[:n]


def pinned_first_order(field, model, grid, bc, dt):
    lam = dt / grid.dx
    iq = interface_quantities(field, model, bc)
    nr = node_residuals(field, model, bc)
    avg = field.averages - lam * _interface_difference(iq.f_lo, field.n_cells, bc)
    pts = field.points - 2 * lam * (nr.phi_right_lo + nr.phi_left_lo)
    return DoFField(avg, pts)


def pinned_high_order(field, model, grid, bc, dt):
    lam = dt / grid.dx
    iq = interface_quantities(field, model, bc)
    nr = node_residuals(field, model, bc)
    avg = field.averages - lam * _interface_difference(iq.f_hi, field.n_cells, bc)
    pts = field.points - 2 * lam * (nr.phi_right_hi + nr.phi_left_hi)
    return DoFField(avg, pts)

# }}}


CASES = [("jiang_shu", 64), ("burgers_square", 64), ("buckley", 64), ("isentropic", 64), ("sod", 64),
         ("shu_osher", 64)]


@pytest.mark.property
@pytest.mark.parametrize("problem,n", CASES)
def test_blend_endpoints_match_pinned_steppers(problem, n):
    spec, grid, f, model = _perturbed(problem, n)
    dt = 0.2 * grid.dx / signal_speed(f, model, spec.bc)
    for mode, pinned in (("first_order", pinned_first_order), ("off", pinned_high_order)):
        got = forward_euler_stage(f, model, grid, spec.bc, LimiterConfig(mode), dt)
        want = pinned(f, model, grid, spec.bc, dt)
        for a, b in ((got.averages, want.averages), (got.points, want.points)):
            scale = np.abs(b).max(axis=0) + 1
            assert np.all(np.abs(a - b) <= 1e-14 * scale), (mode, np.abs(a - b).max())


@pytest.mark.property
def test_unreachable_bounds_give_high_order():
    spec, grid, f, model = _perturbed("burgers_square", 80)
    dt = 0.2 * grid.dx / signal_speed(f, model, spec.bc)
    wide = ScalarBounds.strict(-1e6, 1e6)
    got = forward_euler_stage(f, model, grid, spec.bc, LimiterConfig("bp", wide, lmp=False), dt)
    want = forward_euler_stage(f, model, grid, spec.bc, LimiterConfig("off"), dt)
    np.testing.assert_array_equal(got.averages, want.averages)
    np.testing.assert_array_equal(got.points, want.points)


def test_stage_coefficients_match_public_limiter():
    spec, grid, f, model = _perturbed("jiang_shu", 50, seed=3)
    b = ScalarBounds.strict(*spec.bounds)
    dt = 0.2 * grid.dx / signal_speed(f, model, spec.bc)
    _, info = forward_euler_stage(f, model, grid, spec.bc, LimiterConfig("bp", b, lmp=False), dt, info=True)
    iq = interface_quantities(f, model, spec.bc)
    want = eta_global_scalar(iq.u_star, iq.delta, iq.alpha, b)
    np.testing.assert_array_equal(info.eta[:grid.n_cells], want)
    _, info_lmp = forward_euler_stage(f, model, grid, spec.bc, LimiterConfig("bp", b, lmp=True), dt, info=True)
    assert np.all(info_lmp.eta <= info.eta)
    assert np.any(info_lmp.eta < info.eta)


@pytest.mark.property
@pytest.mark.parametrize("problem", ["jiang_shu", "burgers_square", "buckley", "isentropic"])
def test_periodic_conservation(problem):
    spec, grid, f, model = _setup(problem, 80)
    bounds = ScalarBounds.strict(*spec.bounds) if spec.bounds else None
    cfg = LimiterConfig("bp", bounds)
    mass0 = f.averages.sum(axis=0) * grid.dx
    u = f
    for _ in range(100):
        dt = compute_dt(u, model, grid, spec.bc, StepControl(0.2, 1e9))
        u = ssprk3_step(u, model, grid, spec.bc, cfg, dt)
    mass = u.averages.sum(axis=0) * grid.dx
    scale = (np.abs(f.averages).sum(axis=0) + np.abs(u.averages).sum(axis=0)) * grid.dx
    assert np.all(np.abs(mass - mass0) <= 1e-12 * scale)


def test_compute_dt_rule():
    g = build_grid(0, 1, 100)
    f = DoFField(np.zeros(100), np.zeros(100))
    lin = ScalarModel("linear_advection")
    assert signal_speed(f, lin, P) == 4.0
    assert compute_dt(f, lin, g, P, StepControl(0.2, 1.0)) == pytest.approx(5e-4, rel=1e-14)
    assert compute_dt(f, ScalarModel("burgers"), g, P, StepControl(0.2, 0.3), t=0.1) == pytest.approx(0.2)
    assert compute_dt(f, lin, g, P, StepControl(0.2, 1.0, dt_cap=1e-4)) == 1e-4
    assert compute_dt(f, lin, g, P, StepControl(0.2, 1.0), t=1.0 - 1e-5) == pytest.approx(1e-5)
    assert StepControl().cfl == 0.2


@pytest.mark.parametrize("problem", ["burgers_square", "sod"])
def test_constant_state_is_steady(problem):
    spec, grid, f, model = _setup(problem, 20)
    c = DoFField(np.broadcast_to(f.averages[0], f.averages.shape).copy(),
                 np.broadcast_to(f.averages[0], f.points.shape).copy())
    bounds = ScalarBounds.strict(*spec.bounds) if spec.bounds else None
    for mode in ("bp", "off", "first_order"):
        cfg = LimiterConfig(mode, bounds)
        new = ssprk3_step(c, model, grid, spec.bc, cfg, 1e-3)
        np.testing.assert_allclose(new.averages, c.averages, rtol=1e-15, atol=1e-15)
        np.testing.assert_allclose(new.points, c.points, rtol=1e-15, atol=1e-15)


def test_ssprk3_is_composition_of_stages():
    spec, grid, f, model = _setup("burgers_square", 40)
    cfg = LimiterConfig("bp", ScalarBounds.strict(*spec.bounds))
    dt = compute_dt(f, model, grid, spec.bc, StepControl(0.2, 1.0))
    fe = lambda u: forward_euler_stage(u, model, grid, spec.bc, cfg, dt)
    u1 = fe(f)
    u2 = f.axpby(0.75, fe(u1), 0.25)
    u3 = f.axpby(1 / 3, fe(u2), 2 / 3)
    labels = []
    got = ssprk3_step(f, model, grid, spec.bc, cfg, dt, observer=lambda u, lab: labels.append(lab))
    np.testing.assert_array_equal(got.averages, u3.averages)
    np.testing.assert_array_equal(got.points, u3.points)
    assert labels == ["stage1", "fe2", "stage2", "fe3", "stage3"]
    # stage-wise bounds imply step-wise bounds
    assert got.averages.min() >= -1 - 1e-12 and got.averages.max() <= 2 + 1e-12


def test_cfl_violation_and_retry(monkeypatch):
    spec, grid, f, model = _setup("burgers_square", 40)
    cfg = LimiterConfig("bp", ScalarBounds.strict(*spec.bounds))
    big = 3.0 * grid.dx / signal_speed(f, model, spec.bc)
    with pytest.raises(CFLViolationError):
        forward_euler_stage(f, model, grid, spec.bc, cfg, big)
    real = stepper.compute_dt
    monkeypatch.setattr(stepper, "compute_dt", lambda *a, **k: 20.0 * real(*a, **k))
    res = solve(f, model, grid, spec.bc, cfg, StepControl(0.2, 0.01))
    assert res.retries >= 2
    assert res.t == 0.01


def test_retries_exhausted(monkeypatch):
    spec, grid, f, model = _setup("burgers_square", 40)
    cfg = LimiterConfig("bp", ScalarBounds.strict(*spec.bounds))
    monkeypatch.setattr(stepper, "compute_dt", lambda *a, **k: 1e9)
    with pytest.raises(SolverAbort):
        solve(f, model, grid, spec.bc, cfg, StepControl(0.2, 1e12))


def test_out_of_bounds_intermediate_state():
    spec, grid, f, model = _setup("burgers_square", 40)
    tight = ScalarBounds.strict(0.0, 1.0)
    with pytest.raises(BoundViolationError) as exc:
        forward_euler_stage(f, model, grid, spec.bc, LimiterConfig("bp", tight), 1e-4)
    assert exc.value.kind in ("interface", "node")
    with pytest.raises(ValueError):
        forward_euler_stage(f, model, grid, spec.bc, LimiterConfig("bp", None), 1e-4)
    with pytest.raises(ValueError):
        LimiterConfig("weno")


def test_invalid_euler_state_aborts():
    spec, grid, f, model = _setup("sod", 20)
    avg = f.averages.copy()
    avg[3, 0] = -1.0
    bad = DoFField(avg, f.points)
    with pytest.raises(InvalidStateError):
        forward_euler_stage(bad, model, grid, spec.bc, LimiterConfig(), 1e-4)
    with pytest.raises(SolverAbort):
        solve(bad, model, grid, spec.bc, LimiterConfig(), StepControl(0.2, 0.01))


def test_solve_lands_on_final_time_and_reports():
    spec, grid, f, model = _setup("sod", 50)
    seen = []
    res = solve(f, model, grid, O, LimiterConfig(), StepControl(0.2, 0.05), integrator="euler",
                observer=lambda u, k, lab: seen.append((k, lab)),
                progress=lambda k, t, dt, u: None)
    assert res.t == 0.05
    assert sum(res.dts) == pytest.approx(0.05, rel=1e-13)
    assert len(seen) == res.n_steps
    assert seen[0] == (0, "stage1")
    with pytest.raises(SolverAbort):
        solve(f, model, grid, O, LimiterConfig(), StepControl(0.2, 0.05), max_steps=2)
