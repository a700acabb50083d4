import math

import numpy as np
import pytest

from pampa import BoundaryCondition, ConfigurationError, NumericalError, build_grid
from pampa.csvio import read_solution_csv
from pampa.problems import (PROBLEMS, SEDOV_E_MAX_COEFF, _isentropic_foot, cell_averages, compute_reference,
                            conserved, exact_field, exact_solution, get_problem, has_exact_solution,
                            initialize, isentropic_exact, point_values, primitive, reference_path,
                            reference_solution)

O = BoundaryCondition.OUTFLOW


def test_registry_contents():
    assert set(PROBLEMS) == {"advect_cos", "jiang_shu", "burgers_square", "buckley", "isentropic", "sod",
                             "shu_osher", "leblanc", "double_rarefaction", "sedov"}
    assert get_problem("isentropic").gamma == 3.0
    assert get_problem("double_rarefaction").gamma == pytest.approx(5 / 3)
    assert get_problem("sedov").gamma == pytest.approx(5 / 3)
    assert get_problem("leblanc").t_final == 6.0
    assert get_problem("shu_osher").t_final == 1.8
    with pytest.raises(ConfigurationError):
        get_problem("noh")


@pytest.mark.parametrize("degree", range(10))
def test_quadrature_exact_to_degree_nine(degree):
    g = build_grid(-0.3, 1.1, 7)
    got = cell_averages(lambda x: x ** degree, g)
    e = g.nodes()
    want = (e[1:] ** (degree + 1) - e[:-1] ** (degree + 1)) / (degree + 1) / g.dx
    np.testing.assert_allclose(got, want, rtol=1e-13, atol=1e-15)


def test_quadrature_splits_cells_at_breakpoints():
    g = build_grid(0, 1, 5)
    step = lambda x: np.where(np.asarray(x) < 0.33, 1.0, 0.0)
    got = cell_averages(step, g, breakpoints=(0.33,))
    np.testing.assert_allclose(got, [1.0, (0.33 - 0.2) / 0.2, 0, 0, 0], rtol=1e-13)


def test_point_values_take_left_limit_on_breakpoints():
    g = build_grid(0, 1, 4)
    step = lambda x: np.where(np.asarray(x) <= 0.5, 1.0, 0.0)
    np.testing.assert_array_equal(point_values(step, g, O, (0.5,)), [1, 1, 1, 0, 0])
    strict = lambda x: np.where(np.asarray(x) < 0.5, 1.0, 0.0)
    assert point_values(strict, g, O, (0.5,))[2] == 1.0


def test_conserved_primitive_round_trip():
    u = conserved([1.0, 0.125], [0.5, -1.0], [1.0, 0.1], 1.4)
    rho, v, p = primitive(u, 1.4)
    np.testing.assert_allclose(rho, [1.0, 0.125])
    np.testing.assert_allclose(v, [0.5, -1.0])
    np.testing.assert_allclose(p, [1.0, 0.1])


def test_initial_data_examples():
    spec = get_problem("advect_cos")
    g = spec.make_grid(100)
    f = initialize(spec, g)
    np.testing.assert_allclose(f.points, np.cos(2 * np.pi * g.point_coordinates(spec.bc)), atol=1e-15)
    sod = get_problem("sod")
    f = initialize(sod, sod.make_grid(200))
    np.testing.assert_allclose(primitive(f.averages[0], 1.4), (1, 0, 1))
    np.testing.assert_allclose(primitive(f.averages[-1], 1.4), (0.125, 0, 0.1))
    # node 100 sits on the diaphragm and takes the left state
    np.testing.assert_allclose(f.points[100], conserved(1, 0, 1, 1.4))
    with pytest.raises(ConfigurationError):
        initialize(sod, build_grid(0, 2, 200))


def test_leblanc_states():
    spec = get_problem("leblanc")
    f = initialize(spec, spec.make_grid(90))
    rho, v, p = primitive(f.averages, 5 / 3)
    assert rho[0] == pytest.approx(1.0, rel=1e-14) and rho[-1] == pytest.approx(0.001, rel=1e-14)
    assert p[0] == pytest.approx(0.1 * 2 / 3) and p[-1] == pytest.approx(1e-7 * 2 / 3)


def test_sedov_mesh_and_energy():
    spec = get_problem("sedov")
    g = spec.make_grid()
    assert g.n_cells == 802
    assert g.dx == pytest.approx(2 / 401)
    # the energised cell is centred on the origin
    assert g.centers()[401] == pytest.approx(0.0, abs=1e-12)
    f = initialize(spec, g)
    assert f.averages[401, 2] * g.dx * (5 / 3 - 1) == pytest.approx(SEDOV_E_MAX_COEFF, rel=1e-14)
    assert np.all(f.averages[np.arange(802) != 401, 2] <= 1e-12)
    assert np.all(f.points[:, 0] == 1.0)
    with pytest.raises(ConfigurationError):
        spec.make_grid(801)


def test_exact_solution_shifts():
    spec = get_problem("advect_cos")
    assert exact_solution(spec, 0.25, 0.25) == pytest.approx(1.0)
    x = np.linspace(0, 1, 11)
    np.testing.assert_allclose(exact_solution(spec, x, 3.0), np.cos(2 * np.pi * x), atol=1e-12)
    js = get_problem("jiang_shu")
    y = np.linspace(-0.97, 0.97, 41)  # off the profile's jump locations
    np.testing.assert_allclose(exact_solution(js, y, 2.0), exact_solution(js, y, 0.0), atol=1e-12)
    assert has_exact_solution(spec) and not has_exact_solution(get_problem("sod"))
    with pytest.raises(ConfigurationError):
        exact_solution(get_problem("sod"), x, 0.1)


def test_isentropic_at_time_zero():
    spec = get_problem("isentropic")
    g = spec.make_grid(8)
    x = g.point_coordinates(spec.bc)
    np.testing.assert_allclose(isentropic_exact(x, 0.0), initialize(spec, g).points)
    np.testing.assert_allclose(isentropic_exact(x, 1e-14), isentropic_exact(x, 0.0), rtol=1e-12, atol=1e-12)


def test_isentropic_characteristic_residuals():
    x = np.linspace(-1, 1, 401)
    t = 0.1
    rho0 = lambda y: 1 + 0.999995 * np.sin(np.pi * y)
    x1 = _isentropic_foot(x, t, +1.0)
    x2 = _isentropic_foot(x, t, -1.0)
    assert np.abs(x + math.sqrt(3) * rho0(x1) * t - x1).max() <= 1e-13
    assert np.abs(x - math.sqrt(3) * rho0(x2) * t - x2).max() <= 1e-13
    with pytest.raises(NumericalError):
        _isentropic_foot(x, t, 1.0, max_iter=0)


def test_isentropic_solves_the_pde():
    """Centred space-time differences of the exact state give an O(h^2) residual."""
    model = get_problem("isentropic").make_model()
    x = np.linspace(-0.9, 0.9, 37)
    t = 0.05
    res = []
    for h in (1e-3, 5e-4):
        dudt = (isentropic_exact(x, t + h) - isentropic_exact(x, t - h)) / (2 * h)
        dfdx = (model.flux(isentropic_exact(x + h, t)) - model.flux(isentropic_exact(x - h, t))) / (2 * h)
        res.append(np.abs(dudt + dfdx).max())
    assert res[1] < 1e-3
    assert res[0] / res[1] == pytest.approx(4.0, rel=0.1)


def test_isentropic_rejects_shock_time():
    with pytest.raises(ConfigurationError):
        isentropic_exact(np.zeros(3), 1.0)


def test_exact_field_jiang_shu_periodic():
    spec = get_problem("jiang_shu")
    g = spec.make_grid(400)
    f0 = initialize(spec, g)
    f2 = exact_field(spec, g, 2.0)
    np.testing.assert_allclose(f2.averages, f0.averages, atol=1e-12)
    np.testing.assert_allclose(f2.points, f0.points, atol=1e-12)


def test_reference_cache_round_trip(tmp_path, monkeypatch):
    monkeypatch.setenv("PAMPA_REF_DIR", str(tmp_path))
    spec = get_problem("sod")
    grid, field = reference_solution(spec, 400)
    path = reference_path(spec, 400)
    assert path.exists() and path.parent.parent == tmp_path
    grid2, field2 = reference_solution(spec, 400)
    np.testing.assert_array_equal(field.averages, field2.averages)
    np.testing.assert_array_equal(field.points, field2.points)
    loaded, xa, xp = read_solution_csv(path)
    np.testing.assert_allclose(xa, grid.centers())
    # first-order reference keeps the Sod density between its initial states
    rho = field.averages[:, 0]
    assert rho.min() >= 0.125 - 1e-12 and rho.max() <= 1 + 1e-12
    assert np.all(np.diff(rho) <= 1e-12)


def test_reference_points_are_node_means():
    spec = get_problem("burgers_square")
    grid, field = compute_reference(spec, 200)
    np.testing.assert_allclose(field.points, 0.5 * (np.roll(field.averages, 1) + field.averages))
    assert field.averages.min() >= -1 - 1e-12 and field.averages.max() <= 2 + 1e-12
