import math

import numpy as np
import pytest

from warplab.errors import IntegrationError, ProfileError
from warplab.jacobi import (
    aniso_field,
    conjugate_point_scan,
    constant_field,
    field_from_label,
    integrate_all_directions,
    integrate_jacobi,
    isotropic_field,
    shape_data,
    slope_on_grid,
)
from warplab.profile import builtin_profile
from warplab.comparison import check_bishop_gromov_directional, check_slope_bound

ANISO = "aniso:0.15/(1+t)^2,0.5"


def sine_error(h, t_end=3.0):
    sol = integrate_jacobi(constant_field(1.0), 0, t_end, h)
    return abs(sol.U[-1, 0, 0] - math.sin(t_end))


def test_flat_field():
    sol = integrate_jacobi(constant_field(0.0), 0, 10.0, 0.01)
    assert np.allclose(sol.U[:, 0, 0], sol.grid, rtol=1e-13)
    assert np.allclose(sol.U[:, 0, 1], 0.0)
    assert np.allclose(sol.J, sol.grid**2, rtol=1e-12)
    assert sol.conjugate_point is None
    assert sol.grid[0] == 0.01 and sol.grid[-1] == 10.0


def test_first_point_is_near_identity():
    sol = integrate_jacobi(field_from_label(ANISO), 3, 1.0, 1e-3)
    assert np.allclose(sol.U[0] / sol.grid[0], np.eye(2), atol=1e-6)


def test_isotropic_round_trip_short():
    p = builtin_profile("cone_tanh", [0.5])
    sol = integrate_jacobi(isotropic_field(p), 0, 20.0, 1e-3)
    sel = sol.grid >= 1.0
    phi = p.jet(sol.grid[sel]).v
    assert np.max(np.abs(sol.J[sel] / phi**2 - 1)) <= 1e-6


def test_constant_curvature_conjugate_point():
    sol = integrate_jacobi(constant_field(1.0), 0, 4.0, 1e-3)
    assert sol.conjugate_point == pytest.approx(math.pi, abs=1e-6)
    assert conjugate_point_scan(sol) == sol.conjugate_point


def test_no_conjugate_point_for_cone_03():
    p = builtin_profile("cone_tanh", [0.3], t_max=1e3)
    sol = integrate_jacobi(isotropic_field(p), 0, 1e3, 1e-2)
    assert sol.conjugate_point is None
    assert np.all(sol.J > 0)


def test_shape_data_examples():
    s = shape_data(integrate_jacobi(constant_field(0.0), 0, 3.0, 1e-3), 2.0)
    assert (s.lam1, s.lam2) == pytest.approx((0.5, 0.5), rel=1e-10)
    assert s.JoverJ == pytest.approx(1.0, rel=1e-10)
    s = shape_data(integrate_jacobi(constant_field(1.0), 0, 2.0, 1e-3), 1.0)
    assert (s.lam1, s.lam2) == pytest.approx((1 / math.tan(1.0),) * 2, rel=1e-9)
    assert s.ric_radial == 2.0
    p = builtin_profile("cone_tanh", [0.5])
    s = shape_data(integrate_jacobi(isotropic_field(p), 0, 2.0, 1e-3), 1.0)
    assert s.lam1 == pytest.approx(0.80607349, rel=1e-7)
    assert s.lam2 == pytest.approx(0.80607349, rel=1e-7)


def test_shape_data_past_conjugate_point():
    sol = integrate_jacobi(constant_field(1.0), 0, 4.0, 1e-3)
    with pytest.raises(ValueError):
        shape_data(sol, 3.5)


def test_step_halving_order():
    e = [sine_error(h) for h in (0.02, 0.01, 0.005)]
    orders = [math.log2(e[0] / e[1]), math.log2(e[1] / e[2])]
    for q in orders:
        assert 3.7 <= q <= 4.3


def test_riccati_trace_identity():
    field = field_from_label(ANISO)
    for d in (0, 2, 5):
        sol = integrate_jacobi(field, d, 52.0, 1e-3)
        h = 1e-3
        for t in (1.0, 5.0, 20.0, 50.0):
            fd = (shape_data(sol, t + h).JoverJ - shape_data(sol, t - h).JoverJ) / (2 * h)
            s = shape_data(sol, t)
            want = -(s.lam1**2 + s.lam2**2) - s.ric_radial
            assert abs(fd - want) <= 1e-4 * abs(want)


def test_field_symmetry_and_trace():
    field = aniso_field("0.15/(1+t)^2", 0.5)
    ts = np.geomspace(1e-3, 100, 50)
    for d in range(field.n_directions):
        K = field.eval(ts, d)
        assert np.allclose(K, np.swapaxes(K, -1, -2), atol=1e-14)
        assert np.all(np.trace(K, axis1=-2, axis2=-1) >= 0)
    assert field.nonneg_trace


def test_field_labels():
    assert field_from_label("constant:2").eval(np.array([1.0]), 0)[0, 0, 0] == 2.0
    iso = field_from_label("isotropic:builtin:cone_tanh[0.5]")
    assert iso.eval(np.array([1.0]), 0)[0, 0, 0] == pytest.approx(0.31985000422461224 / 0.8807970779778824)
    assert field_from_label(ANISO, 4).n_directions == 4
    with pytest.raises(ProfileError):
        field_from_label("aniso:-1/(1+t)^2,0.5")
    with pytest.raises(ProfileError):
        field_from_label("weird:1")


def test_slope_and_volume_bounds_on_aniso():
    field = field_from_label(ANISO)
    for sol in integrate_all_directions(field, 30.0, 1e-3):
        assert sol.conjugate_point is None
        assert check_slope_bound(sol).passed
        assert check_bishop_gromov_directional(sol, stride=50).passed


def test_negative_trace_field_is_flagged():
    # trace < 0 (negative radial Ricci) pushes J'/J above 2/t
    sol = integrate_jacobi(constant_field(-0.5), 0, 10.0, 1e-3)
    assert not check_slope_bound(sol).passed
    assert not check_bishop_gromov_directional(sol, stride=20).passed


def test_slope_on_grid_stops_before_conjugate_point():
    sol = integrate_jacobi(constant_field(1.0), 0, 4.0, 1e-3)
    ts, q = slope_on_grid(sol)
    assert ts[-1] < math.pi
    assert np.allclose(q, 2 / np.tan(ts), rtol=1e-6)


def test_blow_up_raises():
    with pytest.raises(IntegrationError):
        integrate_jacobi(constant_field(-1e6), 0, 1.0, 1e-3)


def test_argument_checks():
    with pytest.raises(ValueError):
        integrate_jacobi(constant_field(0.0), 0, 1.0, 0.0)
    with pytest.raises(ValueError):
        integrate_jacobi(constant_field(0.0), 0, 0.05, 0.01)
