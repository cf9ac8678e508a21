import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from warplab.convergence import ConvergenceReport, extrapolate_limit


def test_exact_model():
    rep = extrapolate_limit([(r, 5 + 3 / r) for r in (10, 20, 40, 80)])
    assert abs(rep.limit - 5) <= 1e-10 and rep.c == pytest.approx(3)


def test_second_order_term():
    rs = [10.0 * 2**k for k in range(7)]  # up to 640
    rep = extrapolate_limit([(r, 2 - 1 / r + 0.5 / r**2) for r in rs])
    assert abs(rep.limit - 2) <= 5e-3
    assert rep.error_estimate >= rep.rms_residual


def test_constant():
    rep = extrapolate_limit([(r, 7.0) for r in (1, 2, 3, 4, 5)])
    assert rep.limit == pytest.approx(7.0, abs=1e-12) and rep.c == pytest.approx(0.0, abs=1e-10)


def test_errors():
    with pytest.raises(ValueError, match="at least 4"):
        extrapolate_limit([(1, 1), (2, 2), (3, 3)])
    with pytest.raises(ValueError, match="degenerate"):
        extrapolate_limit([(2, 1), (2, 2), (2, 3), (2, 4)])
    with pytest.raises(ValueError):
        extrapolate_limit([(1, 1), (3, 2), (2, 3), (4, 4)])
    with pytest.raises(ValueError):
        extrapolate_limit([(1, 1), (2, float("nan")), (3, 3), (4, 4)])


def test_round_trip_and_residuals():
    rep = extrapolate_limit([(r, 1 + 2 / r + np.sin(r) * 1e-3) for r in (5, 10, 20, 40, 80)])
    assert ConvergenceReport.from_dict(rep.to_dict()) == rep
    assert np.allclose(rep.fit_residuals(), rep.values - (rep.limit + rep.c / rep.radii))


@settings(max_examples=100, deadline=None)
@given(L=st.floats(-1e3, 1e3), c=st.floats(-1e3, 1e3), base=st.floats(1.0, 100.0))
def test_recovers_exact_limits(L, c, base):
    rs = [base * 2**k for k in range(8)]
    rep = extrapolate_limit([(r, L + c / r) for r in rs])
    assert abs(rep.limit - L) <= 1e-10 * (1 + abs(L) + abs(c))
