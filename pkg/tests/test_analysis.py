import pytest

from p2pspread.analysis import (
    DegenerateDesign,
    ExperimentSpec,
    fit_loglinear,
    growth_csv,
    growth_report,
)


def test_exact_line():
    fit = fit_loglinear([(n, 2 + 3 * k) for k, n in enumerate([1, 2, 4, 8])])
    assert fit.intercept == pytest.approx(2) and fit.slope == pytest.approx(3)
    assert fit.r_squared == pytest.approx(1) and fit.n_points == 4


def test_degenerate():
    with pytest.raises(DegenerateDesign):
        fit_loglinear([(4, 1), (4, 2)])
    with pytest.raises(DegenerateDesign):
        fit_loglinear([(4, 1)])


def test_noisy_fit_r2_in_range():
    pts = [(n, v) for n in (2, 4, 8, 16) for v in (1, 2, 5)]
    fit = fit_loglinear(pts)
    assert 0 <= fit.r_squared <= 1


def test_report_is_reproducible():
    a = growth_csv(growth_report("list", [1, 2], [2, 4, 8, 16], 10, 5))
    b = growth_csv(growth_report("list", [1, 2], [2, 4, 8, 16], 10, 5))
    assert a == b
    assert a.splitlines()[0] == "m,intercept,slope,r_squared,n_points,centralized_slope"


def test_spec_validation():
    with pytest.raises(ValueError):
        ExperimentSpec(["list"], [2], [1], 1, 0)
    with pytest.raises(ValueError):
        ExperimentSpec([], [2], [1], 5, 0)
