from fractions import Fraction

import numpy as np
import pytest

from models.field import GridSpec
from models.germ import ParabolicGerm, quadratic_germ
from services.fatou_service import (
    boundary_motion,
    boundary_sample_motion,
    conjugacy_residual,
    exact_chart_value,
    fatou_coordinate,
    germ_power,
    invert_step,
    orbit_asymptotics,
    petal_chart,
    strip_conjugacy,
)
from utils.errors import ConfigurationError, DomainError, NotParabolicError, PetalError


@pytest.fixture(scope="module")
def chart():
    return petal_chart(quadratic_germ())


def _right_half_plane(chart, count, seed=0):
    rng = np.random.default_rng(seed)
    return chart.tau + rng.uniform(0, 20, count) + 1j * rng.uniform(-20, 20, count)


# ---------------- Germs ----------------
def test_germ_power_examples():
    f = quadratic_germ()
    assert germ_power(f, 1) is f
    np.testing.assert_allclose(germ_power(f, 2).coefficients, [1, 2, 2, 1])
    np.testing.assert_allclose(germ_power(germ_power(f, 2), 2).coefficients, germ_power(f, 4).coefficients)


def test_germ_power_normalises_a_period_two_germ():
    f = ParabolicGerm([-1.0, 1.0], period=2)
    assert not f.normalized
    g = germ_power(f, 2)
    np.testing.assert_allclose(g.coefficients, [1, 0, -2, 1], atol=1e-15)
    assert g.n == 2 and g.a == pytest.approx(-2)


def test_germ_validation():
    with pytest.raises(NotParabolicError):
        ParabolicGerm([0.5, 1.0])
    with pytest.raises(NotParabolicError):
        ParabolicGerm([1.0, 0.0, 0.0]).a
    with pytest.raises(NotParabolicError):
        petal_chart(ParabolicGerm([-1.0, 1.0], period=2))
    with pytest.raises(ConfigurationError):
        germ_power(quadratic_germ(), 0)


def test_germ_json_round_trip_keeps_the_coefficients():
    germ = ParabolicGerm.from_json({"coefficients": [1, [0.5, 0.25], 2]})
    assert germ.n == 1
    assert germ.a == 0.5 + 0.25j
    assert ParabolicGerm.from_json(germ.to_json()).coefficients.tolist() == germ.coefficients.tolist()


# ---------------- Petal chart ----------------
def test_quadratic_chart(chart):
    assert chart.d == pytest.approx(-1)
    np.testing.assert_allclose(chart.eta_coefficients[:6], 1, atol=1e-14)
    assert chart.r == 0.25
    assert chart.tau == 6.0
    w = np.array([7, 10 + 3j, 8 - 5j])
    np.testing.assert_allclose(chart.F(w), w + 1 + 1 / (w - 1), atol=1e-14)
    np.testing.assert_allclose(chart.F(w), chart.conjugated(w), atol=1e-12)


def test_chart_value_is_exact_in_rationals(chart):
    assert exact_chart_value(quadratic_germ(), 2) == Fraction(4)
    assert exact_chart_value(quadratic_germ(), Fraction(7, 2)) == Fraction(49, 10)
    assert complex(chart.F(2.0)) == pytest.approx(4.0)


def test_chart_moves_right_by_at_least_half(chart):
    w = _right_half_plane(chart, 1000)
    assert np.all(chart.F(w).real >= w.real + 0.5)
    assert np.all(np.abs(chart.F(w) - w - 1) <= 0.5)


def test_chart_of_a_cubic_germ_matches_the_conjugation():
    germ = ParabolicGerm([1.0, 0.0, 1.0, 0.3j])
    chart = petal_chart(germ)
    assert chart.n == 2 and chart.d == pytest.approx(-0.5)
    assert chart.tau > 1 / chart.r**2 + 1
    w = chart.tau + np.array([0.5, 3 + 2j, 10 - 4j])
    np.testing.assert_allclose(chart.F(w), chart.conjugated(w), atol=1e-10)
    assert len(chart.attracting_directions) == 2
    assert chart.metadata()["n"] == 2


def test_newton_inversion(chart):
    w = _right_half_plane(chart, 200, seed=1) + 1
    u = invert_step(chart, w)
    assert np.max(np.abs(chart.F(u) - w)) < 1e-12
    assert isinstance(invert_step(chart, 9.0), complex)


# ---------------- Orbits ----------------
def test_orbit_asymptotics(chart):
    report = orbit_asymptotics(chart, chart.tau, 100)
    assert 0.9 <= report.ratio <= 1.1
    assert report.steps_bounded
    assert report.clearance >= 0.5
    with pytest.raises(DomainError):
        orbit_asymptotics(chart, chart.tau - 1, 10)


# ---------------- Boundary motion ----------------
def test_boundary_motion_base_point_and_schedule(chart):
    motion = boundary_motion(chart, 10.0)
    left, right = motion.edges(np.linspace(-3, 3, 7))
    np.testing.assert_array_equal(motion.evaluate(0, right), right)
    assert motion.c_star == pytest.approx(1 / (0.25 * 9))
    assert motion.K == pytest.approx((1 + 4 / 9) / (1 - 4 / 9))
    xs = [7, 10, 20, 50, 200]
    ks = [boundary_motion(chart, x).K for x in xs]
    assert np.all(np.diff(ks) < 0) and ks[-1] < 1.05


def test_boundary_images_stay_apart(chart):
    motion = boundary_motion(chart, 8.0)
    left, right = motion.edges(np.linspace(-5, 5, 21))
    for c in 0.95 * np.exp(2j * np.pi * np.arange(8) / 8):
        np.testing.assert_array_equal(motion.evaluate(c, left), left)
        assert np.all(motion.evaluate(c, right).real >= motion.x + 0.5)


def test_boundary_slice_at_c_star_is_the_strip_map(chart):
    motion = boundary_motion(chart, 8.0)
    _, right = motion.edges([0.0, 1.5])
    expected = right + chart.eta(1 / (right - 1))
    np.testing.assert_allclose(motion.evaluate(motion.c_star, right), expected, atol=1e-14)


def test_boundary_motion_needs_room(chart):
    with pytest.raises(PetalError):
        boundary_motion(chart, 4.0)
    with pytest.raises(DomainError):
        boundary_motion(chart, 8.0).evaluate(0.1, [8.5 + 1j])


def test_boundary_samples_as_finite_point_motion(chart):
    motion = boundary_motion(chart, 9.0)
    points = boundary_sample_motion(motion, [-1.0, 1.0])
    assert len(points.trajectories) == 4
    c = 0.3 - 0.2j
    for t in points.trajectories:
        assert complex(t.exterior(1 / c)) == pytest.approx(complex(motion.evaluate(c, [t.base])[0]), abs=1e-13)


# ---------------- Strip conjugacies ----------------
def test_first_stage_offset(chart):
    psi = strip_conjugacy(chart, 1)
    assert psi.x_m == pytest.approx(chart.tau + 1 + 1 / (chart.tau - 1), abs=1e-12)


def test_left_edge_satisfies_the_functional_equation(chart):
    psi = strip_conjugacy(chart, 2)
    w = psi.left_edge + 1j * np.linspace(-2, 2, 9)
    np.testing.assert_allclose(psi(w), w + psi.x_m - psi.left_edge, atol=1e-14)
    np.testing.assert_allclose(chart.F(psi(w)), psi(w + 1), atol=1e-12)


def test_conjugacy_across_strips(chart):
    psi = strip_conjugacy(chart, 3)
    w = chart.tau + 0.3 + np.array([0.1, 1.4 + 0.5j, 2.2 - 1j, 3.7 + 0.2j, 5.1])
    assert conjugacy_residual(psi, w) < 1e-11


@pytest.mark.parametrize("m", [1, 2, 4, 8])
def test_strip_dilatation_within_schedule(chart, m):
    psi = strip_conjugacy(chart, m)
    assert psi.audit.valid
    assert psi.K_m <= psi.boundary.K + 0.05
    assert psi.beltrami_sup <= psi.boundary.c_star + 0.05


def test_strip_dilatation_decreases(chart):
    sups = [strip_conjugacy(chart, m).beltrami_sup for m in (1, 2, 4, 8)]
    assert np.all(np.diff(sups) <= 0)


def test_strip_conjugacy_arguments(chart):
    with pytest.raises(ConfigurationError):
        strip_conjugacy(chart, 0)
    with pytest.raises(ConfigurationError):
        strip_conjugacy(chart, 1, mode="spline")


def test_chirka_mode_runs(chart):
    psi = strip_conjugacy(chart, 16, mode="chirka")
    assert psi.mode == "chirka"
    assert psi.audit.values.shape == (3, 15)


# ---------------- Fatou coordinate ----------------
def test_fatou_coordinate_history_and_residual(chart):
    result = fatou_coordinate(chart, m_max=12, tol=1e-7)
    assert [row[0] for row in result.history] == list(range(1, 13))
    differences = [row[1] for row in result.history[1:]]
    assert differences[-1] < differences[0]
    assert result.conjugacy_residual < 1e-6
    assert not result.converged
    assert result.values.shape == (7, 6)
    # Psi(w) - w stays bounded on the test grid
    offset = np.abs(result.values - result.grid.points())
    assert offset.max() < 10


def test_fatou_coordinate_orbit_check(chart):
    result = fatou_coordinate(chart, m_max=4, tol=1e-7)
    w = result.grid.interior().points().ravel()[:4]
    np.testing.assert_allclose(chart.F(chart.F(result.psi(w))), result.psi(w + 2), atol=1e-10)


def test_fatou_coordinate_arguments(chart):
    with pytest.raises(ConfigurationError):
        fatou_coordinate(chart, m_max=1)
    with pytest.raises(DomainError):
        fatou_coordinate(chart, m_max=3, grid=GridSpec.spanning(0, 1, 0, 1, 3, 3))
