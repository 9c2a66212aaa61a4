import math

import numpy as np
import pytest

from models.field import GridSpec
from models.motion import TangentField, conjugate_shear_motion, identity_motion
from services.regularity_service import (
    holder_constant_bound,
    holder_exponent_fit,
    sample_pairs,
    schwarz_velocity_check,
    tangent_field,
    tangent_quotient_check,
    tangent_vector,
    vanishing_probe,
    vector_modulus_check,
)
from utils.errors import (
    ConfigurationError,
    DegenerateConfigurationError,
    DomainError,
    EmptySampleError,
    InsufficientDataError,
)

GRID = GridSpec.spanning(-1.0, 1.0, -1.0, 1.0, 11, 11)
LOG_R = 6.0


# ---------------- Tangent vectors ----------------
def test_identity_motion_has_zero_tangent():
    value, error = tangent_vector(identity_motion(GRID), 0.3 + 0.4j)
    assert value == 0 and error == 0


def test_shear_tangent_is_conjugation():
    z = np.array([0.3 + 0.4j, -1.2 + 0.1j, 2j])
    values, errors = tangent_vector(conjugate_shear_motion(GRID), z)
    np.testing.assert_allclose(values, np.conj(z), atol=1e-12)
    assert np.all(errors < 1e-12)


def test_three_step_extrapolation_is_exact_for_quadratic_quotients():
    class Quadratic:
        r = 1.0

        def evaluate(self, c, z):
            return z + c * z**2 + c**3

    value, error = tangent_vector(Quadratic(), 0.5, steps=[0.2, 0.1, 0.05])
    assert value == pytest.approx(0.25, abs=1e-12)
    assert error > 0


def test_tangent_step_validation():
    motion = conjugate_shear_motion(GRID, r=0.5)
    with pytest.raises(ConfigurationError):
        tangent_vector(motion, 0.1, steps=[0.1])
    with pytest.raises(DomainError):
        tangent_vector(motion, 0.1, steps=[0.5, 0.25])
    with pytest.raises(DomainError):
        tangent_vector(motion, 0.1, steps=[0.0, 0.1])


def test_normalised_extension_fixes_zero_and_one(extended):
    field = tangent_field(extended, [0, 1, 0.3 + 0.2j])
    assert abs(field.values[0]) < 1e-6
    assert abs(field.values[1]) < 1e-6
    assert np.isfinite(field.values[2])


def test_tangent_field_is_taken_over_the_unit_disk(extended):
    points = np.array([0.3 + 0.2j, -0.5j])
    raw, _ = tangent_vector(extended, points)
    field = tangent_field(extended, points)
    np.testing.assert_allclose(field.values, extended.r * raw, rtol=1e-12)


def test_tangent_growth_trend_far_away(extended):
    field = tangent_field(extended, [10, 20j, -40])
    trend = field.growth_trend()
    assert np.all(np.diff(trend) <= 0)


# ---------------- Modulus ----------------
def test_zero_field_has_zero_ratio():
    points = 0.3 + 0.01 * np.arange(5)
    report = vector_modulus_check(TangentField(points, np.zeros(5), np.zeros(5)), 2.0, 0.1, log_r=LOG_R)
    assert report.worst_ratio == 0
    assert report.pairs == 10
    assert report.C == pytest.approx(4 * LOG_R)
    assert report.holds


def test_conjugation_ratio_is_one_over_log():
    points = 0.3 + 0.01 * np.arange(5)
    field = TangentField(points, np.conj(points), np.zeros(5))
    report = vector_modulus_check(field, 2.0, 0.1, log_r=LOG_R)
    assert report.worst_ratio == pytest.approx(1 / math.log(1 / 0.04), rel=1e-9)
    assert report.coefficient == pytest.approx(2 + 4 * LOG_R / math.log(10))
    assert report.holds


def test_measured_constant_uses_the_annulus():
    points = np.array([0.3, 0.31, 1.5])
    values = np.array([0, 0, 3.0])
    report = vector_modulus_check(TangentField(points, values, np.zeros(3)), 2.0, 0.1, log_r=LOG_R)
    m1 = 3.0 / 1.5 + 2 * math.log(1.5)
    assert report.C == pytest.approx(max(m1 + 2 * LOG_R, 4 * LOG_R))


def test_modulus_check_arguments():
    field = TangentField([0.1, 0.9], [0, 0], [0, 0])
    with pytest.raises(ConfigurationError):
        vector_modulus_check(field, 2.0, 0.5, log_r=LOG_R)
    with pytest.raises(EmptySampleError):
        vector_modulus_check(field, 2.0, 0.1, log_r=LOG_R)


def test_extended_tangent_modulus(extended):
    cluster = sample_pairs(0.3 + 0.2j, 0.08, n_sep=3, n_dir=4, t_min=1e-3).ravel()
    field = tangent_field(extended, np.concatenate([cluster, [1.2, -1.5j]]))
    report = vector_modulus_check(field, 2.0, 0.1, log_r=LOG_R)
    assert report.pairs > 0
    assert report.worst_ratio <= report.coefficient


# ---------------- Hoelder fits ----------------
def test_sample_pairs_layout():
    pairs = sample_pairs(0.1j, 0.2, n_sep=4, n_dir=8)
    assert pairs.shape == (32, 2)
    separations = np.abs(pairs[:, 1] - pairs[:, 0])
    assert separations.min() == pytest.approx(1e-5)
    assert separations.max() == pytest.approx(0.2)
    np.testing.assert_allclose(pairs.mean(axis=1), 0.1j, atol=1e-15)
    with pytest.raises(ConfigurationError):
        sample_pairs(0, 1e-6)


def test_holder_fit_at_the_base_point():
    fit = holder_exponent_fit(conjugate_shear_motion(GRID), 0, sample_pairs(0.1, 0.2))
    assert fit.slope == pytest.approx(1.0, abs=1e-10)
    assert fit.intercept == pytest.approx(0.0, abs=1e-9)
    assert fit.floor == 1.0 and fit.holds


def test_holder_fit_for_the_shear_is_bi_lipschitz():
    fit = holder_exponent_fit(conjugate_shear_motion(GRID), 0.5, sample_pairs(0.1, 0.2))
    assert fit.slope == pytest.approx(1.0, abs=1e-9)
    assert fit.floor == pytest.approx(1 / 3)
    assert fit.holds


def test_holder_fit_for_the_extended_motion(extended):
    c = 0.5 * extended.r * np.exp(0.4j)
    fit = holder_exponent_fit(extended, c, sample_pairs(0.2 - 0.3j, 0.1))
    assert fit.pairs == 64
    assert fit.slope >= fit.floor - 0.05


def test_holder_fit_needs_enough_pairs():
    with pytest.raises(InsufficientDataError):
        holder_exponent_fit(identity_motion(GRID), 0.1, sample_pairs(0, 0.1, n_sep=1, n_dir=7))
    with pytest.raises(DomainError):
        holder_exponent_fit(identity_motion(GRID, r=0.5), 0.5, sample_pairs(0, 0.1))


def test_holder_constant_bound():
    assert holder_constant_bound(0, 3.0) == 1.0
    alpha = 1 / 3
    assert holder_constant_bound(0.5, 2.0) == pytest.approx(math.exp(alpha * 2 * math.log(3) * alpha**2))
    with pytest.raises(DomainError):
        holder_constant_bound(1.0, 2.0)


# ---------------- Vanishing probe ----------------
def test_vanishing_probe_examples():
    bs = np.array([10, 100, 1000])
    np.testing.assert_array_equal(vanishing_probe(lambda z: np.zeros_like(z), 1j, 2 + 1j, bs), 0)
    np.testing.assert_allclose(vanishing_probe(lambda z: z, 1j, 2 + 1j, bs), 0, atol=1e-14)
    values = vanishing_probe(np.conj, 1j, 2 + 1j, bs)
    assert np.all(np.diff(values) < 0)
    assert values[-1] < 1e-5


# ---------------- Proof-side inequalities ----------------
def test_quotient_check_for_the_extended_motion(extended):
    def unit_tangent(z):
        return extended.r * tangent_vector(extended, z)[0]

    pairs = [(0.3 + 0.2j, 0.5 - 0.1j), (-0.4 + 0.6j, 1.5 + 0.5j), (2 + 1j, -1 - 1j)]
    check = tangent_quotient_check(unit_tangent, pairs, resolution=128)
    assert check.lhs.shape == (3,)
    assert check.holds


def test_quotient_check_rejects_degenerate_pairs():
    with pytest.raises(DegenerateConfigurationError):
        tangent_quotient_check(np.conj, [(0.5, 0)])


def test_cross_ratio_velocity_for_the_shear():
    report = schwarz_velocity_check(np.conj, 0.5j, 2, 0, "inf", resolution=128)
    assert report.g0 == pytest.approx(0.25j)
    assert report.g_prime == pytest.approx(-0.5j)
    assert report.holds


def test_cross_ratio_velocity_for_the_extended_motion(extended):
    def unit_tangent(z):
        return extended.r * tangent_vector(extended, z)[0]

    report = schwarz_velocity_check(unit_tangent, 0.3 + 0.2j, 1, 0, resolution=128)
    assert report.g0 == pytest.approx(0.3 + 0.2j)
    assert report.holds
