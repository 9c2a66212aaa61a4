import math

import numpy as np
import pytest

from models.field import GridSpec, SampledField
from services.cauchy_service import (
    bump_field,
    cauchy_transform,
    dbar_residual,
    disk_indicator_field,
    empirical_modulus,
    exact_cell_integral,
    modulus_constants,
    uniform_bound_check,
)
from utils.errors import ConfigurationError, EmptySampleError, ExponentError


def _disk_targets(rng, h, count=40):
    inside = np.sqrt(rng.uniform(0, (1 - 2 * h) ** 2, count)) * np.exp(2j * np.pi * rng.uniform(size=count))
    outside = rng.uniform(1 + 2 * h, 2.0, count) * np.exp(2j * np.pi * rng.uniform(size=count))
    return inside, outside


def _disk_error(n, rng):
    field = disk_indicator_field(n)
    inside, outside = _disk_targets(rng, field.grid.spacing)
    pin = cauchy_transform(field, inside).values
    pout = cauchy_transform(field, outside).values
    return max(np.max(np.abs(pin - np.conj(inside))), np.max(np.abs(pout - 1 / outside)))


def test_exact_cell_integral_symmetric_square_vanishes():
    assert abs(exact_cell_integral(-0.5, 0.5, -0.5, 0.5)) < 1e-15


def test_exact_cell_integral_matches_midpoint_far_away():
    # a tiny cell far from the origin behaves like area / centre
    value = exact_cell_integral(2.0, 2.001, -3.0, -2.999)
    centre = 2.0005 - 2.9995j
    assert value == pytest.approx(1e-6 / centre, rel=1e-6)


def test_exact_cell_integral_across_the_negative_axis():
    upper = exact_cell_integral(-2.0, -1.0, 0.0, 0.5)
    lower = exact_cell_integral(-2.0, -1.0, -0.5, 0.0)
    both = exact_cell_integral(-2.0, -1.0, -0.5, 0.5)
    assert both == pytest.approx(upper + lower, abs=1e-14)
    assert lower == pytest.approx(np.conj(upper), abs=1e-14)
    assert both.real < 0 and abs(both.imag) < 1e-14


def test_disk_indicator_closed_form():
    rng = np.random.default_rng(11)
    coarse = _disk_error(32, rng)
    fine = _disk_error(64, np.random.default_rng(11))
    assert fine < 0.02
    assert fine < coarse


def test_zero_field_gives_zero_transform():
    grid = GridSpec.centered(1.0, 8)
    field = SampledField(grid, np.zeros(grid.shape), 1.0)
    result = cauchy_transform(field, [0.1, 2j])
    np.testing.assert_array_equal(result.values, 0)
    assert dbar_residual(field) == 0.0


def test_transform_is_linear():
    rng = np.random.default_rng(3)
    f = bump_field(24)
    g = disk_indicator_field(24)
    combo = SampledField(f.grid, 2 * f.values + 3j * g.values, max(f.support_radius, g.support_radius))
    targets = rng.normal(size=20) + 1j * rng.normal(size=20)
    lhs = cauchy_transform(combo, targets).values
    rhs = 2 * cauchy_transform(f, targets).values + 3j * cauchy_transform(g, targets).values
    np.testing.assert_allclose(lhs, rhs, atol=1e-12)


def test_target_on_a_grid_node_is_finite():
    field = disk_indicator_field(16)
    node = field.grid.points()[8, 8]
    value = cauchy_transform(field, [node]).values[0]
    assert np.isfinite(value)


def test_decay_outside_the_support():
    field = disk_indicator_field(32)
    far = np.array([3.0, -4j, 10 + 10j, 100.0])
    result = cauchy_transform(field, far)
    assert result.decay_violations().size == 0
    assert abs(result.values[-1]) < 0.011


def test_scaling_covariance():
    rng = np.random.default_rng(5)
    f = bump_field(32, radius=1.0)
    g = f.rescaled(2.0)
    c = 0.4 * (rng.normal(size=15) + 1j * rng.normal(size=15))
    pg = cauchy_transform(g, c).values
    pf = cauchy_transform(f, 2.0 * c).values
    np.testing.assert_allclose(pg, pf / 2.0, rtol=1e-10, atol=1e-13)


def test_dbar_residual_converges_for_a_smooth_bump():
    residuals = [dbar_residual(bump_field(n)) for n in (28, 56, 112)]
    assert residuals[0] / residuals[1] >= 1.8
    assert residuals[1] / residuals[2] >= 1.8


def test_dbar_residual_for_the_disk_away_from_the_circle():
    field = disk_indicator_field(48)
    residual = dbar_residual(field, exclude=lambda z: np.abs(np.abs(z) - 1.0) < 0.25)
    assert residual < 0.15


def test_dbar_residual_rejects_coarse_grids():
    grid = GridSpec.centered(1.0, 3)
    field = SampledField(grid, np.ones(grid.shape), 2.0)
    with pytest.raises(ConfigurationError):
        dbar_residual(field)


def test_modulus_constants_examples():
    constants = modulus_constants(R=1.0, R0=1.0, p=4.0, norm_f=1.0)
    assert constants.C1 == 2.0
    assert constants.C == pytest.approx(constants.B)
    assert constants.A_R == max(constants.C1, constants.C2)
    assert constants.q == pytest.approx(4.0 / 3.0)
    assert constants.holder_exponent == pytest.approx(0.5)
    assert constants.B == pytest.approx(constants.C3 / (math.pi * math.log(2)) + 4.0)


def test_modulus_constants_quadrature_agrees_across_resolutions():
    coarse = modulus_constants(1.0, 1.0, 3.0, 1.0, resolution=128)
    fine = modulus_constants(1.0, 1.0, 3.0, 1.0, resolution=256)
    assert coarse.C3 == pytest.approx(fine.C3, rel=1e-6)
    assert coarse.C2 == pytest.approx(fine.C2, rel=1e-5)


def test_modulus_constants_rescale_with_support():
    one = modulus_constants(1.0, 1.0, 4.0, 1.0)
    four = modulus_constants(1.0, 4.0, 4.0, 1.0)
    assert four.C == pytest.approx(3.0 * one.B)


def test_modulus_constants_reject_small_exponent():
    with pytest.raises(ExponentError):
        modulus_constants(1.0, 1.0, 2.0, 1.0)


def test_eps_log_eps_and_holder_bounds_on_random_fields():
    rng = np.random.default_rng(17)
    constants = modulus_constants(R=1.0, R0=1.0, p=4.0, norm_f=1.0)
    grid = GridSpec.centered(1.25, 32)
    inside = np.abs(grid.points()) < 1.0
    for _ in range(5):
        values = np.exp(2j * np.pi * rng.uniform(size=grid.shape)) * rng.uniform(size=grid.shape)
        values[~inside] = 0
        values /= np.max(np.abs(values))
        field = SampledField(grid, values, 1.0)
        targets = np.sqrt(rng.uniform(0, 1, 60)) * np.exp(2j * np.pi * rng.uniform(size=60))
        result = cauchy_transform(field, targets)
        assert empirical_modulus(result, 1.0, "eps_log_eps") <= constants.C * 1.1
        assert empirical_modulus(result, 1.0, "holder", alpha=constants.holder_exponent) <= constants.A_R


def test_uniform_bound():
    field = disk_indicator_field(32)
    constants = modulus_constants(field.support_radius, 1.0, 4.0, field.sup_norm)
    observed, bound = uniform_bound_check(field, constants, np.linspace(-2, 2, 41) + 0.1j)
    assert observed <= bound


def test_empirical_modulus_edge_cases():
    field = disk_indicator_field(16)
    result = cauchy_transform(field, [0.1, 0.2])
    constant = cauchy_transform(SampledField(field.grid, np.zeros(field.grid.shape), 1.0), [0.1, 0.2, 0.3])
    assert empirical_modulus(constant, 1.0) == 0.0
    with pytest.raises(EmptySampleError):
        empirical_modulus(cauchy_transform(field, [0.1]), 1.0)
    with pytest.raises(EmptySampleError):
        empirical_modulus(cauchy_transform(field, [0.0, 0.9]), 1.0)
    with pytest.raises(ConfigurationError):
        empirical_modulus(result, 1.0, "holder")


def test_field_save_and_load(tmp_path):
    field = bump_field(8)
    field.save(str(tmp_path / "bump"))
    loaded = SampledField.load(str(tmp_path / "bump"))
    assert loaded.grid == field.grid
    np.testing.assert_array_equal(loaded.values, field.values)
    with pytest.raises(ConfigurationError):
        SampledField.load(str(tmp_path / "missing"))
