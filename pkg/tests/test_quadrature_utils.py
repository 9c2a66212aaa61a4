import logging
import math

import numpy as np
import pytest

from utils.quadrature_utils import SingularPoint, SingularQuadrature, smooth_cutoff


def _inverse_modulus():
    """1/|zeta| over the unit disk: 2 pi."""
    return SingularQuadrature(lambda z: 1.0 / np.abs(z), [SingularPoint(0j, 1.0)], domain_radius=1.0)


def test_smooth_cutoff_ends():
    np.testing.assert_allclose(smooth_cutoff([0.0, 1.0, 2.0]), [1.0, 0.0, 0.0])
    assert 0 < smooth_cutoff(0.5) < 1


def test_error_estimate_bounds_the_true_error():
    result = _inverse_modulus().integrate(resolution=64)
    assert result.resolution == 64
    assert abs(result.value - 2 * math.pi) <= result.error
    assert result.error >= 1e-12 * abs(result.value)


def test_adaptive_doubling_meets_the_tolerance():
    result = _inverse_modulus().integrate_adaptive(rtol=1e-3, resolution=32)
    assert result.error <= 1e-3 * abs(result.value)
    assert result.value == pytest.approx(2 * math.pi, rel=1e-3)


def test_adaptive_doubling_warns_at_the_resolution_cap(caplog):
    with caplog.at_level(logging.WARNING, logger="utils.quadrature_utils"):
        result = _inverse_modulus().integrate_adaptive(rtol=1e-12, resolution=16, max_resolution=64)
    assert result.resolution == 32
    assert "quadrature stopped" in caplog.text


def test_patched_singularity_off_the_origin():
    # the disk |zeta - 1/2| < 1/2 alone gives pi; the centred value 2 pi is the maximum
    quad = SingularQuadrature(lambda z: 1.0 / np.abs(z - 0.5), [SingularPoint(0.5, 1.0)], domain_radius=1.0)
    assert len(quad.patches) == 1
    result = quad.integrate_adaptive(rtol=1e-3, resolution=64)
    assert math.pi < result.value < 2 * math.pi
    assert result.error <= 1e-3 * result.value


def test_non_integrable_singularity_is_rejected():
    with pytest.raises(ValueError):
        SingularQuadrature(lambda z: z, [SingularPoint(0.5, 2.0)])
    with pytest.raises(ValueError):
        SingularQuadrature(lambda z: z, [SingularPoint(2.0, 1.0)], domain_radius=1.0)
