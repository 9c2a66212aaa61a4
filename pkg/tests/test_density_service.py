import math

import numpy as np
import pytest
from scipy.special import gamma

from services.density_service import (
    LIZHONG_FLOOR,
    agard_density,
    ahlfors_lower_bound,
    disk_density,
    hypothesis_integral,
    lizhong_margin,
    punctured_disk_density,
)
from utils.errors import DomainError, PreconditionError

# closed form of 1/rho(-1) for the thrice-punctured sphere
HYPOTHESIS_VALUE = gamma(0.25) ** 4 / (4.0 * math.pi**2)


@pytest.mark.parametrize("z, expected", [(0, 2.0), (0.5, 8.0 / 3.0), (0.5j, 8.0 / 3.0)])
def test_disk_density(z, expected):
    value = disk_density(z)
    assert value.density == pytest.approx(expected, rel=1e-15)
    assert value.quadrature_error == 0.0


def test_disk_density_boundary():
    assert disk_density(0.999999).density > 1e5
    with pytest.raises(DomainError):
        disk_density(1.0)


def test_punctured_disk_density():
    assert punctured_disk_density(1.0, math.e**3).density == pytest.approx(1.0 / 3.0)
    assert punctured_disk_density(1 / math.e, math.e**2).density == pytest.approx(math.e / 3.0)
    with pytest.raises(DomainError):
        punctured_disk_density(0, 2.0)


def test_hypothesis_integral_matches_closed_form():
    value, error = hypothesis_integral()
    assert value == pytest.approx(HYPOTHESIS_VALUE, rel=1e-5)
    assert error < 1e-5 * value
    assert value < LIZHONG_FLOOR


def test_agard_density_at_minus_one_is_reciprocal_of_hypothesis_integral():
    rho = agard_density(-1)
    assert rho.density == pytest.approx(1.0 / HYPOTHESIS_VALUE, rel=1e-5)
    assert rho.density * hypothesis_integral()[0] == pytest.approx(1.0, rel=1e-5)


def test_agard_density_conjugation_symmetry():
    a = agard_density(0.3 + 0.4j)
    b = agard_density(0.3 - 0.4j)
    assert abs(a.density - b.density) <= a.quadrature_error + b.quadrature_error + 1e-12


def test_agard_density_is_invariant_under_the_anharmonic_group():
    z = 0.2 + 0.7j
    base = agard_density(z).density
    # rho(1 - z) = rho(z) and rho(1/z) |1/z^2| = rho(z)
    assert agard_density(1 - z).density == pytest.approx(base, rel=1e-5)
    assert agard_density(1 / z).density * abs(1 / z**2) == pytest.approx(base, rel=1e-5)


def test_agard_density_is_smallest_at_minus_one_on_the_unit_circle():
    at_minus_one = agard_density(-1).density
    for theta in np.linspace(0.3, math.pi - 0.1, 6):
        assert agard_density(np.exp(1j * theta)).density >= at_minus_one * (1 - 1e-6)


def test_agard_density_rejects_punctures():
    with pytest.raises(DomainError):
        agard_density(0)
    with pytest.raises(DomainError):
        agard_density(1)


def test_agard_density_dominates_ahlfors_lower_bound():
    for z in [-1, 0.1j, 0.5 * np.exp(2j), 1e-3 + 1e-3j]:
        assert agard_density(z).density >= ahlfors_lower_bound(z)


def test_ahlfors_lower_bound_domain():
    with pytest.raises(DomainError):
        ahlfors_lower_bound(0.9)
    with pytest.raises(DomainError):
        ahlfors_lower_bound(0)


def test_lizhong_margin_holds_on_sampled_points():
    log_r = LIZHONG_FLOOR + 0.5
    rng = np.random.default_rng(7)
    moduli = np.exp(rng.uniform(math.log(1e-3), math.log(1 - 1e-3), size=12))
    args = rng.uniform(0, 2 * math.pi, size=12)
    for z in moduli * np.exp(1j * args):
        report = lizhong_margin(z, log_r)
        assert report.holds, report


def test_lizhong_margin_precondition():
    with pytest.raises(PreconditionError):
        lizhong_margin(0.5, 5.0)
    with pytest.raises(DomainError):
        lizhong_margin(1.5, 6.0)
