"""Hyperbolic densities on the disk, the punctured disk and the sphere minus {0, 1, infinity}."""
import logging
import math
from functools import lru_cache

import numpy as np

from models.field import DensityValue, LizhongMargin
from utils.errors import DomainError, PreconditionError, QuadratureError
from utils.parallel_utils import parallel_map
from utils.quadrature_utils import SingularPoint, SingularQuadrature
from utils.sphere_utils import anharmonic_reduction

logger = logging.getLogger(__name__)

# ---------------- Config ----------------
DEFAULT_RESOLUTION = 256
MAX_RESOLUTION = 2048
DEFAULT_RTOL = 1e-6
LIZHONG_FLOOR = 4.0 + math.log(4.0)


# ---------------- Closed forms ----------------
def disk_density(z):
    z = complex(z)
    if abs(z) >= 1.0:
        raise DomainError(f"|z| = {abs(z)} is not inside the unit disk")
    return DensityValue(2.0 / (1.0 - abs(z) ** 2))


def punctured_disk_density(z, r):
    """Density of {0 < |z| < r}: 1 / (|z| (log r + log(1/|z|)))."""
    z = complex(z)
    if r <= 1.0:
        raise DomainError(f"punctured disk radius must exceed 1, got {r}")
    if abs(z) == 0.0:
        raise DomainError("z = 0 is the puncture")
    if abs(z) >= r:
        raise DomainError(f"|z| = {abs(z)} is outside the disk of radius {r}")
    return DensityValue(1.0 / (abs(z) * (math.log(r) - math.log(abs(z)))))


# ---------------- Agard ----------------
def _agard_integral(w, resolution, rtol):
    scale = abs(w * (w - 1.0))

    def integrand(zeta):
        return scale / np.abs(zeta * (zeta - 1.0) * (zeta - w))

    quad = SingularQuadrature(
        integrand,
        [SingularPoint(0j), SingularPoint(1 + 0j), SingularPoint(w)],
        decay=1.0,
    )
    return quad.integrate_adaptive(rtol=rtol, resolution=resolution, max_resolution=MAX_RESOLUTION)


def agard_density(z, resolution=DEFAULT_RESOLUTION, rtol=DEFAULT_RTOL, strict=True):
    """Density of the thrice-punctured sphere at z from the area-integral formula.

    z is first moved by the anharmonic group into {|w| <= 1, |w| <= |w-1|}; the
    density transforms as rho(z) = rho(w) |T'(z)|. With ``strict`` a missed
    tolerance raises QuadratureError carrying the partial value.
    """
    z = complex(z)
    if not (math.isfinite(z.real) and math.isfinite(z.imag)):
        raise DomainError("agard density needs a finite point")
    w, stretch = anharmonic_reduction(z)
    result = _agard_integral(w, resolution, rtol)
    density = 2.0 * math.pi / result.value * stretch
    error = density * result.error / result.value
    value = DensityValue(density, error)
    if result.error > rtol * abs(result.value):
        if strict:
            raise QuadratureError(f"agard quadrature at z={z} missed rtol={rtol}", partial=value)
        logger.warning("agard density at %s kept with relative error %.2e", z, error / density)
    return value


def agard_densities(points, resolution=DEFAULT_RESOLUTION, rtol=DEFAULT_RTOL):
    return parallel_map(lambda z: agard_density(z, resolution, rtol, strict=False), points)


@lru_cache(maxsize=8)
def hypothesis_integral(resolution=DEFAULT_RESOLUTION):
    """(1/pi) of the area integral of 1/|(zeta+1) zeta (zeta-1)|, returned as (value, error).

    It equals 1/agard_density(-1).
    """
    quad = SingularQuadrature(
        lambda zeta: 1.0 / (math.pi * np.abs((zeta + 1.0) * zeta * (zeta - 1.0))),
        [SingularPoint(0j), SingularPoint(1 + 0j), SingularPoint(-1 + 0j)],
        decay=1.0,
    )
    result = quad.integrate_adaptive(rtol=DEFAULT_RTOL, resolution=resolution,
                                     max_resolution=MAX_RESOLUTION)
    logger.info("hypothesis integral %.12g (+- %.1e)", result.value, result.error)
    return result.value, result.error


def lizhong_threshold(resolution=DEFAULT_RESOLUTION):
    return max(hypothesis_integral(resolution)[0], LIZHONG_FLOOR)


def lizhong_margin(z, log_r, resolution=DEFAULT_RESOLUTION):
    """agard_density(z) - 1/(|z| (log_r + log 1/|z|)) for 0 < |z| < 1."""
    z = complex(z)
    if not 0.0 < abs(z) < 1.0:
        raise DomainError(f"lizhong margin needs 0 < |z| < 1, got |z| = {abs(z)}")
    threshold = lizhong_threshold(resolution)
    if not log_r > threshold:
        raise PreconditionError(f"log r = {log_r} does not exceed {threshold:.6g}")
    agard = agard_density(z, resolution, strict=False)
    comparison = 1.0 / (abs(z) * (log_r - math.log(abs(z))))
    return LizhongMargin(z, agard.density - comparison, agard.quadrature_error,
                         agard.density, comparison)


# ---------------- Lower bound ----------------
def ahlfors_lower_bound(z):
    """rho(z) >= |zeta'/zeta| / (4 + log(1/|zeta|)) with zeta = z / (sqrt(1-z) + 1)^2.

    Valid for 0 < |z| <= 1 with |z| <= |z - 1|.
    """
    z = complex(z)
    if z == 0 or abs(z) > 1.0 + 1e-15 or abs(z) > abs(z - 1.0) + 1e-15:
        raise DomainError(f"{z} is outside the region 0 < |z| <= min(1, |z-1|)")
    root = np.sqrt(1.0 - z)
    zeta = z / (root + 1.0) ** 2
    log_derivative = 1.0 / (z * root)
    return abs(log_derivative) / (4.0 + math.log(1.0 / abs(zeta)))
