"""Quasiconformal diagnostics for sampled maps and motions."""
import logging
import math

import numpy as np

from models.field import BeltramiField, DilatationReport, GridSpec, SampledMap
from utils.errors import (
    ConfigurationError,
    DegenerateConfigurationError,
    DomainError,
    InjectivityError,
)
from utils.parallel_utils import parallel_map
from utils.sphere_utils import INFINITY, SpherePoint, as_sphere_point, cross_ratio

logger = logging.getLogger(__name__)

# ---------------- Config ----------------
VANISHING_DERIVATIVE = 1e-8
CIRCLE_ANGLES = 256
CROSS_RATIO_GUARD = 1e-10


# ---------------- Beltrami coefficients ----------------
def _centred_derivatives(values, h):
    dx = (values[2:, 1:-1] - values[:-2, 1:-1]) / (2.0 * h)
    dy = (values[1:-1, 2:] - values[1:-1, :-2]) / (2.0 * h)
    return 0.5 * (dx - 1j * dy), 0.5 * (dx + 1j * dy)


def beltrami(samples):
    """mu = dh/dconj(z) / dh/dz at the interior nodes of a sampled map.

    Nodes with |dh/dz| <= 1e-8 are flagged, stored as NaN and left out of the
    sup norm; if every node is flagged the field is reported with an infinite norm.
    """
    grid = samples.grid
    if grid.nx < 3 or grid.ny < 3:
        raise ConfigurationError(f"grid {grid.shape} has no interior nodes")
    dz, dzbar = _centred_derivatives(np.asarray(samples.values, dtype=complex), grid.spacing)
    flagged = np.abs(dz) <= VANISHING_DERIVATIVE
    with np.errstate(divide="ignore", invalid="ignore"):
        mu = np.where(flagged, complex(math.nan, math.nan), dzbar / np.where(flagged, 1.0, dz))
    count = int(np.count_nonzero(flagged))
    if count:
        logger.warning("beltrami: %d of %d nodes have a vanishing z-derivative", count, flagged.size)
    sup = float(np.max(np.abs(mu[~flagged]))) if count < flagged.size else math.inf
    return BeltramiField(grid.interior(), mu, sup, count)


def dilatation_bound_check(motion, c):
    """K of the slice at c against (1 + |c|/r) / (1 - |c|/r)."""
    c = complex(c)
    if abs(c) >= motion.r:
        raise DomainError(f"parameter {c} is outside the disk of radius {motion.r}")
    field = beltrami(SampledMap(motion.grid, motion.slice(c)))
    if not field.valid:
        raise InjectivityError(f"slice at c={c} is not quasiconformal: sup |mu| = {field.sup_norm}")
    t = abs(c) / motion.r
    bound = (1.0 + t) / (1.0 - t)
    k = field.dilatation
    logger.debug("dilatation at c=%s: K=%.6g bound=%.6g", c, k, bound)
    return DilatationReport(c=c, K=k, bound=bound, margin=bound - k, sup_norm=field.sup_norm)


def dilatation_sweep(motion, params):
    return parallel_map(lambda c: dilatation_bound_check(motion, c), list(params))


# ---------------- Distortion of circles ----------------
def circular_distortion(samples, a, radii, angles=CIRCLE_ANGLES):
    """max over radii of sup |H(z) - H(a)| / inf |H(z) - H(a)| on |z - a| = radius.

    ``samples`` is a SampledMap (interpolated) or any vectorised callable.
    """
    a = complex(a)
    theta = 2.0 * np.pi * np.arange(angles) / angles
    sampled = isinstance(samples, SampledMap)
    worst = 1.0
    for radius in radii:
        circle = a + radius * np.exp(1j * theta)
        if sampled and not np.all(samples.grid.contains(circle)):
            raise DomainError(f"circle of radius {radius} around {a} leaves the sampled grid")
        centre = samples(np.array([a]))[0]
        spread = np.abs(samples(circle) - centre)
        if spread.min() == 0:
            raise InjectivityError(f"a point on the circle of radius {radius} maps onto the centre")
        worst = max(worst, float(spread.max() / spread.min()))
    return worst


# ---------------- Cross ratios along a path ----------------
def _moved(motion, point, c):
    if point.is_infinite:
        return INFINITY
    return SpherePoint(complex(motion.evaluate(c, np.array([point.value]))[0]))


def cross_ratio_track(motion, quadruple, path):
    """Cr of the moved quadruple at each parameter on ``path``; normalised motions fix infinity."""
    points = [as_sphere_point(p) for p in quadruple]
    track = []
    for c in path:
        moved = [_moved(motion, p, c) for p in points]
        try:
            value = complex(cross_ratio(*moved))
        except DegenerateConfigurationError as exc:
            raise InjectivityError(f"the motion identifies two tracked points at c={c}") from exc
        if abs(value) < CROSS_RATIO_GUARD or abs(value - 1.0) < CROSS_RATIO_GUARD or abs(value) > 1.0 / CROSS_RATIO_GUARD:
            raise InjectivityError(f"cross ratio {value} at c={c} reached the punctures")
        track.append(value)
    return np.array(track, dtype=complex)


# ---------------- Holomorphy of the coefficient ----------------
def _window_mask(grid, window):
    if window is None:
        return np.ones(grid.shape, dtype=bool)
    x0, x1, y0, y1 = window
    pts = grid.points()
    return (pts.real >= x0) & (pts.real <= x1) & (pts.imag >= y0) & (pts.imag <= y1)


def beltrami_holomorphy_residual(motion, alpha, window=None, half_width=None, n=9):
    """sup |dPsi/dconj(c)| for Psi(c) = area integral of alpha * mu(c, .) over the window.

    ``alpha`` is evaluated on the interior z-nodes; ``window`` is (x0, x1, y0, y1).
    """
    if n < 3:
        raise ConfigurationError("the parameter grid needs at least 3 nodes per axis")
    if window is not None:
        x0, x1, y0, y1 = window
        corners = np.array([complex(x0, y0), complex(x1, y1)])
        if not np.all(motion.grid.contains(corners)):
            raise DomainError(f"window {window} is not inside the motion's grid")
    half_width = 0.6 * motion.r if half_width is None else half_width
    cgrid = GridSpec.spanning(-half_width, half_width, -half_width, half_width, n, n)
    zgrid = motion.grid.interior()
    weights = np.asarray(alpha(zgrid.points()), dtype=float) * _window_mask(zgrid, window)
    area = zgrid.spacing**2

    def psi(c):
        mu = beltrami(SampledMap(motion.grid, motion.slice(c))).values
        return area * np.nansum(weights * mu)

    values = np.array(parallel_map(psi, cgrid.points().ravel())).reshape(cgrid.shape)
    h = cgrid.spacing
    dx = (values[2:, 1:-1] - values[:-2, 1:-1]) / (2.0 * h)
    dy = (values[1:-1, 2:] - values[1:-1, :-2]) / (2.0 * h)
    return float(np.max(np.abs(0.5 * (dx + 1j * dy))))
