"""Tangent vectors of motions and the moduli of continuity they inherit."""
import logging
import math

import numpy as np
from scipy.spatial.distance import pdist
from sklearn.linear_model import LinearRegression

from models.motion import HolderFit, ModulusReport, QuotientCheck, TangentField, VelocityReport
from services.density_service import agard_densities, agard_density, lizhong_threshold
from utils.errors import (
    ConfigurationError,
    DegenerateConfigurationError,
    DomainError,
    EmptySampleError,
    InjectivityError,
    InsufficientDataError,
)
from utils.parallel_utils import parallel_map, worker_count
from utils.sphere_utils import as_sphere_point, cross_ratio

logger = logging.getLogger(__name__)

# ---------------- Config ----------------
DEFAULT_STEP_FRACTIONS = (0.1, 0.05)
MIN_FIT_PAIRS = 8
HOLDER_SLACK = 0.05
MIN_SEPARATION = 1e-5
LOG_R_MARGIN = 0.5


def _evaluate(motion, c, z):
    """motion.evaluate over a flat array, split across workers."""
    z = np.asarray(z, dtype=complex).ravel()
    chunks = [chunk for chunk in np.array_split(z, max(1, min(worker_count(), z.size))) if chunk.size]
    parts = parallel_map(lambda chunk: np.asarray(motion.evaluate(c, chunk), dtype=complex), chunks)
    return np.concatenate(parts) if parts else z.copy()


# ---------------- Tangent vectors ----------------
def _neville_at_zero(steps, quotients):
    """Polynomial extrapolation of quotients[k] (taken at steps[k]) to step 0.

    Returns the value and its distance to the extrapolant that drops the coarsest step.
    """
    table = [np.asarray(q) for q in quotients]
    n = len(steps)
    previous = table[-1]
    for level in range(1, n):
        if level == n - 1:
            previous = table[1]
        for i in range(n - level):
            s_i, s_j = steps[i], steps[i + level]
            table[i] = (s_i * table[i + 1] - s_j * table[i]) / (s_i - s_j)
    return table[0], np.abs(table[0] - previous)


def tangent_vector(motion, z, steps=None):
    """V(z) = lim (h(c, z) - z)/c, Richardson-extrapolated from the given steps.

    Default steps are 0.1r and 0.05r. Returns (value, error estimate).
    """
    steps = [complex(s) for s in (steps if steps is not None else [f * motion.r for f in DEFAULT_STEP_FRACTIONS])]
    if len(steps) < 2:
        raise ConfigurationError("Richardson extrapolation needs at least two steps")
    for s in steps:
        if s == 0 or abs(s) >= motion.r:
            raise DomainError(f"step {s} is outside the punctured parameter disk of radius {motion.r}")
    z = np.asarray(z, dtype=complex)
    flat = z.ravel()
    quotients = [(_evaluate(motion, s, flat) - flat) / s for s in steps]
    value, error = _neville_at_zero(steps, quotients)
    if z.ndim == 0:
        return complex(value[0]), float(error[0])
    return value.reshape(z.shape), error.reshape(z.shape)


def tangent_field(motion, points, steps=None):
    """Tangent vectors of c -> h(r c, z), the motion carried over to the unit parameter disk."""
    points = np.asarray(points, dtype=complex).ravel()
    values, errors = tangent_vector(motion, points, steps)
    values, errors = motion.r * values, motion.r * errors
    logger.debug("tangent field at %d points, max extrapolation error %.2e",
                 points.size, float(errors.max()) if errors.size else 0.0)
    return TangentField(points, values, errors)


# ---------------- Moduli ----------------
def _measured_constant(field, R, log_r):
    """C = max(M1 + 2 log r, 4 log r), M1 the sampled max of |V(z)/z| + 2 log|z| on 1 <= |z| <= R."""
    modulus = np.abs(field.points)
    ring = (modulus >= 1.0) & (modulus <= R)
    m1 = 0.0
    if np.any(ring):
        m1 = float(np.max(np.abs(field.values[ring]) / modulus[ring] + 2.0 * np.log(modulus[ring])))
    else:
        logger.warning("no tangent samples in 1 <= |z| <= %g; M1 taken as 0", R)
    return max(m1 + 2.0 * log_r, 4.0 * log_r)


def vector_modulus_check(field, R, delta, log_r=None):
    """Worst |V(z2) - V(z1)| / (t log 1/t) over sampled pairs with t = |z2 - z1| < delta, |z_i| < R."""
    if not 0 < delta < 0.5:
        raise ConfigurationError(f"delta must lie in (0, 1/2), got {delta}")
    log_r = lizhong_threshold() + LOG_R_MARGIN if log_r is None else log_r
    keep = np.abs(field.points) < R
    pts, vals = field.points[keep], field.values[keep]
    if pts.size < 2:
        raise EmptySampleError(f"fewer than two tangent samples inside |z| < {R}")
    i, j = np.triu_indices(pts.size, k=1)
    t = pdist(np.column_stack([pts.real, pts.imag]))
    admissible = (t > 0) & (t < delta)
    if not np.any(admissible):
        raise EmptySampleError(f"no sample pair closer than {delta}")
    i, j, t = i[admissible], j[admissible], t[admissible]
    ratio = np.abs(vals[j] - vals[i]) / (t * np.log(1.0 / t))
    worst = int(np.argmax(ratio))
    c = _measured_constant(field, R, log_r)
    return ModulusReport(
        pairs=int(t.size),
        worst_ratio=float(ratio[worst]),
        worst_pair=(complex(pts[i[worst]]), complex(pts[j[worst]])),
        coefficient=2.0 + c / math.log(1.0 / delta),
        C=c,
        delta=delta,
        R=R,
    )


def sample_pairs(center, delta, n_sep=8, n_dir=8, t_min=MIN_SEPARATION):
    """Pairs centred on ``center`` with log-spaced separations in [t_min, delta], n_dir directions each."""
    if not 0 < t_min < delta:
        raise ConfigurationError(f"need 0 < t_min < delta, got {t_min}, {delta}")
    t = np.geomspace(t_min, delta, n_sep)
    direction = np.exp(2j * np.pi * np.arange(n_dir) / n_dir)
    offset = (0.5 * t[:, None] * direction[None, :]).ravel()
    center = complex(center)
    return np.column_stack([center - offset, center + offset])


def holder_exponent_fit(motion, c, pairs):
    """Least-squares slope of log s(c) against log s(0), s the distance within each pair."""
    pairs = np.asarray(pairs, dtype=complex).reshape(-1, 2)
    if pairs.shape[0] < MIN_FIT_PAIRS:
        raise InsufficientDataError(f"{pairs.shape[0]} pairs given, at least {MIN_FIT_PAIRS} needed")
    c = complex(c)
    if abs(c) >= motion.r:
        raise DomainError(f"parameter {c} is outside the disk of radius {motion.r}")
    s0 = np.abs(pairs[:, 1] - pairs[:, 0])
    moved = _evaluate(motion, c, pairs.ravel()).reshape(pairs.shape)
    sc = np.abs(moved[:, 1] - moved[:, 0])
    if np.any(s0 == 0):
        raise DegenerateConfigurationError("a fit pair has coincident points")
    if np.any(sc == 0):
        raise InjectivityError(f"the slice at c={c} identifies the points of a fit pair")
    model = LinearRegression().fit(np.log(s0)[:, None], np.log(sc))
    t = abs(c) / motion.r
    fit = HolderFit(
        slope=float(model.coef_[0]),
        intercept=float(model.intercept_),
        floor=(1.0 - t) / (1.0 + t),
        pairs=int(pairs.shape[0]),
        slack=HOLDER_SLACK,
    )
    if not fit.holds:
        logger.warning("hoelder slope %.4f at c=%s is below the floor %.4f", fit.slope, c, fit.floor)
    return fit


def holder_constant_bound(c, M):
    """C with log C = alpha M log(1/alpha) alpha^M, alpha = (1 - |c|)/(1 + |c|)."""
    if not 0 <= abs(c) < 1:
        raise DomainError(f"parameter {c} is outside the unit disk")
    alpha = (1.0 - abs(c)) / (1.0 + abs(c))
    return math.exp(alpha * M * math.log(1.0 / alpha) * alpha**M)


def vanishing_probe(V, a, c, bs):
    """|(V(b) - V(a))/(b - a) - (V(c) - V(b))/(c - b)| along the sampled b."""
    bs = np.asarray(bs, dtype=complex).ravel()
    a, c = complex(a), complex(c)
    va, vc, vb = V(np.array([a]))[0], V(np.array([c]))[0], V(bs)
    values = np.abs((vb - va) / (bs - a) - (vc - vb) / (c - bs))
    if values.size > 1 and values[0] > 0 and not values[-1] < values[0]:
        logger.warning("vanishing probe did not decrease: first %.3g, last %.3g", values[0], values[-1])
    return values


# ---------------- Proof-side inequalities ----------------
def tangent_quotient_check(V, pairs, resolution=None):
    """|(V(z2) - V(z1))/(z2 - z1)| against 2/(rho(w)|w|) + 2/(rho(z2)|z2|), w = (z2 - z1)/z2.

    V is the tangent field of a normalised motion over the unit disk; the slack
    propagates the density quadrature errors.
    """
    pairs = np.asarray(pairs, dtype=complex).reshape(-1, 2)
    z1, z2 = pairs[:, 0], pairs[:, 1]
    if np.any(z1 == z2) or np.any(z2 == 0):
        raise DegenerateConfigurationError("quotient pairs need distinct points with z2 != 0")
    w = (z2 - z1) / z2
    kwargs = {} if resolution is None else {"resolution": resolution}
    rho_w = agard_densities(w, **kwargs)
    rho_z = agard_densities(z2, **kwargs)
    lhs = np.abs((V(z2) - V(z1)) / (z2 - z1))
    rhs = np.empty(lhs.size)
    slack = np.empty(lhs.size)
    for k, (dw, dz) in enumerate(zip(rho_w, rho_z)):
        aw, az = abs(w[k]), abs(z2[k])
        rhs[k] = 2.0 / (dw.density * aw) + 2.0 / (dz.density * az)
        slack[k] = (2.0 * dw.quadrature_error / (dw.density**2 * aw)
                    + 2.0 * dz.quadrature_error / (dz.density**2 * az))
    return QuotientCheck(pairs, lhs, rhs, slack)


def schwarz_velocity_check(V, a, b, c, d="inf", resolution=None):
    """g(u) = Cr of the moving quadruple: g'(0) = g(0) * sum of difference quotients of V,
    and rho(g(0)) |g'(0)| <= 2 for a motion over the unit disk.
    """
    points = [as_sphere_point(p) for p in (a, b, c, d)]
    g0 = complex(cross_ratio(*points))
    if min(abs(g0), abs(g0 - 1.0)) < 1e-10:
        raise InjectivityError(f"cross ratio {g0} sits at a puncture")
    finite = [p for p in points if not p.is_infinite]
    velocity = dict(zip((p.value for p in finite), V(np.array([p.value for p in finite]))))

    def quotient(p, q):
        if p.is_infinite or q.is_infinite:
            return 0j
        return (velocity[p.value] - velocity[q.value]) / (p.value - q.value)

    pa, pb, pc, pd = points
    log_derivative = quotient(pa, pc) - quotient(pa, pd) + quotient(pb, pd) - quotient(pb, pc)
    g_prime = g0 * log_derivative
    kwargs = {} if resolution is None else {"resolution": resolution}
    rho = agard_density(g0, strict=False, **kwargs)
    return VelocityReport(
        g0=g0,
        g_prime=complex(g_prime),
        speed=rho.density * abs(g_prime),
        error=rho.quadrature_error * abs(g_prime),
    )
