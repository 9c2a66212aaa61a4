"""Kobayashi distances on sup-norm unit balls.

Closed forms only where a ball automorphism reduces the pair to (0, v); chain
lengths d_n are upper bounds from chains along a fixed family of paths.
"""
import logging
import math

import numpy as np
from scipy.optimize import minimize

from models.field import BallPoint, BeltramiField, ChainDistance
from utils.errors import (
    ConfigurationError,
    DegenerateConfigurationError,
    OutsideBallError,
    ShapeError,
)
from utils.sphere_utils import disk_distance

logger = logging.getLogger(__name__)

# ---------------- Config ----------------
DEGENERACY_TOL = 1e-14
MONOTONE_SLACK = 1e-12
CHAIN_FAMILIES = ("geodesic", "segment")


def as_ball_point(v):
    if isinstance(v, BallPoint):
        return v
    if isinstance(v, BeltramiField):
        return BallPoint.from_field(v)
    return BallPoint(v)


def _inside(point):
    if not point.norm < 1.0:
        raise OutsideBallError(f"norm {point.norm} is not below 1")
    return point


def _compatible(p, q):
    if p.values.shape != q.values.shape:
        raise ShapeError(f"ball points of shapes {p.values.shape} and {q.values.shape}")
    if p.grid is not None and q.grid is not None and p.grid != q.grid:
        raise ShapeError("ball points live on different grids")


def _translate(p, u):
    """T_p(u) = (u - p) / (1 - conj(p) u), node by node."""
    denominator = 1.0 - np.conj(p) * u
    if np.any(np.abs(denominator) < DEGENERACY_TOL):
        raise DegenerateConfigurationError("|1 - conj(p) u| vanishes at a node")
    return (u - p) / denominator


def _untranslate(p, u):
    return (u + p) / (1.0 + np.conj(p) * u)


# ---------------- Closed forms ----------------
def ball_distance_to_origin(v):
    """d_K(0, v) = log((1 + ||v||) / (1 - ||v||))."""
    v = _inside(as_ball_point(v))
    return 2.0 * math.atanh(v.norm)


def ball_distance(p, q):
    """d_1(p, q) = d_K(0, T_p(q))."""
    p, q = _inside(as_ball_point(p)), _inside(as_ball_point(q))
    _compatible(p, q)
    return ball_distance_to_origin(BallPoint(_translate(p.values, q.values)))


def beltrami_ball_distance(mu, nu):
    """2 atanh sup |(mu - nu) / (1 - conj(nu) mu)| over the common grid."""
    if mu.grid != nu.grid or mu.values.shape != nu.values.shape:
        raise ShapeError("Beltrami fields on different grids")
    for name, f in (("mu", mu), ("nu", nu)):
        if not f.valid:
            raise OutsideBallError(f"{name} has sup norm {f.sup_norm}")
    return ball_distance(nu, mu)


def teich_distance_representative(mu):
    """log((1 + k) / (1 - k)) with k = sup |mu|; an upper bound for the class distance."""
    if not mu.valid:
        raise OutsideBallError(f"sup norm {mu.sup_norm} is not below 1")
    k = mu.sup_norm
    return math.log((1.0 + k) / (1.0 - k))


def disc_pullback_check(v, a, b):
    """(d_1(a v/||v||, b v/||v||), rho_disk(a, b)) for the linear disc through v."""
    v = as_ball_point(v)
    if v.norm == 0:
        raise DegenerateConfigurationError("the zero vector spans no disc")
    unit = v.values / v.norm
    return ball_distance(BallPoint(a * unit, v.grid), BallPoint(b * unit, v.grid)), disk_distance(a, b)


# ---------------- Chains ----------------
def _path(p, q, family):
    if family == "segment":
        return lambda s: p.values + s * (q.values - p.values)
    w = BallPoint(_translate(p.values, q.values))
    if w.norm == 0:
        return lambda s: p.values.copy()
    direction = w.values / w.norm
    length = math.atanh(w.norm)
    return lambda s: _untranslate(p.values, math.tanh(s * length) * direction)


def _chain_cost(path, grid, stops):
    s = np.concatenate([[0.0], np.sort(np.clip(stops, 0.0, 1.0)), [1.0]])
    points = [BallPoint(path(t), grid) for t in s]
    return sum(ball_distance(a, b) for a, b in zip(points, points[1:]))


def chain_distance(p, q, n, family="geodesic"):
    """min over chains p = p_0, ..., p_k = q on the path family of sum d_1(p_i-1, p_i), k <= n."""
    if n < 1:
        raise ConfigurationError(f"chain length must be at least 1, got {n}")
    if family not in CHAIN_FAMILIES:
        raise ConfigurationError(f"unknown chain family {family!r}")
    p, q = _inside(as_ball_point(p)), _inside(as_ball_point(q))
    _compatible(p, q)
    grid = p.grid or q.grid
    path = _path(p, q, family)
    raw = [ball_distance(p, q)]
    for k in range(2, n + 1):
        start = np.arange(1, k) / k
        result = minimize(lambda s: _chain_cost(path, grid, s), start, method="Nelder-Mead")
        raw.append(float(min(_chain_cost(path, grid, start), result.fun)))
    history = np.minimum.accumulate(raw).tolist()
    chain = ChainDistance(n=n, value=history[-1], history=history, family=family, raw=raw)
    if not chain.monotone:
        logger.warning("optimised chain lengths are not monotone: %s", raw)
    logger.debug("chain distance (%s) up to n=%d: %s", family, n, history)
    return chain


def relative_representative(mu, nu):
    """Beltrami field with |values| = |(mu - nu) / (1 - conj(nu) mu)|, the representative of mu against nu."""
    if mu.grid != nu.grid:
        raise ShapeError("Beltrami fields on different grids")
    values = _translate(nu.values, mu.values)
    finite = np.abs(values[np.isfinite(values)])
    return BeltramiField(mu.grid, values, float(finite.max()) if finite.size else 0.0)
