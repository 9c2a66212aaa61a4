"""The P-operator Pf(c) = -(1/pi) * area integral of f(zeta) / (zeta - c), on sampled fields.

Cells are treated with the midpoint rule except the 5 x 5 block around the node
nearest to each target, where the exact integral of 1/(zeta - c) over the cell
replaces the midpoint weight.
"""
import logging
import math

import numpy as np
from scipy.spatial.distance import pdist

from models.field import ContinuityConstants, GridSpec, SampledField, TransformResult, disk_coverage
from utils.errors import ConfigurationError, EmptySampleError, ExponentError
from utils.parallel_utils import parallel_map
from utils.quadrature_utils import SingularPoint, SingularQuadrature

logger = logging.getLogger(__name__)

# ---------------- Config ----------------
NEAR_RADIUS = 2
PAIR_CHUNK = 4_000_000
MIN_FD_NODES = 4
CONSTANTS_RESOLUTION = 256


# ---------------- Exact cell integrals ----------------
def _antiderivative(w):
    w = np.asarray(w, dtype=complex)
    with np.errstate(divide="ignore", invalid="ignore"):
        value = w * np.log(w) - w
    return np.where(w == 0, 0j, value)


def _upper_rect(x0, x1, y0, y1):
    # closed upper half plane; +0.0 keeps log on the upper side of its cut
    corner = lambda x, y: _antiderivative(x + 1j * y + 0.0j)
    return -1j * (corner(x1, y1) - corner(x0, y1) - corner(x1, y0) + corner(x0, y0))


def exact_cell_integral(x0, x1, y0, y1):
    """Area integral of 1/w over [x0, x1] x [y0, y1]; vectorised over the bounds."""
    x0, x1, y0, y1 = np.broadcast_arrays(*(np.asarray(v, dtype=float) for v in (x0, x1, y0, y1)))
    upper_lo = np.maximum(y0, 0.0)
    upper_hi = np.maximum(y1, 0.0)
    lower_lo = np.maximum(-y1, 0.0)
    lower_hi = np.maximum(-y0, 0.0)
    total = np.zeros(x0.shape, dtype=complex)
    up = upper_hi > upper_lo
    if np.any(up):
        total[up] += _upper_rect(x0[up], x1[up], upper_lo[up], upper_hi[up])
    down = lower_hi > lower_lo
    if np.any(down):
        # the mirror image of the lower part, conjugated back
        total[down] += np.conj(_upper_rect(x0[down], x1[down], lower_lo[down], lower_hi[down]))
    return total if total.ndim else complex(total)


# ---------------- Kernel ----------------
def cauchy_matrix(grid, cells, targets):
    """Dense matrix M with Pf(targets) = M @ f[cells].

    ``cells`` are flat (row-major) indices into ``grid``; cells near a target get their
    exact integral instead of the midpoint value.
    """
    cells = np.asarray(cells, dtype=int).ravel()
    targets = np.asarray(targets, dtype=complex).ravel()
    h = grid.spacing
    sources = grid.points().ravel()[cells]
    with np.errstate(divide="ignore", invalid="ignore"):
        matrix = h * h / (sources[None, :] - targets[:, None])

    column = np.full(grid.nx * grid.ny, -1)
    column[cells] = np.arange(cells.size)
    i0 = np.rint((targets.real - grid.origin.real) / h).astype(int)
    j0 = np.rint((targets.imag - grid.origin.imag) / h).astype(int)
    rows = np.arange(targets.size)
    for di in range(-NEAR_RADIUS, NEAR_RADIUS + 1):
        for dj in range(-NEAR_RADIUS, NEAR_RADIUS + 1):
            i, j = i0 + di, j0 + dj
            ok = (i >= 0) & (i < grid.nx) & (j >= 0) & (j < grid.ny)
            col = np.full(targets.size, -1)
            col[ok] = column[i[ok] * grid.ny + j[ok]]
            ok &= col >= 0
            if not np.any(ok):
                continue
            center = grid.origin + h * (i[ok] + 1j * j[ok]) - targets[ok]
            matrix[rows[ok], col[ok]] = exact_cell_integral(
                center.real - h / 2, center.real + h / 2, center.imag - h / 2, center.imag + h / 2
            )
    return -matrix / math.pi


def _target_chunks(n_targets, n_cells):
    size = max(1, PAIR_CHUNK // max(n_cells, 1))
    return [slice(start, min(start + size, n_targets)) for start in range(0, n_targets, size)]


def cauchy_transform(field, targets):
    """Pf at every target; a field with no nonzero sample gives zeros."""
    targets = np.asarray(targets, dtype=complex).ravel()
    if not np.all(np.isfinite(targets)):
        raise ConfigurationError("cauchy transform targets must be finite")
    flat = field.values.ravel()
    cells = np.flatnonzero(flat)
    values = np.zeros(targets.size, dtype=complex)
    if cells.size and targets.size:
        weights = flat[cells]
        chunks = _target_chunks(targets.size, cells.size)
        parts = parallel_map(lambda s: cauchy_matrix(field.grid, cells, targets[s]) @ weights, chunks)
        values = np.concatenate(parts)
    logger.debug("cauchy transform: %d targets, %d source cells", targets.size, cells.size)
    return TransformResult(
        targets,
        values,
        spacing=field.grid.spacing,
        support_radius=field.support_radius,
        norm=field.sup_norm,
        metadata={"nx": field.grid.nx, "ny": field.grid.ny, "cells": int(cells.size)},
    )


# ---------------- Fields ----------------
def disk_indicator_field(n, half_width=1.25, radius=1.0):
    """Coverage-weighted indicator of the disk |c| < radius on an n x n grid."""
    grid = GridSpec.centered(half_width, n)
    values = disk_coverage(grid, radius)
    return SampledField(grid, values, radius + grid.spacing)


def bump_field(n, half_width=1.25, radius=1.0):
    """The smooth bump exp(1 - 1/(1 - |c|^2/radius^2)), supported in the disk."""

    def bump(c):
        t = np.abs(c) ** 2 / radius**2
        with np.errstate(all="ignore"):
            return np.where(t < 1.0, np.exp(1.0 - 1.0 / (1.0 - t)), 0.0)

    return SampledField.from_function(bump, half_width, n, radius)


# ---------------- Derivative identity ----------------
def dbar_residual(field, grid=None, exclude=None):
    """sup over interior nodes of |dbar(Pf) - f| by centred differences.

    ``grid`` defaults to the field's own grid; ``exclude`` is a predicate on node
    positions marking nodes to leave out (for example a band around a jump).
    """
    grid = grid or field.grid
    if grid.nx < MIN_FD_NODES or grid.ny < MIN_FD_NODES:
        raise ConfigurationError(f"grid {grid.shape} is too coarse for finite differences")
    pts = grid.points()
    pf = cauchy_transform(field, pts.ravel()).values.reshape(grid.shape)
    h = grid.spacing
    dx = (pf[2:, 1:-1] - pf[:-2, 1:-1]) / (2.0 * h)
    dy = (pf[1:-1, 2:] - pf[1:-1, :-2]) / (2.0 * h)
    dbar = 0.5 * (dx + 1j * dy)
    inner = pts[1:-1, 1:-1]
    residual = np.abs(dbar - field.sample(inner))
    if exclude is not None:
        residual = residual[~np.asarray(exclude(inner), dtype=bool)]
    return float(residual.max()) if residual.size else 0.0


# ---------------- Constants ----------------
def _c2_integral(q, resolution):
    quad = SingularQuadrature(
        lambda z: (np.abs(z) * np.abs(z - 1.0)) ** (-q),
        [SingularPoint(0j, q), SingularPoint(1 + 0j, q)],
        decay=2.0 * q - 2.0,
    )
    return quad.integrate(resolution)


def _c3_integral(resolution):
    quad = SingularQuadrature(
        lambda z: 1.0 / (np.abs(z) * np.abs(z - 1.0)),
        [SingularPoint(0j), SingularPoint(1 + 0j)],
        domain_radius=2.0,
    )
    return quad.integrate(resolution)


def modulus_constants(R, R0, p, norm_f, resolution=CONSTANTS_RESOLUTION):
    """Hoelder constant A_R and the eps-log-eps constants B and C.

    B is assembled with support radius 1 and keeps the literal norm dependence
    (C3 * norm_f); C rescales it to a support disk of radius R0.
    """
    if R <= 0 or R0 <= 0:
        raise ConfigurationError(f"radii must be positive, got R={R}, R0={R0}")
    if not p > 2:
        raise ExponentError(f"p = {p} must exceed 2")
    q = p / (p - 1.0)
    c1 = 2.0 * R
    c2_integral = _c2_integral(q, resolution)
    c2 = math.pi ** (1.0 / p - 1.0) * R ** (2.0 / p) * c2_integral.value ** (1.0 / q)
    c2_error = c2 * c2_integral.error / (q * c2_integral.value)
    c3 = _c3_integral(resolution)
    b = c3.value * norm_f / (math.pi * math.log(2.0)) + 4.0 * norm_f
    c = b * (1.0 + math.log(R0) / math.log(2.0))
    return ContinuityConstants(
        A_R=max(c1, c2), B=b, C=c, C1=c1, C2=c2, C3=c3.value,
        p=p, q=q, R=R, R0=R0, norm_f=norm_f, C3_error=c3.error, C2_error=c2_error,
    )


# ---------------- Empirical moduli ----------------
def empirical_modulus(result, norm_f, kind="eps_log_eps", alpha=None, min_separation=0.0):
    """sup of |Pf(c) - Pf(c')| / (norm_f m(|c - c'|)) over target pairs.

    ``kind`` is ``"holder"`` (m(t) = t**alpha) or ``"eps_log_eps"`` (m(t) = t log 1/t,
    only pairs with |c - c'| < 1/2).
    """
    if result.targets.size < 2:
        raise EmptySampleError("at least two targets are needed")
    pts = np.column_stack([result.targets.real, result.targets.imag])
    vals = np.column_stack([result.values.real, result.values.imag])
    t = pdist(pts)
    dv = pdist(vals)
    keep = t > max(min_separation, 0.0)
    if kind == "eps_log_eps":
        keep &= t < 0.5
        modulus = t[keep] * np.log(1.0 / t[keep])
    elif kind == "holder":
        if alpha is None or not 0 < alpha <= 1:
            raise ConfigurationError(f"holder modulus needs 0 < alpha <= 1, got {alpha}")
        modulus = t[keep] ** alpha
    else:
        raise ConfigurationError(f"unknown modulus kind {kind!r}")
    if not np.any(keep):
        raise EmptySampleError("no admissible target pair")
    if norm_f == 0:
        return 0.0
    return float(np.max(dv[keep] / (norm_f * modulus)))


def uniform_bound_check(field, constants, targets):
    """Returns (sup |Pf|, A_R * ||f||) on the targets."""
    result = cauchy_transform(field, targets)
    observed = float(np.max(np.abs(result.values))) if result.values.size else 0.0
    return observed, constants.A_R * field.sup_norm
