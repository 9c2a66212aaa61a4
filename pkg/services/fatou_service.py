"""Fatou coordinates of parabolic germs built from strip conjugacies."""
import logging
import math
from fractions import Fraction

import numpy as np
from numpy.polynomial import polynomial as P

from models.field import GridSpec, SampledMap
from models.germ import (
    BoundaryMotion,
    FatouCoordinate,
    OrbitReport,
    ParabolicGerm,
    PetalChart,
    StripConjugacy,
    principal_root,
)
from models.motion import FinitePointMotion, Trajectory
from services.chirka_service import extend_motion
from services.qc_service import beltrami
from utils.errors import (
    ConfigurationError,
    DomainError,
    HolomotionError,
    InversionError,
    NotParabolicError,
    OverflowGuardError,
    PetalError,
    TruncationError,
)
from utils.parallel_utils import parallel_map

logger = logging.getLogger(__name__)

# ---------------- Config ----------------
TRUNCATION_TOL = 1e-10
MAX_ORDER = 64
DEFAULT_SERIES_LENGTH = 40
ETA_BOUND = 0.5
DYADIC_STEPS = 40
CIRCLE_SAMPLES = 256
NEWTON_MAX_STEPS = 50
INVERSION_TOL = 1e-12
ORBIT_LIMIT = 1e12
AUDIT_SHAPE = (11, 41)
CHIRKA_AUDIT_SHAPE = (5, 17)
AUDIT_HEIGHT = 2.0
CHIRKA_HEIGHTS = (-2.0, 0.0, 2.0)
CHIRKA_MESH_NODES = 24


# ---------------- Germs ----------------
def _compose(outer, inner, order):
    """outer(inner(z)) truncated after z^order; both lowest degree first."""
    out = np.zeros(1, dtype=complex)
    for coef in outer[::-1]:
        out = P.polymul(out, inner)[:order + 1]
        out[0] += coef
    return np.pad(out, (0, max(0, order + 1 - out.size)))


def germ_power(germ, q):
    """f composed with itself q times, kept to degree min(N^q, 64).

    The dropped coefficients up to twice that degree bound the tail on |z| = r0/2.
    """
    if q < 1:
        raise ConfigurationError(f"iteration count must be at least 1, got {q}")
    if q == 1:
        return germ
    base = germ.polynomial()
    order = min(germ.order**q, MAX_ORDER)
    extended = 2 * order
    result = base
    for _ in range(q - 1):
        result = _compose(base, result, extended)
    kept, dropped = result[:order + 1], result[order + 1:]
    rho = germ.r0 / 2.0
    tail = float(np.sum(np.abs(dropped) * rho ** np.arange(order + 1, order + 1 + dropped.size))) + germ.tail_bound
    if tail > TRUNCATION_TOL:
        raise TruncationError(f"composition tail {tail:.2e} on |z| = {rho} exceeds {TRUNCATION_TOL:g}", bound=tail)
    coefficients = np.trim_zeros(kept[1:], "b")
    logger.debug("germ power q=%d kept %d coefficients, tail %.2e", q, coefficients.size, tail)
    return ParabolicGerm(coefficients, period=1, r0=germ.r0, tail_bound=tail)


def _series_power(g, alpha, length):
    """Coefficients of g(x)^alpha for g_0 = 1 (Miller's recurrence)."""
    h = np.zeros(length, dtype=complex)
    h[0] = 1.0
    for k in range(1, length):
        j = np.arange(1, min(k, g.size - 1) + 1)
        h[k] = np.sum(((alpha + 1.0) * j - k) * g[j] * h[k - j]) / k
    return h


def _flower(a, n):
    base = np.angle(-1.0 / a) / n
    step = 2.0 * np.pi / n
    attracting = tuple(float((base + k * step) % (2 * np.pi)) for k in range(n))
    repelling = tuple(float((base + step / 2.0 + k * step) % (2 * np.pi)) for k in range(n))
    return attracting, repelling


def _eta_max(coefficients, r):
    circle = r * np.exp(2j * np.pi * np.arange(CIRCLE_SAMPLES) / CIRCLE_SAMPLES)
    return float(np.max(np.abs(P.polyval(circle, np.concatenate([[0j], coefficients])))))


def petal_chart(germ, length=DEFAULT_SERIES_LENGTH):
    """Fatou chart of a normalised germ: d, the eta series, the dyadic petal radius r and tau."""
    n, a = germ.n, germ.a
    if a == 0:
        raise NotParabolicError("a = 0")
    d = -1.0 / (n * a)
    # f(z) = z g(z); in xi = w^(-1/n) the chart reads F(w) = w g(z)^(-n), z = d^(1/n) xi
    root = complex(d) if n == 1 else np.exp(np.log(complex(d)) / n)
    size = n + length + 1
    g = np.zeros(size, dtype=complex)
    upto = min(size, germ.order)
    g[:upto] = germ.coefficients[:upto] * root ** np.arange(upto)
    e = _series_power(g, -float(n), size)
    coefficients = e[n + 1:n + 1 + length]
    if abs(e[n] - 1.0) > 1e-9:
        raise NotParabolicError(f"chart normalisation failed: leading term {e[n]}")

    r = None
    for k in range(1, DYADIC_STEPS + 1):
        trial = 2.0**-k
        tail = abs(coefficients[-1]) * trial**length
        if tail <= TRUNCATION_TOL and _eta_max(coefficients, trial) <= ETA_BOUND:
            r = trial
            break
    if r is None:
        raise PetalError(f"no petal radius down to 2^-{DYADIC_STEPS} keeps |eta| <= {ETA_BOUND}")
    attracting, repelling = _flower(a, n)
    chart = PetalChart(
        germ=germ,
        d=complex(d),
        eta_coefficients=coefficients,
        r=r,
        tau=1.0 / r**n + 2.0,
        tail_bound=float(abs(coefficients[-1]) * r**length),
        attracting_directions=attracting,
        repelling_directions=repelling,
    )
    logger.info("petal chart: n=%d d=%s r=%g tau=%g", n, chart.d, r, chart.tau)
    return chart


def exact_chart_value(germ, w):
    """F(w) in rational arithmetic for n = 1 and real coefficients."""
    if any(c.imag != 0 for c in germ.coefficients):
        raise ConfigurationError("exact evaluation needs real coefficients")
    if germ.n != 1:
        raise ConfigurationError(f"exact evaluation covers n = 1 only, got n = {germ.n}")
    coefficients = [Fraction(float(c.real)) for c in germ.coefficients]
    if isinstance(w, complex):
        if w.imag != 0:
            raise ConfigurationError("exact evaluation needs a real w")
        w = w.real
    w = Fraction(w)
    if w == 0:
        raise DomainError("w = 0 has no preimage under the chart")
    d = Fraction(-1) / coefficients[1]
    z = d / w
    fz = sum(c * z ** (k + 1) for k, c in enumerate(coefficients))
    if fz == 0:
        raise DomainError(f"f maps phi^-1({w}) to the fixed point")
    return d / fz


# ---------------- Inversion and orbits ----------------
def invert_step(chart, w):
    """F^-1(w) by Newton's method seeded at w - 1."""
    v = np.asarray(w, dtype=complex)
    flat = v.ravel()
    u = flat - 1.0
    tol = INVERSION_TOL * np.maximum(1.0, np.abs(flat) / 100.0)
    residual = chart.F(u) - flat
    for _ in range(NEWTON_MAX_STEPS):
        active = np.abs(residual) >= tol
        if not np.any(active):
            break
        u[active] -= residual[active] / chart.F_prime(u[active])
        residual[active] = chart.F(u[active]) - flat[active]
    failed = ~(np.abs(residual) < tol)
    if np.any(failed):
        where = complex(flat[np.flatnonzero(failed)[0]])
        raise InversionError(f"Newton inversion of F stalled at w={where}", location=where)
    return u.reshape(v.shape) if v.ndim else complex(u[0])


def _forward_orbit(chart, w0, m):
    orbit = np.empty(m + 1, dtype=complex)
    orbit[0] = w0
    for k in range(m):
        orbit[k + 1] = complex(chart.F(orbit[k]))
        if not np.isfinite(orbit[k + 1]) or abs(orbit[k + 1]) > ORBIT_LIMIT:
            raise OverflowGuardError(f"orbit of {w0} left the numerical range at step {k + 1}")
    return orbit


def orbit_asymptotics(chart, w0, m):
    """w_k = F^k(w0); the report carries (w_m - w_0)/m and the per-step bounds."""
    w0 = complex(w0)
    if w0.real < chart.tau:
        raise DomainError(f"w0 = {w0} is left of Re w = {chart.tau}")
    orbit = _forward_orbit(chart, w0, m)
    steps = np.diff(orbit).real
    # Re w_{k+1} - Re w_k measures how far w_{k+1} sits inside R_{Re w_k}
    report = OrbitReport(
        orbit=orbit,
        ratio=float(((orbit[-1] - orbit[0]) / m).real),
        min_step=float(steps.min()),
        max_step=float(steps.max()),
        clearance=float(steps.min()),
    )
    if not abs(report.ratio - 1.0) <= 0.1 and m >= 100:
        logger.warning("orbit ratio %.4f after %d steps is not within 0.1 of 1", report.ratio, m)
    return report


# ---------------- Boundary motion ----------------
def boundary_motion(chart, x):
    """Motion of the lines Re w = x, x + 1 over the unit disk, with K(x) = (1 + c*)/(1 - c*)."""
    if x <= 1.0:
        raise PetalError(f"x = {x} leaves no room for the petal")
    c_star = 1.0 / (chart.r * (x - 1.0) ** (1.0 / chart.n))
    if c_star >= 1.0:
        raise PetalError(f"c* = {c_star:.4g} at x = {x}: the petal is too small")
    return BoundaryMotion(chart=chart, x=float(x), c_star=c_star, K=(1.0 + c_star) / (1.0 - c_star))


def boundary_sample_motion(boundary, heights):
    """The boundary motion at sampled heights as a finite-point motion.

    Points on Re w = x + 1 follow w + sum b_j (r xi (x-1)^(1/n))^j c^j.
    """
    left, right = boundary.edges(heights)
    chart = boundary.chart
    j = np.arange(1, chart.eta_coefficients.size + 1)
    trajectories = [Trajectory(w, []) for w in left]
    for w in right:
        scale = boundary.scale * complex(principal_root(w - 1.0, chart.n))
        trajectories.append(Trajectory(w, chart.eta_coefficients * scale**j))
    return FinitePointMotion(trajectories)


# ---------------- Strip conjugacies ----------------
def smooth_ramp(t):
    t = np.clip(t, 0.0, 1.0)
    return t * t * (3.0 - 2.0 * t)


def strip_interpolation(chart, x):
    """h(w) = w + sigma(Re w - x) eta((w-1)^(-1/n)): identity on Re w = x, H_x on Re w = x + 1."""
    def h(w):
        w = np.asarray(w, dtype=complex)
        return w + smooth_ramp(w.real - x) * chart.eta(principal_root(w - 1.0, chart.n))
    return h


def _orbit_real_part(chart, m):
    return float(_forward_orbit(chart, complex(chart.tau), m)[-1].real)


def _audit_grid(chart, m, shape):
    left = chart.tau + m
    return GridSpec.spanning(left, left + 1.0, -AUDIT_HEIGHT, AUDIT_HEIGHT, *shape)


def _chirka_seed(boundary, shift, heights, mesh_nodes):
    motion = boundary_sample_motion(boundary, heights)
    radius = min(0.99, max(2.0 * boundary.c_star, 0.1))
    probe = GridSpec.spanning(boundary.x, boundary.x + 1.0, -0.5, 0.5, 3, 3)
    extended = extend_motion(motion, radius, probe, params=[0], mesh_nodes=mesh_nodes)

    def point(z):
        try:
            return complex(extended.evaluate(boundary.c_star, np.array([z]))[0])
        except HolomotionError as exc:
            logger.warning("chirka seed at %s failed: %s", z, exc)
            return complex(math.nan, math.nan)

    def seed(w):
        w = np.asarray(w, dtype=complex)
        values = parallel_map(point, list((w + shift).ravel()))
        return np.array(values, dtype=complex).reshape(w.shape)
    return seed


def strip_conjugacy(chart, m, mode="explicit", audit_shape=None, heights=CHIRKA_HEIGHTS,
                    mesh_nodes=CHIRKA_MESH_NODES):
    """psi_m with seed h o beta_m on A_m, beta_m(w) = w + x_m - tau - m; K_m audited on A_m."""
    if m < 1:
        raise ConfigurationError(f"stage index must be at least 1, got {m}")
    if mode not in ("explicit", "chirka"):
        raise ConfigurationError(f"unknown interpolation mode {mode!r}")
    x_m = _orbit_real_part(chart, m)
    boundary = boundary_motion(chart, x_m)
    shift = x_m - chart.tau - m
    if mode == "explicit":
        h = strip_interpolation(chart, x_m)

        def seed(w):
            return h(np.asarray(w, dtype=complex) + shift)
        shape = audit_shape or AUDIT_SHAPE
    else:
        seed = _chirka_seed(boundary, shift, heights, mesh_nodes)
        shape = audit_shape or CHIRKA_AUDIT_SHAPE

    grid = _audit_grid(chart, m, shape)
    audit = beltrami(SampledMap(grid, seed(grid.points())))
    conj = StripConjugacy(
        chart=chart, m=m, x_m=x_m, boundary=boundary, mode=mode,
        seed=seed, invert=lambda v: invert_step(chart, v), audit=audit,
    )
    logger.debug("psi_%d (%s): x_m=%.6g K_m=%.6g K(x_m)=%.6g", m, mode, x_m, conj.K_m, boundary.K)
    return conj


def default_test_grid(chart):
    """7 x 6 nodes on [tau + 0.25, tau + 3.25] x [-1.25, 1.25]; 20 interior points."""
    return GridSpec.spanning(chart.tau + 0.25, chart.tau + 3.25, -1.25, 1.25, 7, 6)


def conjugacy_residual(psi, points):
    """max |F(psi(w)) - psi(w + 1)| over the points."""
    points = np.asarray(points, dtype=complex).ravel()
    return float(np.max(np.abs(psi.chart.F(psi(points)) - psi(points + 1.0))))


# ---------------- Fatou coordinate ----------------
def fatou_coordinate(chart, m_max=64, tol=1e-7, grid=None):
    """psi_1, psi_2, ... on a test grid until the Cauchy difference falls below tol.

    Without convergence the last iterate is returned with converged=False.
    """
    if m_max < 2:
        raise ConfigurationError(f"m_max must be at least 2, got {m_max}")
    grid = default_test_grid(chart) if grid is None else grid
    points = grid.points()
    if np.any(points.real < chart.tau):
        raise DomainError(f"test grid reaches left of Re w = {chart.tau}")

    history = []
    previous = None
    psi = values = None
    converged = False
    for m in range(1, m_max + 1):
        psi = strip_conjugacy(chart, m)
        values = psi(points)
        difference = math.nan if previous is None else float(np.max(np.abs(values - previous)))
        history.append((m, difference, psi.beltrami_sup))
        previous = values
        if difference < tol:
            converged = True
            break

    field = beltrami(SampledMap(grid, values))
    residual = conjugacy_residual(psi, grid.interior().points())
    if converged:
        logger.info("fatou coordinate converged at m=%d, residual %.2e", psi.m, residual)
    else:
        logger.warning("fatou coordinate not converged after m=%d: last difference %.2e",
                       m_max, history[-1][1])
    return FatouCoordinate(
        psi=psi, grid=grid, values=values, conjugacy_residual=residual,
        beltrami_sup=field.sup_norm, history=history, converged=converged,
    )
