"""Extension of a holomorphic motion of finitely many points to the whole plane.

For every plane point z the trajectory f_z solves f_z = z + P[Phi(., f_z)], where
Phi is the bump field built from the given trajectories and P is the Cauchy
transform. Phi vanishes for |c| > 1, so the unknowns live on a polar mesh of the
closed unit disk: Gauss-Legendre radii times equally spaced angles. P acts one
Fourier mode at a time, which keeps it exact for sources that are polynomials in
conj(c) and exactly holomorphic in c off the disk. The solve is a damped Picard
iteration; its convergence is observed, not guaranteed.
"""
import logging
import math
import threading
from dataclasses import dataclass, field

import numpy as np
from numpy.polynomial import legendre
from scipy.spatial.distance import pdist
from scipy.special import roots_legendre

from models.field import GridSpec, TransformResult
from models.motion import BumpFunction, ExtendedMotion, MotionConstants
from services.cauchy_service import empirical_modulus
from utils.errors import (
    ConfigurationError,
    DomainError,
    HolomotionError,
    NonConvergenceError,
    TrajectoryCollisionError,
)
from utils.parallel_utils import parallel_map
from utils.sphere_utils import chordal_embedding

logger = logging.getLogger(__name__)

# ---------------- Config ----------------
DEFAULT_OMEGA = 0.5
DEFAULT_TOL = 1e-8
DEFAULT_MAX_ITER = 500
DEFAULT_MESH_NODES = 48
MIN_MESH_NODES = 8
CONSTANTS_MESH = (33, 128)
DELTA_DEFLATION = 0.95
COLLISION_TOL = 1e-14


# ---------------- Constants ----------------
def polar_mesh(n_radial, n_angular):
    """Closed unit disk: the centre once, then n_angular points on each of n_radial - 1 circles."""
    radii = np.linspace(0.0, 1.0, n_radial)[1:]
    angles = 2.0 * np.pi * np.arange(n_angular) / n_angular
    ring = (radii[:, None] * np.exp(1j * angles)[None, :]).ravel()
    return np.concatenate([[0j], ring])


def motion_constants(motion, mesh=CONSTANTS_MESH):
    """C4, delta, C5 as discrete sup/inf over a polar mesh; C6 from the bump; L and D."""
    if not motion.trajectories:
        raise ConfigurationError("the motion has no moving points beyond 0, 1 and infinity")
    c = polar_mesh(*mesh)
    values = np.array([t.value(c) for t in motion.trajectories])
    dbars = np.array([t.dbar(c) for t in motion.trajectories])

    names = [f"z{i + 2}" for i in range(len(motion.trajectories))]
    gaps = []
    for i, name in enumerate(names):
        gaps.append((np.abs(values[i]), (name, "0")))
        gaps.append((np.abs(values[i] - 1.0), (name, "1")))
        for j in range(i + 1, len(names)):
            gaps.append((np.abs(values[i] - values[j]), (name, names[j])))
    worst, pair, where = math.inf, None, None
    for distances, labels in gaps:
        k = int(np.argmin(distances))
        if distances[k] < worst:
            worst, pair, where = float(distances[k]), labels, complex(c[k])
    if worst <= COLLISION_TOL:
        raise TrajectoryCollisionError(
            f"trajectories {pair[0]} and {pair[1]} meet at c = {where}", pair=pair, parameter=where
        )

    delta = DELTA_DEFLATION * worst
    c4 = max(1.0, float(np.max(np.abs(values))))
    c5 = float(np.max(np.abs(dbars)))
    c6 = BumpFunction(delta).lipschitz
    logger.debug("motion constants: C4=%.4g delta=%.4g (pair %s at c=%s) C5=%.4g C6=%.4g",
                 c4, delta, pair, where, c5, c6)
    return MotionConstants(C4=c4, delta=delta, C5=c5, C6=c6, L=2.0 * c5 * c6, D=2.0 * c5)


# ---------------- Phi ----------------
@dataclass
class PhiField:
    """Phi(c, w) = sum_i lambda(|w - f_i(c)|) * df_i/dconj(c)."""

    motion: object
    constants: MotionConstants
    bump: BumpFunction

    def terms(self, c, w):
        c = np.asarray(c, dtype=complex)
        w = np.asarray(w, dtype=complex)
        out = []
        for t in self.motion.trajectories:
            out.append(self.bump(np.abs(w - t.value(c))) * t.dbar(c))
        return np.array(out)

    def __call__(self, c, w):
        if not self.motion.trajectories:
            return np.zeros(np.broadcast(np.asarray(c), np.asarray(w)).shape, dtype=complex)
        return self.terms(c, w).sum(axis=0)

    def combine(self, values, dbars, w):
        """Phi from trajectory values and dbar coefficients precomputed at fixed parameters."""
        if values.size == 0:
            return np.zeros(np.shape(w), dtype=complex)
        weights = self.bump(np.abs(np.asarray(w)[None, :] - values))
        return np.sum(weights * dbars, axis=0)


def build_phi(motion, constants, bump):
    if not math.isclose(bump.delta, constants.delta, rel_tol=1e-12):
        raise ConfigurationError(f"bump delta {bump.delta} differs from motion delta {constants.delta}")
    return PhiField(motion, constants, bump)


# ---------------- Disk transform ----------------
class DiskTransform:
    """P on a polar mesh of the closed unit disk.

    A source with angular modes g_k(rho) has transform modes
        (P g)_n(s) = -2 int_s^1 g_{n+1}(rho) (s/rho)^n drho              for n >= 0,
        (P g)_n(s) =  2 int_0^min(s,1) g_{n+1}(rho) (rho/s)^(-n) drho     for n < 0,
    so every factor (s/rho)^n or (rho/s)^(-n) under an integral is at most one.
    Each radial integral uses Gauss-Legendre nodes on its own interval, fed by the
    Legendre interpolant of g_{n+1} through the mesh radii.
    """

    def __init__(self, n_radial, n_angular):
        if n_radial < 2 or n_angular < 4:
            raise ConfigurationError(f"polar mesh {n_radial} x {n_angular} is too coarse")
        x, _ = roots_legendre(n_radial)
        self.shape = (n_radial, n_angular)
        self.radii = 0.5 * (x + 1.0)
        self.angles = 2.0 * np.pi * np.arange(n_angular) / n_angular
        self.nodes = (self.radii[:, None] * np.exp(1j * self.angles)[None, :]).ravel()
        self.spacing = float(np.max(np.diff(np.concatenate([[0.0], self.radii, [1.0]]))))

        freqs = set(np.rint(np.fft.fftfreq(n_angular, 1.0 / n_angular)).astype(int).tolist())
        self.modes = np.array(sorted(n for n in freqs if n + 1 in freqs))
        self._out = self.modes % n_angular
        self._in = (self.modes + 1) % n_angular
        self._gauss = roots_legendre(n_radial + n_angular // 2 + 1)
        self._to_legendre = np.linalg.inv(legendre.legvander(x, n_radial - 1))
        self._radial = np.array([self.radial_weights(s) for s in self.radii])

    def _interpolation(self, rho):
        return legendre.legvander(2.0 * rho - 1.0, self.shape[0] - 1) @ self._to_legendre

    def radial_weights(self, s):
        """W[n, j]: output mode n at radius s from input mode n + 1 at mesh radius j."""
        x, w = self._gauss
        weights = np.zeros((self.modes.size, self.shape[0]))
        inner = self.modes < 0
        top = min(s, 1.0)
        if top > 0:
            rho = 0.5 * top * (x + 1.0)
            scale = (rho[None, :] / s) ** (-self.modes[inner])[:, None]
            weights[inner] = 2.0 * (scale * (0.5 * top * w)) @ self._interpolation(rho)
        if s < 1.0:
            rho = s + 0.5 * (1.0 - s) * (x + 1.0)
            scale = (s / rho[None, :]) ** self.modes[~inner][:, None]
            weights[~inner] = -2.0 * (scale * (0.5 * (1.0 - s) * w)) @ self._interpolation(rho)
        return weights

    def __call__(self, g):
        """P g at the mesh nodes from samples of g at the mesh nodes."""
        n_angular = self.shape[1]
        coefficients = np.fft.fft(np.reshape(g, self.shape), axis=1) / n_angular
        out = np.zeros(self.shape, dtype=complex)
        out[:, self._out] = np.einsum("inj,jn->in", self._radial, coefficients[:, self._in])
        return (np.fft.ifft(out, axis=1) * n_angular).ravel()

    def row(self, c):
        """Weights w with P g(c) = w @ g; holomorphic in c for |c| > 1."""
        c = complex(c)
        phase = np.exp(1j * self.modes * np.angle(c))
        analysis = np.exp(-1j * (self.modes + 1)[:, None] * self.angles[None, :]) / self.shape[1]
        return np.einsum("n,nj,nl->jl", phase, self.radial_weights(abs(c)), analysis).ravel()


# ---------------- Solver ----------------
@dataclass
class ChirkaSolution:
    z: complex
    values: np.ndarray
    source: np.ndarray
    residual: float
    iterations: int
    history: list = field(default_factory=list)


class ChirkaSolver:
    """Fixed-point solver for one motion; solutions are cached per plane point."""

    def __init__(self, motion, mesh_nodes=DEFAULT_MESH_NODES, omega=DEFAULT_OMEGA,
                 tol=DEFAULT_TOL, max_iter=DEFAULT_MAX_ITER, constants=None):
        if not 0 < omega <= 1:
            raise ConfigurationError(f"relaxation factor must lie in (0, 1], got {omega}")
        if mesh_nodes < MIN_MESH_NODES:
            raise ConfigurationError(f"the solver mesh needs at least {MIN_MESH_NODES} angular nodes, got {mesh_nodes}")
        self.motion = motion
        self.omega = omega
        self.tol = tol
        self.max_iter = max_iter
        self.constants = constants or motion_constants(motion)
        self.bump = BumpFunction(self.constants.delta)
        self.phi = build_phi(motion, self.constants, self.bump)
        self.disk = DiskTransform(mesh_nodes // 2, mesh_nodes)
        self.nodes = self.disk.nodes
        self.traj_values = np.array([t.value(self.nodes) for t in motion.trajectories]).reshape(-1, self.nodes.size)
        self.traj_dbar = np.array([t.dbar(self.nodes) for t in motion.trajectories]).reshape(-1, self.nodes.size)
        self._cache = {}
        self._lock = threading.Lock()

    def source(self, f):
        return self.phi.combine(self.traj_values, self.traj_dbar, f)

    def apply_k(self, f):
        """K f on the mesh nodes."""
        return self.disk(self.source(f))

    def solve(self, z, initial=None, use_cache=True):
        z = complex(z)
        if not (math.isfinite(z.real) and math.isfinite(z.imag)):
            raise DomainError("the plane point must be finite")
        if use_cache and initial is None:
            with self._lock:
                cached = self._cache.get(z)
            if cached is not None:
                return cached

        f = np.full(self.nodes.size, z) if initial is None else np.asarray(initial, dtype=complex).copy()
        history = []
        for iteration in range(1, self.max_iter + 1):
            source = self.source(f)
            update = z + self.disk(source)
            residual = float(np.max(np.abs(update - f))) if f.size else 0.0
            history.append(residual)
            if residual < self.tol:
                solution = ChirkaSolution(z, f, source, residual, iteration, history)
                break
            f = (1.0 - self.omega) * f + self.omega * update
        else:
            raise NonConvergenceError(
                f"Picard iteration at z={z} stalled at residual {history[-1]:.2e} after {self.max_iter} steps",
                history=history,
            )
        if use_cache and initial is None:
            with self._lock:
                self._cache[z] = solution
        return solution

    def parameter_row(self, c):
        """Weights taking a solution's source to P[source](c) at one parameter."""
        return self.disk.row(c)

    def evaluate(self, z, c):
        """f_z(c) for an array of plane points and one parameter c."""
        z = np.asarray(z, dtype=complex)
        flat = z.ravel()
        row = self.parameter_row(c)
        out = np.array([p + self.solve(p).source @ row for p in flat])
        return out.reshape(z.shape)


def chirka_solve(z, solver, initial=None):
    """Trajectory samples of z on the solver's parameter mesh."""
    return solver.solve(z, initial=initial, use_cache=initial is None)


# ---------------- Extension ----------------
def default_parameter_samples(r, fractions=(0.25, 0.5, 0.75), directions=8):
    angles = 2.0 * np.pi * np.arange(directions) / directions
    ring = (np.asarray(fractions)[:, None] * r * np.exp(1j * angles)[None, :]).ravel()
    return np.concatenate([[0j], ring])


def _try_solve(solver, z):
    try:
        return solver.solve(z)
    except HolomotionError as exc:
        logger.warning("no trajectory for z=%s: %s", z, exc)
        return exc


def _min_separation(values):
    finite = values[np.isfinite(values)]
    if finite.size < 2:
        return math.inf
    return float(np.min(pdist(chordal_embedding(finite))))


def extend_motion(motion, r, grid, params=None, mesh_nodes=DEFAULT_MESH_NODES, omega=DEFAULT_OMEGA,
                  tol=DEFAULT_TOL, max_iter=DEFAULT_MAX_ITER, uniqueness_probes=4):
    """H(u, z) = f_z(r/u) for |u| < r, from the motion restricted to the parameter disk of radius r."""
    if not 0 < r < 1:
        raise ConfigurationError(f"extension radius must lie in (0, 1), got {r}")
    scaled = motion.reparametrized(r)
    solver = ChirkaSolver(scaled, mesh_nodes=mesh_nodes, omega=omega, tol=tol, max_iter=max_iter)
    zs = grid.points().ravel()
    outcomes = parallel_map(lambda z: _try_solve(solver, z), zs)

    failures = [(complex(z), str(o)) for z, o in zip(zs, outcomes) if isinstance(o, HolomotionError)]
    ok = np.array([not isinstance(o, HolomotionError) for o in outcomes])
    residuals = np.array([o.residual if k else math.nan for o, k in zip(outcomes, ok)])
    iterations = np.array([o.iterations if k else -1 for o, k in zip(outcomes, ok)])
    sources = np.array([o.source if k else np.zeros(solver.nodes.size) for o, k in zip(outcomes, ok)])

    params = default_parameter_samples(r) if params is None else np.asarray(params, dtype=complex).ravel()
    if np.any(np.abs(params) >= r):
        raise DomainError(f"parameter samples must lie inside the disk of radius {r}")
    values = np.empty((params.size, zs.size), dtype=complex)
    for j, u in enumerate(params):
        if u == 0:
            values[j] = zs
        else:
            row = solver.parameter_row(r / u)
            values[j] = zs + sources @ row
        values[j, ~ok] = complex(math.nan, math.nan)
    separations = np.array([_min_separation(v) for v in values])

    agreement = 0.0
    for t in scaled.trajectories:
        try:
            sol = solver.solve(t.base)
        except HolomotionError as exc:
            logger.warning("data point %s did not converge: %s", t.base, exc)
            agreement = math.inf
            continue
        agreement = max(agreement, float(np.max(np.abs(sol.values - t.value(solver.nodes)))))

    good = zs[ok]
    stride = max(1, good.size // max(uniqueness_probes, 1))
    probes = [t.base for t in scaled.trajectories] + list(good[::stride][:uniqueness_probes])
    drift = 0.0
    for z in probes:
        try:
            first = solver.solve(z)
            second = solver.solve(z, initial=np.full(solver.nodes.size, z + solver.constants.D / 2.0))
            drift = max(drift, float(np.max(np.abs(first.values - second.values))))
        except HolomotionError as exc:
            logger.warning("uniqueness probe at %s failed: %s", z, exc)
            drift = math.inf

    logger.info("extended motion at r=%.3g: %d points, %d failures, max iterations %d",
                r, zs.size, len(failures), int(iterations.max()) if iterations.size else 0)
    return ExtendedMotion(
        r=r, grid=grid, solver=solver, params=params, values=values, residuals=residuals,
        iterations=iterations, failures=failures, separations=separations,
        data_agreement=agreement, uniqueness_drift=drift,
    )


# ---------------- Diagnostics ----------------
def kernel_bound_probe(solver, probes, p=4.0):
    """Largest |K f| over the mesh and the largest Hoelder ratio of K f for exponent 1 - 2/p.

    ``probes`` are callables evaluated on the mesh nodes.
    """
    norm, holder = 0.0, 0.0
    alpha = 1.0 - 2.0 / p
    for probe in probes:
        kf = solver.apply_k(np.asarray(probe(solver.nodes), dtype=complex))
        norm = max(norm, float(np.max(np.abs(kf))))
        if solver.constants.C5 > 0:
            result = TransformResult(solver.nodes, kf, solver.disk.spacing, 1.0, solver.constants.C5)
            holder = max(holder, empirical_modulus(result, solver.constants.C5, "holder", alpha=alpha))
    return norm, holder


def parameter_cr_residual(motion, z, half_width=None, n=9):
    """sup of |dH/dconj(u)| for u -> H(u, z) over interior nodes of a centred u-grid."""
    if n < 3:
        raise ConfigurationError("the parameter grid needs at least 3 nodes per axis")
    half_width = 0.6 * motion.r if half_width is None else half_width
    grid = GridSpec.spanning(-half_width, half_width, -half_width, half_width, n, n)
    h = grid.spacing
    values = np.array([[motion.evaluate(u, np.array([z]))[0] for u in row] for row in grid.points()])
    dx = (values[2:, 1:-1] - values[:-2, 1:-1]) / (2.0 * h)
    dy = (values[1:-1, 2:] - values[1:-1, :-2]) / (2.0 * h)
    return float(np.max(np.abs(0.5 * (dx + 1j * dy))))


def refinement_study(motion, radii, z_probes, probe_u, mesh_nodes=DEFAULT_MESH_NODES,
                     omega=DEFAULT_OMEGA, tol=DEFAULT_TOL, max_iter=DEFAULT_MAX_ITER):
    """Extensions at increasing r < 1 evaluated at one fixed parameter.

    Each row records the constants, the solver effort and how far H(probe_u, z)
    moved from the previous radius.
    """
    radii = sorted(radii)
    if abs(probe_u) >= radii[0]:
        raise DomainError(f"probe parameter {probe_u} must lie inside every disk of radius {radii[0]}")
    z_probes = np.asarray(z_probes, dtype=complex).ravel()
    rows, previous = [], None
    for r in radii:
        if not 0 < r < 1:
            raise ConfigurationError(f"radius {r} is not in (0, 1)")
        solver = ChirkaSolver(motion.reparametrized(r), mesh_nodes=mesh_nodes, omega=omega,
                              tol=tol, max_iter=max_iter)
        sols = [solver.solve(z) for z in z_probes]
        current = solver.evaluate(z_probes, r / probe_u) if probe_u != 0 else z_probes.copy()
        rows.append({
            "r": r,
            "C5": solver.constants.C5,
            "delta": solver.constants.delta,
            "L": solver.constants.L,
            "D": solver.constants.D,
            "max_iterations": max(s.iterations for s in sols),
            "max_residual": max(s.residual for s in sols),
            "H": current,
            "drift": math.nan if previous is None else float(np.max(np.abs(current - previous))),
        })
        previous = current
    return rows
