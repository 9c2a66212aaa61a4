# models/motion.py
import json
import math
import os
from dataclasses import dataclass, field
from functools import cached_property

import numpy as np
from scipy.optimize import minimize_scalar

from utils.errors import ConfigurationError, DomainError, TruncationError
from utils.sphere_utils import INFINITY, SpherePoint

# ---------------- Config ----------------
TAIL_TOL = 1e-12
FIT_RESIDUAL_TOL = 1e-8


# ---------------- Trajectories ----------------
@dataclass
class Trajectory:
    """f(c) = base + a_1/c + a_2/c^2 + ... on |c| >= 1, reflected as f(1/conj(c)) inside.

    ``exact`` marks a finite polynomial in 1/c; fitted trajectories carry a tail bound.
    """

    base: complex
    coefficients: np.ndarray
    exact: bool = True
    tail_bound: float = 0.0

    def __post_init__(self):
        self.base = complex(self.base)
        self.coefficients = np.asarray(self.coefficients, dtype=complex).ravel()
        if not self.exact:
            self.tail_bound = self._estimate_tail()
            if not self.tail_bound < TAIL_TOL:
                raise TruncationError(
                    f"coefficient tail of the trajectory at {self.base} is {self.tail_bound:.2e}",
                    bound=self.tail_bound,
                )

    def _estimate_tail(self):
        """||a|| rho^(M+1) / (1 - rho) at |c| = 1, rho the root-test decay of the coefficients."""
        a = np.abs(self.coefficients)
        m = a.size
        if m == 0 or not np.any(a):
            return 0.0
        peak = int(np.argmax(a))
        if peak == m - 1:
            return math.inf
        rho = (max(a[-1], 1e-300) / a[peak]) ** (1.0 / (m - 1 - peak))
        if rho >= 1.0:
            return math.inf
        return float(a[peak] * rho ** (m + 1) / (1.0 - rho))

    @property
    def order(self):
        return self.coefficients.size

    def _powers(self, u):
        k = np.arange(1, self.order + 1)
        return np.asarray(u, dtype=complex)[..., None] ** k

    def value(self, c):
        """Reflected series inside the closed unit disk, exterior series outside."""
        c = np.asarray(c, dtype=complex)
        inside = np.abs(c) <= 1.0
        with np.errstate(divide="ignore", invalid="ignore"):
            u = np.where(inside, np.conj(c), 1.0 / np.where(inside, 1.0, c))
        return self.base + self._powers(u) @ self.coefficients

    def exterior(self, c):
        c = np.asarray(c, dtype=complex)
        return self.base + self._powers(1.0 / c) @ self.coefficients

    def dbar(self, c):
        """d f / d conj(c): sum k a_k conj(c)^(k-1) inside, 0 outside."""
        c = np.asarray(c, dtype=complex)
        k = np.arange(1, self.order + 1)
        inside = np.abs(c) <= 1.0
        u = np.conj(np.where(inside, c, 0))[..., None] ** (k - 1)
        return np.where(inside, u @ (k * self.coefficients), 0j)

    def reparametrized(self, r):
        k = np.arange(1, self.order + 1)
        return Trajectory(self.base, self.coefficients * r**k, exact=True)

    @classmethod
    def from_boundary_samples(cls, samples, radius, order):
        """Fit the exterior series from 4*order equispaced samples on |c| = radius."""
        samples = np.asarray(samples, dtype=complex).ravel()
        n = 4 * order
        if samples.size != n:
            raise ConfigurationError(f"expected {n} boundary samples, got {samples.size}")
        spectrum = np.fft.ifft(samples)
        k = np.arange(1, order + 1)
        coefficients = spectrum[1:order + 1] * radius**k
        residual = float(np.max(np.abs(spectrum[order + 1:]))) if n > order + 1 else 0.0
        if residual > FIT_RESIDUAL_TOL:
            raise TruncationError(
                f"boundary samples are not an exterior series of order {order}: residual {residual:.2e}",
                bound=residual,
            )
        return cls(spectrum[0], coefficients, exact=False)

    def to_json(self):
        return {
            "base": [self.base.real, self.base.imag],
            "coefficients": [[a.real, a.imag] for a in self.coefficients],
        }


@dataclass
class FinitePointMotion:
    """Normalised motion of {0, 1, infinity} plus finitely many moving points."""

    trajectories: list

    def __post_init__(self):
        for t in self.trajectories:
            if abs(t.base) < 1e-14 or abs(t.base - 1) < 1e-14:
                raise ConfigurationError(f"{t.base} collides with a fixed point of the normalisation")

    @property
    def points(self):
        return [SpherePoint(0j), SpherePoint(1 + 0j), INFINITY] + [SpherePoint(t.base) for t in self.trajectories]

    @property
    def bases(self):
        return np.array([t.base for t in self.trajectories], dtype=complex)

    def reparametrized(self, r):
        """The motion restricted to parameters of modulus below r: a_k -> a_k r^k."""
        if not 0 < r <= 1:
            raise ConfigurationError(f"reparametrisation radius must lie in (0, 1], got {r}")
        return FinitePointMotion([t.reparametrized(r) for t in self.trajectories])

    def to_json(self):
        return {"points": ["0", "1", "inf"], "trajectories": [t.to_json() for t in self.trajectories]}

    @classmethod
    def from_json(cls, data):
        trajectories = []
        for item in data.get("trajectories", []):
            base = complex(*item["base"])
            if "boundary_samples" in item:
                samples = [complex(*s) for s in item["boundary_samples"]]
                trajectories.append(
                    Trajectory.from_boundary_samples(samples, item.get("radius", 1.0), item["order"])
                )
                continue
            coefficients = [complex(*a) for a in item.get("coefficients", [])]
            trajectories.append(Trajectory(base, coefficients))
        return cls(trajectories)

    @classmethod
    def load(cls, path):
        if not os.path.exists(path):
            raise ConfigurationError(f"motion file not found: {path}")
        with open(path) as f:
            return cls.from_json(json.load(f))

    def save(self, path):
        with open(path, "w") as f:
            json.dump(self.to_json(), f, indent=2)
        return path


def sample_motion(order=8, scale=0.03, decay=0.5, phase=0.7):
    """Five-point motion used by the pipeline checks: 0, 1, infinity and two moving points."""
    k = np.arange(1, order + 1)
    a = scale * decay ** (k - 1)
    return FinitePointMotion([
        Trajectory(0.5 + 0.8j, a * np.exp(1j * k * phase)),
        Trajectory(-0.6 - 0.5j, a * np.exp(-1j * k * phase)),
    ])


# ---------------- Constants and bump ----------------
@dataclass(frozen=True)
class MotionConstants:
    C4: float
    delta: float
    C5: float
    C6: float
    L: float
    D: float

    @property
    def R(self):
        return self.C4 + self.delta / 2.0


@dataclass(frozen=True)
class BumpFunction:
    """lambda(x) = exp(-x^2 / (s^2 - x^2)) for x < s = delta/2, else 0."""

    delta: float

    @property
    def support(self):
        return self.delta / 2.0

    def __call__(self, x):
        x = np.asarray(x, dtype=float)
        s = self.support
        inside = x < s
        t2 = np.where(inside, (x / s) ** 2, 0.0)
        with np.errstate(divide="ignore", over="ignore"):
            return np.where(inside, np.exp(-t2 / (1.0 - t2)), 0.0)

    @cached_property
    def lipschitz(self):
        """C6 = max |lambda'|, from a bounded 1-D maximisation of the unit-scale profile."""

        def slope(t):
            return -math.exp(-t * t / (1.0 - t * t)) * 2.0 * t / (1.0 - t * t) ** 2

        best = minimize_scalar(slope, bounds=(0.0, 1.0 - 1e-9), method="bounded",
                               options={"xatol": 1e-12})
        return float(-best.fun) / self.support


# ---------------- Motions on the whole plane ----------------
@dataclass
class AnalyticMotion:
    """A closed-form motion h(c, z), sampled on ``grid`` when a slice is needed."""

    fn: object
    grid: object
    r: float = 1.0
    name: str = "analytic"

    def evaluate(self, c, z):
        if abs(c) >= self.r:
            raise DomainError(f"parameter {c} is outside the disk of radius {self.r}")
        return self.fn(complex(c), np.asarray(z, dtype=complex))

    def slice(self, c):
        return self.evaluate(c, self.grid.points())


def conjugate_shear_motion(grid, r=1.0):
    """h(c, z) = z + c conj(z); its Beltrami coefficient is c everywhere."""
    return AnalyticMotion(lambda c, z: z + c * np.conj(z), grid, r, "z + c conj(z)")


def identity_motion(grid, r=1.0):
    return AnalyticMotion(lambda c, z: np.array(z, dtype=complex), grid, r, "identity")


@dataclass
class ExtendedMotion:
    """H(u, z) for parameters |u| < r and plane points z, from per-point fixed-point solutions."""

    r: float
    grid: object
    solver: object
    params: np.ndarray
    values: np.ndarray
    residuals: np.ndarray
    iterations: np.ndarray
    failures: list = field(default_factory=list)
    separations: np.ndarray = None
    data_agreement: float = math.nan
    uniqueness_drift: float = math.nan

    @property
    def converged(self):
        return not self.failures

    def evaluate(self, u, z):
        u = complex(u)
        if abs(u) > self.r:
            raise DomainError(f"parameter {u} is outside the disk of radius {self.r}")
        z = np.asarray(z, dtype=complex)
        if u == 0:
            return z.copy()
        return self.solver.evaluate(z, self.r / u)

    def slice(self, u):
        return self.evaluate(u, self.grid.points())

    def rows(self):
        """(u, z, H) triples for every stored sample."""
        zs = self.grid.points().ravel()
        for j, u in enumerate(self.params):
            for k, z in enumerate(zs):
                yield u, z, self.values[j, k]


# ---------------- Regularity data ----------------
@dataclass
class TangentField:
    points: np.ndarray
    values: np.ndarray
    errors: np.ndarray

    def __post_init__(self):
        self.points = np.asarray(self.points, dtype=complex).ravel()
        self.values = np.asarray(self.values, dtype=complex).ravel()
        self.errors = np.asarray(self.errors, dtype=float).ravel()

    def growth_trend(self):
        """|V(z)|/|z|^2 at the three largest sampled moduli, in increasing |z|."""
        order = np.argsort(np.abs(self.points))[-3:]
        z = self.points[order]
        return np.abs(self.values[order]) / np.abs(z) ** 2


@dataclass(frozen=True)
class ModulusReport:
    pairs: int
    worst_ratio: float
    worst_pair: tuple
    coefficient: float
    C: float
    delta: float
    R: float

    @property
    def holds(self):
        return self.worst_ratio <= self.coefficient


@dataclass(frozen=True)
class HolderFit:
    """log s(c) ~ slope * log s(0) + intercept over sampled point pairs."""

    slope: float
    intercept: float
    floor: float
    pairs: int
    slack: float = 0.05

    @property
    def constant(self):
        return math.exp(self.intercept)

    @property
    def holds(self):
        return self.slope >= self.floor - self.slack


@dataclass(frozen=True)
class VelocityReport:
    g0: complex
    g_prime: complex
    speed: float
    error: float

    @property
    def holds(self):
        return self.speed <= 2.0 + self.error


@dataclass
class QuotientCheck:
    pairs: np.ndarray
    lhs: np.ndarray
    rhs: np.ndarray
    slack: np.ndarray

    @property
    def worst_margin(self):
        return float(np.min(self.rhs + self.slack - self.lhs))

    @property
    def holds(self):
        return self.worst_margin >= 0.0
