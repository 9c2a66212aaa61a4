# models/germ.py
import json
import math
import os
from dataclasses import dataclass, field

import numpy as np
from numpy.polynomial import polynomial as P

from utils.errors import ConfigurationError, DomainError, NotParabolicError

# ---------------- Config ----------------
MULTIPLIER_TOL = 1e-12
DEFAULT_R0 = 0.4


def principal_root(w, n):
    """w^(-1/n) on the principal branch; R_tau keeps arg w in (-pi/2, pi/2)."""
    w = np.asarray(w, dtype=complex)
    return np.exp(-np.log(w) / n)


# ---------------- Germs ----------------
@dataclass
class ParabolicGerm:
    """f(z) = c_1 z + c_2 z^2 + ... + c_N z^N with c_1 a root of unity of order ``period``.

    For period 1 the germ reads z(1 + a z^n + eps(z)) with a = c_{n+1} the first
    nonzero higher coefficient.
    """

    coefficients: np.ndarray
    period: int = 1
    r0: float = DEFAULT_R0
    tail_bound: float = 0.0

    def __post_init__(self):
        self.coefficients = np.asarray(self.coefficients, dtype=complex).ravel()
        if self.coefficients.size < 2:
            raise NotParabolicError("a germ needs a linear and at least one higher coefficient")
        if self.period < 1:
            raise ConfigurationError(f"period must be a positive integer, got {self.period}")
        if not 0 < self.r0 < 1:
            raise ConfigurationError(f"convergence radius must lie in (0, 1), got {self.r0}")
        multiplier = self.coefficients[0]
        if abs(abs(multiplier) - 1.0) > MULTIPLIER_TOL or abs(multiplier**self.period - 1.0) > MULTIPLIER_TOL:
            raise NotParabolicError(f"multiplier {multiplier} is not a root of unity of order {self.period}")

    @property
    def multiplier(self):
        return complex(self.coefficients[0])

    @property
    def order(self):
        return self.coefficients.size

    @property
    def normalized(self):
        return abs(self.multiplier - 1.0) <= MULTIPLIER_TOL

    def _leading(self):
        if not self.normalized:
            raise NotParabolicError(f"multiplier {self.multiplier} != 1; reduce with germ_power first")
        higher = np.flatnonzero(np.abs(self.coefficients[1:]) > 0)
        if higher.size == 0:
            raise NotParabolicError("a = 0: the germ is the identity to the stored order")
        return int(higher[0]) + 1

    @property
    def n(self):
        return self._leading()

    @property
    def a(self):
        return complex(self.coefficients[self._leading()])

    def polynomial(self):
        """Coefficients with the constant term, lowest degree first."""
        return np.concatenate([[0j], self.coefficients])

    def __call__(self, z):
        return P.polyval(np.asarray(z, dtype=complex), self.polynomial())

    def to_json(self):
        return {
            "coefficients": [[c.real, c.imag] for c in self.coefficients],
            "period": self.period,
            "r0": self.r0,
        }

    @classmethod
    def from_json(cls, data):
        coefficients = [complex(*c) if isinstance(c, (list, tuple)) else complex(c) for c in data["coefficients"]]
        return cls(coefficients, period=int(data.get("period", 1)), r0=float(data.get("r0", DEFAULT_R0)))

    @classmethod
    def load(cls, path):
        if not os.path.exists(path):
            raise ConfigurationError(f"germ file not found: {path}")
        with open(path) as f:
            return cls.from_json(json.load(f))


def quadratic_germ():
    """f(z) = z + z^2."""
    return ParabolicGerm([1.0, 1.0])


# ---------------- Petal chart ----------------
@dataclass
class PetalChart:
    """phi(z) = d/z^n with d = -1/(na); F(w) = w + 1 + eta(w^(-1/n)) on Re w > tau."""

    germ: ParabolicGerm
    d: complex
    eta_coefficients: np.ndarray
    r: float
    tau: float
    tail_bound: float = 0.0
    attracting_directions: tuple = ()
    repelling_directions: tuple = ()

    def __post_init__(self):
        self.eta_coefficients = np.asarray(self.eta_coefficients, dtype=complex).ravel()
        self._eta = np.concatenate([[0j], self.eta_coefficients])
        self._eta_prime = P.polyder(self._eta)

    @property
    def n(self):
        return self.germ.n

    def eta(self, xi):
        return P.polyval(np.asarray(xi, dtype=complex), self._eta)

    def eta_prime(self, xi):
        return P.polyval(np.asarray(xi, dtype=complex), self._eta_prime)

    def F(self, w):
        return np.asarray(w, dtype=complex) + 1.0 + self.eta(principal_root(w, self.n))

    def F_prime(self, w):
        w = np.asarray(w, dtype=complex)
        xi = principal_root(w, self.n)
        return 1.0 - self.eta_prime(xi) * xi / (self.n * w)

    def phi(self, z):
        return self.d / np.asarray(z, dtype=complex) ** self.n

    def phi_inverse(self, w):
        return np.exp(np.log(complex(self.d)) / self.n) * principal_root(w, self.n)

    def conjugated(self, w):
        """phi o f o phi^-1 straight from the germ polynomial."""
        return self.phi(self.germ(self.phi_inverse(w)))

    def metadata(self):
        return {
            "d": [self.d.real, self.d.imag],
            "n": self.n,
            "r": self.r,
            "tau": self.tau,
            "series_length": int(self.eta_coefficients.size),
            "tail_bound": self.tail_bound,
            "attracting_directions": list(self.attracting_directions),
            "repelling_directions": list(self.repelling_directions),
        }


# ---------------- Boundary motion ----------------
@dataclass
class BoundaryMotion:
    """H_x(c, w) on the vertical lines Re w = x (fixed) and Re w = x + 1 (moved by eta)."""

    chart: PetalChart
    x: float
    c_star: float
    K: float
    edge_tol: float = 1e-9

    @property
    def scale(self):
        return self.chart.r * (self.x - 1.0) ** (1.0 / self.chart.n)

    def moved(self, c, w):
        """w + eta(c r xi (x-1)^(1/n)) with xi = (w-1)^(-1/n)."""
        w = np.asarray(w, dtype=complex)
        return w + self.chart.eta(c * self.scale * principal_root(w - 1.0, self.chart.n))

    def evaluate(self, c, w):
        c = complex(c)
        if abs(c) >= 1.0:
            raise DomainError(f"parameter {c} is outside the unit disk")
        w = np.asarray(w, dtype=complex)
        left = np.abs(w.real - self.x) <= self.edge_tol
        right = np.abs(w.real - self.x - 1.0) <= self.edge_tol
        if not np.all(left | right):
            raise DomainError(f"points off the lines Re w = {self.x} and Re w = {self.x + 1}")
        return np.where(right, self.moved(c, w), w)

    def edges(self, heights):
        heights = np.asarray(heights, dtype=float).ravel()
        return self.x + 1j * heights, self.x + 1.0 + 1j * heights


# ---------------- Conjugacies ----------------
@dataclass
class StripConjugacy:
    """psi_m: seed map on the strip A_m = [tau+m, tau+m+1], spread to the other strips by F."""

    chart: PetalChart
    m: int
    x_m: float
    boundary: BoundaryMotion
    mode: str
    seed: object
    invert: object
    audit: object = None

    @property
    def K_m(self):
        return self.audit.dilatation if self.audit is not None else math.nan

    @property
    def beltrami_sup(self):
        return self.audit.sup_norm if self.audit is not None else math.nan

    @property
    def left_edge(self):
        return self.chart.tau + self.m

    def strip_index(self, w):
        """k with w in the k-th strip right of the seed (negative on the left)."""
        return np.floor(np.asarray(w, dtype=complex).real - self.left_edge).astype(int)

    def __call__(self, w):
        w = np.asarray(w, dtype=complex)
        flat = w.ravel()
        k = self.strip_index(flat)
        out = self.seed(flat - k)
        for step in range(1, int(max(k.max(initial=0), 0)) + 1):
            ahead = k >= step
            out[ahead] = self.chart.F(out[ahead])
        for step in range(1, int(max(-k.min(initial=0), 0)) + 1):
            behind = k <= -step
            out[behind] = self.invert(out[behind])
        return out.reshape(w.shape)


@dataclass
class FatouCoordinate:
    """Last strip conjugacy psi_m on a test grid, with the Cauchy-difference history."""

    psi: StripConjugacy
    grid: object
    values: np.ndarray
    conjugacy_residual: float
    beltrami_sup: float
    history: list = field(default_factory=list)
    converged: bool = False

    @property
    def m(self):
        return self.psi.m


@dataclass
class OrbitReport:
    orbit: np.ndarray
    ratio: float
    min_step: float
    max_step: float
    clearance: float

    @property
    def steps_bounded(self):
        return self.min_step >= 0.5 and self.max_step <= 1.5
