# models/field.py
import json
import os
from dataclasses import dataclass, field

import numpy as np
from scipy.interpolate import RegularGridInterpolator

from utils.errors import ConfigurationError, DomainError, ShapeError


# ---------------- Grids ----------------
@dataclass(frozen=True)
class GridSpec:
    """Uniform square grid: node (i, j) sits at origin + spacing * (i + 1j * j)."""

    origin: complex
    spacing: float
    nx: int
    ny: int

    def __post_init__(self):
        if self.spacing <= 0 or self.nx < 1 or self.ny < 1:
            raise ConfigurationError(f"invalid grid {self}")

    @classmethod
    def centered(cls, half_width, n, center=0j):
        """n x n cell centres tiling the square of the given half width."""
        spacing = 2.0 * half_width / n
        origin = complex(center) - half_width * (1 + 1j) + 0.5 * spacing * (1 + 1j)
        return cls(origin, spacing, n, n)

    @classmethod
    def spanning(cls, x0, x1, y0, y1, nx, ny):
        """Nodes from (x0, y0) to (x1, y1) inclusive; both axes must share one spacing."""
        hx = (x1 - x0) / (nx - 1)
        hy = (y1 - y0) / (ny - 1)
        if not np.isclose(hx, hy, rtol=1e-9):
            raise ConfigurationError(f"grid spacings differ: {hx} vs {hy}")
        return cls(complex(x0, y0), hx, nx, ny)

    @property
    def shape(self):
        return (self.nx, self.ny)

    @property
    def xs(self):
        return self.origin.real + self.spacing * np.arange(self.nx)

    @property
    def ys(self):
        return self.origin.imag + self.spacing * np.arange(self.ny)

    def points(self):
        return self.xs[:, None] + 1j * self.ys[None, :]

    def interior(self):
        return GridSpec(self.origin + self.spacing * (1 + 1j), self.spacing, self.nx - 2, self.ny - 2)

    def contains(self, z, margin=0.0):
        z = np.asarray(z)
        return (
            (z.real >= self.xs[0] + margin) & (z.real <= self.xs[-1] - margin)
            & (z.imag >= self.ys[0] + margin) & (z.imag <= self.ys[-1] - margin)
        )

    def to_json(self):
        return {
            "origin": [self.origin.real, self.origin.imag],
            "spacing": self.spacing,
            "nx": self.nx,
            "ny": self.ny,
        }


def disk_coverage(grid, radius=1.0, center=0j, supersample=8):
    """Fraction of each cell (side = spacing, centred on a node) inside the disk."""
    offsets = ((np.arange(supersample) + 0.5) / supersample - 0.5) * grid.spacing
    sub = offsets[:, None] + 1j * offsets[None, :]
    pts = grid.points()
    coverage = np.zeros(grid.shape)
    for w in sub.ravel():
        coverage += np.abs(pts + w - center) < radius
    return coverage / sub.size


# ---------------- Densities ----------------
@dataclass(frozen=True)
class DensityValue:
    density: float
    quadrature_error: float = 0.0

    def __post_init__(self):
        if self.density < 0 or self.quadrature_error < 0:
            raise ValueError(f"invalid density value {self}")

    def __float__(self):
        return float(self.density)


@dataclass(frozen=True)
class LizhongMargin:
    """agard density minus the punctured-disk comparison density at one point."""

    z: complex
    margin: float
    quadrature_error: float
    agard: float
    comparison: float

    @property
    def holds(self):
        return self.margin >= -self.quadrature_error


# ---------------- Cauchy transform data ----------------
@dataclass
class SampledField:
    """Compactly supported function sampled at the cell centres of ``grid``."""

    grid: GridSpec
    values: np.ndarray
    support_radius: float

    def __post_init__(self):
        self.values = np.asarray(self.values, dtype=complex)
        if self.values.shape != self.grid.shape:
            raise ShapeError(f"values {self.values.shape} do not match grid {self.grid.shape}")
        if not np.all(np.isfinite(self.values)):
            raise ConfigurationError("field values must be finite")
        outside = np.abs(self.grid.points()) > self.support_radius
        if np.any(self.values[outside] != 0):
            raise ConfigurationError(
                f"field has nonzero samples outside its support radius {self.support_radius}"
            )

    @classmethod
    def from_function(cls, fn, half_width, n, support_radius, supersample=1):
        """Cell averages of ``fn`` over an n x n grid, zeroed outside ``support_radius``."""
        grid = GridSpec.centered(half_width, n)
        pts = grid.points()
        if supersample > 1:
            offsets = ((np.arange(supersample) + 0.5) / supersample - 0.5) * grid.spacing
            values = np.zeros(grid.shape, dtype=complex)
            for dx in offsets:
                for dy in offsets:
                    values += fn(pts + dx + 1j * dy)
            values /= supersample**2
        else:
            values = np.asarray(fn(pts), dtype=complex) * np.ones(grid.shape)
        values[np.abs(pts) > support_radius] = 0
        return cls(grid, values, support_radius)

    @property
    def sup_norm(self):
        return float(np.max(np.abs(self.values))) if self.values.size else 0.0

    def rescaled(self, factor):
        """The field g(c) = f(factor * c)."""
        grid = GridSpec(self.grid.origin / factor, self.grid.spacing / factor, self.grid.nx, self.grid.ny)
        return SampledField(grid, self.values.copy(), self.support_radius / factor)

    def sample(self, points):
        """Nearest-cell lookup; zero outside the grid."""
        points = np.asarray(points, dtype=complex)
        i = np.rint((points.real - self.grid.origin.real) / self.grid.spacing).astype(int)
        j = np.rint((points.imag - self.grid.origin.imag) / self.grid.spacing).astype(int)
        inside = (i >= 0) & (i < self.grid.nx) & (j >= 0) & (j < self.grid.ny)
        out = np.zeros(points.shape, dtype=complex)
        out[inside] = self.values[i[inside], j[inside]]
        return out

    def save(self, prefix):
        """Write ``<prefix>.json`` (header) and ``<prefix>.csv`` (re, im columns, row-major)."""
        header = dict(self.grid.to_json(), support_radius=self.support_radius)
        with open(prefix + ".json", "w") as f:
            json.dump(header, f, indent=2)
        block = np.column_stack([self.values.real.ravel(), self.values.imag.ravel()])
        np.savetxt(prefix + ".csv", block, delimiter=",", fmt="%.17g", header="re,im", comments="")
        return prefix + ".json", prefix + ".csv"

    @classmethod
    def load(cls, prefix):
        """Read a field written by ``save``; ``prefix`` may also name the ``.json`` header."""
        if prefix.endswith(".json"):
            prefix = prefix[: -len(".json")]
        if not os.path.exists(prefix + ".json"):
            raise ConfigurationError(f"missing field header {prefix}.json")
        with open(prefix + ".json") as f:
            header = json.load(f)
        grid = GridSpec(complex(*header["origin"]), header["spacing"], header["nx"], header["ny"])
        if not os.path.exists(prefix + ".csv"):
            raise ConfigurationError(f"missing field values {prefix}.csv")
        block = np.loadtxt(prefix + ".csv", delimiter=",", skiprows=1, ndmin=2)
        values = (block[:, 0] + 1j * block[:, 1]).reshape(grid.shape)
        return cls(grid, values, header["support_radius"])


@dataclass
class TransformResult:
    targets: np.ndarray
    values: np.ndarray
    spacing: float
    support_radius: float
    norm: float
    metadata: dict = field(default_factory=dict)

    def __post_init__(self):
        self.targets = np.asarray(self.targets, dtype=complex).ravel()
        self.values = np.asarray(self.values, dtype=complex).ravel()
        if self.values.size != self.targets.size:
            raise ShapeError("one value per target is required")

    def decay_violations(self, slack=1e-9):
        """Targets outside the support disk whose value breaks |Pf| <= ||f|| R^2 / dist."""
        dist = np.abs(self.targets) - self.support_radius
        outside = dist > 0
        bound = self.norm * self.support_radius**2 / np.where(outside, dist, 1.0)
        bad = outside & (np.abs(self.values) > bound * (1.0 + slack))
        return self.targets[bad]


@dataclass(frozen=True)
class ContinuityConstants:
    A_R: float
    B: float
    C: float
    C1: float
    C2: float
    C3: float
    p: float
    q: float
    R: float
    R0: float
    norm_f: float
    C3_error: float = 0.0
    C2_error: float = 0.0

    @property
    def holder_exponent(self):
        return 1.0 - 2.0 / self.p


# ---------------- Sampled maps and Beltrami data ----------------
@dataclass
class SampledMap:
    """Values of a map at the nodes of ``grid``; cubic interpolation in between."""

    grid: GridSpec
    values: np.ndarray
    _interp: tuple = field(default=None, init=False, repr=False)

    def __post_init__(self):
        self.values = np.asarray(self.values, dtype=complex)
        if self.values.shape != self.grid.shape:
            raise ShapeError(f"values {self.values.shape} do not match grid {self.grid.shape}")

    @classmethod
    def from_function(cls, fn, grid):
        return cls(grid, fn(grid.points()))

    def __call__(self, z):
        z = np.asarray(z, dtype=complex)
        if not np.all(self.grid.contains(z)):
            raise DomainError("evaluation point outside the sampled grid")
        if self._interp is None:
            method = "cubic" if min(self.grid.shape) >= 4 else "linear"
            axes = (self.grid.xs, self.grid.ys)
            self._interp = (
                RegularGridInterpolator(axes, self.values.real, method=method),
                RegularGridInterpolator(axes, self.values.imag, method=method),
            )
        pts = np.column_stack([z.real.ravel(), z.imag.ravel()])
        re, im = self._interp
        return (re(pts) + 1j * im(pts)).reshape(z.shape)


@dataclass
class BeltramiField:
    grid: GridSpec
    values: np.ndarray
    sup_norm: float
    flagged: int = 0

    @property
    def valid(self):
        return bool(self.sup_norm < 1.0)

    @property
    def dilatation(self):
        if not self.valid:
            return float("inf")
        return (1.0 + self.sup_norm) / (1.0 - self.sup_norm)


@dataclass(frozen=True)
class DilatationReport:
    c: complex
    K: float
    bound: float
    margin: float
    sup_norm: float


# ---------------- Unit balls ----------------
@dataclass
class BallPoint:
    """Element of the open unit ball of a sup-normed space of functions (or vectors)."""

    values: np.ndarray
    grid: GridSpec = None

    def __post_init__(self):
        self.values = np.asarray(self.values, dtype=complex)
        if self.grid is not None and self.values.shape != self.grid.shape:
            raise ShapeError(f"values {self.values.shape} do not match grid {self.grid.shape}")

    @classmethod
    def from_field(cls, field):
        return cls(field.values, field.grid)

    @classmethod
    def zero_like(cls, other):
        return cls(np.zeros_like(other.values), other.grid)

    @property
    def norm(self):
        finite = np.abs(self.values[np.isfinite(self.values)])
        return float(finite.max()) if finite.size else 0.0


@dataclass
class ChainDistance:
    """d_n(p, q) upper bound from chains of length 1..n; ``history[k-1]`` is d_k.

    ``raw[k-1]`` is what the optimiser found for length k alone; ``history`` is its
    running minimum, and ``monotone`` audits ``raw``.
    """

    n: int
    value: float
    history: list
    family: str = "geodesic"
    raw: list = field(default_factory=list)

    @property
    def d1(self):
        return self.history[0]

    @property
    def monotone(self):
        values = self.raw or self.history
        return all(b <= a + 1e-12 for a, b in zip(values, values[1:]))
