import math
from dataclasses import dataclass

import numpy as np

from utils.errors import DegenerateConfigurationError, DomainError

# ---------------- Config ----------------
COINCIDENCE_TOL = 1e-14
DETERMINANT_TOL = 1e-14
CHART_SWAP_MODULUS = 1e8


# ---------------- Sphere points ----------------
@dataclass(frozen=True)
class SpherePoint:
    """A point of the extended plane; ``is_infinite`` marks the single point at infinity."""

    value: complex = 0j
    is_infinite: bool = False

    def __post_init__(self):
        if self.is_infinite:
            object.__setattr__(self, "value", 0j)
        elif not (math.isfinite(self.value.real) and math.isfinite(self.value.imag)):
            raise DomainError(f"finite sphere point needs finite parts, got {self.value!r}")

    def __repr__(self):
        return "SpherePoint(inf)" if self.is_infinite else f"SpherePoint({self.value!r})"

    def to_json(self):
        return "inf" if self.is_infinite else [self.value.real, self.value.imag]


INFINITY = SpherePoint(0j, True)


def as_sphere_point(x):
    """Coerce numbers, ``"inf"``, ``math.inf`` or ``[re, im]`` pairs into a SpherePoint."""
    if isinstance(x, SpherePoint):
        return x
    if isinstance(x, str):
        if x.strip().lower() in ("inf", "infinity", "oo"):
            return INFINITY
        return SpherePoint(complex(x.replace(" ", "")))
    if isinstance(x, (list, tuple)) and len(x) == 2:
        return SpherePoint(complex(float(x[0]), float(x[1])))
    z = complex(x)
    if math.isinf(z.real) or math.isinf(z.imag):
        return INFINITY
    return SpherePoint(z)


# ---------------- Metrics ----------------
def spherical_distance(z, w):
    """Chordal distance 2|z-w| / (sqrt(1+|z|^2) sqrt(1+|w|^2)), with 2/sqrt(1+|z|^2) to infinity."""
    z, w = as_sphere_point(z), as_sphere_point(w)
    if z.is_infinite and w.is_infinite:
        return 0.0
    if z.is_infinite or w.is_infinite:
        finite = w if z.is_infinite else z
        return 2.0 / math.hypot(1.0, abs(finite.value))
    a, b = z.value, w.value
    # z -> 1/z is an isometry of the chordal metric
    if abs(a) > 1.0 and abs(b) > 1.0:
        a, b = 1.0 / a, 1.0 / b
    return 2.0 * abs(a - b) / (math.hypot(1.0, abs(a)) * math.hypot(1.0, abs(b)))


def chordal_embedding(values):
    """Lift complex values (non-finite entries mean infinity) to the unit sphere in R^3.

    Euclidean distance between two lifts equals their ``spherical_distance``.
    """
    values = np.asarray(values, dtype=complex).ravel()
    out = np.zeros((values.size, 3))
    finite = np.isfinite(values)
    v = values[finite]
    mod2 = np.abs(v) ** 2
    out[finite, 0] = 2.0 * v.real / (1.0 + mod2)
    out[finite, 1] = 2.0 * v.imag / (1.0 + mod2)
    out[finite, 2] = (mod2 - 1.0) / (mod2 + 1.0)
    out[~finite, 2] = 1.0
    return out


def disk_distance(a, b):
    """Hyperbolic distance on the unit disk with density 2/(1-|z|^2)."""
    a, b = complex(a), complex(b)
    if abs(a) >= 1.0 or abs(b) >= 1.0:
        raise DomainError(f"disk distance needs points inside the unit disk, got {a}, {b}")
    return 2.0 * math.atanh(abs((a - b) / (1.0 - a.conjugate() * b)))


def _check_distinct(points):
    for i in range(len(points)):
        for j in range(i + 1, len(points)):
            if spherical_distance(points[i], points[j]) <= COINCIDENCE_TOL:
                raise DegenerateConfigurationError(
                    f"points {i} and {j} coincide: {points[i]!r}, {points[j]!r}"
                )


# ---------------- Cross ratio ----------------
def cross_ratio(z1, z2, z3, z4):
    """((z1-z3)/(z1-z4)) * ((z2-z4)/(z2-z3)); factors containing an infinite point are dropped."""
    pts = [as_sphere_point(p) for p in (z1, z2, z3, z4)]
    _check_distinct(pts)
    a, b, c, d = (p.value for p in pts)
    if pts[3].is_infinite:
        return (a - c) / (b - c)
    if pts[2].is_infinite:
        return (b - d) / (a - d)
    if pts[1].is_infinite:
        return (a - c) / (a - d)
    if pts[0].is_infinite:
        return (b - d) / (b - c)
    return ((a - c) / (a - d)) * ((b - d) / (b - c))


# ---------------- Mobius maps ----------------
@dataclass(frozen=True)
class MobiusMap:
    """z -> (a z + b) / (c z + d), kept normalised so that ad - bc = 1."""

    a: complex
    b: complex
    c: complex
    d: complex

    def __post_init__(self):
        det = self.a * self.d - self.b * self.c
        if abs(det) <= DETERMINANT_TOL:
            raise DegenerateConfigurationError(f"Mobius determinant {det} is degenerate")
        s = np.sqrt(complex(det))
        for name in ("a", "b", "c", "d"):
            object.__setattr__(self, name, complex(getattr(self, name)) / s)

    @classmethod
    def identity(cls):
        return cls(1, 0, 0, 1)

    @property
    def determinant(self):
        return self.a * self.d - self.b * self.c

    def __call__(self, z):
        z = as_sphere_point(z)
        a, b, c, d = self.a, self.b, self.c, self.d
        if z.is_infinite:
            return INFINITY if c == 0 else SpherePoint(a / c)
        if abs(z.value) > CHART_SWAP_MODULUS:
            w = 1.0 / z.value
            num, den = a + b * w, c + d * w
        else:
            num, den = a * z.value + b, c * z.value + d
        # rounding can leave a tiny denominator at the pole
        if abs(den) <= COINCIDENCE_TOL * abs(num):
            return INFINITY
        return SpherePoint(num / den)

    def derivative(self, z):
        z = complex(z)
        return 1.0 / (self.c * z + self.d) ** 2

    def compose(self, other):
        """self o other."""
        return MobiusMap(
            self.a * other.a + self.b * other.c,
            self.a * other.b + self.b * other.d,
            self.c * other.a + self.d * other.c,
            self.c * other.b + self.d * other.d,
        )

    def inverse(self):
        return MobiusMap(self.d, -self.b, -self.c, self.a)

    def is_identity(self, tol=1e-12):
        m = np.array([self.a, self.b, self.c, self.d])
        return bool(
            np.allclose(m, [1, 0, 0, 1], atol=tol) or np.allclose(m, [-1, 0, 0, -1], atol=tol)
        )


def mobius_through(p1, p2, p3):
    """The Mobius map sending p1 -> 0, p2 -> 1, p3 -> infinity."""
    p1, p2, p3 = (as_sphere_point(p) for p in (p1, p2, p3))
    _check_distinct([p1, p2, p3])
    u, v, w = p1.value, p2.value, p3.value
    if p1.is_infinite:
        return MobiusMap(0, v - w, 1, -w)
    if p2.is_infinite:
        return MobiusMap(1, -u, 1, -w)
    if p3.is_infinite:
        return MobiusMap(1, -u, 0, v - u)
    return MobiusMap(v - w, -u * (v - w), v - u, -w * (v - u))


# ---------------- Anharmonic group ----------------
_ANHARMONIC = (
    (lambda z: z, lambda z: 1.0),
    (lambda z: 1.0 - z, lambda z: -1.0),
    (lambda z: 1.0 / z, lambda z: -1.0 / z**2),
    (lambda z: 1.0 / (1.0 - z), lambda z: 1.0 / (1.0 - z) ** 2),
    (lambda z: z / (z - 1.0), lambda z: -1.0 / (z - 1.0) ** 2),
    (lambda z: (z - 1.0) / z, lambda z: 1.0 / z**2),
)


def anharmonic_reduction(z):
    """Map z into {|w| <= 1, |w| <= |w-1|} by the group permuting 0, 1, infinity.

    Returns ``(w, |T'(z)|)``; the image of smallest modulus lies in that region.
    """
    z = complex(z)
    if abs(z) <= COINCIDENCE_TOL or abs(z - 1.0) <= COINCIDENCE_TOL:
        raise DomainError(f"{z} is a puncture of the thrice-punctured sphere")
    best = None
    for transform, derivative in _ANHARMONIC:
        w = transform(z)
        if best is None or abs(w) < abs(best[0]) - 1e-15:
            best = (w, abs(derivative(z)))
    return best
