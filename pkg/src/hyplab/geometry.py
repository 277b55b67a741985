"""Closed-form geometry of the Poincare disk.

Interior points are complex numbers with modulus < 1, boundary directions are
angles in [0, 2pi).  Isometries are stored as real SL(2, R) matrices acting on
the upper half-plane and conjugated to the disk by the Cayley map
z -> (z - i) / (z + i).  All functions accept numpy arrays where that makes
sense.
"""
from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np

from .errors import CoincidentPoints, DegenerateBoundaryPair

TWO_PI = 2.0 * np.pi
EPS_BOUNDARY = 1e-12
SHADOW_TOL = 1e-10


def normalize_angle(theta):
    out = np.mod(theta, TWO_PI)
    # mod can round up to exactly 2pi for tiny negative inputs
    out = np.where(out >= TWO_PI, 0.0, out)
    return float(out) if np.ndim(out) == 0 else out


def as_disk_point(p) -> complex:
    z = complex(p[0], p[1]) if isinstance(p, (tuple, list)) else complex(p)
    if abs(z) >= 1.0 - EPS_BOUNDARY:
        raise ValueError(f"point {z} is not interior to the disk")
    return z


def boundary_point(theta):
    return np.exp(1j * np.asarray(theta, dtype=float))


@dataclass(frozen=True)
class BoundaryDirection:
    angle: float

    def __post_init__(self):
        object.__setattr__(self, "angle", normalize_angle(float(self.angle)))

    @property
    def z(self) -> complex:
        return complex(np.exp(1j * self.angle))


@dataclass(frozen=True)
class Arc:
    """Closed arc of boundary directions within half_width of center."""

    center: float
    half_width: float

    def __post_init__(self):
        if not 0.0 < self.half_width <= np.pi:
            raise ValueError("half_width must lie in (0, pi]")
        object.__setattr__(self, "center", normalize_angle(float(self.center)))

    @property
    def start(self) -> float:
        return normalize_angle(self.center - self.half_width)

    @property
    def is_full(self) -> bool:
        return self.half_width >= np.pi

    def contains(self, theta):
        diff = np.abs(angle_diff(theta, self.center))
        return diff <= self.half_width

    def intersects(self, other: "Arc") -> bool:
        return bool(np.abs(angle_diff(self.center, other.center)) <= self.half_width + other.half_width)

    def intervals(self):
        """The arc as one or two [lo, hi) intervals inside [0, 2pi)."""
        if self.is_full:
            return [(0.0, TWO_PI)]
        lo = self.center - self.half_width
        hi = self.center + self.half_width
        if lo < 0:
            return [(lo + TWO_PI, TWO_PI), (0.0, hi)]
        if hi > TWO_PI:
            return [(lo, TWO_PI), (0.0, hi - TWO_PI)]
        return [(lo, hi)]


def angle_diff(a, b):
    """Signed difference a - b wrapped to [-pi, pi)."""
    return np.mod(np.asarray(a) - np.asarray(b) + np.pi, TWO_PI) - np.pi


@dataclass(frozen=True)
class MoebiusMap:
    """Orientation-preserving isometry, stored as a half-plane SL(2, R) matrix."""

    m: tuple = field(default=(1.0, 0.0, 0.0, 1.0))

    def __post_init__(self):
        a, b, c, d = (float(t) for t in self.m)
        det = a * d - b * c
        if det <= 0:
            raise ValueError("matrix must have positive determinant")
        s = np.sqrt(det)
        a, b, c, d = a / s, b / s, c / s, d / s
        # quotient by the sign: make the first nonzero entry positive
        lead = next(t for t in (a, b, c, d) if t != 0.0)
        if lead < 0:
            a, b, c, d = -a, -b, -c, -d
        object.__setattr__(self, "m", (a, b, c, d))

    @classmethod
    def from_su11(cls, alpha: complex, beta: complex) -> "MoebiusMap":
        a = alpha.real + beta.real
        d = alpha.real - beta.real
        b = alpha.imag - beta.imag
        c = -alpha.imag - beta.imag
        return cls((a, b, c, d))

    def su11(self) -> tuple[complex, complex]:
        a, b, c, d = self.m
        return complex(a + d, b - c) / 2.0, complex(a - d, -(b + c)) / 2.0

    def __matmul__(self, other: "MoebiusMap") -> "MoebiusMap":
        a, b, c, d = self.m
        e, f, g, h = other.m
        return MoebiusMap((a * e + b * g, a * f + b * h, c * e + d * g, c * f + d * h))

    def inverse(self) -> "MoebiusMap":
        a, b, c, d = self.m
        return MoebiusMap((d, -b, -c, a))

    def det(self) -> float:
        a, b, c, d = self.m
        return a * d - b * c

    def apply(self, z):
        return apply_to_disk(np.asarray(self.m), z)

    def apply_angle(self, theta):
        return apply_to_angle(np.asarray(self.m), theta)

    def translation_length(self) -> float:
        """2 log of the spectral radius; zero for elliptic and parabolic maps."""
        a, _, _, d = self.m
        tr = abs(a + d)
        if tr <= 2.0:
            return 0.0
        return float(2.0 * np.arccosh(tr / 2.0))

    def attracting_angle(self) -> float:
        """Angle of the attracting fixed point of a hyperbolic map."""
        if self.translation_length() == 0.0:
            raise ValueError("map is not hyperbolic")
        al, be = self.su11()
        roots = np.roots([np.conj(be), np.conj(al) - al, -be])
        z = max(roots, key=lambda r: abs(np.conj(be) * r + np.conj(al)))
        return float(normalize_angle(np.angle(z)))


IDENTITY = MoebiusMap()


def rotation(theta: float) -> MoebiusMap:
    """Rotation of the disk about 0 by theta."""
    return MoebiusMap.from_su11(complex(np.exp(0.5j * theta)), 0j)


def translation_to(p) -> MoebiusMap:
    """The transvection along the diameter through p sending 0 to p."""
    z = as_disk_point(p)
    s = 1.0 / np.sqrt(1.0 - abs(z) ** 2)
    return MoebiusMap.from_su11(complex(s), s * z)


def axial_translation(length: float, angle: float) -> MoebiusMap:
    """Translation by `length` along the diameter, toward the direction `angle`."""
    ch, sh = np.cosh(length / 2.0), np.sinh(length / 2.0)
    return MoebiusMap.from_su11(complex(ch), sh * complex(np.exp(1j * angle)))


def su11_coeffs(mats: np.ndarray) -> tuple[np.ndarray, np.ndarray]:
    """Vectorized (alpha, beta) for an array of half-plane matrices of shape (..., 4)."""
    a, b, c, d = (mats[..., k] for k in range(4))
    return (a + d + 1j * (b - c)) / 2.0, (a - d - 1j * (b + c)) / 2.0


def apply_to_disk(mats: np.ndarray, z):
    al, be = su11_coeffs(np.asarray(mats, dtype=float))
    z = np.asarray(z, dtype=complex)
    return (al * z + be) / (np.conj(be) * z + np.conj(al))


def apply_to_angle(mats: np.ndarray, theta):
    w = apply_to_disk(mats, boundary_point(theta))
    return normalize_angle(np.angle(w))


def mobius_apply(g: MoebiusMap, p):
    """g.p for an interior point (complex) or a BoundaryDirection."""
    if isinstance(p, BoundaryDirection):
        return BoundaryDirection(float(g.apply_angle(p.angle)))
    return complex(g.apply(as_disk_point(p)))


def one_minus_r2(z):
    z = np.asarray(z, dtype=complex)
    r = np.abs(z)
    return (1.0 - r) * (1.0 + r)


def hyp_dist(p, q):
    p = np.asarray(p, dtype=complex)
    q = np.asarray(q, dtype=complex)
    # sinh(d/2) form: arccosh(1 + tiny) loses everything for nearby points
    return 2.0 * np.arcsinh(np.abs(p - q) / np.sqrt(one_minus_r2(p) * one_minus_r2(q)))


def _busemann0(theta, y):
    """beta_v(0, y) = log((1 - |y|^2) / |y - v|^2)."""
    v = boundary_point(theta)
    y = np.asarray(y, dtype=complex)
    return np.log(one_minus_r2(y)) - 2.0 * np.log(np.abs(y - v))


def busemann(v, x, y):
    """Horospherical distance beta_v(x, y) for boundary angle v."""
    v = v.angle if isinstance(v, BoundaryDirection) else v
    return _busemann0(v, y) - _busemann0(v, x)


def _gromov_boundary0(v, w):
    chord = np.abs(boundary_point(v) - boundary_point(w))
    if np.any(chord == 0.0):
        raise DegenerateBoundaryPair("Gromov product of a boundary point with itself is infinite")
    return -np.log(chord / 2.0)


def gromov_product(a, b, x):
    """(a, b)_x where a, b are interior points or BoundaryDirection instances."""
    x = as_disk_point(x)
    a_bd = isinstance(a, BoundaryDirection)
    b_bd = isinstance(b, BoundaryDirection)
    if a_bd and b_bd:
        base = _gromov_boundary0(a.angle, b.angle)
        return float(base - 0.5 * (_busemann0(a.angle, x) + _busemann0(b.angle, x)))
    if a_bd or b_bd:
        v, y = (a, as_disk_point(b)) if a_bd else (b, as_disk_point(a))
        return float(0.5 * (busemann(v.angle, x, y) + hyp_dist(x, y)))
    a, b = as_disk_point(a), as_disk_point(b)
    return float(0.5 * (hyp_dist(x, a) + hyp_dist(x, b) - hyp_dist(a, b)))


def visual_dist(v, w, x=0j):
    """d_x(v, w) = exp(-(v, w)_x) for boundary angles (vectorized, x included)."""
    if isinstance(x, (tuple, list)) or np.ndim(x) == 0:
        x = as_disk_point(x)
    else:
        x = np.asarray(x, dtype=complex)
    v = np.asarray(v, dtype=float)
    w = np.asarray(w, dtype=float)
    chord = np.abs(boundary_point(v) - boundary_point(w))
    scale = np.exp(0.5 * (_busemann0(v, x) + _busemann0(w, x)))
    return chord / 2.0 * scale


def conformal_factor(g: MoebiusMap, v, x=0j):
    """Metric derivative of g at v on (boundary, d_x): exp(beta_v(x, g^-1 x))."""
    x = as_disk_point(x)
    return np.exp(busemann(v, x, g.inverse().apply(x)))


def ray_distance(y: complex, phi):
    """Distance from y to the geodesic ray leaving 0 in direction phi."""
    dy = hyp_dist(0j, y)
    theta = np.abs(angle_diff(phi, np.angle(y)))
    near = np.arcsinh(np.sinh(dy) * np.sin(np.minimum(theta, np.pi / 2)))
    return np.where(theta >= np.pi / 2, dy, near)


def shadow_arc(x, y, R: float, tol: float = SHADOW_TOL) -> Arc:
    """Directions v such that the ray from x toward v meets the closed ball B(y, R)."""
    if R <= 0:
        raise ValueError("R must be positive")
    x, y = as_disk_point(x), as_disk_point(y)
    if hyp_dist(x, y) < 1e-9:
        raise CoincidentPoints("shadow from a point of itself is undefined")
    to_x = translation_to(x)
    yc = complex(to_x.inverse().apply(y))
    psi = float(np.angle(yc))
    if hyp_dist(0j, yc) <= R:
        return Arc(psi, np.pi)
    lo, hi = 0.0, np.pi / 2
    while hi - lo > tol:
        mid = 0.5 * (lo + hi)
        if ray_distance(yc, psi + mid) <= R:
            lo = mid
        else:
            hi = mid
    width = 0.5 * (lo + hi)
    if x == 0:
        return Arc(psi, width)
    start = float(to_x.apply_angle(psi - width))
    end = float(to_x.apply_angle(psi + width))
    half = 0.5 * np.mod(end - start, TWO_PI)
    return Arc(start + half, half)


@dataclass(frozen=True)
class GeometryContext:
    delta: float = float(np.log(2.0))
    shadow_radius: float = 2.0


def four_point_defect(points, t) -> np.ndarray:
    """min((a,c)_t, (c,b)_t) - (a,b)_t for quadruples of interior points.

    `points` is a (n, 3) complex array of (a, b, c); the returned violation is
    what delta must dominate.
    """
    a, b, c = points[:, 0], points[:, 1], points[:, 2]
    t = np.asarray(t, dtype=complex)

    def gp(p, q):
        return 0.5 * (hyp_dist(t, p) + hyp_dist(t, q) - hyp_dist(p, q))

    return np.minimum(gp(a, c), gp(c, b)) - gp(a, b)


def measure_delta(rng: np.random.Generator, samples: int = 10_000, radius: float = 8.0) -> float:
    """Empirical four-point constant from random interior quadruples."""
    pts = random_disk_points(rng, (samples, 3), radius)
    t = random_disk_points(rng, samples, radius)
    return float(max(0.0, four_point_defect(pts, t).max()))


def random_disk_points(rng: np.random.Generator, shape, radius: float = 5.0):
    """Points with hyperbolic distance to 0 uniform in [0, radius)."""
    r = np.tanh(rng.uniform(0.0, radius, shape) / 2.0)
    return r * np.exp(1j * rng.uniform(0.0, TWO_PI, shape))


def random_sl2(rng: np.random.Generator, n: int, spread: float = 1.0) -> np.ndarray:
    """n random half-plane matrices with det 1, shape (n, 4)."""
    a = np.exp(rng.uniform(-spread, spread, n))
    b = rng.uniform(-spread, spread, n)
    c = rng.uniform(-spread, spread, n)
    return np.stack([a, b, c, (1.0 + b * c) / a], axis=1)


def identity_suite(rng: np.random.Generator, cases: int = 10_000, radius: float = 6.0) -> dict:
    """Largest violation of the Busemann and visual-metric identities on random cases."""
    x, y, z = (random_disk_points(rng, cases, radius) for _ in range(3))
    v = rng.uniform(0.0, TWO_PI, cases)
    w = rng.uniform(0.0, TWO_PI, cases)
    b_xy = busemann(v, x, y)
    out = {
        "cocycle": np.abs(busemann(v, x, z) - b_xy - busemann(v, y, z)).max(),
        "antisymmetry": np.abs(b_xy + busemann(v, y, x)).max(),
        "busemann_bound": np.maximum(np.abs(b_xy) - hyp_dist(x, y), 0.0).max(),
    }
    g = random_sl2(rng, cases)
    gx, gy = apply_to_disk(g, x), apply_to_disk(g, y)
    out["equivariance"] = max(
        np.abs(busemann(apply_to_angle(g, v), gx, gy) - b_xy).max(),
        np.abs(hyp_dist(gx, gy) - hyp_dist(x, y)).max(),
    )
    # d_y through the isometry sending y to 0, against the comparison formula
    to_y = np.array([translation_to(p).inverse().m for p in y])
    direct = visual_dist(apply_to_angle(to_y, v), apply_to_angle(to_y, w))
    compared = np.exp(0.5 * (b_xy + busemann(w, x, y))) * visual_dist(v, w, x)
    out["visual_comparison"] = (np.abs(direct - compared) / direct).max()
    return {k: float(val) for k, val in out.items()}
