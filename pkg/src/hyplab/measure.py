"""Binned boundary measures: Patterson construction and its audits."""
from __future__ import annotations

import math
from dataclasses import dataclass, field

import numpy as np

from . import geometry as geo
from ._parallel import ordered_map
from .errors import EmptyCatalog, ShadowTooNarrow
from .group import GroupModel, OrbitCatalog, enumerate_orbit

CHUNK = 1 << 16
DEFAULT_S_OFFSET = 0.05
EDGE_GUARD = 1e-7


@dataclass(frozen=True)
class BoundaryPartition:
    bin_count: int = 4096

    def __post_init__(self):
        n = int(self.bin_count)
        if n < 256 or n & (n - 1):
            raise ValueError("bin_count must be a power of two >= 256")

    @property
    def width(self) -> float:
        return geo.TWO_PI / self.bin_count

    @property
    def centers(self) -> np.ndarray:
        return (np.arange(self.bin_count) + 0.5) * self.width

    @property
    def edges(self) -> np.ndarray:
        return np.arange(self.bin_count + 1) * self.width

    def bin_of(self, theta) -> np.ndarray:
        # angles within EDGE_GUARD bins below an edge belong to the bin above it,
        # so rounding noise cannot split points that sit exactly on an edge
        t = geo.normalize_angle(theta) / self.width + EDGE_GUARD
        return np.mod(np.floor(t).astype(np.int64), self.bin_count)

    def arc_bins(self, arc: geo.Arc) -> float:
        """Width of an arc measured in bins."""
        return 2.0 * arc.half_width / self.width


@dataclass(frozen=True, eq=False)
class BinnedMeasure:
    partition: BoundaryPartition
    masses: np.ndarray
    meta: dict = field(default_factory=dict)

    def __post_init__(self):
        m = np.asarray(self.masses, dtype=float)
        if m.shape != (self.partition.bin_count,):
            raise ValueError("masses do not match the partition")
        if np.any(m < 0):
            raise ValueError("masses must be nonnegative")
        object.__setattr__(self, "masses", m)

    @property
    def total(self) -> float:
        return float(self.masses.sum())

    def normalized(self) -> "BinnedMeasure":
        return BinnedMeasure(self.partition, self.masses / self.total, dict(self.meta))

    def integrate(self, values) -> float:
        return float(np.dot(np.asarray(values, dtype=float), self.masses))

    def _cumulative(self) -> np.ndarray:
        return np.concatenate([[0.0], np.cumsum(self.masses)])

    def interval_mass(self, lo, hi) -> np.ndarray:
        """Mass of [lo, hi) within [0, 2pi), partial bins prorated linearly."""
        cum = self._cumulative()
        return np.interp(hi, self.partition.edges, cum) - np.interp(lo, self.partition.edges, cum)

    def arc_mass(self, arc: geo.Arc) -> float:
        return float(sum(self.interval_mass(lo, hi) for lo, hi in arc.intervals()))

    def arcs_mass(self, centers, half_widths) -> np.ndarray:
        """Vectorized arc masses for arcs given by centers and half widths."""
        centers = np.asarray(centers, dtype=float)
        hw = np.minimum(np.asarray(half_widths, dtype=float), np.pi)
        lo = centers - hw
        hi = centers + hw
        cum = self._cumulative()
        edges = self.partition.edges
        total = cum[-1]

        def upto(t):
            # mass of [0, t) for t in [-2pi, 4pi), wrapping around the circle
            k = np.floor(t / geo.TWO_PI)
            return k * total + np.interp(t - k * geo.TWO_PI, edges, cum)

        return np.where(hw >= np.pi, total, upto(hi) - upto(lo))

    def tv_distance(self, other: "BinnedMeasure") -> float:
        """Total variation distance between the normalized measures."""
        return 0.5 * float(np.abs(self.masses / self.total - other.masses / other.total).sum())

    @property
    def support_bins(self) -> int:
        return int(np.count_nonzero(self.masses))


def radial_projection(points, x=0j) -> np.ndarray:
    """Boundary angle of the geodesic ray from x through each point."""
    x = geo.as_disk_point(x)
    points = np.asarray(points, dtype=complex)
    if x == 0:
        return geo.normalize_angle(np.angle(points))
    to_x = geo.translation_to(x)
    local = to_x.inverse().apply(points)
    return geo.normalize_angle(to_x.apply_angle(np.angle(local)))


def _binned_sum(bins: np.ndarray, weights: np.ndarray, size: int, n_jobs=None) -> np.ndarray:
    """Deterministic histogram: fixed chunks, merged in order whatever the thread count."""
    starts = range(0, len(bins), CHUNK)

    def part(s):
        return np.bincount(bins[s:s + CHUNK], weights=weights[s:s + CHUNK], minlength=size)

    out = np.zeros(size)
    for h in ordered_map(part, starts, n_jobs):
        out += h
    return out


def orbit_atoms(cat: OrbitCatalog, s: float, y=None):
    """Directions seen from y and weights exp(-s d(y, gamma x)) of the orbit points."""
    y = cat.base_point if y is None else geo.as_disk_point(y)
    pts = cat.images
    d = cat.dists if y == cat.base_point else geo.hyp_dist(y, pts)
    # an orbit point sitting on y has no direction from y
    keep = d > 1e-9
    pts, d = pts[keep], d[keep]
    return radial_projection(pts, y), np.exp(-s * d)


def patterson_measure(
    cat: OrbitCatalog,
    alpha: float,
    s_offset: float = DEFAULT_S_OFFSET,
    part: BoundaryPartition | None = None,
    y=None,
    n_jobs: int | None = None,
) -> BinnedMeasure:
    """Orbital measure sum exp(-s d(y, gamma x)) at the radial projections, s = alpha + s_offset.

    Directions are taken from y (default: the catalog base point), which makes
    the family exactly equivariant: g_* mu_y = mu_{g y} for balls matched by g.
    The identity has no direction and is left out, except for the one-point
    catalog where its unit mass sits in the bin of angle 0.
    """
    if s_offset <= 0:
        raise ValueError("s_offset must be positive")
    if len(cat) == 0:
        raise EmptyCatalog("catalog has no points")
    part = part or BoundaryPartition()
    s = alpha + s_offset
    meta = {"alpha": alpha, "s_offset": s_offset, "depth": cat.max_dist, "degenerate": False}
    if len(cat) == 1:
        masses = np.zeros(part.bin_count)
        masses[0] = 1.0
        meta["degenerate"] = True
        return BinnedMeasure(part, masses, meta)
    angles, weights = orbit_atoms(cat, s, y)
    masses = _binned_sum(part.bin_of(angles), weights, part.bin_count, n_jobs)
    return BinnedMeasure(part, masses, meta)


def weighted_median(values, weights) -> float:
    values = np.asarray(values, dtype=float)
    weights = np.asarray(weights, dtype=float)
    order = np.argsort(values, kind="stable")
    cw = np.cumsum(weights[order])
    k = int(np.searchsorted(cw, 0.5 * cw[-1]))
    return float(values[order][min(k, len(values) - 1)])


def _ratio_error(mu_a: BinnedMeasure, mu_b: BinnedMeasure, expected: np.ndarray) -> dict:
    floor = 1e-9 * mu_a.total
    used = mu_a.masses > floor
    ratio = mu_b.masses[used] / mu_a.masses[used]
    rel = np.abs(ratio / expected[used] - 1.0)
    return {"weighted_median_error": weighted_median(rel, mu_a.masses[used]), "bins_used": int(used.sum())}


def conformality_check(cat: OrbitCatalog, alpha: float, part: BoundaryPartition, x, y, s_offset: float = DEFAULT_S_OFFSET) -> dict:
    """Compare the binned ratio mu_y / mu_x with exp(alpha beta_v(x, y)) at bin centers."""
    x, y = geo.as_disk_point(x), geo.as_disk_point(y)
    if x != cat.base_point:
        raise ValueError("x must be the catalog base point")
    mu_x = patterson_measure(cat, alpha, s_offset, part)
    mu_y = patterson_measure(cat, alpha, s_offset, part, y=y)
    expected = np.exp(alpha * geo.busemann(part.centers, x, y))
    report = _ratio_error(mu_x, mu_y, expected)
    report.update({"distance": float(geo.hyp_dist(x, y)), "depth": cat.max_dist})
    return report


def invariance_check(cat: OrbitCatalog, alpha: float, part: BoundaryPartition, g: geo.MoebiusMap, s_offset: float = DEFAULT_S_OFFSET) -> dict:
    """Compare the pushforward g_* mu_x with mu_{g x} built directly at the base point g x.

    Both measures are truncated to balls of the same radius around their base
    points, D - d(x, g x), so that g maps one orbit ball onto the other.
    """
    x = cat.base_point
    gx = complex(g.apply(x))
    depth = cat.max_dist - float(geo.hyp_dist(x, gx))
    if depth <= 0:
        raise ValueError("catalog too shallow for this group element")
    s = alpha + s_offset
    angles, weights = orbit_atoms(cat, s)
    near_x = cat.dists[1:] <= depth
    pushed = _binned_sum(part.bin_of(g.apply_angle(angles[near_x])), weights[near_x], part.bin_count)
    pts = cat.images
    d_gx = geo.hyp_dist(gx, pts)
    near_gx = (d_gx <= depth) & (d_gx > 1e-9)
    from_gx = radial_projection(pts[near_gx], gx)
    direct = _binned_sum(part.bin_of(from_gx), np.exp(-s * d_gx[near_gx]), part.bin_count)
    mu_push = BinnedMeasure(part, pushed)
    mu_gx = BinnedMeasure(part, direct)
    report = _ratio_error(mu_gx, mu_push, np.ones(part.bin_count))
    report.update({"tv": mu_push.tv_distance(mu_gx), "depth": depth})
    return report


def cauchy_check(
    model: GroupModel,
    x,
    alpha: float,
    part: BoundaryPartition,
    depth: float = 14.0,
    s_offset: float = DEFAULT_S_OFFSET,
    n_jobs: int | None = None,
) -> dict:
    """Total variation between (depth, s_offset) and (depth + 2, s_offset / 2)."""
    coarse = patterson_measure(enumerate_orbit(model, x, depth, n_jobs=n_jobs), alpha, s_offset, part)
    fine = patterson_measure(enumerate_orbit(model, x, depth + 2, n_jobs=n_jobs), alpha, s_offset / 2, part)
    return {"tv": coarse.tv_distance(fine), "depth": depth, "s_offset": s_offset}


def shadow_arcs(x, ys, R: float, tol: float = geo.SHADOW_TOL) -> tuple[np.ndarray, np.ndarray]:
    """Vectorized shadow_arc: (center, half_width) for every point in ys."""
    x = geo.as_disk_point(x)
    ys = np.asarray(ys, dtype=complex)
    to_x = geo.translation_to(x)
    local = to_x.inverse().apply(ys) if x != 0 else ys
    psi = np.angle(local)
    full = geo.hyp_dist(0j, local) <= R
    lo = np.zeros(len(ys))
    hi = np.full(len(ys), np.pi / 2)
    while np.max(hi - lo) > tol:
        mid = 0.5 * (lo + hi)
        inside = geo.ray_distance(local, psi + mid) <= R
        lo = np.where(inside, mid, lo)
        hi = np.where(inside, hi, mid)
    width = 0.5 * (lo + hi)
    if x == 0:
        center, half = geo.normalize_angle(psi), width
    else:
        start = to_x.apply_angle(psi - width)
        end = to_x.apply_angle(psi + width)
        half = 0.5 * np.mod(end - start, geo.TWO_PI)
        center = geo.normalize_angle(start + half)
    half = np.where(full, np.pi, half)
    return center, half


def shadow_lemma_report(cat: OrbitCatalog, mu: BinnedMeasure, R: float, alpha: float, d_min: float = 3.0) -> dict:
    """Spread of mu(O_R(x, gamma x)) exp(alpha d(x, gamma x)) over the catalog.

    Shadows narrower than one bin cannot be resolved by the partition and are
    left out of the extremes; their count is reported.
    """
    sel = np.nonzero(cat.dists > d_min)[0]
    if len(sel) == 0:
        return {"count": 0, "flagged": True, "min": float("nan"), "max": float("nan"), "ratio": float("nan")}
    centers, half = shadow_arcs(cat.base_point, cat.images[sel], R)
    bins = 2.0 * half / mu.partition.width
    # a point at half the catalog depth stands in for "mid-depth"
    _, mid_half = shadow_arcs(cat.base_point, np.array([math.tanh(cat.max_dist / 4)]), R)
    mid_bins = 2.0 * float(mid_half[0]) / mu.partition.width
    if mid_bins < 3:
        raise ShadowTooNarrow(f"mid-depth shadows span {mid_bins:.2f} bins; raise bin_count or R")
    resolved = bins >= 1.0
    values = mu.arcs_mass(centers[resolved], half[resolved]) * np.exp(alpha * cat.dists[sel][resolved])
    values = values / mu.total
    lo, hi = float(values.min()), float(values.max())
    return {
        "count": int(resolved.sum()),
        "unresolved": int((~resolved).sum()),
        "flagged": lo <= 0,
        "min": lo,
        "max": hi,
        "ratio": hi / lo if lo > 0 else float("inf"),
        "R": R,
        "depth": cat.max_dist,
    }


def visual_ball(z: float, r: float, x=0j) -> geo.Arc:
    """Ball {v : d_x(v, z) < r} as an arc."""
    x = geo.as_disk_point(x)
    if r >= 1.0:
        return geo.Arc(z, np.pi)
    if x == 0:
        return geo.Arc(z, 2.0 * math.asin(r))
    to_x = geo.translation_to(x)
    inv = to_x.inverse()
    zc = float(inv.apply_angle(z))
    # d_x is transported from d_0 by the isometry moving x to 0
    local = geo.Arc(zc, 2.0 * math.asin(r))
    start = float(to_x.apply_angle(local.center - local.half_width))
    end = float(to_x.apply_angle(local.center + local.half_width))
    half = 0.5 * float(np.mod(end - start, geo.TWO_PI))
    return geo.Arc(start + half, half)


def ahlfors_report(mu: BinnedMeasure, x, alpha: float, samples: int = 64, min_bins: float = 4.0) -> dict:
    """Spread max/min of mu(B(z, r)) / r^alpha over support points z and dyadic radii r."""
    part = mu.partition
    support = np.nonzero(mu.masses)[0]
    if len(support) == 0:
        return {"spread": float("inf"), "flagged": True}
    pick = support[np.linspace(0, len(support) - 1, min(samples, len(support))).astype(int)]
    zs = part.centers[pick]
    values = []
    radii = []
    r = 0.5
    while True:
        arcs = [visual_ball(z, r, x) for z in zs]
        if min(part.arc_bins(a) for a in arcs) < min_bins:
            break
        masses = mu.arcs_mass([a.center for a in arcs], [a.half_width for a in arcs]) / mu.total
        values.append(masses / r**alpha)
        radii.append(r)
        r /= 2.0
    if not values:
        return {"spread": float("inf"), "flagged": True}
    vals = np.concatenate(values)
    spread = float(vals.max() / vals.min()) if vals.min() > 0 else float("inf")
    return {"spread": spread, "radii": radii, "flagged": not math.isfinite(spread) or len(support) < 32}


def export_measure_csv(mu: BinnedMeasure, path) -> None:
    meta = mu.meta
    with open(path, "w", encoding="utf-8", newline="\n") as fh:
        fh.write("bin_count,total,alpha,s_offset,depth\n")
        fh.write(
            f"{mu.partition.bin_count},{mu.total:.17g},{meta.get('alpha', float('nan')):.17g},"
            f"{meta.get('s_offset', float('nan')):.17g},{meta.get('depth', float('nan')):.17g}\n"
        )
        fh.write("bin_index,center_angle,mass\n")
        for i, (c, m) in enumerate(zip(mu.partition.centers, mu.masses)):
            fh.write(f"{i},{c:.17g},{m:.17g}\n")


def import_measure_csv(path) -> BinnedMeasure:
    with open(path, encoding="utf-8") as fh:
        fh.readline()
        head = fh.readline().strip().split(",")
        fh.readline()
        masses = [float(line.split(",")[2]) for line in fh if line.strip()]
    part = BoundaryPartition(int(head[0]))
    meta = {"alpha": float(head[2]), "s_offset": float(head[3]), "depth": float(head[4])}
    return BinnedMeasure(part, np.array(masses), meta)
