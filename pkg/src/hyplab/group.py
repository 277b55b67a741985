"""Schottky groups, orbit enumeration, annuli and critical exponent estimates."""
from __future__ import annotations

import math
import threading
import warnings
from dataclasses import dataclass, field

import numpy as np

from . import geometry as geo
from ._parallel import ordered_map
from .errors import (
    BudgetExceeded,
    DegenerateDisk,
    DisksOverlap,
    ElementaryGroupWarning,
    InsufficientDepth,
    OutOfRange,
)
from .reports import ConvergenceReport

DEFAULT_POINT_CAP = 50_000_000
LETTERS = "abcdefghijklmnopqrstuvwxyz"

REFERENCE_DISKS = (
    (0.0, 0.3),
    (math.pi, 0.3),
    (math.pi / 2, 0.3),
    (3 * math.pi / 2, 0.3),
)


def _crossing(radius: float) -> float:
    """Distance from 0 to the geodesic cutting off a boundary arc of half-width radius."""
    a = (1.0 - math.sin(radius)) / math.cos(radius)
    return 2.0 * math.atanh(a)


def pairing_map(source: tuple[float, float], target: tuple[float, float]) -> geo.MoebiusMap:
    """Map sending the exterior of the source disk onto the interior of the target disk."""
    (c1, r1), (c2, r2) = source, target
    shift = geo.axial_translation(_crossing(r1) + _crossing(r2), 0.0)
    return geo.rotation(c2) @ shift @ geo.rotation(math.pi - c1)


@dataclass(frozen=True)
class GroupModel:
    """Free group generated by disk-pairing maps.

    Letter k < rank is generator k, letter k + rank its inverse.  Generator k
    maps the exterior of disk 2k onto the interior of disk 2k + 1.
    """

    generators: tuple
    disks: tuple
    alpha_estimate: float | None = None

    @property
    def rank(self) -> int:
        return len(self.generators)

    @property
    def letters(self) -> str:
        k = self.rank
        return LETTERS[:k] + LETTERS[:k].upper()

    def letter_maps(self) -> list[geo.MoebiusMap]:
        return list(self.generators) + [g.inverse() for g in self.generators]

    def inverse_letter(self, i: int) -> int:
        return (i + self.rank) % (2 * self.rank)

    def target_disk(self, i: int) -> tuple[float, float]:
        k = i % self.rank
        return self.disks[2 * k + 1] if i < self.rank else self.disks[2 * k]

    def source_disk(self, i: int) -> tuple[float, float]:
        return self.target_disk(self.inverse_letter(i))

    def word_map(self, word: str) -> geo.MoebiusMap:
        maps = self.letter_maps()
        out = geo.IDENTITY
        for ch in word:
            out = out @ maps[self.letters.index(ch)]
        return out

    def translation_lengths(self) -> list[float]:
        return [g.translation_length() for g in self.generators]

    def max_displacement(self, x: complex = 0j) -> float:
        return max(float(geo.hyp_dist(x, g.apply(x))) for g in self.letter_maps())

    def with_alpha(self, alpha: float) -> "GroupModel":
        return GroupModel(self.generators, self.disks, alpha)


def build_schottky(disk_specs) -> GroupModel:
    specs = [(float(c), float(r)) for c, r in disk_specs]
    if len(specs) < 2 or len(specs) % 2:
        raise ValueError("need an even, nonzero number of disks")
    for c, r in specs:
        if not 0.0 < r < math.pi / 2:
            raise DegenerateDisk(f"angular radius {r} outside (0, pi/2)")
    for i in range(len(specs)):
        for j in range(i + 1, len(specs)):
            (ci, ri), (cj, rj) = specs[i], specs[j]
            if abs(float(geo.angle_diff(ci, cj))) <= ri + rj:
                raise DisksOverlap(f"disks {i} and {j} intersect")
    gens = tuple(pairing_map(specs[2 * k], specs[2 * k + 1]) for k in range(len(specs) // 2))
    model = GroupModel(gens, tuple(specs))
    if not pingpong_certificate(model):
        raise DisksOverlap("ping-pong certificate failed")
    if model.rank == 1:
        warnings.warn("rank-1 group is elementary: its limit set has two points", ElementaryGroupWarning, stacklevel=2)
    return model


def pingpong_certificate(model: GroupModel, samples: int = 257) -> bool:
    """Check that each letter maps the closed exterior arc of its source disk into its target arc."""
    disks = model.disks
    for i, (ci, ri) in enumerate(disks):
        for cj, rj in disks[i + 1:]:
            if abs(float(geo.angle_diff(ci, cj))) <= ri + rj:
                return False
    for i, g in enumerate(model.letter_maps()):
        (cs, rs), (ct, rt) = model.source_disk(i), model.target_disk(i)
        outside = cs + rs + np.linspace(0.0, 2 * math.pi - 2 * rs, samples)
        images = g.apply_angle(outside)
        if np.any(np.abs(geo.angle_diff(images, ct)) > rt + 1e-9):
            return False
    return True


@dataclass(frozen=True)
class AnnulusSpec:
    n: int
    rho: float

    def __post_init__(self):
        if self.n < 1 or self.rho <= 0:
            raise ValueError("annulus needs n >= 1 and rho > 0")
        if self.n < self.rho:
            raise ValueError("annulus needs n >= rho")


@dataclass(frozen=True, eq=False)
class OrbitCatalog:
    """Orbit points gamma.x sorted by (distance, word).  Index 0 is the identity."""

    base_point: complex
    max_dist: float
    words: tuple
    mats: np.ndarray
    images: np.ndarray
    dists: np.ndarray
    rank: int
    letters: str = ""
    meta: dict = field(default_factory=dict)

    def __len__(self) -> int:
        return len(self.words)

    def count_within(self, n: float) -> int:
        """|Gamma_n(x)| = #{gamma : d(x, gamma x) < n}."""
        return int(np.searchsorted(self.dists, n, side="left"))

    def annulus_indices(self, spec: AnnulusSpec) -> np.ndarray:
        if spec.n + spec.rho > self.max_dist + 1e-12:
            raise OutOfRange(f"annulus [{spec.n - spec.rho}, {spec.n + spec.rho}) exceeds max_dist {self.max_dist}")
        lo = np.searchsorted(self.dists, spec.n - spec.rho, side="left")
        hi = np.searchsorted(self.dists, spec.n + spec.rho, side="left")
        return np.arange(lo, hi)

    def inverse_images(self, idx=None) -> np.ndarray:
        mats = self.mats if idx is None else self.mats[idx]
        a, b, c, d = (mats[:, k] for k in range(4))
        inv = np.stack([d, -b, -c, a], axis=1)
        return geo.apply_to_disk(inv, self.base_point)

    def point(self, i: int) -> geo.MoebiusMap:
        return geo.MoebiusMap(tuple(self.mats[i]))

    def feasible_n(self, rho: float, n_min: int = 4) -> list[int]:
        lo = max(n_min, math.ceil(rho))
        return list(range(lo, int(math.floor(self.max_dist - rho)) + 1))

    def populated_n(self, rho: float, n_min: int = 4) -> list[int]:
        """Feasible n whose annulus holds at least one orbit point."""
        return [n for n in self.feasible_n(rho, n_min) if len(self.annulus_indices(AnnulusSpec(n, rho)))]


def annulus(cat: OrbitCatalog, spec: AnnulusSpec) -> np.ndarray:
    """Indices of catalog points with n - rho <= d < n + rho."""
    return cat.annulus_indices(spec)


def _matmul_rows(m: np.ndarray, g: np.ndarray) -> np.ndarray:
    a, b, c, d = m[:, 0], m[:, 1], m[:, 2], m[:, 3]
    e, f, gg, h = g
    out = np.empty_like(m)
    out[:, 0] = a * e + b * gg
    out[:, 1] = a * f + b * h
    out[:, 2] = c * e + d * gg
    out[:, 3] = c * f + d * h
    # the computed determinant carries an error of order eps * |M|^2; once that
    # is no longer small, rescaling by it would corrupt the matrix
    det = out[:, 0] * out[:, 3] - out[:, 1] * out[:, 2]
    scale2 = np.einsum("ij,ij->i", out, out)
    ok = scale2 * np.finfo(float).eps < 1e-8
    out[ok] /= np.sqrt(det[ok])[:, None]
    return out


def orbit_distance(mats: np.ndarray, x: complex) -> tuple[np.ndarray, np.ndarray]:
    """Images gamma.x and d(x, gamma.x), computed from the matrices for accuracy."""
    al, be = geo.su11_coeffs(mats)
    denom = np.conj(be) * x + np.conj(al)
    images = (al * x + be) / denom
    omr = 1.0 - abs(x) ** 2
    arg = 1.0 + 2.0 * np.abs(images - x) ** 2 * np.abs(denom) ** 2 / omr**2
    return images, np.arccosh(arg)


class _Budget:
    def __init__(self, cap: int):
        self.cap = cap
        self.used = 0
        self._lock = threading.Lock()

    def take(self, n: int):
        with self._lock:
            self.used += n
            if self.used > self.cap:
                raise BudgetExceeded(f"orbit enumeration passed the cap of {self.cap} points")


def _enumerate_subtree(first: int, model: GroupModel, letter_mats: np.ndarray, x: complex, max_dist: float, limit: float, budget: _Budget):
    """Breadth-first expansion of all reduced words starting with `first`.

    Words travel as base-2k integer codes so that nodes in the pruning margin
    need no parent bookkeeping.  Every generated node counts against the
    budget.  Returns (length, code, matrix, dist) arrays of the nodes within
    max_dist.
    """
    k2 = 2 * model.rank
    mats = letter_mats[first][None, :].copy()
    _, dist = orbit_distance(mats, x)
    last = np.array([first], dtype=np.int8)
    code = np.array([first], dtype=np.int64)
    budget.take(1)
    out = []
    length = 1
    while True:
        keep = dist <= limit
        mats, dist, last, code = mats[keep], dist[keep], last[keep], code[keep]
        if len(mats) == 0:
            break
        inside = dist <= max_dist
        if inside.any():
            out.append((np.full(int(inside.sum()), length), code[inside], mats[inside], dist[inside]))
        if k2 ** (length + 1) >= 2**62:
            raise BudgetExceeded("word length exceeds the integer word encoding")
        # charge the whole level before allocating it
        budget.take(len(mats) * (k2 - 1))
        child_mats, child_last, child_code = [], [], []
        for ch in range(k2):
            ok = last != model.inverse_letter(ch)
            child_mats.append(_matmul_rows(mats[ok], letter_mats[ch]))
            child_last.append(np.full(int(ok.sum()), ch, dtype=np.int8))
            child_code.append(code[ok] * k2 + ch)
        mats = np.concatenate(child_mats)
        last = np.concatenate(child_last)
        code = np.concatenate(child_code)
        _, dist = orbit_distance(mats, x)
        length += 1
    if not out:
        return np.zeros(0, int), np.zeros(0, np.int64), np.zeros((0, 4)), np.zeros(0)
    return tuple(np.concatenate(col) for col in zip(*out))


def _decode_words(lengths: np.ndarray, codes: np.ndarray, letters: str) -> list[str]:
    k2 = len(letters)
    words = []
    for n, c in zip(lengths.tolist(), codes.tolist()):
        chars = []
        for _ in range(n):
            c, r = divmod(c, k2)
            chars.append(letters[r])
        words.append("".join(reversed(chars)))
    return words


def enumerate_orbit(
    model: GroupModel,
    x=0j,
    max_dist: float = 14.0,
    prune_margin: float | None = None,
    point_cap: int = DEFAULT_POINT_CAP,
    n_jobs: int | None = None,
) -> OrbitCatalog:
    """All reduced words gamma with d(x, gamma x) <= max_dist."""
    if max_dist <= 0:
        raise ValueError("max_dist must be positive")
    x = geo.as_disk_point(x)
    if prune_margin is None:
        prune_margin = 2.0 * model.max_displacement(x)
    letter_mats = np.array([g.m for g in model.letter_maps()])
    budget = _Budget(point_cap)
    budget.take(1)
    limit = max_dist + prune_margin

    def run(first):
        lengths, codes, m, d = _enumerate_subtree(first, model, letter_mats, x, max_dist, limit, budget)
        return _decode_words(lengths, codes, model.letters), m, d

    parts = ordered_map(run, range(2 * model.rank), n_jobs)
    words = [""]
    mats = [np.array([[1.0, 0.0, 0.0, 1.0]])]
    dists = [np.array([0.0])]
    for w, m, d in parts:
        words.extend(w)
        mats.append(m)
        dists.append(d)
    mats = np.concatenate(mats)
    dists = np.concatenate(dists)
    dists[0] = 0.0
    order = sorted(range(len(words)), key=lambda i: (dists[i], len(words[i]), words[i]))
    order = np.array(order, dtype=int)
    mats = _sign_normalize(mats[order])
    images, _ = orbit_distance(mats, x)
    return OrbitCatalog(
        base_point=x,
        max_dist=float(max_dist),
        words=tuple(words[i] for i in order),
        mats=mats,
        images=images,
        dists=dists[order],
        rank=model.rank,
        letters=model.letters,
        meta={"prune_margin": float(prune_margin), "nodes": budget.used},
    )


def _sign_normalize(mats: np.ndarray) -> np.ndarray:
    lead = np.where(mats[:, 0] != 0, mats[:, 0], np.where(mats[:, 1] != 0, mats[:, 1], mats[:, 2]))
    return mats * np.where(lead < 0, -1.0, 1.0)[:, None]


@dataclass(frozen=True)
class AlphaEstimate:
    value: float
    cross_check: float
    ns: tuple = ()
    counts: tuple = ()

    @property
    def relative_gap(self) -> float:
        return abs(self.value - self.cross_check) / max(abs(self.value), 1e-300)

    def __float__(self) -> float:
        return float(self.value)


def _populated_annuli(cat: OrbitCatalog) -> int:
    d = cat.dists[1:]
    return len(np.unique(np.floor(d[d < cat.max_dist])))


def _window_sum(d: np.ndarray, s: float, lo: float, hi: float) -> float:
    w = d[(d >= lo) & (d < hi)]
    return float(np.sum(np.exp(-s * (w - lo))))


def poincare_transition(cat: OrbitCatalog, lo: float = 0.0, hi: float = 2.0, tol: float = 1e-10) -> float:
    """Exponent s at which the truncated Poincare series stops growing.

    The increments of the series truncated at depths D/2 and D are compared:
    below the critical exponent the second increment dominates, above it the
    first one does.  For exactly exponential growth the crossover is alpha.
    """
    D = cat.max_dist
    d = cat.dists[1:]
    w1, w2 = (0.0, D / 2), (D / 2, D)

    def growth(s):
        # both sums shifted to their window start; reapply the offset in log space
        return math.log(_window_sum(d, s, *w2)) - s * (w2[0] - w1[0]) - math.log(_window_sum(d, s, *w1))

    if growth(lo) <= 0:
        return lo
    while growth(hi) > 0:
        hi *= 2.0
    while hi - lo > tol:
        mid = 0.5 * (lo + hi)
        if growth(mid) > 0:
            lo = mid
        else:
            hi = mid
    return 0.5 * (lo + hi)


def estimate_alpha(cat: OrbitCatalog) -> AlphaEstimate:
    """Least-squares growth rate of log|Gamma_n(x)|, cross-checked by the Poincare series."""
    if cat.rank < 2:
        warnings.warn("elementary group: orbit growth is linear, reporting alpha = 0", ElementaryGroupWarning, stacklevel=2)
        return AlphaEstimate(0.0, 0.0)
    if _populated_annuli(cat) < 8:
        raise InsufficientDepth("fewer than 8 integer annuli are populated")
    n_max = int(math.floor(cat.max_dist))
    ns = np.arange(1, n_max + 1)
    counts = np.array([cat.count_within(n) for n in ns])
    tail = ns >= math.ceil(n_max / 2)
    slope = float(np.polyfit(ns[tail], np.log(counts[tail]), 1)[0])
    return AlphaEstimate(slope, poincare_transition(cat), tuple(int(n) for n in ns), tuple(int(c) for c in counts))


def growth_report(cat: OrbitCatalog, rho: float, alpha: float | None = None) -> ConvergenceReport:
    """Per-n annulus counts, normalized counts and consecutive ratios."""
    if alpha is None:
        alpha = estimate_alpha(cat).value
    ns = cat.feasible_n(rho, n_min=1)
    if not ns:
        raise OutOfRange(f"no annulus of width {rho} fits below max_dist {cat.max_dist}")
    rows = []
    prev = None
    for n in ns:
        count = len(cat.annulus_indices(AnnulusSpec(n, rho)))
        rows.append(
            {
                "n": n,
                "count": count,
                "normalized": count * math.exp(-alpha * n),
                "ratio": (count / prev) if prev else float("nan"),
            }
        )
        prev = count
    normalized = np.array([r["normalized"] for r in rows])
    tail = normalized[len(normalized) // 2:]
    cv = float(np.std(tail) / np.mean(tail)) if np.mean(tail) > 0 else float("inf")
    return ConvergenceReport(
        experiment="growth",
        params={"rho": rho, "alpha": alpha, "max_dist": cat.max_dist},
        columns=("n", "count", "normalized", "ratio"),
        rows=rows,
        verdict={"trailing_cv": cv, "exp_alpha": math.exp(alpha)},
    )


def export_catalog(cat: OrbitCatalog, path) -> None:
    """One record per line: word, a, b, c, d, re, im, dist (17 significant digits)."""
    with open(path, "w", encoding="utf-8", newline="\n") as fh:
        fh.write(f"# base {cat.base_point.real:.17g} {cat.base_point.imag:.17g} max_dist {cat.max_dist:.17g} rank {cat.rank}\n")
        for w, m, z, d in zip(cat.words, cat.mats, cat.images, cat.dists):
            nums = " ".join(f"{v:.17g}" for v in (*m, z.real, z.imag, d))
            fh.write(f"{w or '-'} {nums}\n")


def import_catalog(path) -> OrbitCatalog:
    with open(path, encoding="utf-8") as fh:
        header = fh.readline().split()
        base = complex(float(header[2]), float(header[3]))
        max_dist = float(header[5])
        rank = int(header[7])
        words, rows = [], []
        for line in fh:
            parts = line.split()
            words.append("" if parts[0] == "-" else parts[0])
            rows.append([float(t) for t in parts[1:]])
    arr = np.array(rows)
    letters = LETTERS[:rank] + LETTERS[:rank].upper()
    return OrbitCatalog(base, max_dist, tuple(words), arr[:, :4], arr[:, 4] + 1j * arr[:, 5], arr[:, 6], rank, letters)
