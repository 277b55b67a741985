"""Boundary representation on binned L^2 spaces and the equidistribution averages.

Quadrature is the bin sum against a BinnedMeasure; step functions are read by
nearest bin.  Annulus sums run over catalog order in fixed-size chunks so the
result does not depend on the worker count.
"""
from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np

from . import geometry as geo
from ._parallel import ordered_map
from .errors import EmptyAnnulus
from .group import AnnulusSpec, OrbitCatalog
from .measure import BinnedMeasure, BoundaryPartition, radial_projection, shadow_arcs, visual_ball
from .reports import ConvergenceReport, trailing_slope

CHUNK_CELLS = 1 << 21


@dataclass(frozen=True, eq=False)
class StepFunction:
    partition: BoundaryPartition
    values: np.ndarray

    def __post_init__(self):
        v = np.asarray(self.values, dtype=float)
        if v.shape != (self.partition.bin_count,):
            raise ValueError("values do not match the partition")
        object.__setattr__(self, "values", v)

    @classmethod
    def constant(cls, part: BoundaryPartition, c: float = 1.0) -> "StepFunction":
        return cls(part, np.full(part.bin_count, float(c)))

    @classmethod
    def indicator(cls, part: BoundaryPartition, arcs) -> "StepFunction":
        arcs = [arcs] if isinstance(arcs, geo.Arc) else list(arcs)
        inside = np.zeros(part.bin_count, dtype=bool)
        for arc in arcs:
            inside |= arc.contains(part.centers)
        return cls(part, inside.astype(float))

    @classmethod
    def from_callable(cls, part: BoundaryPartition, fn) -> "StepFunction":
        return cls(part, np.asarray(fn(part.centers), dtype=float))

    def __call__(self, theta) -> np.ndarray:
        return self.values[self.partition.bin_of(theta)]


def l2_inner(xi: StepFunction, eta: StepFunction, mu: BinnedMeasure) -> float:
    return float(np.dot(xi.values * eta.values, mu.masses))


def l2_norm(xi: StepFunction, mu: BinnedMeasure) -> float:
    return math.sqrt(max(l2_inner(xi, xi, mu), 0.0))


def _b0(theta: np.ndarray, pts: np.ndarray) -> np.ndarray:
    """beta_v(0, y) on the grid pts[:, None] x theta[None, :]."""
    v = np.exp(1j * theta)[None, :]
    y = pts[:, None]
    return np.log(geo.one_minus_r2(y)) - 2.0 * np.log(np.abs(y - v))


def busemann_grid(theta, pts, x) -> np.ndarray:
    """beta_v(x, y) for every y in pts (rows) and v in theta (columns)."""
    theta = np.asarray(theta, dtype=float)
    pts = np.atleast_1d(np.asarray(pts, dtype=complex))
    return _b0(theta, pts) - _b0(theta, np.array([complex(x)]))


def _inverse_mats(mats: np.ndarray) -> np.ndarray:
    a, b, c, d = (mats[:, k] for k in range(4))
    return np.stack([d, -b, -c, a], axis=1)


def _chunks(n: int, width: int):
    size = max(1, CHUNK_CELLS // max(width, 1))
    return [(s, min(n, s + size)) for s in range(0, n, size)]


def pi_apply(g: geo.MoebiusMap, xi: StepFunction, x, mu: BinnedMeasure, alpha: float) -> StepFunction:
    """(pi_x(g) xi)(v) = xi(g^-1 v) exp(alpha/2 beta_v(x, g x)) at the bin centers."""
    part = xi.partition
    v = part.centers
    gx = complex(g.apply(x))
    pulled = xi(g.inverse().apply_angle(v))
    return StepFunction(part, pulled * np.exp(0.5 * alpha * busemann_grid(v, gx, x)[0]))


def harish_chandra(g: geo.MoebiusMap, x, mu: BinnedMeasure, alpha: float) -> float:
    """phi_x(g) = sum_i exp(alpha/2 beta_{v_i}(x, g x)) mass_i."""
    return float(hc_values(np.array([complex(g.apply(x))]), x, mu, alpha)[0])


def hc_values(pts, x, mu: BinnedMeasure, alpha: float, power: float = 0.5) -> np.ndarray:
    """sum_i exp(power * alpha * beta_{v_i}(x, y)) mass_i for every y in pts."""
    support = np.nonzero(mu.masses)[0]
    theta = mu.partition.centers[support]
    mass = mu.masses[support]
    pts = np.atleast_1d(np.asarray(pts, dtype=complex))
    out = np.empty(len(pts))
    for s, e in _chunks(len(pts), len(support)):
        out[s:e] = np.exp(power * alpha * busemann_grid(theta, pts[s:e], x)) @ mass
    return out


def intertwiner(x, y, part: BoundaryPartition, alpha: float) -> np.ndarray:
    """m_xy(v) = exp(-alpha/2 beta_v(x, y)) at the bin centers."""
    return np.exp(-0.5 * alpha * busemann_grid(part.centers, y, x)[0])


def intertwiner_check(x, y, mu_x: BinnedMeasure, mu_y: BinnedMeasure, gammas, xis, alpha: float) -> dict:
    """sup over gamma, xi of |U pi_x(gamma) xi - pi_y(gamma) U xi| / |xi| in L^2(mu_y)."""
    part = mu_x.partition
    m = intertwiner(x, y, part, alpha)
    worst = 0.0
    for g in gammas:
        for xi in xis:
            left = StepFunction(part, m * pi_apply(g, xi, x, mu_x, alpha).values)
            right = pi_apply(g, StepFunction(part, m * xi.values), y, mu_y, alpha)
            diff = StepFunction(part, left.values - right.values)
            worst = max(worst, l2_norm(diff, mu_y) / l2_norm(xi, mu_x))
    return {"defect": worst, "bins": part.bin_count}


@dataclass(frozen=True)
class ConeSet:
    """C_R(x, U): interior points whose R-shadow from x meets the arcs U."""

    arcs: tuple
    R: float = 2.0

    def indicator(self, pts, x) -> np.ndarray:
        pts = np.atleast_1d(np.asarray(pts, dtype=complex))
        centers, half = shadow_arcs(x, pts, self.R)
        hit = np.zeros(len(pts), dtype=bool)
        for arc in self.arcs:
            gap = np.abs(geo.angle_diff(centers, arc.center))
            hit |= gap <= half + arc.half_width
        return hit.astype(float)

    def boundary(self, part: BoundaryPartition) -> StepFunction:
        return StepFunction.indicator(part, self.arcs)


def cone_indicator(y, U, R: float, x=0j) -> int:
    """1 iff shadow_arc(x, y, R) meets one of the arcs in U."""
    shadow = geo.shadow_arc(x, y, R)
    arcs = [U] if isinstance(U, geo.Arc) else list(U)
    return int(any(shadow.intersects(a) for a in arcs))


def _interior_values(f, pts, x) -> np.ndarray:
    if isinstance(f, ConeSet):
        return f.indicator(pts, x)
    if callable(f):
        return np.asarray(f(pts), dtype=float)
    return np.full(len(pts), float(f))


def _annulus(cat: OrbitCatalog, spec: AnnulusSpec) -> np.ndarray:
    idx = cat.annulus_indices(spec)
    if len(idx) == 0:
        raise EmptyAnnulus(f"annulus n={spec.n}, rho={spec.rho} is empty")
    return idx


class _Support:
    """Support bins of mu with the data needed for matrix coefficients."""

    def __init__(self, mu: BinnedMeasure):
        self.bins = np.nonzero(mu.masses)[0]
        self.theta = mu.partition.centers[self.bins]
        self.mass = mu.masses[self.bins]
        self.part = mu.partition


def coefficient_terms(cat: OrbitCatalog, idx: np.ndarray, mu: BinnedMeasure, alpha: float, pairs, n_jobs=None) -> np.ndarray:
    """<pi(gamma) xi, eta> / phi(gamma) for each gamma in idx and each (xi, eta) in pairs.

    Returns an array of shape (len(idx), len(pairs)).
    """
    sup = _Support(mu)
    x = cat.base_point
    inv = _inverse_mats(cat.mats[idx])
    pts = cat.images[idx]
    xi_vals = [p[0].values for p in pairs]
    eta_w = np.stack([p[1].values[sup.bins] * sup.mass for p in pairs], axis=1)

    def block(bounds):
        s, e = bounds
        half = np.exp(0.5 * alpha * busemann_grid(sup.theta, pts[s:e], x))
        phi = half @ sup.mass
        pulled_bins = sup.part.bin_of(geo.apply_to_angle(inv[s:e, None, :], sup.theta[None, :]))
        out = np.empty((e - s, len(pairs)))
        for k, xv in enumerate(xi_vals):
            out[:, k] = np.einsum("ij,ij->i", xv[pulled_bins] * half, np.broadcast_to(eta_w[:, k], half.shape))
        return out / phi[:, None]

    parts = ordered_map(block, _chunks(len(idx), len(sup.bins)), n_jobs)
    return np.concatenate(parts) if parts else np.zeros((0, len(pairs)))


def mn_coefficient(f, xi: StepFunction, eta: StepFunction, spec: AnnulusSpec, cat: OrbitCatalog, mu: BinnedMeasure, alpha: float, n_jobs=None) -> float:
    """(1/|C_n|) sum_gamma f(gamma x) <pi(gamma) xi, eta> / phi(gamma)."""
    idx = _annulus(cat, spec)
    fv = _interior_values(f, cat.images[idx], cat.base_point)
    terms = coefficient_terms(cat, idx, mu, alpha, [(xi, eta)], n_jobs)[:, 0]
    return float(np.dot(fv, terms) / len(idx))


def limit_coefficient(f_boundary: StepFunction, xi: StepFunction, eta: StepFunction, mu: BinnedMeasure) -> float:
    """(int xi dmu / |mu|) (1 / |mu|) int f eta dmu."""
    total = mu.total
    return mu.integrate(xi.values) / total * mu.integrate(f_boundary.values * eta.values) / total


def fn_hn_supnorms(spec: AnnulusSpec, cat: OrbitCatalog, mu: BinnedMeasure, alpha: float, n_jobs=None) -> tuple[float, float]:
    """Max over bin centers of F^n and H^n."""
    idx = _annulus(cat, spec)
    x = cat.base_point
    pts = cat.images[idx]
    phi = hc_values(pts, x, mu, alpha)
    norms = hc_values(pts, x, mu, alpha, power=1.0)
    theta = mu.partition.centers

    def block(bounds):
        s, e = bounds
        beta = busemann_grid(theta, pts[s:e], x)
        f = (np.exp(0.5 * alpha * beta) / phi[s:e, None]).sum(axis=0)
        h = (np.exp(alpha * beta) / norms[s:e, None]).sum(axis=0)
        return f, h

    F = np.zeros(len(theta))
    H = np.zeros(len(theta))
    for f, h in ordered_map(block, _chunks(len(idx), len(theta)), n_jobs):
        F += f
        H += h
    return float(F.max() / len(idx)), float(H.max() / len(idx))


def gn_shadow_aligned(spec: AnnulusSpec, cat: OrbitCatalog, alpha: float, candidates: int = 16) -> float:
    """Max of G_n(v, w) over pairs v, w aligned with the shadows of some gamma0 in C_n.

    G_n(v, w) = (1/|C_n|) sum exp(alpha beta_v(x, gamma^-1 x)) exp(alpha beta_w(x, gamma x)).
    """
    idx = _annulus(cat, spec)
    x = cat.base_point
    fwd = cat.images[idx]
    back = cat.inverse_images(idx)
    pick = idx[np.linspace(0, len(idx) - 1, min(candidates, len(idx))).astype(int)]
    best = 0.0
    for j in pick:
        v = radial_projection(cat.inverse_images(np.array([j])), x)
        w = radial_projection(cat.images[j:j + 1], x)
        bv = busemann_grid(v, back, x)[:, 0]
        bw = busemann_grid(w, fwd, x)[:, 0]
        best = max(best, float(np.exp(alpha * (bv + bw)).sum() / len(idx)))
    return best


def poisson_eval(y, v, x, alpha: float):
    """P(y, v) = exp(alpha beta_v(x, y))."""
    return np.exp(alpha * geo.busemann(v, x, y))


def p_lambda_apply(lam: float, f: StepFunction, y, mu: BinnedMeasure, x, alpha: float) -> float:
    """P_lambda f(y) = int P(y, v)^(lambda + 1/2) f(v) dmu_x(v)."""
    p = poisson_eval(y, mu.partition.centers, x, alpha)
    return mu.integrate(p ** (lam + 0.5) * f.values)


def nu_measure(y, mu: BinnedMeasure, x, alpha: float) -> BinnedMeasure:
    """nu_y = P(y, .)^(1/2) / P_0 1(y) mu_x, a probability measure."""
    w = np.sqrt(poisson_eval(y, mu.partition.centers, x, alpha)) * mu.masses
    return BinnedMeasure(mu.partition, w / w.sum(), {"base": complex(y)})


def kernel_density(kind: str, y, mu: BinnedMeasure, x, alpha: float) -> np.ndarray:
    """Density of K(y, .) with respect to mu_x at the bin centers; integrates to 1."""
    p = poisson_eval(y, mu.partition.centers, x, alpha)
    if kind == "sqrt_poisson":
        k = np.sqrt(p)
    elif kind == "poisson":
        k = p
    else:
        raise ValueError(f"unknown kernel {kind!r}")
    return k / mu.integrate(k)


def kbar(kind: str, f: StepFunction, y, mu: BinnedMeasure, x, alpha: float) -> float:
    """Extension of a boundary function to the interior by the kernel K."""
    return mu.integrate(kernel_density(kind, y, mu, x, alpha) * f.values)


def dw_family_check(kind: str, v0: float, r0: float, approach_path, mu: BinnedMeasure, x, alpha: float, f: StepFunction | None = None) -> dict:
    """Positivity, unit mass and the tail outside B(v0, r0) along a path y_t -> v0."""
    part = mu.partition
    ball = visual_ball(v0, r0, x)
    outside = ~ball.contains(part.centers)
    if f is None:
        f = StepFunction.from_callable(part, lambda t: np.cos(t - v0))
    f_v0 = float(f(np.array([v0]))[0])
    rows = []
    for y in approach_path:
        k = kernel_density(kind, y, mu, x, alpha)
        rows.append(
            {
                "distance": float(geo.hyp_dist(x, y)),
                "min_density": float(k.min()),
                "total": mu.integrate(k),
                "tail": mu.integrate(k * outside),
                "kbar_error": abs(mu.integrate(k * f.values) - f_v0),
            }
        )
    tails = [r["tail"] for r in rows]
    return {
        "kernel": kind,
        "rows": rows,
        "positive": all(r["min_density"] >= 0 for r in rows),
        "unit_mass": max(abs(r["total"] - 1.0) for r in rows),
        "tail_decreasing": all(b < a for a, b in zip(tails, tails[1:])),
        "final_tail": tails[-1],
        "final_kbar_error": rows[-1]["kbar_error"],
    }


def radial_path(v0: float, distances, x=0j) -> list[complex]:
    """Points on the ray from x toward v0 at the given distances."""
    to_x = geo.translation_to(x)
    local = float(to_x.inverse().apply_angle(v0))
    return [complex(to_x.apply(math.tanh(t / 2.0) * np.exp(1j * local))) for t in distances]


def _verdict(ns, errors, threshold: float, slack: float = 1e-3) -> dict:
    """Final error below threshold and a least-squares slope of error vs n at most slack."""
    ns = np.asarray(ns, dtype=float)
    errors = np.asarray(errors, dtype=float)
    slope = float(np.polyfit(ns, errors, 1)[0]) if len(errors) > 1 else 0.0
    return {
        "final_error": float(errors[-1]),
        "threshold": threshold,
        "trend": slope,
        "pass": bool(errors[-1] < threshold and slope <= slack),
    }


def thmA_report(triples, cat: OrbitCatalog, mu: BinnedMeasure, alpha: float, rho: float = 1.0, threshold: float = 0.05, n_jobs=None) -> ConvergenceReport:
    """Matrix coefficients of the annulus averages against the limit, per n and triple.

    Each triple is (f, xi, eta) with f a ConeSet, a constant or a callable on
    interior points; for ConeSets the boundary restriction is the indicator of
    the arcs, for constants the constant.  The normalization triple
    (1, 1, 1) is always appended as the last one and must be exact.
    """
    part = mu.partition
    one = StepFunction.constant(part)
    triples = list(triples) + [(1.0, one, one)]
    targets = []
    for f, xi, eta in triples:
        fb = f.boundary(part) if isinstance(f, ConeSet) else StepFunction.constant(part, float(f))
        targets.append(limit_coefficient(fb, xi, eta, mu))
    rows = []
    for n in cat.populated_n(rho):
        idx = _annulus(cat, AnnulusSpec(n, rho))
        terms = coefficient_terms(cat, idx, mu, alpha, [(xi, eta) for _, xi, eta in triples], n_jobs)
        for k, (f, _, _) in enumerate(triples):
            fv = _interior_values(f, cat.images[idx], cat.base_point)
            value = float(np.dot(fv, terms[:, k]) / len(idx))
            rows.append({"n": n, "triple": k, "value": value, "target": targets[k], "error": abs(value - targets[k])})
    per_triple = []
    for k in range(len(triples) - 1):
        sel = [r for r in rows if r["triple"] == k]
        per_triple.append(_verdict([r["n"] for r in sel], [r["error"] for r in sel], threshold))
    norm_err = max(r["error"] for r in rows if r["triple"] == len(triples) - 1)
    verdict = {
        "triples": per_triple,
        "max_final_error": max(v["final_error"] for v in per_triple),
        "normalization_error": norm_err,
        "pass": all(v["pass"] for v in per_triple) and norm_err < 1e-12,
    }
    return ConvergenceReport(
        "thmA",
        {"rho": rho, "alpha": alpha, "bins": part.bin_count, "depth": cat.max_dist, "triples": len(triples) - 1},
        ("n", "triple", "value", "target", "error"),
        rows,
        verdict,
    )


def default_triples(part: BoundaryPartition, R: float = 2.0) -> list:
    """Five (cone set, chi_A, chi_B) triples built from quarter arcs."""
    q = quarter_arcs()
    full = geo.Arc(0.0, math.pi)

    def chi(*arcs):
        return StepFunction.indicator(part, arcs)

    return [
        (ConeSet((q[0],), R), chi(q[0]), chi(q[0])),
        (ConeSet((q[1],), R), chi(q[0]), chi(q[1])),
        (ConeSet((q[0], q[1]), R), chi(q[2]), chi(q[1])),
        (ConeSet((q[2],), R), chi(q[1], q[3]), chi(q[2], q[3])),
        (ConeSet((full,), R), chi(q[3]), chi(q[1])),
    ]


def orthonormal_basis(mu: BinnedMeasure, functions) -> list[StepFunction]:
    """Gram-Schmidt in L^2(mu / |mu|), starting from the constant function."""
    prob = mu.normalized()
    basis = []
    for f in [StepFunction.constant(mu.partition)] + list(functions):
        v = f.values.copy()
        for b in basis:
            v -= l2_inner(StepFunction(mu.partition, v), b, prob) * b.values
        norm = l2_norm(StepFunction(mu.partition, v), prob)
        if norm < 1e-12:
            continue
        basis.append(StepFunction(mu.partition, v / norm))
    return basis


def corB_report(cat: OrbitCatalog, mu: BinnedMeasure, alpha: float, rho: float = 1.0, test_vectors=None, threshold: float = 0.05, n_jobs=None) -> ConvergenceReport:
    """|mu|^2 <M^n(1) xi_i, xi_j> against <Q xi_i, xi_j> for an orthonormal test basis.

    mu is normalized to a probability measure first, so Q is the orthogonal
    projection onto constants and the target matrix is diag(1, 0, ..., 0).
    """
    prob = mu.normalized()
    part = mu.partition
    if test_vectors is None:
        test_vectors = default_test_functions(part)
    basis = orthonormal_basis(prob, test_vectors)
    pairs = [(a, b) for a in basis for b in basis]
    target = np.array([prob.integrate(a.values) * prob.integrate(b.values) for a, b in pairs])
    rows = []
    finals = []
    for n in cat.populated_n(rho):
        idx = _annulus(cat, AnnulusSpec(n, rho))
        vals = coefficient_terms(cat, idx, prob, alpha, pairs, n_jobs).mean(axis=0)
        err = np.abs(vals - target)
        for k in range(len(pairs)):
            i, j = divmod(k, len(basis))
            rows.append({"n": n, "i": i, "j": j, "value": float(vals[k]), "target": float(target[k]), "error": float(err[k])})
        finals.append(float(err.max()))
    verdict = _verdict(cat.populated_n(rho), finals, threshold)
    verdict["size"] = len(basis)
    return ConvergenceReport(
        "corB",
        {"rho": rho, "alpha": alpha, "bins": part.bin_count, "depth": cat.max_dist},
        ("n", "i", "j", "value", "target", "error"),
        rows,
        verdict,
    )


def default_test_functions(part: BoundaryPartition) -> list[StepFunction]:
    """Three mean-zero-ish step functions; they are orthonormalized against mu later."""
    t = part.centers
    return [
        StepFunction(part, np.where(np.cos(t) >= 0, 1.0, -1.0)),
        StepFunction(part, np.where(np.sin(t) >= 0, 1.0, -1.0)),
        StepFunction(part, np.where(np.sin(2 * t) >= 0, 1.0, -1.0)),
    ]


def thmD_report(family: str, cat: OrbitCatalog, mu: BinnedMeasure, alpha: float, rho: float = 1.0, test_functions=None, threshold: float = 0.1, n_jobs=None) -> ConvergenceReport:
    """Annulus averages of mu_{gamma x} / |mu_{gamma x}| (conformal) or nu_{gamma x} (nu).

    mu_{gamma x} is realized as exp(alpha beta_v(x, gamma x)) mu_x; the nu family
    uses the square root of that density.  Both targets equal mu_x / |mu_x|.
    """
    power = {"conformal": 1.0, "nu": 0.5}[family]
    part = mu.partition
    sup = _Support(mu)
    x = cat.base_point
    target = mu.masses / mu.total
    if test_functions is None:
        test_functions = default_test_functions(part)
    rows = []
    tvs = []
    for n in cat.populated_n(rho):
        idx = _annulus(cat, AnnulusSpec(n, rho))
        pts = cat.images[idx]

        def block(bounds):
            s, e = bounds
            w = np.exp(power * alpha * busemann_grid(sup.theta, pts[s:e], x)) * sup.mass
            return (w / w.sum(axis=1, keepdims=True)).sum(axis=0)

        acc = np.zeros(len(sup.bins))
        for part_sum in ordered_map(block, _chunks(len(idx), len(sup.bins)), n_jobs):
            acc += part_sum
        avg = np.zeros(part.bin_count)
        avg[sup.bins] = acc / len(idx)
        tv = 0.5 * float(np.abs(avg - target).sum())
        weak = max(abs(float(np.dot(h.values, avg - target))) for h in test_functions)
        rows.append({"n": n, "tv": tv, "weak_error": weak, "avg_total": float(avg.sum())})
        tvs.append(tv)
    verdict = _verdict([r["n"] for r in rows], tvs, threshold)
    return ConvergenceReport(
        f"thmD_{family}",
        {"rho": rho, "alpha": alpha, "bins": part.bin_count, "depth": cat.max_dist, "family": family},
        ("n", "tv", "weak_error", "avg_total"),
        rows,
        verdict,
    )


def quarter_arcs(offset: float = 0.0) -> list[geo.Arc]:
    return [geo.Arc(offset + k * math.pi / 2, math.pi / 4) for k in range(4)]


def roblin_pair_report(cat: OrbitCatalog, mu: BinnedMeasure, alpha: float, rho: float = 1.0, arc_pairs=None, threshold: float = 0.05) -> ConvergenceReport:
    """Fraction of gamma in C_n with gamma^-1 x toward A and gamma x toward B, against mu(A) mu(B) / |mu|^2."""
    if arc_pairs is None:
        q = quarter_arcs()
        arc_pairs = [(q[0], q[1]), (q[1], q[0]), (q[0], q[2]), (q[1], q[3]), (q[2], q[3])]
    x = cat.base_point
    total = mu.total
    targets = [mu.arc_mass(a) * mu.arc_mass(b) / total**2 for a, b in arc_pairs]
    rows = []
    for n in cat.populated_n(rho):
        idx = _annulus(cat, AnnulusSpec(n, rho))
        back = radial_projection(cat.inverse_images(idx), x)
        fwd = radial_projection(cat.images[idx], x)
        for k, (a, b) in enumerate(arc_pairs):
            value = float(np.mean(a.contains(back) & b.contains(fwd)))
            rows.append({"n": n, "pair": k, "value": value, "target": targets[k], "error": abs(value - targets[k])})
    per_pair = []
    for k in range(len(arc_pairs)):
        errs = np.array([r["error"] for r in rows if r["pair"] == k])
        per_pair.append({"final_error": float(errs[-1])})
    worst = max(p["final_error"] for p in per_pair)
    return ConvergenceReport(
        "roblin",
        {"rho": rho, "alpha": alpha, "depth": cat.max_dist, "pairs": len(arc_pairs)},
        ("n", "pair", "value", "target", "error"),
        rows,
        {"pairs": per_pair, "max_final_error": worst, "threshold": threshold, "pass": worst < threshold},
    )


def hc_table(cat: OrbitCatalog, mu: BinnedMeasure, alpha: float, d_min: float = 4.0, band_tol: float = 20.0, slope_tol: float = 0.02) -> ConvergenceReport:
    """phi_x(gamma) exp(alpha d / 2) / (1 + d) for every catalog element beyond d_min."""
    sel = np.nonzero(cat.dists > d_min)[0]
    phi = hc_values(cat.images[sel], cat.base_point, mu, alpha)
    d = cat.dists[sel]
    q = phi * np.exp(0.5 * alpha * d) / (1.0 + d)
    rows = [{"word": cat.words[i], "dist": float(di), "phi": float(p), "normalized": float(v)} for i, di, p, v in zip(sel, d, phi, q)]
    band = float(q.max() / q.min()) if len(q) else float("nan")
    # trend: slope of log of the per-unit-distance medians over the trailing half
    shells = np.floor(d).astype(int)
    xs, ys = [], []
    for k in np.unique(shells):
        xs.append(float(k))
        ys.append(float(np.log(np.median(q[shells == k]))))
    slope = trailing_slope(xs, ys) if len(xs) > 1 else 0.0
    return ConvergenceReport(
        "hc",
        {"alpha": alpha, "depth": cat.max_dist, "d_min": d_min},
        ("word", "dist", "phi", "normalized"),
        rows,
        {"band_ratio": band, "trailing_log_slope": slope, "pass": bool(band < band_tol and abs(slope) <= slope_tol)},
    )


def supnorm_report(cat: OrbitCatalog, mu: BinnedMeasure, alpha: float, rho: float = 1.0, slope_tol: float = 0.02, n_jobs=None) -> ConvergenceReport:
    """Sup norms of F^n and H^n and the shadow-aligned G_n, per n."""
    rows = []
    for n in cat.populated_n(rho):
        spec = AnnulusSpec(n, rho)
        f, h = fn_hn_supnorms(spec, cat, mu, alpha, n_jobs)
        rows.append({"n": n, "F": f, "H": h, "G": gn_shadow_aligned(spec, cat, alpha)})
    ns = [r["n"] for r in rows]
    slopes = {k: trailing_slope(ns, np.log([r[k] for r in rows])) for k in ("F", "H", "G")}
    verdict = {
        "slope_F": slopes["F"],
        "slope_H": slopes["H"],
        "slope_G": slopes["G"],
        "pass": bool(slopes["F"] <= slope_tol and slopes["H"] <= slope_tol and slopes["G"] >= alpha / 2),
    }
    return ConvergenceReport("supnorms", {"rho": rho, "alpha": alpha, "depth": cat.max_dist}, ("n", "F", "H", "G"), rows, verdict)


