import math

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st
from scipy import integrate, optimize

from hyplab import geometry as geo
from hyplab.errors import CoincidentPoints, DegenerateBoundaryPair

radii = st.floats(0.0, 0.95)
angles = st.floats(0.0, 2 * math.pi, exclude_max=True)


@st.composite
def disk_points(draw):
    return draw(radii) * complex(np.exp(1j * draw(angles)))


@st.composite
def isometries(draw):
    p = draw(disk_points())
    return geo.translation_to(p) @ geo.rotation(draw(angles))


def ray_point(v, t, x=0j):
    """Point at distance t from x on the ray toward the boundary angle v."""
    to_x = geo.translation_to(x)
    local = float(to_x.inverse().apply_angle(v))
    return complex(to_x.apply(math.tanh(t / 2) * np.exp(1j * local)))


def test_distance_matches_radial_integral():
    # the metric is 2|dz| / (1 - |z|^2)
    value, _ = integrate.quad(lambda r: 2.0 / (1.0 - r * r), 0.0, 0.5)
    assert geo.hyp_dist(0j, 0.5) == pytest.approx(value, abs=1e-12)
    assert geo.hyp_dist(0j, 0.5) == pytest.approx(math.log(3.0), abs=1e-12)


def test_identity_and_translation():
    assert geo.IDENTITY.apply(0.3 + 0.4j) == pytest.approx(0.3 + 0.4j)
    assert geo.mobius_apply(geo.IDENTITY, (0.3, 0.4)) == pytest.approx(0.3 + 0.4j)
    p = -0.2 + 0.55j
    assert geo.translation_to(p).apply(0j) == pytest.approx(p, abs=1e-15)


def test_boundary_points_are_rejected():
    with pytest.raises(ValueError):
        geo.as_disk_point(1.0)
    with pytest.raises(ValueError):
        geo.as_disk_point((0.6, 0.8))


def test_translation_length_matches_iteration():
    g = geo.translation_to(0.3 + 0.2j) @ geo.rotation(0.4) @ geo.axial_translation(2.5, 1.0)
    t = g.translation_length()
    # oracle: 2 log of the spectral radius of the half-plane matrix
    a, b, c, d = g.m
    eig = np.abs(np.linalg.eigvals(np.array([[a, b], [c, d]]))).max()
    assert t == pytest.approx(2 * math.log(eig), rel=1e-12)
    z = 0j
    k = 12
    for _ in range(k):
        z = complex(g.apply(z))
    # |d(0, g^k 0) - k t| stays bounded by twice the distance from 0 to the axis
    assert abs(geo.hyp_dist(0j, z) / k - t) < 0.2


def test_busemann_is_a_limit_along_the_ray():
    x, y, v = 0.1 - 0.3j, -0.4 + 0.2j, 2.2
    r = ray_point(v, 25.0)
    limit = geo.hyp_dist(x, r) - geo.hyp_dist(y, r)
    # beta_v(x, y) = lim d(x, r_t) - d(y, r_t)
    assert geo.busemann(v, x, y) == pytest.approx(limit, abs=1e-8)


def test_boundary_gromov_product_is_a_limit():
    x, v, w = 0.2 + 0.1j, 0.7, 2.9
    t = 18.0
    a, b = ray_point(v, t, x), ray_point(w, t, x)
    approx = 0.5 * (geo.hyp_dist(x, a) + geo.hyp_dist(x, b) - geo.hyp_dist(a, b))
    exact = geo.gromov_product(geo.BoundaryDirection(v), geo.BoundaryDirection(w), x)
    assert exact == pytest.approx(approx, abs=1e-6)
    assert geo.visual_dist(v, w, x) == pytest.approx(math.exp(-exact), rel=1e-12)


def test_mixed_gromov_product_is_a_limit():
    x, y, v = 0.3j, -0.5 + 0.1j, 4.0
    a = ray_point(v, 20.0, x)
    approx = 0.5 * (geo.hyp_dist(x, a) + geo.hyp_dist(x, y) - geo.hyp_dist(a, y))
    assert geo.gromov_product(geo.BoundaryDirection(v), y, x) == pytest.approx(approx, abs=1e-7)


def test_gromov_product_of_a_point_with_itself():
    with pytest.raises(DegenerateBoundaryPair):
        geo.gromov_product(geo.BoundaryDirection(1.0), geo.BoundaryDirection(1.0), 0j)


def test_visual_diameter_points():
    assert geo.visual_dist(0.0, math.pi) == pytest.approx(1.0)


def test_conformal_factor_matches_finite_difference():
    g = geo.translation_to(0.4 - 0.3j) @ geo.rotation(1.1)
    x, v = 0.1 + 0.2j, 2.0
    h = 1e-6
    ratio = geo.visual_dist(g.apply_angle(v), g.apply_angle(v + h), x) / geo.visual_dist(v, v + h, x)
    assert geo.conformal_factor(g, v, x) == pytest.approx(ratio, rel=1e-5)


def test_shadow_half_width_closed_form():
    R, D = 2.0, 6.0
    y = math.tanh(D / 2) * np.exp(0.8j)
    arc = geo.shadow_arc(0j, y, R)
    # a ray at angle theta from the direction of y passes at distance
    # asinh(sinh D sin theta); setting it to R gives the edge
    assert arc.half_width == pytest.approx(math.asin(math.sinh(R) / math.sinh(D)), abs=1e-9)
    assert arc.center == pytest.approx(0.8)


def test_shadow_edges_from_moved_base_point():
    x, y, R = 0.3 - 0.2j, -0.6 + 0.5j, 1.0
    arc = geo.shadow_arc(x, y, R)
    for edge in (arc.center - arc.half_width, arc.center + arc.half_width):
        # oracle: closest approach of the ray from x toward `edge`, found numerically
        res = optimize.minimize_scalar(lambda t: geo.hyp_dist(ray_point(edge, t, x), y), bounds=(0, 20), method="bounded", options={"xatol": 1e-12})
        assert res.fun == pytest.approx(R, abs=1e-6)


def test_shadow_contains_projection_and_full_when_close():
    assert geo.shadow_arc(0j, 0.5, 2.0).is_full
    with pytest.raises(CoincidentPoints):
        geo.shadow_arc(0.1j, 0.1j, 1.0)
    with pytest.raises(ValueError):
        geo.shadow_arc(0j, 0.5, 0.0)


def test_arc_intervals_wrap():
    arc = geo.Arc(0.1, 0.3)
    parts = arc.intervals()
    assert len(parts) == 2
    assert sum(hi - lo for lo, hi in parts) == pytest.approx(0.6)
    assert arc.contains(2 * math.pi - 0.1)
    assert not arc.contains(math.pi)


def test_identity_suite_on_ten_thousand_cases():
    out = geo.identity_suite(np.random.default_rng(0), 10_000)
    assert max(out.values()) < 1e-9


def test_four_point_constant_of_the_plane():
    delta = geo.measure_delta(np.random.default_rng(1), 5000)
    assert 0.0 <= delta <= geo.GeometryContext().delta + 1e-9


def test_attracting_fixed_point():
    g = geo.axial_translation(3.0, 0.7)
    assert g.attracting_angle() == pytest.approx(0.7)
    with pytest.raises(ValueError):
        geo.rotation(1.0).attracting_angle()


@settings(max_examples=200, deadline=None)
@given(disk_points(), disk_points(), disk_points(), angles)
def test_busemann_cocycle_and_bound(x, y, z, v):
    b_xy = geo.busemann(v, x, y)
    assert geo.busemann(v, x, z) == pytest.approx(b_xy + geo.busemann(v, y, z), abs=1e-9)
    assert geo.busemann(v, y, x) == pytest.approx(-b_xy, abs=1e-12)
    assert abs(b_xy) <= geo.hyp_dist(x, y) + 1e-9


@settings(max_examples=200, deadline=None)
@given(isometries(), disk_points(), disk_points(), angles, angles)
def test_isometry_equivariance(g, x, y, v, w):
    gx, gy = g.apply(x), g.apply(y)
    assert geo.hyp_dist(gx, gy) == pytest.approx(geo.hyp_dist(x, y), abs=1e-9)
    assert geo.busemann(g.apply_angle(v), gx, gy) == pytest.approx(geo.busemann(v, x, y), abs=1e-8)
    if abs(geo.angle_diff(v, w)) > 1e-3:
        lhs = geo.visual_dist(g.apply_angle(v), g.apply_angle(w), gx)
        assert lhs == pytest.approx(geo.visual_dist(v, w, x), rel=1e-8)


@settings(max_examples=100, deadline=None)
@given(isometries(), isometries(), disk_points())
def test_composition_and_inverse(g, h, z):
    assert (g @ h).apply(z) == pytest.approx(g.apply(h.apply(z)), abs=1e-9)
    assert g.inverse().apply(g.apply(z)) == pytest.approx(z, abs=1e-9)
    assert g.det() == pytest.approx(1.0)


@settings(max_examples=100, deadline=None)
@given(disk_points(), disk_points(), st.floats(0.2, 3.0))
def test_shadow_contains_its_radial_direction(x, y, R):
    if geo.hyp_dist(x, y) < 1e-6:
        return
    arc = geo.shadow_arc(x, y, R)
    to_x = geo.translation_to(x)
    local = to_x.inverse().apply(y)
    direction = float(to_x.apply_angle(np.angle(local)))
    assert arc.contains(direction)


def test_distance_of_nearby_points_keeps_precision():
    # d = 2|p - q| / (1 - |p|^2) to first order
    p = 0.3 + 0.1j
    assert geo.hyp_dist(p, p + 1e-9) == pytest.approx(2e-9 / (1 - abs(p) ** 2), rel=1e-6)
