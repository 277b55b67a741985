import math
import warnings

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from hyplab import geometry as geo
from hyplab import group as grp
from hyplab.errors import BudgetExceeded, DegenerateDisk, DisksOverlap, ElementaryGroupWarning, InsufficientDepth, OutOfRange


def brute_force_words(model, max_len):
    """All reduced words up to max_len, composed one MoebiusMap at a time."""
    letters = model.letters
    maps = dict(zip(letters, model.letter_maps()))
    inv = {c: c.swapcase() for c in letters}
    out = {"": geo.IDENTITY}
    frontier = {"": geo.IDENTITY}
    for _ in range(max_len):
        nxt = {}
        for w, g in frontier.items():
            for c in letters:
                if w and w[-1] == inv[c]:
                    continue
                nxt[w + c] = g @ maps[c]
        out.update(nxt)
        frontier = nxt
    return out


def test_reference_group_certificate(model):
    assert model.rank == 2
    assert grp.pingpong_certificate(model)
    assert model.letters == "abAB"


def test_pingpong_by_direct_interval_images(model):
    # oracle: points sampled outside the source arc land inside the target arc
    rng = np.random.default_rng(3)
    for i, g in enumerate(model.letter_maps()):
        (cs, rs), (ct, rt) = model.source_disk(i), model.target_disk(i)
        theta = cs + rs + rng.uniform(1e-9, 2 * math.pi - 2 * rs - 1e-9, 500)
        assert np.all(np.abs(geo.angle_diff(g.apply_angle(theta), ct)) <= rt + 1e-12)


def test_overlapping_and_degenerate_disks():
    with pytest.raises(DisksOverlap):
        grp.build_schottky([(0.0, 0.5), (0.6, 0.3)])
    with pytest.raises(DegenerateDisk):
        grp.build_schottky([(0.0, 0.0), (math.pi, 0.3)])
    with pytest.raises(DegenerateDisk):
        grp.build_schottky([(0.0, 1.6), (math.pi, 0.3)])


def test_rank_one_is_flagged():
    with pytest.warns(ElementaryGroupWarning):
        model = grp.build_schottky([(0.0, 0.3), (math.pi, 0.3)])
    cat = grp.enumerate_orbit(model, max_dist=20)
    with pytest.warns(ElementaryGroupWarning):
        assert grp.estimate_alpha(cat).value == 0.0


def test_enumeration_matches_brute_force(model):
    cat = grp.enumerate_orbit(model, max_dist=8.0)
    words = brute_force_words(model, 5)
    expected = {w for w, g in words.items() if geo.hyp_dist(0j, g.apply(0j)) <= 8.0}
    assert set(cat.words) == expected
    for w, d in zip(cat.words, cat.dists):
        assert d == pytest.approx(float(geo.hyp_dist(0j, words[w].apply(0j))), abs=1e-9)


def test_catalog_order_and_inverse_closure(catalog):
    assert catalog.words[0] == ""
    assert np.all(np.diff(catalog.dists) >= 0)
    words = set(catalog.words)
    for w in catalog.words:
        assert w[::-1].swapcase() in words
    # d(x, gamma x) = d(x, gamma^-1 x)
    back = catalog.inverse_images()
    assert np.allclose(geo.hyp_dist(0j, back), catalog.dists, atol=1e-9)


def test_moved_base_point(model):
    x = 0.1 + 0.2j
    cat = grp.enumerate_orbit(model, x=x, max_dist=9.0)
    for i in range(1, len(cat)):
        g = model.word_map(cat.words[i])
        assert cat.images[i] == pytest.approx(complex(g.apply(x)), abs=1e-9)
        assert cat.dists[i] == pytest.approx(float(geo.hyp_dist(x, g.apply(x))), abs=1e-9)


def test_budget_cap(model):
    with pytest.raises(BudgetExceeded):
        grp.enumerate_orbit(model, max_dist=30.0, point_cap=2000)


def test_enumeration_is_thread_independent(model):
    a = grp.enumerate_orbit(model, max_dist=16.0, n_jobs=1)
    b = grp.enumerate_orbit(model, max_dist=16.0, n_jobs=4)
    assert a.words == b.words
    assert np.array_equal(a.mats, b.mats)
    assert np.array_equal(a.dists, b.dists)


def test_catalog_roundtrip(tmp_path, catalog):
    path = tmp_path / "cat.txt"
    grp.export_catalog(catalog, path)
    back = grp.import_catalog(path)
    assert back.words == catalog.words
    assert np.array_equal(back.mats, catalog.mats)
    assert np.array_equal(back.dists, catalog.dists)
    assert back.max_dist == catalog.max_dist


def test_annulus_spec_and_range(catalog):
    with pytest.raises(ValueError):
        grp.AnnulusSpec(0, 1.0)
    with pytest.raises(ValueError):
        grp.AnnulusSpec(1, 2.0)
    with pytest.raises(OutOfRange):
        catalog.annulus_indices(grp.AnnulusSpec(14, 1.0))
    idx = grp.annulus(catalog, grp.AnnulusSpec(4, 1.0))
    assert np.all((catalog.dists[idx] >= 3.0) & (catalog.dists[idx] < 5.0))
    assert len(idx) == 4
    assert catalog.count_within(4.0) == 5
    assert catalog.feasible_n(1.0) == list(range(4, 14))


def test_alpha_needs_depth(model):
    shallow = grp.enumerate_orbit(model, max_dist=6.0)
    with pytest.raises(InsufficientDepth):
        grp.estimate_alpha(shallow)


def synthetic_catalog(alpha, depth, step=0.25):
    # counts growing like exp(alpha d), placed on a fine grid of distances
    d = [0.0]
    for k in np.arange(step, depth, step):
        n = int(round(math.exp(alpha * k) * (1 - math.exp(-alpha * step))))
        d.extend([k] * max(n, 0))
    d = np.array(d)
    n = len(d)
    eye = np.tile([1.0, 0.0, 0.0, 1.0], (n, 1))
    return grp.OrbitCatalog(0j, depth, tuple(str(i) for i in range(n)), eye, np.zeros(n, complex), d, 2, "abAB")


def test_estimators_recover_synthetic_rate():
    # oracle: a catalog built with a known exponential counting function
    cat = synthetic_catalog(0.8, 16.0)
    est = grp.estimate_alpha(cat)
    assert est.value == pytest.approx(0.8, rel=0.02)
    assert est.cross_check == pytest.approx(0.8, rel=0.05)


def test_growth_report_rows(catalog, alpha):
    rep = grp.growth_report(catalog, 1.0, alpha)
    assert [r["n"] for r in rep.rows] == catalog.feasible_n(1.0, n_min=1)
    assert rep.rows[0]["count"] == len(catalog.annulus_indices(grp.AnnulusSpec(1, 1.0)))


@settings(max_examples=25, deadline=None)
@given(st.lists(st.sampled_from("abAB"), min_size=1, max_size=6))
def test_word_map_respects_free_reduction(letters):
    model = grp.build_schottky(grp.REFERENCE_DISKS)
    w = "".join(letters)
    inv = w[::-1].swapcase()
    z = model.word_map(w + inv).apply(0.2 + 0.1j)
    assert z == pytest.approx(0.2 + 0.1j, abs=1e-8)


def test_element_images_sit_in_first_letter_disk(catalog, model):
    # ping-pong: gamma x lies over the target disk of the first letter
    for w, z in zip(catalog.words[1:], catalog.images[1:]):
        c, r = model.target_disk(model.letters.index(w[0]))
        assert abs(geo.angle_diff(np.angle(z), c)) <= r + 1e-9


def test_warnings_are_quiet_for_rank_two():
    with warnings.catch_warnings():
        warnings.simplefilter("error")
        grp.build_schottky(grp.REFERENCE_DISKS)
