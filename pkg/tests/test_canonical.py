import math

import numpy as np
import pytest
import sympy
from hypothesis import given, settings
from hypothesis import strategies as st

from weyl_atlas import canonical as cn
from weyl_atlas.scan import Axis, GridSpec, extract_boundaries


def test_real_roots_of_cubic_with_three_roots():
    rs = cn.real_roots([0, -3, 0, 1])
    np.testing.assert_allclose(rs.roots, [-math.sqrt(3), 0, math.sqrt(3)], atol=1e-10)
    assert rs.multiplicities == (1, 1, 1)


def test_real_roots_double_root_at_origin():
    rs = cn.real_roots([0, 0, 1])
    assert len(rs) == 1
    assert abs(rs.roots[0]) < 1e-10
    assert rs.multiplicities == (2,)


def test_real_roots_factored_cubic():
    rs = cn.real_roots([2, -3, 0, 1])  # (x - 1)^2 (x + 2)
    np.testing.assert_allclose(rs.roots, [-2, 1], atol=1e-10)
    assert rs.multiplicities == (1, 2)


def test_real_roots_quintuple_root():
    rs = cn.real_roots([0, 0, 0, 0, 0, 1])
    assert rs.multiplicities == (5,)


def test_real_roots_errors():
    with pytest.raises(ValueError, match="identically zero"):
        cn.real_roots([0, 0, 0])
    with pytest.raises(ValueError, match="unsupported degree"):
        cn.real_roots([1, 0, 0, 0, 0, 0, 1])


def test_rootset_invariants():
    with pytest.raises(ValueError):
        cn.RootSet((1.0, 0.0), (1, 1))
    with pytest.raises(ValueError):
        cn.RootSet((0.0,), (0,))


@pytest.mark.parametrize("cls,t,expected", [
    (cn.Swallowtail(), (0, 1, 1), 2),
    (cn.Swallowtail(presentation="depressed"), (0, 0, -1), 2),
    (cn.Cusp(), (0, -3), 3),
    (cn.Fold(), (1,), 2),
    (cn.Fold(), (-1,), 0),
    (cn.Butterfly(), (0, 0, 0, 0), 1),
])
def test_preimage_count_examples(cls, t, expected):
    assert cn.preimage_count(cls, t) == expected


def test_preimage_count_dimension_mismatch():
    with pytest.raises(ValueError, match="dimension mismatch"):
        cn.preimage_count(cn.Cusp(), (1.0, 2.0, 3.0))


def test_class_dimension_validation():
    with pytest.raises(ValueError):
        cn.Swallowtail(m=2)
    assert cn.Cusp(m=4).m == 4
    assert cn.Butterfly().corank == 1
    with pytest.raises(ValueError):
        cn.CanonicalClass("umbilic")


def test_trailing_coordinates_pass_through():
    # Cusp(3): the third coordinate does not enter the polynomial
    a = cn.preimage_counts(cn.Cusp(3), [[0.1, -3.0, 5.0], [0.1, -3.0, -7.0]])
    assert list(a) == [3, 3]


@pytest.mark.parametrize("t,label", [
    ((-2, 0, 0), cn.StratumLabel.FoldBoundary),
    ((0, 0, 0), cn.StratumLabel.SwallowtailBoundary),
    ((0, 0, -1), cn.StratumLabel.Regular),
    ((-2, 0, 1), cn.StratumLabel.MultiFold),      # (x^2 - 1)^2
])
def test_classify_depressed_quartic(t, label):
    assert cn.classify_control_point(cn.Swallowtail(presentation="depressed"), t) is label


def test_classify_fold_and_cusp_points():
    assert cn.classify_control_point(cn.Fold(), (0,)) is cn.StratumLabel.FoldBoundary
    assert cn.classify_control_point(cn.Cusp(), (0, 0)) is cn.StratumLabel.CuspBoundary
    assert cn.classify_control_point(cn.Butterfly(), (0, 0, 0, 0)) is cn.StratumLabel.ButterflyBoundary


def test_fold_surface_point_has_three_preimages():
    cls = cn.Swallowtail(presentation="depressed")
    assert cn.preimage_count(cls, (-2, 0, 0)) == 3


def test_presentation_round_trip(rng):
    t = rng.uniform(-2, 2, (50, 3))
    T = cn.depressed_to_table("swallowtail", t)
    np.testing.assert_array_equal(cn.table_to_depressed("swallowtail", T), t)
    np.testing.assert_allclose(cn.coefficients(cn.Swallowtail(presentation="depressed"), t),
                               cn.coefficients(cn.Swallowtail(), T))


def test_presentations_give_related_rasters():
    """Depressed slice t1 = -2 equals the table raster on (T2, T3, T1) = (-2, t2, -t3)."""
    n = 41
    dep = GridSpec((Axis("t2", -2, 2, n), Axis("t3", -2, 2, n)), {"t1": -2.0}, order=("t1", "t2", "t3"))
    # table axes: T3 runs over t2, T1 = -t3 runs over the mirrored interval
    tab = GridSpec((Axis("T3", -2, 2, n), Axis("T1", -2, 2, n)), {"T2": -2.0}, order=("T1", "T2", "T3"))
    a = cn.canonical_raster(cn.Swallowtail(presentation="depressed"), dep).counts
    b = cn.canonical_raster(cn.Swallowtail(), tab).counts
    np.testing.assert_array_equal(a, b[:, ::-1])


def test_cubic_phase_structure():
    # pre-images of t = 3x - x^3: x^3 - 3x = -t, i.e. Cusp with (t1, t2) = (-t, -3)
    cls = cn.Cusp()
    counts = {t: cn.preimage_count(cls, (-t, -3)) for t in (-5, -2.5, -1, 0, 1.7, 2.5, 9)}
    assert counts == {-5: 1, -2.5: 1, -1: 3, 0: 3, 1.7: 3, 2.5: 1, 9: 1}
    assert cn.preimage_count(cls, (2, -3)) == 2
    assert cn.preimage_count(cls, (-2, -3)) == 2


@pytest.mark.parametrize("cls", [cn.Fold(), cn.Cusp(), cn.Swallowtail(), cn.Butterfly()])
def test_parity_at_regular_points(cls, rng):
    T = rng.uniform(-2, 2, (300, cls.m))
    counts = cn.preimage_counts(cls, T)
    assert np.all(counts % 2 == cls.degree % 2)


@pytest.mark.parametrize("cls", [cn.Cusp(), cn.Swallowtail(), cn.Butterfly()])
def test_counts_stable_under_tiny_perturbation(cls, rng):
    T = rng.uniform(-2, 2, (1000, cls.m))
    labels = [cn.classify_control_point(cls, t) for t in T]
    regular = T[[lab is cn.StratumLabel.Regular for lab in labels]]
    base = cn.preimage_counts(cls, regular)
    for _ in range(3):
        moved = regular + rng.uniform(-1e-7, 1e-7, regular.shape)
        np.testing.assert_array_equal(cn.preimage_counts(cls, moved), base)


def test_canonical_raster_fold_line():
    g = GridSpec((Axis("t1", -1, 1, 100),))
    r = cn.canonical_raster(cn.Fold(), g)
    c = g.axes[0].centers()
    np.testing.assert_array_equal(r.counts, np.where(c > 0, 2, 0))


def test_canonical_raster_dimension_check():
    g = GridSpec((Axis("t1", -1, 1, 10),))
    with pytest.raises(ValueError, match="dimension mismatch"):
        cn.canonical_raster(cn.Cusp(), g)


def test_cusp_raster_structure():
    g = GridSpec((Axis("t1", -2, 2, 101), Axis("t2", -2, 2, 101)))
    r = cn.canonical_raster(cn.Cusp(), g)
    assert r.values() == [1, 3]
    f = extract_boundaries(r)
    assert len(f.fold_arcs) == 2
    assert len(f.junction_clusters) == 1
    centre = f.junction_clusters[0].mean(axis=0)
    assert np.all(np.abs(centre - 50) <= 5)
    assert f.cluster_kinds == ["cusp"]


def test_swallowtail_slice_regions():
    g = GridSpec((Axis("t2", -2, 2, 81), Axis("t3", -2, 2, 81)), {"t1": -2.0}, order=("t1", "t2", "t3"))
    r = cn.canonical_raster(cn.Swallowtail(presentation="depressed"), g)
    f = extract_boundaries(r)
    fold = np.zeros(r.counts.shape, bool)
    fold[tuple(f.fold_cells.T)] = True
    assert sorted(set(r.counts[~fold].tolist())) == [0, 2, 4]


def test_raster_deterministic_across_workers():
    g = GridSpec((Axis("t1", -2, 2, 30), Axis("t2", -2, 2, 30)))
    a = cn.canonical_raster(cn.Cusp(), g, workers=1).counts
    b = cn.canonical_raster(cn.Cusp(), g, workers=2).counts
    np.testing.assert_array_equal(a, b)


def _exact_distinct_real_roots(coeffs):
    x = sympy.Symbol("x")
    p = sympy.Poly(list(reversed(coeffs)), x)
    return len(set(sympy.real_roots(p)))


@settings(max_examples=150, deadline=None)
@given(st.lists(st.integers(-6, 6), min_size=2, max_size=6).filter(lambda c: c[-1] != 0))
def test_distinct_root_count_matches_exact_arithmetic(coeffs):
    assert cn.distinct_real_root_count([float(c) for c in coeffs]) == _exact_distinct_real_roots(coeffs)


@settings(max_examples=60, deadline=None)
@given(st.lists(st.integers(-3, 3), min_size=1, max_size=3), st.integers(1, 2))
def test_multiplicities_of_constructed_polynomials(roots, extra):
    # prod (x - r)^m with a repeated first root
    rset = sorted(set(roots))
    mult = {r: 1 for r in rset}
    mult[rset[0]] += extra
    p = np.polynomial.polynomial.polyfromroots([r for r in rset for _ in range(mult[r])])
    if len(p) - 1 > 5:
        return
    rs = cn.real_roots(p)
    np.testing.assert_allclose(rs.roots, rset, atol=1e-5)
    assert list(rs.multiplicities) == [mult[r] for r in rset]
