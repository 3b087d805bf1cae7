import math
from itertools import combinations

import pytest
from hypothesis import given, settings, strategies as st

from midlayer.errors import ParameterError, ScaleError, ShapeError
from midlayer.lattice import (Side, VertexSet, build_graph, closure, enumerate_two_linked_containing,
                              is_two_linked, isoperimetry_check, iso_bound, middle_graph,
                              neighborhood, parse_vertex, two_linked_components, vertex_label)

UP, LOW = Side.UPPER, Side.LOWER


def vs(g, side, *labels):
    return g.vertex_set(side, labels)


@pytest.mark.parametrize("n,k,up,low,dup,dlow", [
    (3, 2, 3, 3, 2, 2),
    (5, 3, 10, 10, 3, 3),
    (4, 2, 6, 4, 2, 3),
    (6, 1, 6, 1, 1, 6),
])
def test_build_graph_sizes_and_degrees(n, k, up, low, dup, dlow):
    g = build_graph(n, k)
    assert (g.size(UP), g.size(LOW)) == (up, low)
    assert {g.degree(UP, v) for v in range(up)} == {dup}
    assert {g.degree(LOW, v) for v in range(low)} == {dlow}


def test_adjacency_is_single_bit_containment():
    g = build_graph(5, 3)
    for u in range(g.size(UP)):
        for v in range(g.size(LOW)):
            a, b = g.bits(UP, u), g.bits(LOW, v)
            expect = (a & b) == b and (a ^ b).bit_count() == 1
            assert (g.nbr_mask(UP, u) >> v & 1) == expect


@pytest.mark.parametrize("n,k", [(0, 1), (3, 0), (3, 4), (64, 2)])
def test_build_graph_rejects_out_of_range(n, k):
    with pytest.raises(ParameterError):
        build_graph(n, k)


def test_build_graph_scale_cap():
    with pytest.raises(ScaleError):
        build_graph(40, 20)


@pytest.mark.parametrize("d", range(2, 7))
def test_middle_graph_is_regular(d):
    g = middle_graph(d)
    assert g.N == math.comb(2 * d - 1, d)
    for side in Side:
        assert all(g.degree(side, v) == d for v in range(g.size(side)))


def test_non_middle_rejects_polymer_quantities():
    with pytest.raises(ShapeError):
        build_graph(4, 2).N


def test_labels_roundtrip(g3):
    assert vertex_label(parse_vertex("{1,2,4}")) == "{1,2,4}"
    assert parse_vertex("124") == parse_vertex("{1,2,4}") == 0b1011
    s = vs(g3, UP, "123", "145")
    assert g3.from_json(g3.to_json(s)) == s


def test_neighborhood_examples(g2, g3):
    assert g2.labels(neighborhood(g2, vs(g2, UP, "12"))) == ["{1}", "{2}"]
    assert len(neighborhood(g2, VertexSet(UP, 0))) == 0
    nb = neighborhood(g3, vs(g3, UP, "123", "124"))
    assert sorted(g3.labels(nb)) == sorted(["{1,2}", "{1,3}", "{2,3}", "{1,4}", "{2,4}"])


def test_closure_examples(g2, g3):
    cl = closure(g3, vs(g3, UP, "123", "134", "234"))
    assert g3.labels(cl) == ["{1,2,3}", "{1,2,4}", "{1,3,4}", "{2,3,4}"]
    assert len(closure(g2, vs(g2, UP, "12", "13"))) == 3
    assert len(closure(g3, VertexSet(UP, 0))) == 0


def test_component_examples(g2, g3):
    parts = two_linked_components(g3, vs(g3, UP, "123", "145"))
    assert sorted(len(p) for p in parts) == [1, 1]
    assert [len(p) for p in two_linked_components(g2, vs(g2, UP, "12", "13", "23"))] == [3]
    assert two_linked_components(g3, VertexSet(UP, 0)) == []


@settings(max_examples=200, deadline=None)
@given(st.integers(min_value=0, max_value=(1 << 10) - 1), st.sampled_from(list(Side)))
def test_components_form_a_partition(mask, side):
    g = middle_graph(3)
    parts = two_linked_components(g, VertexSet(side, mask))
    union = 0
    for p in parts:
        assert union & p.mask == 0
        assert is_two_linked(g, p)
        union |= p.mask
    assert union == mask
    for p, q in combinations(parts, 2):
        assert not is_two_linked(g, p | q)


@settings(max_examples=200, deadline=None)
@given(st.integers(min_value=0, max_value=(1 << 10) - 1))
def test_closure_contains_set_and_is_bounded_by_boundary(mask):
    g = middle_graph(3)
    s = VertexSet(UP, mask)
    cl = closure(g, s)
    assert s.issubset(cl)
    assert len(cl) <= len(neighborhood(g, s))
    assert neighborhood(g, cl) == neighborhood(g, s)


@pytest.mark.parametrize("d,label,t,expect", [
    (3, "123", 1, 1),
    (3, "123", 2, 6),
    (4, "1234", 2, 12),
])
def test_two_linked_counts(d, label, t, expect):
    g = middle_graph(d)
    count, _ = enumerate_two_linked_containing(g, UP, g.vid(UP, parse_vertex(label)), t)
    assert count == expect


def test_two_linked_count_matches_brute_force(g3):
    v = 0
    for t in (1, 2, 3):
        brute = sum(1 for c in combinations(range(1, g3.N), t - 1)
                    if is_two_linked(g3, VertexSet(UP, (1 << v) | sum(1 << i for i in c))))
        count, listing = enumerate_two_linked_containing(g3, UP, v, t, listing=True)
        assert count == brute == len(listing)


def test_two_linked_count_is_vertex_independent(g3):
    for t in (1, 2, 3, 4):
        counts = {enumerate_two_linked_containing(g3, side, v, t)[0]
                  for side in Side for v in range(g3.N)}
        assert len(counts) == 1


def test_isoperimetry_examples(g3):
    rep = isoperimetry_check(g3, "i")
    assert rep.passed and rep.scanned == 0
    rep = isoperimetry_check(g3, "iii", budget=5)
    assert rep.passed and rep.scanned == sum(math.comb(10, s) for s in range(1, 6))
    assert isoperimetry_check(g3, "ii").passed


def test_isoperimetry_sampled_mode_is_flagged_and_seeded(g4):
    a = isoperimetry_check(g4, "iii", budget=6, samples=50, seed=3)
    b = isoperimetry_check(g4, "iii", budget=6, samples=50, seed=3)
    assert a.sampled and a.seed == 3 and a.as_dict() == b.as_dict()
    assert a.passed


def test_iso_bound_ranges():
    assert iso_bound("i", 8, 2) == 14
    assert iso_bound("i", 8, 3) is None
    assert iso_bound("iii", 3, 6) is None
    with pytest.raises(ParameterError):
        iso_bound("iv", 3, 1)
