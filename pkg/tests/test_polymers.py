import math
from fractions import Fraction

import pytest
from hypothesis import given, settings, strategies as st

from midlayer.errors import ParameterError
from midlayer.lattice import (Side, VertexSet, closure, component_masks, is_two_linked,
                              middle_graph, neighborhood)
from midlayer.polymers import (WeightParams, compatible, container_bound, container_report,
                               container_sum, enumerate_container_family, enumerate_polymers,
                               gamma_fn, good_mask, is_polymer, make_polymer, polymer_weight)

UP = Side.UPPER


def vs(g, *labels):
    return g.vertex_set(UP, labels)


def test_is_polymer_examples(g2, g3):
    assert is_polymer(g2, vs(g2, "12"))
    assert not is_polymer(g2, vs(g2, "12", "13"))
    assert is_polymer(g3, vs(g3, "123", "124"))
    assert not is_polymer(g3, vs(g3, "123", "145"))
    assert not is_polymer(g3, VertexSet(UP, 0))


def test_make_polymer_rejects_non_polymers(g2):
    with pytest.raises(ParameterError):
        make_polymer(g2, vs(g2, "12", "13"))


def test_weight_examples(g2, g3):
    w = WeightParams(Fraction(1), 2)
    assert polymer_weight(make_polymer(g2, vs(g2, "12")), w) == Fraction(1, 4)
    p = make_polymer(g3, vs(g3, "123", "124"))
    assert polymer_weight(p, WeightParams(Fraction(1), 3)) == Fraction(1, 32)
    assert polymer_weight(p, WeightParams(Fraction(1), 3), "aux") == Fraction(1, 32)
    aux = polymer_weight(p, WeightParams(Fraction(1), 3, aux_c=2.0), "aux")
    assert aux == pytest.approx(math.exp(2 / 9) / 32, rel=1e-15)


def test_weight_params_validation():
    with pytest.raises(ParameterError):
        WeightParams(Fraction(0), 3)
    with pytest.raises(ParameterError):
        WeightParams(Fraction(1), 3, aux_c=0.5)


def test_compatibility_examples(g2, g3):
    a, b = make_polymer(g2, vs(g2, "12")), make_polymer(g2, vs(g2, "13"))
    assert not compatible(a, b)
    assert not compatible(a, a)
    p, q = make_polymer(g3, vs(g3, "123")), make_polymer(g3, vs(g3, "145"))
    assert compatible(p, q)


@pytest.mark.parametrize("d", [2, 3, 4, 5])
def test_singleton_polymers_number_N(d):
    g = middle_graph(d)
    assert len(enumerate_polymers(g, 1)) == g.N


def test_polymer_counts_small(g2, g3):
    assert len(enumerate_polymers(g3, 2)) == 10 + 30
    assert len(enumerate_polymers(g2, 2)) == 3


def test_cached_fields_match_recomputation(g3):
    for p in enumerate_polymers(g3, 4):
        s = p.vertices
        assert p.boundary == neighborhood(g3, s).mask
        assert p.closure_size == len(closure(g3, s))
        assert 2 * p.closure_size <= g3.N


def test_compatibility_symmetric_and_irreflexive(g3):
    polys = enumerate_polymers(g3, 2)
    for p in polys:
        assert not compatible(p, p)
        for q in polys:
            assert compatible(p, q) == compatible(q, p)
            # compatible exactly when the union is not 2-linked
            if p != q:
                union = VertexSet(UP, p.mask | q.mask)
                assert compatible(p, q) == (not is_two_linked(g3, union) and not p.mask & q.mask)


def test_weight_depends_only_on_sizes(g3):
    lam = Fraction(2, 3)
    w = WeightParams(lam, 3)
    for p in enumerate_polymers(g3, 3):
        assert polymer_weight(p, w) == lam ** p.size / (1 + lam) ** p.boundary_size


@pytest.mark.parametrize("a,b,count,total", [
    (1, 3, 10, Fraction(10, 8)),
    (2, 5, 30, Fraction(30, 32)),
    (4, 6, 25, Fraction(25, 64)),
])
def test_container_families(g3, a, b, count, total):
    f = enumerate_container_family(g3, a, b)
    assert f.count == count
    assert container_sum(f, Fraction(1)) == total


def test_container_family_oracle(g3):
    # brute force over all 2^10 subsets
    for a, b in [(2, 5), (4, 6), (3, 6)]:
        brute = []
        for m in range(1, 1 << 10):
            s = VertexSet(UP, m)
            if (is_two_linked(g3, s) and len(neighborhood(g3, s)) == b
                    and len(closure(g3, s)) == a):
                brute.append(m)
        assert enumerate_container_family(g3, a, b).members == brute


def test_empty_container_family(g3):
    f = enumerate_container_family(g3, 1, 4)
    assert f.count == 0 and container_sum(f, Fraction(1)) == 0


def test_container_report_shape(g3):
    f = enumerate_container_family(g3, 1, 3)
    rep = container_report(g3, f, Fraction(1), c1=1.0, with_members=True)
    assert rep["sum"] == "5/4" and rep["count"] == 10 and len(rep["members"]) == 10
    assert rep["bound_shape"] == pytest.approx(container_bound(3, 1, 3, 1.0))


def test_gamma_examples():
    assert gamma_fn(10, 1, 1) == pytest.approx(8.5 * math.log(2) - 11 * math.log(10), abs=1e-12)
    assert gamma_fn(10, 1, 1) == pytest.approx(-19.437, abs=5e-4)
    assert gamma_fn(100, 30, 1) == pytest.approx(250 * math.log(2), rel=1e-12)
    assert gamma_fn(10, 10 ** 5, 1) == pytest.approx(1000)


def test_gamma_ratio_non_increasing():
    # fails: the ratio rises once, at the first k past d/4, for every case here
    rises = []
    for d in (5, 10, 20):
        for lam in (0.5, 1, 2):
            ratios = [gamma_fn(d, k, lam) / k for k in range(1, 10 ** 4 + 1)]
            rises += [(d, lam, k + 1) for k in range(1, len(ratios))
                      if ratios[k] > ratios[k - 1] + 1e-12 * abs(ratios[k - 1])]
    assert not rises, f"gamma/k increases at (d, lambda, k) = {rises}"


@pytest.mark.parametrize("d", [5, 10, 20])
@pytest.mark.parametrize("lam", [0.5, 1, 2])
def test_gamma_ratio_monotone_inside_regimes(d, lam):
    ratios = [gamma_fn(d, k, lam) / k for k in range(1, 10 ** 4 + 1)]
    rises = [k for k in range(1, len(ratios))
             if ratios[k] > ratios[k - 1] + 1e-12 * abs(ratios[k - 1])]
    # the only increase sits at the first step past d/4
    assert rises == [d // 4]


@pytest.mark.parametrize("d,lam", [(400, 0.5), (200, 1), (120, 2)])
def test_gamma_ratio_non_increasing_for_large_d(d, lam):
    ratios = [gamma_fn(d, k, lam) / k for k in range(1, 10 ** 4 + 1)]
    assert all(b <= a + 1e-12 * abs(a) for a, b in zip(ratios, ratios[1:]))


@settings(max_examples=300, deadline=None)
@given(st.integers(min_value=0, max_value=(1 << 10) - 1))
def test_good_mask_matches_polymer_decomposition(mask):
    g = middle_graph(3)
    comps = component_masks(g, UP, mask)
    assert good_mask(g, UP, mask) == all(is_polymer(g, VertexSet(UP, c)) for c in comps)
