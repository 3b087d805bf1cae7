import math
from fractions import Fraction
from itertools import product

import pytest

from midlayer.errors import ParameterError
from midlayer.expansion import (closed_form_terms, cluster_weight, enumerate_clusters,
                                epsilon_shape_log, expansion_report, expansion_term,
                                kp_check, partial_sums, predict_partition, term_structure,
                                truncated_expansion)
from midlayer.lattice import Side, middle_graph
from midlayer.polymers import WeightParams, enumerate_polymers, gamma_fn
from midlayer.ursell import IncompatibilityGraph, ursell_bruteforce

ONE = Fraction(1)
LAMS = [Fraction(1, 3), Fraction(1), Fraction(5, 2)]


def ordered_tuple_term(g, k, lam):
    """L_k straight from the definition: every ordered tuple, edge-subset Ursell."""
    polys = [p for p in enumerate_polymers(g, k, Side.UPPER)]
    by_size = {}
    for p in polys:
        by_size.setdefault(p.size, []).append(p)
    total = Fraction(0)

    def compositions(n):
        if n == 0:
            yield ()
            return
        for first in range(1, n + 1):
            for rest in compositions(n - first):
                yield (first,) + rest

    for comp in compositions(k):
        pools = [by_size.get(s, []) for s in comp]
        for tup in product(*pools):
            m = len(tup)
            edges = [(i, j) for i in range(m) for j in range(i + 1, m)
                     if tup[i].boundary & tup[j].boundary]
            phi = ursell_bruteforce(IncompatibilityGraph.from_edges(m, edges))
            if phi == 0:
                continue
            w = Fraction(1)
            for p in tup:
                w *= lam ** p.size / (1 + lam) ** p.boundary_size
            total += phi * w
    return total


def test_cluster_counts_d3(g3):
    assert len(enumerate_clusters(g3, 1)) == 10
    two = enumerate_clusters(g3, 2)
    repeated = [c for c in two if c.length == 2 and len(c.parts) == 1]
    pairs = [c for c in two if len(c.parts) == 2]
    single = [c for c in two if c.length == 1]
    assert (len(repeated), len(pairs), len(single)) == (10, 30, 30)
    assert all(c.orderings == 2 for c in pairs)
    assert sum(c.orderings for c in pairs) == 60
    assert all(c.graph.is_connected() for c in two)


def test_cluster_counts_d2(g2):
    two = enumerate_clusters(g2, 2)
    repeated = [c for c in two if len(c.parts) == 1 and c.length == 2]
    pairs = [c for c in two if len(c.parts) == 2]
    single = [c for c in two if c.length == 1]
    assert (len(repeated), len(pairs), len(single)) == (3, 3, 0)


def test_cluster_size_and_orderings(g3):
    for k in (1, 2, 3):
        for c in enumerate_clusters(g3, k):
            assert c.size == k
            denom = 1
            for _, m in c.parts:
                denom *= math.factorial(m)
            assert c.orderings == math.factorial(c.length) // denom


def test_cluster_weight_examples(g2):
    w = WeightParams(ONE, 2)
    by_shape = {}
    for c in enumerate_clusters(g2, 1) + enumerate_clusters(g2, 2):
        shape = tuple(m for _, m in c.parts)
        by_shape.setdefault(shape, []).append(c)
    assert {cluster_weight(c, w) for c in by_shape[(1,)]} == {Fraction(1, 4)}
    assert {cluster_weight(c, w) for c in by_shape[(1, 1)]} == {Fraction(-1, 32)}
    assert {c.orderings for c in by_shape[(1, 1)]} == {2}
    assert {cluster_weight(c, w) for c in by_shape[(2,)]} == {Fraction(-1, 32)}
    assert {c.orderings for c in by_shape[(2,)]} == {1}


@pytest.mark.parametrize("d", [2, 3, 4, 5])
@pytest.mark.parametrize("lam", LAMS)
def test_first_term_closed_form(d, lam):
    g = middle_graph(d)
    assert expansion_term(g, WeightParams(lam, d), 1) == closed_form_terms(d, lam)[0]


@pytest.mark.parametrize("d", [3, 4, 5])
@pytest.mark.parametrize("lam", LAMS)
def test_second_term_closed_form(d, lam):
    g = middle_graph(d)
    assert expansion_term(g, WeightParams(lam, d), 2) == closed_form_terms(d, lam)[1]


@pytest.mark.parametrize("lam", LAMS)
def test_second_term_gap_at_d2(g2, lam):
    gap = math.comb(3, 2) * math.comb(2, 2) * lam ** 2 / (1 + lam) ** 3
    assert closed_form_terms(2, lam)[1] - expansion_term(g2, WeightParams(lam, 2), 2) == gap


def test_closed_form_examples():
    assert closed_form_terms(3, ONE) == (Fraction(5, 4), Fraction(25, 64))
    assert closed_form_terms(2, ONE) == (Fraction(3, 4), Fraction(3, 32))
    assert closed_form_terms(10, ONE)[0] == Fraction(92378, 1024)
    with pytest.raises(ParameterError):
        closed_form_terms(1, ONE)


@pytest.mark.parametrize("lam", [Fraction(1, 2), ONE, Fraction(2)])
def test_d2_terms_match_log_series(g2, lam):
    # at d=2 the polymers are three pairwise incompatible singletons, so
    # ln Xi = ln(1 + 3x) with x = lam/(1+lam)^2
    x = lam / (1 + lam) ** 2
    for k in range(1, 6):
        want = Fraction((-1) ** (k + 1), k) * (3 * x) ** k
        assert term_structure(g2, k).evaluate(lam) == want


@pytest.mark.parametrize("lam", [ONE, Fraction(2, 3)])
def test_third_term_matches_ordered_tuples(g3, lam):
    assert term_structure(g3, 3).evaluate(lam) == ordered_tuple_term(g3, 3, lam)


def test_pinned_higher_terms(g3):
    assert term_structure(g3, 3).evaluate(ONE) == Fraction(125, 768)
    assert term_structure(g3, 4).evaluate(ONE) == Fraction(-585, 8192)


@pytest.mark.slow
def test_pinned_higher_terms_d4(g4):
    assert term_structure(g4, 3).evaluate(ONE) == Fraction(5075, 12288)
    assert term_structure(g4, 4).evaluate(ONE) == Fraction(68565, 262144)


def test_partial_sums_and_truncation_alias():
    terms = [Fraction(1), Fraction(-1, 2), Fraction(1, 3)]
    assert partial_sums(terms) == [1, Fraction(1, 2), Fraction(5, 6)]
    assert truncated_expansion(terms, 1) == 0
    assert truncated_expansion(terms, 3) == Fraction(1, 2)
    assert truncated_expansion(terms, 4) == partial_sums(terms)[-1]
    with pytest.raises(ParameterError):
        truncated_expansion(terms, 5)


def test_report_fields():
    rep = expansion_report(3, ONE, 2, "closed_form").as_dict()
    assert rep["terms"] == ["5/4", "25/64"]
    assert rep["partial_sums"] == ["5/4", "105/64"]
    assert rep["lambda"] == "1"
    assert rep["regime_warnings"]
    assert rep["epsilon_note"].startswith("shape only")
    assert rep["log_epsilon_shape_bound"] == pytest.approx(epsilon_shape_log(3, 1.0, 2))


def test_report_rejects_bad_inputs():
    with pytest.raises(ParameterError):
        expansion_report(3, ONE, 3, "closed_form")
    with pytest.raises(ParameterError):
        expansion_report(3, ONE, 0)
    with pytest.raises(ParameterError):
        expansion_report(3, ONE, 1, "guess")


def test_closed_form_d2_is_flagged():
    rep = expansion_report(2, ONE, 2, "closed_form")
    assert any("size-2 polymers" in w for w in rep.warnings)


def test_predict_d3():
    r = predict_partition(3, ONE, 2, "closed_form")
    assert r["log_Z_estimate"] == pytest.approx(11 * math.log(2) + 105 / 64, rel=1e-14)
    assert r["log_Z_estimate"] == pytest.approx(9.26524, abs=5e-6)


def test_predict_d2_enumerated():
    r = predict_partition(2, ONE, 1, "enumerated")
    assert r["log_Z_estimate"] == pytest.approx(4 * math.log(2) + 0.75, rel=1e-14)
    assert r["log_Z_estimate"] - math.log(18) > 0.6


def test_predict_small_lambda_warns():
    r = predict_partition(4, 1e-9, 2, "closed_form")
    assert r["log_Z_estimate"] == pytest.approx(math.log(2), abs=1e-6)
    assert any("lambda below" in w for w in r["warnings"])


def test_epsilon_shape_formula():
    d, lam, k = 12, 3.0, 2
    j = k + 1
    want = (math.log(math.comb(23, 12)) + (11 * j - 2) * math.log(d)
            - (d * j - 1.5 * j * j) * math.log(1 + lam))
    assert epsilon_shape_log(d, lam, k) == pytest.approx(want, rel=1e-14)


def test_kp_singletons_d2(g2):
    r = kp_check(g2, WeightParams(ONE, 2), 1)
    want = 0.25 * math.exp(0.25) * math.exp(gamma_fn(2, 1, 1.0))
    assert gamma_fn(2, 1, 1.0) == pytest.approx(2 / 12 * math.log(2), rel=1e-15)
    assert r["per_vertex_sums"] == pytest.approx([want] * 3, rel=1e-14)
    assert r["worst_vertex_sum"] > r["per_vertex_bound"] == 1 / 16
    assert r["verdict"] == "fail"
    assert not r["truncated"]


def test_kp_small_lambda_vanishes(g3):
    r = kp_check(g3, WeightParams(1e-12, 3), 2)
    assert r["worst_vertex_sum"] < 1e-9
    assert r["vertex_condition"] and r["polymer_condition"]
    assert r["verdict"] == "truncated"


def test_kp_d3_cap3_independent_recomputation(g3):
    w = WeightParams(ONE, 3)
    r = kp_check(g3, w, 3)
    assert r["truncated"]
    assert set(r["margins_by_size"]) == {"1", "2", "3"}
    polys = enumerate_polymers(g3, 3, Side.UPPER)
    # summed per vertex in reverse polymer order, in log space first
    for v in range(g3.N):
        logs = [p.size * math.log(1.0) - p.boundary_size * math.log(2.0)
                + p.size / 9 + gamma_fn(3, p.size, 1.0)
                for p in reversed(polys) if p.mask >> v & 1]
        expect = sum(math.exp(x) for x in logs)
        assert r["per_vertex_sums"][v] == pytest.approx(expect, rel=1e-12)
