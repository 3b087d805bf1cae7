"""Named self-checks grouped into a fast suite and a full suite."""

from __future__ import annotations

import math
import tempfile
import time
from fractions import Fraction
from itertools import combinations
from pathlib import Path
from typing import Callable

from .errors import CacheError
from .exact import (exact_Z, expected_boundary, identity_check, naive_coefficients,
                    t_subset_lower_bound, xi_exact)
from .expansion import closed_form_terms, term_structure
from .lattice import (Side, build_graph, closure, enumerate_two_linked_containing,
                      isoperimetry_check, middle_graph)
from .polymers import container_sum, enumerate_container_family
from .sampler import exact_nu_table, mu_hat_table, structure_census, tv_distance
from .scalars import fmt_rational
from .ursell import (CACHE_FILE, IncompatibilityGraph, UrsellCache, _canonical,
                     signed_connected_sum, signed_connected_sum_bruteforce, ursell)

# regression constants established by exhaustive computation
Z1_D3 = 6212
Z1_D4 = 1814624809158
CENSUS_FRACTION_D3 = Fraction(6017, 6212)

_CHECKS: list[tuple[str, str, Callable[[], dict]]] = []


def check(name: str, suite: str = "fast"):
    def wrap(fn):
        _CHECKS.append((name, suite, fn))
        return fn
    return wrap


def _ok(passed: bool, **detail) -> dict:
    return {"passed": bool(passed), **detail}


@check("degree_regularity")
def _degrees():
    bad = []
    for d in range(2, 7):
        g = middle_graph(d)
        for side in Side:
            if any(g.degree(side, v) != d for v in range(g.size(side))):
                bad.append(d)
    return _ok(not bad, failing_d=bad)


@check("closure_example")
def _closure():
    g = middle_graph(3)
    cl = closure(g, g.vertex_set(Side.UPPER, ["123", "134", "234"]))
    got = g.labels(cl)
    return _ok(got == ["{1,2,3}", "{1,2,4}", "{1,3,4}", "{2,3,4}"], closure=got)


@check("two_linked_counts")
def _two_linked():
    got = {}
    for d, t, want in ((3, 1, 1), (3, 2, 6), (4, 2, 12)):
        c, _ = enumerate_two_linked_containing(middle_graph(d), Side.UPPER, 0, t)
        got[f"d{d}_t{t}"] = c
        if c != want:
            return _ok(False, counts=got)
    return _ok(True, counts=got)


@check("ursell_unit_values")
def _ursell_units():
    vals = {"K1": ursell(IncompatibilityGraph.complete(1)),
            "K2": ursell(IncompatibilityGraph.complete(2)),
            "K3": ursell(IncompatibilityGraph.complete(3)),
            "P3": ursell(IncompatibilityGraph.path(3))}
    want = {"K1": Fraction(1), "K2": Fraction(-1, 2), "K3": Fraction(1, 3),
            "P3": Fraction(1, 6)}
    return _ok(vals == want, values={k: fmt_rational(v) for k, v in vals.items()})


def _routes_agree(max_m: int) -> dict:
    checked = 0
    for m in range(1, max_m + 1):
        pairs = list(combinations(range(m), 2))
        seen = set()
        for code in range(1 << len(pairs)):
            h = IncompatibilityGraph.from_edges(m, [p for i, p in enumerate(pairs) if code >> i & 1])
            canon = _canonical(h)
            if canon in seen:
                continue
            seen.add(canon)
            checked += 1
            if signed_connected_sum(h) != signed_connected_sum_bruteforce(h):
                return _ok(False, m=m, edges=h.edges())
    return _ok(True, graphs=checked)


@check("ursell_routes_agree_5")
def _routes5():
    return _routes_agree(5)


@check("ursell_routes_agree_6", "all")
def _routes6():
    return _routes_agree(6)


@check("exact_count_d2")
def _count_d2():
    g = middle_graph(2)
    r = exact_Z(g, Fraction(1))
    naive = naive_coefficients(g)
    return _ok(r.value.exact == 18 and r.coefficients == [1, 6, 9, 2] == naive,
               Z=fmt_rational(r.value.exact), coefficients=r.coefficients)


@check("identity_d2_d3")
def _identity():
    rows = [identity_check(d, lam) for d in (2, 3)
            for lam in (Fraction(1, 2), Fraction(1), Fraction(2))]
    d2 = rows[1]
    anchor = d2["lhs"] == "28" and d2["Z"] == "18" and d2["B_sum"] == "10"
    return _ok(anchor and all(r["holds"] for r in rows), cases=rows)


@check("closed_forms_d2_d3")
def _closed_small():
    lam = Fraction(1)
    out = {}
    for d in (2, 3):
        g = middle_graph(d)
        cf = closed_form_terms(d, lam)
        en = [term_structure(g, k).evaluate(lam) for k in (1, 2)]
        out[d] = {"closed": [fmt_rational(x) for x in cf],
                  "enumerated": [fmt_rational(x) for x in en]}
    gap = Fraction(math.comb(3, 2) * math.comb(2, 2)) * lam ** 2 / (1 + lam) ** 3
    d2 = (closed_form_terms(2, lam)[0] == term_structure(middle_graph(2), 1).evaluate(lam)
          and term_structure(middle_graph(2), 2).evaluate(lam) == Fraction(-9, 32)
          and closed_form_terms(2, lam)[1] - gap == Fraction(-9, 32))
    d3 = out[3]["closed"] == out[3]["enumerated"]
    return _ok(d2 and d3, terms={str(k): v for k, v in out.items()})


@check("closed_forms_d4", "all")
def _closed_d4():
    g = middle_graph(4)
    lam = Fraction(1)
    cf = closed_form_terms(4, lam)
    en = [term_structure(g, k).evaluate(lam) for k in (1, 2)]
    return _ok(list(cf) == en, closed=[fmt_rational(x) for x in cf],
               enumerated=[fmt_rational(x) for x in en])


@check("nu_and_mu_hat_d2")
def _mu_hat():
    g = middle_graph(2)
    nu = exact_nu_table(g, 1)
    probs = sorted(p for _, p in nu)
    mh = mu_hat_table(g, 1)
    tv = tv_distance(g, 1)
    ok = (probs == [Fraction(1, 7)] * 3 + [Fraction(4, 7)]
          and sum(mh.values()) == 1
          and mh[(0, 0)] == Fraction(1, 14)
          and tv["tv"] == Fraction(10, 63)
          and tv["b_mass"] * 2 * 8 * tv["Xi"] == 10)
    return _ok(ok, tv=fmt_rational(tv["tv"]), b_mass=fmt_rational(tv["b_mass"]))


@check("expected_boundary_d3")
def _eb():
    r = expected_boundary(3, 2)
    return _ok(r["exact"] == "16/3" and abs(r["approx"] - 4.8) < 1e-12, result=r)


@check("t_subset_bound_d3")
def _t_subset():
    r = t_subset_lower_bound(3)
    return _ok(r["t"] == 1 and r["exact_sum"] == "1280" and 1280 <= Z1_D3, result=r)


@check("container_family_d3")
def _containers():
    f = enumerate_container_family(middle_graph(3), 4, 6)
    return _ok(f.count == 25 and container_sum(f, Fraction(1)) == Fraction(25, 64),
               count=f.count)


@check("isoperimetry_d3")
def _iso3():
    g = middle_graph(3)
    reps = [isoperimetry_check(g, m) for m in ("i", "ii")]
    reps.append(isoperimetry_check(g, "iii", budget=5))
    return _ok(all(r.passed for r in reps),
               worst={r.mode: r.worst_ratio for r in reps if r.scanned})


@check("cache_corruption_detected")
def _cache():
    with tempfile.TemporaryDirectory() as tmp:
        path = Path(tmp) / CACHE_FILE
        path.write_text("{not json")
        try:
            UrsellCache(path)
        except CacheError:
            return _ok(True)
    return _ok(False, reason="corrupted cache was accepted")


@check("exact_count_b53_dual", "all")
def _dual():
    g = build_graph(5, 3)
    r = exact_Z(g, Fraction(1), method="graycode")
    naive = naive_coefficients(g)
    return _ok(r.coefficients == naive and r.value.exact == Z1_D3,
               Z=fmt_rational(r.value.exact))


@check("exact_count_d4", "all")
def _count_d4():
    r = exact_Z(middle_graph(4), Fraction(1))
    return _ok(r.value.exact == Z1_D4, Z=fmt_rational(r.value.exact), method=r.method)


@check("truncation_improves", "all")
def _truncation():
    out = {}
    ok = True
    for d in (3, 4):
        g = middle_graph(d)
        ln_xi = math.log(xi_exact(g, Fraction(1)).exact)
        terms = [term_structure(g, k).evaluate(Fraction(1)) for k in range(1, 5)]
        err4 = abs(float(sum(terms)) - ln_xi)
        err1 = abs(float(terms[0]) - ln_xi)
        out[str(d)] = {"ln_xi": ln_xi, "err_1": err1, "err_4": err4}
        ok = ok and err4 < err1
    return _ok(ok, cases=out)


@check("census_d3", "all")
def _census():
    c = structure_census(middle_graph(3), 1)
    return _ok(Fraction(c["property_fraction"]) == CENSUS_FRACTION_D3,
               fraction=c["property_fraction"])


@check("two_linked_bound", "all")
def _bound():
    rows = {}
    for d in (3, 4, 5):
        g = middle_graph(d)
        for t in range(1, 5):
            c, _ = enumerate_two_linked_containing(g, Side.UPPER, 0, t)
            rows[f"d{d}_t{t}"] = c
            if c > d ** (6 * t):
                return _ok(False, counts=rows)
    return _ok(True, counts=rows)


@check("isoperimetry_d5_mode_ii", "all")
def _iso5():
    r = isoperimetry_check(middle_graph(5), "ii", budget=3)
    return _ok(r.passed, worst=r.worst_ratio, scanned=r.scanned)


@check("t_subset_bound_d4", "all")
def _t_subset_d4():
    r = t_subset_lower_bound(4)
    return _ok(r["t"] == 2 and int(r["exact_sum"]) <= Z1_D4, result=r)


def names(suite: str) -> list[str]:
    return [n for n, s, _ in _CHECKS if suite == "all" or s == suite]


def run_suite(suite: str = "fast", timing: bool = False) -> dict:
    if suite not in ("fast", "all"):
        raise ValueError(f"unknown suite {suite!r}")
    rows = []
    for name, s, fn in _CHECKS:
        if suite == "fast" and s != "fast":
            continue
        t0 = time.perf_counter()
        try:
            row = fn()
        except Exception as exc:  # a crashing check is a failed check
            row = _ok(False, error=f"{type(exc).__name__}: {exc}")
        row["name"] = name
        if timing:
            row["seconds"] = time.perf_counter() - t0
        rows.append(row)
    failed = [r["name"] for r in rows if not r["passed"]]
    return {"suite": suite, "checks": rows, "passed": len(rows) - len(failed),
            "failed": failed}
