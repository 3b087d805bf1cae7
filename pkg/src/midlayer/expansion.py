"""Clusters, expansion terms L_k, the Kotecký–Preiss check and the
log-partition prediction for the polymer model on B(2d-1, d)."""

from __future__ import annotations

import math
from dataclasses import dataclass, field
from fractions import Fraction
from typing import Iterator

from .errors import ParameterError, ScaleError
from .lattice import LayerGraph, Side, connected_sets, middle_graph
from .polymers import (Polymer, WeightParams, enumerate_polymers, gamma_fn,
                       lambda_threshold, _polymer_unchecked, _closure_cap_ok)
from .scalars import Number, fmt_float, fmt_rational, log_of
from .ursell import IncompatibilityGraph, UrsellCache

MAX_CLUSTER_SIZE = 6


@dataclass(frozen=True)
class Cluster:
    """A multiset of polymers with a connected incompatibility graph.

    ``parts`` is sorted by polymer order; ``orderings`` counts the ordered
    tuples realising the multiset.
    """

    parts: tuple[tuple[Polymer, int], ...]
    graph: IncompatibilityGraph

    @property
    def size(self) -> int:
        return sum(p.size * m for p, m in self.parts)

    @property
    def length(self) -> int:
        return sum(m for _, m in self.parts)

    @property
    def orderings(self) -> int:
        out = math.factorial(self.length)
        for _, m in self.parts:
            out //= math.factorial(m)
        return out

    @property
    def boundary_total(self) -> int:
        return sum(p.boundary_size * m for p, m in self.parts)


def tuple_graph(parts) -> IncompatibilityGraph:
    """H(Γ) on the expanded tuple: copies of one polymer are always adjacent."""
    owners = []
    for idx, (_, m) in enumerate(parts):
        owners.extend([idx] * m)
    n = len(owners)
    adj = [0] * n
    for i in range(n):
        for j in range(i + 1, n):
            a, b = owners[i], owners[j]
            if a == b or parts[a][0].boundary & parts[b][0].boundary:
                adj[i] |= 1 << j
                adj[j] |= 1 << i
    return IncompatibilityGraph(n, tuple(adj))


class _PolymerIndex:
    """Polymers up to size k plus lazily built, size-filtered adjacency."""

    def __init__(self, g: LayerGraph, k: int, side: Side):
        self.polymers = enumerate_polymers(g, k, side)
        self.sizes = [p.size for p in self.polymers]
        nlow = g.size(side.other)
        self.k = k
        # by_lower[u]: ids of polymers (size <= k-1) whose boundary contains u
        by_lower = [0] * nlow
        for i, p in enumerate(self.polymers):
            if p.size >= k:
                continue
            b = p.boundary
            while b:
                low = b & -b
                by_lower[low.bit_length() - 1] |= 1 << i
                b ^= low
        self.by_lower = by_lower
        self.prefix = {}
        for s in range(k + 1):
            self.prefix[s] = (1 << sum(1 for z in self.sizes if z <= s)) - 1
        self._adj: dict[int, int] = {}

    def __len__(self) -> int:
        return len(self.polymers)

    def lighter(self, room: int) -> int:
        return self.prefix[max(0, min(room, self.k))]

    def __getitem__(self, i: int) -> int:
        hit = self._adj.get(i)
        if hit is None:
            room = self.k - self.sizes[i]
            hit = 0
            if room > 0:
                b = self.polymers[i].boundary
                while b:
                    low = b & -b
                    hit |= self.by_lower[low.bit_length() - 1]
                    b ^= low
                hit &= self.prefix[room] & ~(1 << i)
            self._adj[i] = hit
        return hit


def _multiplicities(sizes: list[int], target: int) -> Iterator[tuple[int, ...]]:
    """All (m_1..m_r), m_i >= 1, with Σ m_i sizes_i = target."""
    base = sum(sizes)
    if base > target:
        return

    def rec(i: int, left: int, acc: tuple[int, ...]) -> Iterator[tuple[int, ...]]:
        if i == len(sizes):
            if left == 0:
                yield acc
            return
        s = sizes[i]
        rest_min = sum(sizes[i + 1:])
        m = 1
        while m * s + rest_min <= left:
            yield from rec(i + 1, left - m * s, acc + (m,))
            m += 1

    yield from rec(0, target, ())


def iter_clusters(g: LayerGraph, k: int, side: Side = Side.UPPER,
                  index: _PolymerIndex | None = None) -> Iterator[Cluster]:
    """Every cluster with ||Γ|| = k, once per multiset."""
    g.require_middle()
    if k < 1:
        raise ParameterError("cluster size must be positive")
    if k > MAX_CLUSTER_SIZE:
        raise ScaleError(f"cluster size capped at {MAX_CLUSTER_SIZE}, got {k}")
    idx = index if index is not None else _PolymerIndex(g, k, side)
    sizes = idx.sizes
    for root in range(len(idx)):
        above = ~((1 << (root + 1)) - 1)
        for members in connected_sets(idx, root, k, allowed=above, weights=sizes,
                                      lighter=idx.lighter):
            ids = []
            mm = members
            while mm:
                low = mm & -mm
                ids.append(low.bit_length() - 1)
                mm ^= low
            for mult in _multiplicities([sizes[i] for i in ids], k):
                parts = tuple((idx.polymers[i], m) for i, m in zip(ids, mult))
                yield Cluster(parts, tuple_graph(parts))


def enumerate_clusters(g: LayerGraph, k: int, side: Side = Side.UPPER) -> list[Cluster]:
    return list(iter_clusters(g, k, side))


def cluster_weight(c: Cluster, w: WeightParams, cache: UrsellCache | None = None):
    """phi(H(Γ)) times the product of polymer weights, for one ordered tuple."""
    cache = cache or _default_cache()
    out = cache.phi(c.graph)
    lam = w.lam
    for p, m in c.parts:
        out = out * (lam ** p.size / (1 + lam) ** p.boundary_size) ** m
    return out


_cache_holder: list[UrsellCache] = []


def _default_cache() -> UrsellCache:
    if not _cache_holder:
        _cache_holder.append(UrsellCache.from_env())
    return _cache_holder[0]


def set_default_cache(cache: UrsellCache) -> None:
    _cache_holder[:] = [cache]


def save_default_cache() -> None:
    if _cache_holder:
        _cache_holder[0].save()


@dataclass
class TermStructure:
    """L_k(lambda) = lambda^k Σ_B coeff[B] (1+lambda)^(-B)."""

    d: int
    k: int
    coeffs: dict[int, Fraction]
    clusters: int

    def evaluate(self, lam: Number):
        total = 0
        for b, c in self.coeffs.items():
            total += c / (1 + lam) ** b
        return lam ** self.k * total


_structures: dict[tuple[int, int], TermStructure] = {}


def term_structure(g: LayerGraph, k: int, cache: UrsellCache | None = None) -> TermStructure:
    d = g.require_middle()
    key = (d, k)
    hit = _structures.get(key)
    if hit is not None:
        return hit
    cache = cache or _default_cache()
    coeffs: dict[int, Fraction] = {}
    count = 0
    for c in iter_clusters(g, k):
        count += 1
        phi = cache.phi(c.graph)
        if phi:
            b = c.boundary_total
            coeffs[b] = coeffs.get(b, 0) + c.orderings * phi
    ts = TermStructure(d, k, {b: Fraction(v) for b, v in sorted(coeffs.items()) if v},
                       count)
    _structures[key] = ts
    return ts


def expansion_term(g: LayerGraph, w: WeightParams, k: int):
    """L_k: sum of w(Γ) over ordered clusters of total size k."""
    return term_structure(g, k).evaluate(w.lam)


def closed_form_terms(d: int, lam: Number):
    """(L1, L2) from the closed forms; L2 presumes every distance-2 pair is a polymer."""
    if d < 2:
        raise ParameterError("d must be at least 2")
    n_mid = math.comb(2 * d - 1, d)
    l1 = n_mid * lam / (1 + lam) ** d
    l2 = (-Fraction(1, 2) * n_mid * (d * d - d + 1) * lam ** 2 / (1 + lam) ** (2 * d)
          + n_mid * math.comb(d, 2) * lam ** 2 / (1 + lam) ** (2 * d - 1))
    if isinstance(lam, float):
        l2 = float(l2)
    return l1, l2


def partial_sums(terms: list) -> list:
    """partial[j-1] = L_1 + ... + L_j."""
    out, acc = [], 0
    for t in terms:
        acc = acc + t
        out.append(acc)
    return out


def truncated_expansion(terms: list, k: int):
    """T_k = L_1 + ... + L_{k-1}, the indexing used for the truncation bound."""
    if k < 1 or k - 1 > len(terms):
        raise ParameterError(f"need {k - 1} terms for T_{k}")
    return sum(terms[:k - 1], 0)


def epsilon_shape_log(d: int, lam: float, k: int) -> float:
    """ln of N d^(11j-2) (1+lam)^(-dj + 3j^2/2) at j = k + 1 (constant taken as 1)."""
    j = k + 1
    n_mid = math.comb(2 * d - 1, d)
    return (math.log(n_mid) + (11 * j - 2) * math.log(d)
            + (-d * j + 1.5 * j * j) * math.log1p(float(lam)))


def regime_warnings(d: int, lam: float, k: int | None = None, c0: float = 1.0) -> list[str]:
    out = []
    if d < 10:
        out.append(f"asymptotic formula evaluated at small d={d}")
    thr = lambda_threshold(d, c0)
    if float(lam) < thr:
        out.append(f"lambda below C0*ln(d)/d^(1/3) = {thr:.6g} with C0={c0:g}")
    if k is not None and 48 * k > d:
        out.append(f"k={k} exceeds d/48, outside the proven truncation regime")
    return out


@dataclass
class ExpansionReport:
    d: int
    lam: Number
    terms: list
    source: str
    warnings: list[str] = field(default_factory=list)

    @property
    def partial(self) -> list:
        return partial_sums(self.terms)

    @property
    def ln_z_estimate(self) -> float:
        n_mid = math.comb(2 * self.d - 1, self.d)
        return math.log(2) + n_mid * log_of(1 + self.lam) + float(self.partial[-1])

    def as_dict(self) -> dict:
        k = len(self.terms)
        eps_log = epsilon_shape_log(self.d, self.lam, k)
        return {
            "d": self.d,
            "lambda": _fmt_scalar(self.lam),
            "source": self.source,
            "terms": [_fmt_scalar(t) for t in self.terms],
            "partial_sums": [_fmt_scalar(t) for t in self.partial],
            "ln_Z_estimate": fmt_float(self.ln_z_estimate),
            "epsilon_shape_bound": fmt_float(math.exp(eps_log) if eps_log < 700 else math.inf),
            "log_epsilon_shape_bound": fmt_float(eps_log),
            "epsilon_note": "shape only: the O() constant is unknown and set to 1",
            "regime_warnings": list(self.warnings),
        }


def _fmt_scalar(x):
    if isinstance(x, float):
        return fmt_float(x)
    return fmt_rational(x)


def expansion_report(d: int, lam: Number, k_max: int, source: str = "enumerated",
                     c0: float = 1.0) -> ExpansionReport:
    if k_max < 1:
        raise ParameterError("k_max must be at least 1")
    if source in ("closed_form", "closed-form"):
        if k_max > 2:
            raise ParameterError("closed forms exist only for L1 and L2")
        terms = list(closed_form_terms(d, lam))[:k_max]
        source = "closed_form"
    elif source == "enumerated":
        g = middle_graph(d)
        w = WeightParams(lam, d)
        terms = [expansion_term(g, w, j) for j in range(1, k_max + 1)]
    else:
        raise ParameterError(f"unknown term source {source!r}")
    warnings = regime_warnings(d, float(lam), k_max, c0)
    if source == "closed_form" and d == 2 and k_max >= 2:
        warnings.append("closed-form L2 counts size-2 polymers, which do not exist at d=2")
    return ExpansionReport(d, lam, terms, source, warnings)


def predict_partition(d: int, lam: Number, k: int, source: str = "closed_form",
                      c0: float = 1.0) -> dict:
    """ln Z ≈ ln 2 + N ln(1+lam) + Σ_{j<=k} L_j, with the shape of the error bound."""
    rep = expansion_report(d, lam, k, source, c0)
    eps_log = epsilon_shape_log(d, lam, k)
    return {
        "log_Z_estimate": rep.ln_z_estimate,
        "epsilon_bound": math.exp(eps_log) if eps_log < 700 else math.inf,
        "log_epsilon_bound": eps_log,
        "terms": rep.terms,
        "warnings": rep.warnings,
    }


# ---------------------------------------------------------------------------
# Kotecký–Preiss


def _log_weight(p: Polymer, lam: float) -> float:
    return p.size * math.log(lam) - p.boundary_size * math.log1p(lam)


def _max_polymer_exists(g: LayerGraph, size: int, side: Side) -> bool:
    """Is there any polymer with exactly ``size`` vertices? (transitivity: test vertex 0)"""
    sq = [g.square_mask(side, v) for v in range(g.size(side))]
    for m in connected_sets(sq, 0, size):
        if m.bit_count() == size:
            p = _polymer_unchecked(g, side, m)
            if _closure_cap_ok(g, p.closure_size):
                return True
    return False


def kp_check(g: LayerGraph, w: WeightParams, max_polymer_size: int,
             side: Side = Side.UPPER, c0: float = 1.0) -> dict:
    """Evaluate the convergence condition on all polymers up to a size cap.

    Per vertex: Σ_{S∋v} w(S) exp(C|S|/d^2 + gamma(d,|S|)) against 1/d^4.
    Per polymer S0: Σ_{S~S0} w~(S) exp(f(S) + g(S)) against f(S0) = |S0|/d^2.
    All summands are non-negative, so a failure under the cap is a failure
    outright; a pass under the cap is only "truncated".
    """
    d = g.require_middle()
    lam = float(w.lam)
    c = float(w.aux_c)
    polys = enumerate_polymers(g, max_polymer_size, side)
    nside = g.size(side)
    terms = [math.exp(_log_weight(p, lam) + c * p.size / d ** 2 + gamma_fn(d, p.size, lam))
             for p in polys]
    per_vertex = [0.0] * nside
    for p, t in zip(polys, terms):
        m = p.mask
        while m:
            low = m & -m
            per_vertex[low.bit_length() - 1] += t
            m ^= low
    vertex_bound = 1 / d ** 4
    worst_vertex = max(per_vertex) if per_vertex else 0.0

    by_lower: dict[int, list[int]] = {}
    for i, p in enumerate(polys):
        b = p.boundary
        while b:
            low = b & -b
            by_lower.setdefault(low.bit_length() - 1, []).append(i)
            b ^= low
    worst_margin, witness = math.inf, None
    margins_by_size: dict[int, float] = {}
    for i, p0 in enumerate(polys):
        nbrs = set()
        b = p0.boundary
        while b:
            low = b & -b
            nbrs.update(by_lower.get(low.bit_length() - 1, ()))
            b ^= low
        lhs = math.fsum(terms[j] for j in nbrs)
        margin = p0.size / d ** 2 - lhs
        if margin < worst_margin:
            worst_margin, witness = margin, p0
        s = p0.size
        margins_by_size[s] = min(margins_by_size.get(s, math.inf), margin)

    truncated = (2 * (max_polymer_size + 1) <= g.N
                 and _max_polymer_exists(g, max_polymer_size + 1, side))
    ok_vertex = worst_vertex <= vertex_bound
    ok_polymer = worst_margin >= 0
    if not (ok_vertex and ok_polymer):
        verdict = "fail"
    elif truncated:
        verdict = "truncated"
    else:
        verdict = "pass"
    return {
        "d": d,
        "lambda": lam,
        "aux_C": c,
        "cap": max_polymer_size,
        "polymers": len(polys),
        "per_vertex_sums": per_vertex,
        "per_vertex_bound": vertex_bound,
        "worst_vertex_sum": worst_vertex,
        "vertex_condition": ok_vertex,
        "worst_polymer_margin": worst_margin,
        "worst_polymer": g.labels(witness.vertices) if witness else [],
        "margins_by_size": {str(k): v for k, v in sorted(margins_by_size.items())},
        "polymer_condition": ok_polymer,
        "truncated": truncated,
        "verdict": verdict,
        "warnings": regime_warnings(d, lam, None, c0),
    }
