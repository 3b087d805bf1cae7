"""Polymers on one side of B(2d-1, d): weights, compatibility, enumeration,
and the container families G(a, b)."""

from __future__ import annotations

import math
from dataclasses import dataclass
from fractions import Fraction

from .errors import ParameterError, ScaleError
from .lattice import (LayerGraph, Side, VertexSet, closure_of_boundary,
                      component_masks, connected_sets, neighborhood)
from .scalars import Number, fmt_rational


@dataclass(frozen=True)
class Polymer:
    """A non-empty 2-linked vertex set with boundary and closure sizes cached."""

    side: Side
    mask: int
    boundary: int
    closure_size: int

    @property
    def size(self) -> int:
        return self.mask.bit_count()

    @property
    def boundary_size(self) -> int:
        return self.boundary.bit_count()

    @property
    def vertices(self) -> VertexSet:
        return VertexSet(self.side, self.mask)


@dataclass(frozen=True)
class WeightParams:
    lam: Number
    d: int
    aux_c: float = 1.0

    def __post_init__(self):
        if not self.lam > 0:
            raise ParameterError("lambda must be positive")
        if self.aux_c < 1:
            raise ParameterError("the auxiliary constant C must be >= 1")


def _closure_cap_ok(g: LayerGraph, closure_size: int) -> bool:
    # 2|[S]| <= N keeps the comparison in integers
    return 2 * closure_size <= g.N


def make_polymer(g: LayerGraph, s: VertexSet) -> Polymer:
    if not is_polymer(g, s):
        raise ParameterError(f"{g.labels(s)} is not a polymer")
    return _polymer_unchecked(g, s.side, s.mask)


def _polymer_unchecked(g: LayerGraph, side: Side, mask: int) -> Polymer:
    nb = neighborhood(g, VertexSet(side, mask)).mask
    cl = closure_of_boundary(g, side, nb).bit_count()
    return Polymer(side, mask, nb, cl)


def is_polymer(g: LayerGraph, s: VertexSet) -> bool:
    g.require_middle()
    if not s.mask or len(component_masks(g, s.side, s.mask)) != 1:
        return False
    nb = neighborhood(g, s).mask
    return _closure_cap_ok(g, closure_of_boundary(g, s.side, nb).bit_count())


def polymer_weight(p: Polymer, w: WeightParams, mode: str = "plain"):
    """lambda^|S| / (1+lambda)^|N(S)|; "aux" multiplies by exp((C-1)|S|/d^2)."""
    lam = w.lam
    base = lam ** p.size / (1 + lam) ** p.boundary_size
    if mode == "plain":
        return base
    if mode == "aux":
        if w.aux_c == 1:
            return base
        return float(base) * math.exp((w.aux_c - 1) * p.size / w.d ** 2)
    raise ParameterError(f"unknown weight mode {mode!r}")


def compatible(p: Polymer, q: Polymer) -> bool:
    """True iff p and q may coexist: p != q and p ∪ q is not 2-linked.

    For 2-linked p and q the union is 2-linked exactly when their
    neighbourhoods meet.
    """
    if p.side is not q.side:
        raise ParameterError("polymers live on different sides")
    return p.boundary & q.boundary == 0


def enumerate_polymers(g: LayerGraph, max_size: int, side: Side = Side.UPPER,
                       cap: int = 5_000_000) -> list[Polymer]:
    """All polymers with at most ``max_size`` vertices, in (size, mask) order."""
    g.require_middle()
    if max_size < 1:
        return []
    sq = [g.square_mask(side, v) for v in range(g.size(side))]
    out = []
    seen = 0
    for root in range(len(sq)):
        above = ~((1 << (root + 1)) - 1)
        for m in connected_sets(sq, root, max_size, allowed=above):
            seen += 1
            if seen > cap:
                raise ScaleError(f"polymer search exceeded {cap} candidate sets")
            p = _polymer_unchecked(g, side, m)
            if _closure_cap_ok(g, p.closure_size):
                out.append(p)
    out.sort(key=lambda p: (p.size, p.mask))
    return out


@dataclass
class ContainerFamily:
    a: int
    b: int
    side: Side
    members: list[int]

    @property
    def count(self) -> int:
        return len(self.members)


def enumerate_container_family(g: LayerGraph, a: int, b: int,
                               side: Side = Side.UPPER,
                               cap: int = 5_000_000) -> ContainerFamily:
    """All 2-linked A with |[A]| = a and |N(A)| = b. Since A ⊆ [A], |A| <= a."""
    g.require_middle()
    if a < 1 or b < 1:
        raise ParameterError("a and b must be positive")
    sq = [g.square_mask(side, v) for v in range(g.size(side))]
    members = []
    seen = 0
    for root in range(len(sq)):
        above = ~((1 << (root + 1)) - 1)
        for m in connected_sets(sq, root, a, allowed=above):
            seen += 1
            if seen > cap:
                raise ScaleError(f"container search exceeded {cap} candidate sets")
            nb = neighborhood(g, VertexSet(side, m)).mask
            if nb.bit_count() != b:
                continue
            if closure_of_boundary(g, side, nb).bit_count() == a:
                members.append(m)
    members.sort()
    return ContainerFamily(a, b, side, members)


def container_sum(f: ContainerFamily, lam: Number):
    """Σ_{A in G(a,b)} lambda^|A| / (1+lambda)^b (exact for rational lambda)."""
    total = sum(lam ** m.bit_count() for m in f.members) if f.members else 0
    return total / (1 + lam) ** f.b


def container_bound(d: int, a: int, b: int, c1: float) -> float:
    """The reference shape N·exp(-C1 (b-a) ln d / d^(2/3)); C1 is user-supplied."""
    n_mid = math.comb(2 * d - 1, d)
    return n_mid * math.exp(-c1 * (b - a) * math.log(d) / d ** (2 / 3))


def container_report(g: LayerGraph, f: ContainerFamily, lam: Number,
                     c1: float | None = None, with_members: bool = False,
                     member_cap: int = 10_000) -> dict:
    s = container_sum(f, lam)
    out = {"a": f.a, "b": f.b, "count": f.count,
           "sum": fmt_rational(s) if not isinstance(s, float) else s}
    if c1 is not None:
        out["bound_shape"] = container_bound(g.d, f.a, f.b, c1)
        out["C1"] = c1
    if with_members:
        out["members"] = [g.labels(VertexSet(f.side, m)) for m in f.members[:member_cap]]
        out["members_truncated"] = f.count > member_cap
    return out


def gamma_fn(d: int, k: int, lam: float) -> float:
    """The piecewise exponent gamma(d, k) used in the convergence bounds."""
    if d < 2 or k < 1:
        raise ParameterError("gamma needs d >= 2 and k >= 1")
    lg = math.log1p(float(lam))
    if 4 * k <= d:
        return (d * k - 1.5 * k * k) * lg - 11 * k * math.log(d)
    if k <= d ** 4:
        return d * k / 12 * lg
    return k / d ** 2


def lambda_threshold(d: int, c0: float = 1.0) -> float:
    return c0 * math.log(d) / d ** (1 / 3)


def weight_exact(lam: Number, size: int, boundary: int) -> Fraction | float:
    return lam ** size / (1 + lam) ** boundary


def good_mask(g: LayerGraph, side: Side, mask: int) -> bool:
    """True iff every 2-linked component of ``mask`` has closure at most N/2."""
    for comp in component_masks(g, side, mask):
        nb = neighborhood(g, VertexSet(side, comp)).mask
        if not _closure_cap_ok(g, closure_of_boundary(g, side, nb).bit_count()):
            return False
    return True
