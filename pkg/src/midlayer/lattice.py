"""The graph B(n, k) on two adjacent layers of the Boolean lattice.

Vertices are subsets of [n] stored as integer bitsets (element i is bit i-1).
Each side gets dense ids in increasing bitset order, and every set of
same-side vertices is a Python int bitmask over those ids.
"""

from __future__ import annotations

import enum
import json
import math
import random
from dataclasses import dataclass, field
from functools import cached_property
from itertools import combinations
from typing import Callable, Iterable, Iterator, Sequence

from .errors import ParameterError, ScaleError, ShapeError

MAX_N = 63


class Side(enum.Enum):
    UPPER = "upper"
    LOWER = "lower"

    @property
    def other(self) -> "Side":
        return Side.LOWER if self is Side.UPPER else Side.UPPER


def bits_of(mask: int) -> Iterator[int]:
    """Indices of the set bits of ``mask``, ascending."""
    while mask:
        low = mask & -mask
        yield low.bit_length() - 1
        mask ^= low


def vertex_label(bits: int) -> str:
    return "{" + ",".join(str(i + 1) for i in bits_of(bits)) + "}"


def parse_vertex(text: str) -> int:
    """Inverse of :func:`vertex_label`; also accepts the compact form ``"124"``."""
    body = text.strip().strip("{}").strip()
    if not body:
        return 0
    parts = body.split(",") if "," in body else list(body)
    bits = 0
    for p in parts:
        i = int(p)
        if i < 1 or i > MAX_N:
            raise ParameterError(f"element {i} out of range in {text!r}")
        bits |= 1 << (i - 1)
    return bits


@dataclass(frozen=True)
class VertexSet:
    """Vertices on one side, as a bitmask over that side's dense ids."""

    side: Side
    mask: int = 0

    def __len__(self) -> int:
        return self.mask.bit_count()

    def __iter__(self) -> Iterator[int]:
        return bits_of(self.mask)

    def __contains__(self, vid: int) -> bool:
        return bool(self.mask >> vid & 1)

    def __or__(self, other: "VertexSet") -> "VertexSet":
        _same_side(self, other)
        return VertexSet(self.side, self.mask | other.mask)

    def __and__(self, other: "VertexSet") -> "VertexSet":
        _same_side(self, other)
        return VertexSet(self.side, self.mask & other.mask)

    def __sub__(self, other: "VertexSet") -> "VertexSet":
        _same_side(self, other)
        return VertexSet(self.side, self.mask & ~other.mask)

    def issubset(self, other: "VertexSet") -> bool:
        _same_side(self, other)
        return self.mask & ~other.mask == 0


def _same_side(a: VertexSet, b: VertexSet) -> None:
    if a.side is not b.side:
        raise ParameterError("vertex sets live on different sides")


@dataclass(frozen=True, eq=False)
class LayerGraph:
    """B(n, k): layer k ("upper") and layer k-1 ("lower") of Q_n.

    Immutable after construction; all adjacency data are tuples of ints.
    """

    n: int
    k: int
    upper: tuple[int, ...]
    lower: tuple[int, ...]
    _index: dict = field(repr=False)
    _nbrs: dict = field(repr=False)
    _nbr_mask: dict = field(repr=False)

    @property
    def upper_size(self) -> int:
        return len(self.upper)

    @property
    def lower_size(self) -> int:
        return len(self.lower)

    @property
    def is_middle(self) -> bool:
        return self.n == 2 * self.k - 1

    @property
    def d(self) -> int:
        if not self.is_middle:
            raise ShapeError(f"B({self.n},{self.k}) is not a middle-layer graph")
        return self.k

    @property
    def N(self) -> int:
        """Common side size C(2d-1, d) of the middle-layer graph."""
        self.d
        return len(self.upper)

    def require_middle(self) -> int:
        return self.d

    def size(self, side: Side) -> int:
        return len(self.upper) if side is Side.UPPER else len(self.lower)

    def full(self, side: Side) -> int:
        return (1 << self.size(side)) - 1

    def bits(self, side: Side, vid: int) -> int:
        return (self.upper if side is Side.UPPER else self.lower)[vid]

    def vid(self, side: Side, bits: int) -> int:
        try:
            return self._index[side][bits]
        except KeyError:
            raise ParameterError(
                f"{vertex_label(bits)} is not a vertex of the {side.value} side") from None

    def neighbors(self, side: Side, vid: int) -> tuple[int, ...]:
        """Ids (on the other side) adjacent to vertex ``vid`` of ``side``."""
        return self._nbrs[side][vid]

    def nbr_mask(self, side: Side, vid: int) -> int:
        return self._nbr_mask[side][vid]

    def degree(self, side: Side, vid: int) -> int:
        return len(self._nbrs[side][vid])

    @cached_property
    def _square(self) -> dict:
        out = {}
        for side in Side:
            other = side.other
            rows = []
            for v in range(self.size(side)):
                m = 0
                for u in self._nbrs[side][v]:
                    m |= self._nbr_mask[other][u]
                rows.append(m & ~(1 << v))
            out[side] = tuple(rows)
        return out

    def square_mask(self, side: Side, vid: int) -> int:
        """Same-side vertices sharing a neighbour with ``vid`` (excluding itself)."""
        return self._square[side][vid]

    def vertex_set(self, side: Side, labels: Iterable[str | int]) -> VertexSet:
        """Build a VertexSet from labels like ``"{1,2}"``/``"12"`` or raw bitsets."""
        mask = 0
        for lab in labels:
            bits = parse_vertex(lab) if isinstance(lab, str) else lab
            mask |= 1 << self.vid(side, bits)
        return VertexSet(side, mask)

    def labels(self, s: VertexSet) -> list[str]:
        return [vertex_label(self.bits(s.side, v)) for v in s]

    def to_json(self, s: VertexSet) -> str:
        return json.dumps({"side": s.side.value, "members": self.labels(s)})

    def from_json(self, text: str) -> VertexSet:
        obj = json.loads(text)
        return self.vertex_set(Side(obj["side"]), obj["members"])


def build_graph(n: int, k: int) -> LayerGraph:
    if not isinstance(n, int) or not isinstance(k, int):
        raise ParameterError("n and k must be integers")
    if n < 1 or n > MAX_N:
        raise ParameterError(f"n must be in [1, {MAX_N}], got {n}")
    if not 1 <= k <= n:
        raise ParameterError(f"k must be in [1, n], got k={k}, n={n}")
    if math.comb(n, k) > 1 << 22:
        raise ScaleError(f"B({n},{k}) has {math.comb(n, k)} upper vertices")

    def layer(r: int) -> tuple[int, ...]:
        return tuple(sorted(sum(1 << i for i in c) for c in combinations(range(n), r)))

    upper, lower = layer(k), layer(k - 1)
    index = {Side.UPPER: {b: i for i, b in enumerate(upper)},
             Side.LOWER: {b: i for i, b in enumerate(lower)}}
    up_nbrs = []
    for b in upper:
        up_nbrs.append(tuple(sorted(index[Side.LOWER][b & ~(1 << i)] for i in bits_of(b))))
    low_nbrs: list[list[int]] = [[] for _ in lower]
    for v, row in enumerate(up_nbrs):
        for u in row:
            low_nbrs[u].append(v)
    nbrs = {Side.UPPER: tuple(up_nbrs), Side.LOWER: tuple(tuple(r) for r in low_nbrs)}
    masks = {s: tuple(sum(1 << u for u in row) for row in nbrs[s]) for s in Side}
    return LayerGraph(n, k, upper, lower, index, nbrs, masks)


def middle_graph(d: int) -> LayerGraph:
    if d < 2:
        raise ParameterError(f"d must be at least 2, got {d}")
    return build_graph(2 * d - 1, d)


def neighborhood(g: LayerGraph, s: VertexSet) -> VertexSet:
    """N(S), on the opposite side."""
    m = 0
    rows = g._nbr_mask[s.side]
    for v in bits_of(s.mask):
        m |= rows[v]
    return VertexSet(s.side.other, m)


def closure_of_boundary(g: LayerGraph, side: Side, boundary: int) -> int:
    """Mask of vertices on ``side`` whose whole neighbourhood lies in ``boundary``."""
    rows = g._nbr_mask[side]
    return sum(1 << v for v in range(len(rows)) if rows[v] & ~boundary == 0)


def closure(g: LayerGraph, a: VertexSet) -> VertexSet:
    """[A] = {v on A's side : N(v) is contained in N(A)}."""
    if not a.mask:
        return a
    return VertexSet(a.side, closure_of_boundary(g, a.side, neighborhood(g, a).mask))


def component_masks(g: LayerGraph, side: Side, mask: int) -> list[int]:
    """2-linked components of ``mask`` ordered by their lowest id."""
    sq = g._square[side]
    out = []
    rem = mask
    while rem:
        comp = frontier = rem & -rem
        while frontier:
            grown = 0
            for v in bits_of(frontier):
                grown |= sq[v]
            frontier = grown & rem & ~comp
            comp |= frontier
        out.append(comp)
        rem &= ~comp
    return out


def two_linked_components(g: LayerGraph, s: VertexSet) -> list[VertexSet]:
    return [VertexSet(s.side, c) for c in component_masks(g, s.side, s.mask)]


def is_two_linked(g: LayerGraph, s: VertexSet) -> bool:
    return len(component_masks(g, s.side, s.mask)) == 1


def connected_sets(adj: Sequence[int], root: int, limit: int,
                   allowed: int | None = None,
                   weights: Sequence[int] | None = None,
                   lighter: Callable[[int], int] | None = None) -> Iterator[int]:
    """Yield every connected vertex set containing ``root``, each exactly once.

    This is ESU-style extension: a candidate dropped from the extension list
    is never revisited in that branch, so no set is produced twice. ``limit``
    caps the total weight (vertex count when ``weights`` is None); ``allowed``
    restricts which vertices may join besides the root. ``lighter(r)`` may
    return the mask of vertices of weight <= r, used to prune candidates early.
    """
    if allowed is None:
        allowed = ~0
    w = (lambda v: 1) if weights is None else weights.__getitem__

    def extend(cur: int, closed: int, ext: int, total: int) -> Iterator[int]:
        yield cur
        if lighter is not None:
            ext &= lighter(limit - total)
        while ext:
            low = ext & -ext
            ext ^= low
            x = low.bit_length() - 1
            wx = w(x)
            if total + wx > limit:
                continue
            fresh = adj[x] & allowed & ~closed
            yield from extend(cur | low, closed | adj[x] | low, ext | fresh, total + wx)

    r = 1 << root
    if w(root) > limit:
        return
    yield from extend(r, r | adj[root], adj[root] & allowed & ~r, w(root))


def enumerate_two_linked_containing(g: LayerGraph, side: Side, v: int, t: int,
                                    listing: bool = False, cap: int = 2_000_000):
    """Count 2-linked same-side sets of size ``t`` that contain vertex ``v``.

    Returns ``(count, sets)`` where ``sets`` is a list of masks if ``listing``
    else None. Raises ScaleError once more than ``cap`` sets have been visited.
    """
    if t < 1:
        raise ParameterError("t must be at least 1")
    sq = g._square[side]
    count, seen = 0, 0
    found = [] if listing else None
    for s in connected_sets(sq, v, t):
        seen += 1
        if seen > cap:
            raise ScaleError(f"more than {cap} 2-linked sets visited (t={t})")
        if s.bit_count() == t:
            count += 1
            if listing:
                found.append(s)
    return count, found


@dataclass
class IsoperimetryReport:
    mode: str
    d: int
    scanned: int
    sampled: bool
    max_size: int
    worst_ratio: float
    witness: list[str]
    passed: bool
    seed: int | None = None

    def as_dict(self) -> dict:
        return dict(self.__dict__)


def iso_bound(mode: str, d: int, s: int) -> float | None:
    """Lower bound on |N(S)| for |S| = s, or None when the mode does not apply."""
    n_mid = math.comb(2 * d - 1, d)
    if mode == "i":
        return d * s - s * s / 2 if 4 * s <= d else None
    if mode == "ii":
        return d * s / 6 if s <= d ** 4 else None
    if mode == "iii":
        return (1 + 1 / (2 * d - 1)) * s if 2 * s <= n_mid else None
    raise ParameterError(f"unknown isoperimetry mode {mode!r}")


def isoperimetry_check(g: LayerGraph, mode: str, budget: int | None = None,
                       side: Side = Side.UPPER, samples: int = 0,
                       seed: int = 0) -> IsoperimetryReport:
    """Scan sets S with |S| within the mode's range (and <= ``budget``).

    With ``samples`` > 0 the scan draws that many uniformly random subsets of
    each admissible size from a seeded generator instead of enumerating.
    The empty set is skipped (every bound is 0 there).
    """
    d = g.require_middle()
    size = g.size(side)
    top = 0
    while top + 1 <= size and iso_bound(mode, d, top + 1) is not None:
        top += 1
    if budget is not None:
        top = min(top, budget)
    rows = g._nbr_mask[side]
    worst, witness, scanned = math.inf, 0, 0
    rng = random.Random(seed)

    def visit(ids: Sequence[int]) -> None:
        nonlocal worst, witness, scanned
        m = 0
        for v in ids:
            m |= rows[v]
        ratio = m.bit_count() / iso_bound(mode, d, len(ids))
        scanned += 1
        if ratio < worst:
            worst, witness = ratio, sum(1 << v for v in ids)

    for s in range(1, top + 1):
        if samples:
            for _ in range(samples):
                visit(rng.sample(range(size), s))
        else:
            if math.comb(size, s) > 50_000_000:
                raise ScaleError(f"C({size},{s}) subsets is too many for an exhaustive scan")
            for ids in combinations(range(size), s):
                visit(ids)
    witness_labels = g.labels(VertexSet(side, witness)) if witness else []
    return IsoperimetryReport(
        mode=mode, d=d, scanned=scanned, sampled=bool(samples), max_size=top,
        worst_ratio=worst, witness=witness_labels, passed=worst >= 1,
        seed=seed if samples else None)
