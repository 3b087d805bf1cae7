"""Ursell function of a small simple graph.

phi(H) = (1/m!) * sum over connected spanning subgraphs F of (-1)^{e(F)}.

Two routes compute the signed connected sum: a brute force over edge subsets
(kept as an oracle) and a recursion over vertex subsets, which splits every
spanning subgraph by the component holding the lowest vertex. Values are
memoised under a canonical relabelling and can be persisted as JSON.
"""

from __future__ import annotations

import json
import math
import os
from dataclasses import dataclass
from fractions import Fraction
from itertools import combinations, permutations
from pathlib import Path

from .errors import CacheError, ScaleError

MAX_VERTICES = 9
CACHE_ENV = "MIDLAYER_CACHE_DIR"
CACHE_FILE = "ursell_cache.json"
CACHE_SCHEMA = 2


@dataclass(frozen=True)
class IncompatibilityGraph:
    """Simple graph on ``m`` vertices given by neighbour bitmasks."""

    m: int
    adj: tuple[int, ...]

    @classmethod
    def from_edges(cls, m: int, edges) -> "IncompatibilityGraph":
        adj = [0] * m
        for i, j in edges:
            if i != j:
                adj[i] |= 1 << j
                adj[j] |= 1 << i
        return cls(m, tuple(adj))

    @classmethod
    def complete(cls, m: int) -> "IncompatibilityGraph":
        full = (1 << m) - 1
        return cls(m, tuple(full & ~(1 << i) for i in range(m)))

    @classmethod
    def path(cls, m: int) -> "IncompatibilityGraph":
        return cls.from_edges(m, [(i, i + 1) for i in range(m - 1)])

    def edges(self) -> list[tuple[int, int]]:
        return [(i, j) for i in range(self.m) for j in range(i + 1, self.m)
                if self.adj[i] >> j & 1]

    def is_connected(self) -> bool:
        if self.m == 0:
            return False
        seen = frontier = 1
        while frontier:
            grown = 0
            for i in range(self.m):
                if frontier >> i & 1:
                    grown |= self.adj[i]
            frontier = grown & ~seen
            seen |= frontier
        return seen == (1 << self.m) - 1

    def relabel(self, perm) -> "IncompatibilityGraph":
        """Vertex i of the result is vertex perm[i] of self."""
        inv = [0] * self.m
        for i, p in enumerate(perm):
            inv[p] = i
        adj = []
        for i in range(self.m):
            row = self.adj[perm[i]]
            adj.append(sum(1 << inv[j] for j in range(self.m) if row >> j & 1))
        return IncompatibilityGraph(self.m, tuple(adj))

    def edge_code(self) -> int:
        code, pos = 0, 0
        for i in range(self.m):
            for j in range(i + 1, self.m):
                if self.adj[i] >> j & 1:
                    code |= 1 << pos
                pos += 1
        return code


def signed_connected_sum_bruteforce(h: IncompatibilityGraph) -> int:
    """Σ (-1)^{|F|} over edge subsets F whose spanning subgraph is connected."""
    edges = h.edges()
    if len(edges) > 24:
        raise ScaleError(f"{len(edges)} edges is too many for the brute-force route")
    total = 0
    full = (1 << h.m) - 1
    for r in range(len(edges) + 1):
        sign = -1 if r % 2 else 1
        for sub in combinations(edges, r):
            adj = [0] * h.m
            for i, j in sub:
                adj[i] |= 1 << j
                adj[j] |= 1 << i
            seen = frontier = 1
            while frontier:
                grown = 0
                for i in range(h.m):
                    if frontier >> i & 1:
                        grown |= adj[i]
                frontier = grown & ~seen
                seen |= frontier
            if seen == full:
                total += sign
    return total


def signed_connected_sum(h: IncompatibilityGraph) -> int:
    """Same quantity via the lowest-vertex component recursion, O(3^m).

    For any vertex set U the signed sum over *all* edge subsets of H[U] is 1
    if U spans no edge and 0 otherwise; peeling off the component of the
    lowest vertex expresses that total through connected sums of subsets.
    """
    m = h.m
    if m == 0:
        return 0
    adj = h.adj
    size = 1 << m
    edgeless = [True] * size
    for u in range(1, size):
        low = u & -u
        v = low.bit_length() - 1
        rest = u ^ low
        edgeless[u] = edgeless[rest] and not (adj[v] & rest)
    conn = [0] * size
    for u in range(1, size):
        low = u & -u
        rest = u ^ low
        acc = 1 if edgeless[u] else 0
        # proper subsets T of u that contain the lowest vertex
        sub = (rest - 1) & rest
        while True:
            t = sub | low
            if t != u:
                other = u ^ t
                if edgeless[other] and conn[t]:
                    acc -= conn[t]
            if sub == 0:
                break
            sub = (sub - 1) & rest
        conn[u] = acc
    return conn[size - 1]


def _canonical(h: IncompatibilityGraph) -> tuple[int, int]:
    """(m, minimal edge code) over relabellings that order vertices by an invariant.

    The invariant is (degree, sorted neighbour degrees); only vertices sharing
    it are permuted among themselves.
    """
    degs = [a.bit_count() for a in h.adj]
    classes: dict[tuple, list[int]] = {}
    for v, dv in enumerate(degs):
        key = (dv, tuple(sorted(degs[u] for u in range(h.m) if h.adj[v] >> u & 1)))
        classes.setdefault(key, []).append(v)
    groups = [classes[k] for k in sorted(classes)]
    best = None

    def rec(i: int, prefix: list[int]) -> None:
        nonlocal best
        if i == len(groups):
            code = h.relabel(prefix).edge_code()
            if best is None or code < best:
                best = code
            return
        for p in permutations(groups[i]):
            rec(i + 1, prefix + list(p))

    rec(0, [])
    return h.m, best


class UrsellCache:
    """Memo from canonical graph to phi; optionally backed by a JSON file."""

    def __init__(self, path: str | os.PathLike | None = None):
        self.path = Path(path) if path is not None else None
        self._by_label: dict[tuple[int, tuple[int, ...]], Fraction] = {}
        self._by_canon: dict[tuple[int, int], Fraction] = {}
        self._dirty = False
        if self.path is not None and self.path.exists():
            self._load()

    @classmethod
    def from_env(cls) -> "UrsellCache":
        root = os.environ.get(CACHE_ENV)
        return cls(Path(root) / CACHE_FILE if root else None)

    def _load(self) -> None:
        try:
            obj = json.loads(self.path.read_text())
            if obj.get("schema") != CACHE_SCHEMA:
                raise ValueError(f"schema {obj.get('schema')!r}")
            for key, val in obj["entries"].items():
                m, code = (int(x) for x in key.split(":"))
                self._by_canon[(m, code)] = Fraction(val)
        except (OSError, ValueError, KeyError, TypeError, AttributeError) as exc:
            raise CacheError(f"corrupted Ursell cache {self.path}: {exc}") from exc

    def save(self) -> None:
        if self.path is None or not self._dirty:
            return
        self.path.parent.mkdir(parents=True, exist_ok=True)
        entries = {f"{m}:{c}": f"{v.numerator}/{v.denominator}"
                   for (m, c), v in sorted(self._by_canon.items())}
        tmp = self.path.with_suffix(".tmp")
        tmp.write_text(json.dumps({"schema": CACHE_SCHEMA, "entries": entries},
                                  sort_keys=True))
        tmp.replace(self.path)
        self._dirty = False

    def __len__(self) -> int:
        return len(self._by_canon)

    def phi(self, h: IncompatibilityGraph) -> Fraction:
        key = (h.m, h.adj)
        hit = self._by_label.get(key)
        if hit is not None:
            return hit
        canon = _canonical(h)
        val = self._by_canon.get(canon)
        if val is None:
            val = ursell(h)
            self._by_canon[canon] = val
            self._dirty = True
        self._by_label[key] = val
        return val


def ursell(h: IncompatibilityGraph) -> Fraction:
    if h.m > MAX_VERTICES:
        raise ScaleError(f"Ursell function limited to {MAX_VERTICES} vertices, got {h.m}")
    return Fraction(signed_connected_sum(h), math.factorial(h.m))


def ursell_bruteforce(h: IncompatibilityGraph) -> Fraction:
    return Fraction(signed_connected_sum_bruteforce(h), math.factorial(h.m))
