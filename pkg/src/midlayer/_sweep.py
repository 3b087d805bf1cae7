"""Compiled sweep over subsets A of the upper layer.

For every A the kernel records |A|, |N(A)| and whether every 2-linked
component S of A has 2|[S]| <= N ("good"). Counts go into two histograms
indexed by (|A|, |N(A)|), from which Z(lambda) and the restricted sums follow
exactly for any lambda.

Within a shard the free vertices are visited in Gray-code order, so each step
toggles one upper vertex and touches d coverage counters. Neighbourhood
expansions inside the component search use 8-bit chunk tables.
"""

from __future__ import annotations

import math
from dataclasses import dataclass
from itertools import permutations

import numba as nb
import numpy as np

from .lattice import LayerGraph, Side

MAX_SIDE = 62


@nb.njit(cache=True, inline="always")
def _popcount(x):
    x = x - ((x >> 1) & 0x5555555555555555)
    x = (x & 0x3333333333333333) + ((x >> 2) & 0x3333333333333333)
    x = (x + (x >> 4)) & 0x0F0F0F0F0F0F0F0F
    x = x + (x >> 8)
    x = x + (x >> 16)
    x = x + (x >> 32)
    return x & 0x7F


@nb.njit(cache=True, inline="always")
def _expand(mask, tab):
    out = 0
    c = 0
    while mask:
        out |= tab[c, mask & 255]
        mask >>= 8
        c += 1
    return out


@nb.njit(cache=True)
def _is_good(a_mask, b, sq_tab, nb_tab, lowup_tab, n_up, lowfull):
    # |[S]| <= |N(S)| <= |N(A)| in a regular graph with equal sides
    if 2 * b <= n_up:
        return True
    rem = a_mask
    while rem:
        seed = rem & -rem
        comp = seed
        frontier = seed
        while frontier:
            grown = _expand(frontier, sq_tab) & rem & ~comp
            comp |= grown
            frontier = grown
        rem &= ~comp
        ns = _expand(comp, nb_tab)
        if 2 * _popcount(ns) > n_up:
            cl = n_up - _popcount(_expand(lowfull & ~ns, lowup_tab))
            if 2 * cl > n_up:
                return False
    return True


@nb.njit(cache=True)
def _sweep_shard(base, free, up_nbrs, sq_tab, nb_tab, lowup_tab, n_up, n_low,
                 weight, want_good, hist_all, hist_good):
    hits = np.zeros(n_low, np.int64)
    deg = up_nbrs.shape[1]
    a_mask = base
    na = 0
    a = 0
    for v in range(n_up):
        if (a_mask >> v) & 1:
            a += 1
            for j in range(deg):
                u = up_nbrs[v, j]
                hits[u] += 1
                na |= 1 << u
    b = _popcount(na)
    lowfull = (1 << n_low) - 1
    total = 1 << free.shape[0]
    i = 0
    while True:
        hist_all[a, b] += weight
        if want_good:
            if _is_good(a_mask, b, sq_tab, nb_tab, lowup_tab, n_up, lowfull):
                hist_good[a, b] += weight
        i += 1
        if i == total:
            break
        j = 0
        t = i
        while (t & 1) == 0:
            t >>= 1
            j += 1
        v = free[j]
        bit = 1 << v
        if a_mask & bit:
            a_mask ^= bit
            a -= 1
            for jj in range(deg):
                u = up_nbrs[v, jj]
                hits[u] -= 1
                if hits[u] == 0:
                    na ^= 1 << u
                    b -= 1
        else:
            a_mask |= bit
            a += 1
            for jj in range(deg):
                u = up_nbrs[v, jj]
                hits[u] += 1
                if hits[u] == 1:
                    na |= 1 << u
                    b += 1
    return 0


def chunk_table(rows: list[int]) -> np.ndarray:
    """tab[c, byte] = OR of rows[8c + i] over set bits i of byte."""
    nchunks = max(1, (len(rows) + 7) // 8)
    tab = np.zeros((nchunks, 256), dtype=np.int64)
    for c in range(nchunks):
        for byte in range(1, 256):
            low = byte & -byte
            i = 8 * c + low.bit_length() - 1
            prev = tab[c, byte ^ low]
            tab[c, byte] = prev | (rows[i] if i < len(rows) else 0)
    return tab


@dataclass
class SweepTables:
    n_up: int
    n_low: int
    up_nbrs: np.ndarray
    sq_tab: np.ndarray
    nb_tab: np.ndarray
    lowup_tab: np.ndarray


def tables_for(g: LayerGraph) -> SweepTables:
    up, low = Side.UPPER, Side.LOWER
    n_up, n_low = g.size(up), g.size(low)
    return SweepTables(
        n_up, n_low,
        np.array([g.neighbors(up, v) for v in range(n_up)], dtype=np.int64),
        chunk_table([g.square_mask(up, v) for v in range(n_up)]),
        chunk_table([g.nbr_mask(up, v) for v in range(n_up)]),
        chunk_table([g.nbr_mask(low, u) for u in range(n_low)]),
    )


@dataclass
class SweepResult:
    n: int
    k: int
    hist_all: np.ndarray
    hist_good: np.ndarray | None
    method: str
    shards: int

    @property
    def states(self) -> int:
        return int(self.hist_all.sum())


def _run(g: LayerGraph, shards: list[tuple[int, list[int], int]], want_good: bool,
         method: str) -> SweepResult:
    t = tables_for(g)
    hist_all = np.zeros((t.n_up + 1, t.n_low + 1), dtype=np.int64)
    hist_good = np.zeros_like(hist_all)
    for base, free, weight in shards:
        _sweep_shard(np.int64(base), np.array(free, dtype=np.int64), t.up_nbrs,
                     t.sq_tab, t.nb_tab, t.lowup_tab, t.n_up, t.n_low,
                     np.int64(weight), want_good, hist_all, hist_good)
    return SweepResult(g.n, g.k, hist_all, hist_good if want_good else None,
                       method, len(shards))


def graycode_sweep(g: LayerGraph, want_good: bool = True, shard_bits: int = 8) -> SweepResult:
    """Plain sweep over all 2^N subsets, sharded on the top ``shard_bits`` ids."""
    n_up = g.size(Side.UPPER)
    if n_up > MAX_SIDE:
        raise ValueError("side too large for the compiled sweep")
    s = max(0, min(shard_bits, n_up))
    free = list(range(n_up - s))
    shards = [(sum(1 << (n_up - s + i) for i in range(s) if r >> i & 1), free, 1)
              for r in range(1 << s)]
    return _run(g, shards, want_good, "graycode")


def orbit_shards(g: LayerGraph) -> list[tuple[int, list[int], int]]:
    """Shards from the S_{n-1} orbits on subsets of the vertices avoiding element n.

    Permutations of [n-1] are automorphisms of B(n, k) fixing element n, so the
    histograms summed over all completions inside the other part depend only
    on the orbit of the fixed part. Each orbit is swept once, weighted by its size.
    """
    n = g.n
    top = 1 << (n - 1)
    inner = [v for v in range(g.size(Side.UPPER)) if not g.upper[v] & top]
    outer = [v for v in range(g.size(Side.UPPER)) if g.upper[v] & top]
    pos = {g.upper[v]: i for i, v in enumerate(inner)}
    m = len(inner)
    if m > 24:
        raise ValueError("orbit reduction limited to 24 fixed-part vertices")
    perm_maps = []
    for p in permutations(range(n - 1)):
        images = []
        for v in inner:
            bits = g.upper[v]
            img = 0
            for e in range(n - 1):
                if bits >> e & 1:
                    img |= 1 << p[e]
            images.append(pos[img])
        perm_maps.append(_byte_maps(images))
    seen = bytearray(1 << m)
    shards = []
    for x in range(1 << m):
        if seen[x]:
            continue
        orbit = set()
        for maps in perm_maps:
            y = 0
            c = 0
            z = x
            while z:
                y |= maps[c][z & 255]
                z >>= 8
                c += 1
            orbit.add(y)
        for y in orbit:
            seen[y] = 1
        base = 0
        for i in range(m):
            if x >> i & 1:
                base |= 1 << inner[i]
        shards.append((base, outer, len(orbit)))
    return shards


def _byte_maps(images: list[int]) -> list[list[int]]:
    maps = []
    for c in range((len(images) + 7) // 8):
        row = [0] * 256
        for byte in range(1, 256):
            low = byte & -byte
            i = 8 * c + low.bit_length() - 1
            row[byte] = row[byte ^ low] | ((1 << images[i]) if i < len(images) else 0)
        maps.append(row)
    return maps


def orbit_sweep(g: LayerGraph, want_good: bool = True) -> SweepResult:
    return _run(g, orbit_shards(g), want_good, "orbit")


def expected_states(g: LayerGraph) -> int:
    return 1 << g.size(Side.UPPER)


def max_orbit_side(d: int) -> int:
    return math.comb(2 * d - 2, d)
