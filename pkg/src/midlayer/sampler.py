"""The one-side polymer measure nu, the two-step measure mu_hat built from it,
exact hard-core tables and the structure census.

mu_hat picks a defect side uniformly, draws a polymer configuration on it
from nu, and fills the other side independently with probability
lambda/(1+lambda) away from the configuration's boundary.
"""

from __future__ import annotations

import json
import math
from bisect import bisect_right
from dataclasses import dataclass
from fractions import Fraction
from itertools import accumulate

import numpy as np

from .errors import InvariantError, ParameterError, ScaleError
from .exact import exact_restricted_sum
from .lattice import LayerGraph, Side, VertexSet, bits_of, component_masks
from .polymers import Polymer, compatible, enumerate_polymers
from .scalars import Number, fmt_float, fmt_rational

MAX_TABLE_SIDE = 10
MAX_CONFIGS = 2_000_000


def _exact_lam(lam: Number) -> Fraction:
    lam = Fraction(lam)
    if lam <= 0:
        raise ParameterError("lambda must be positive")
    return lam


def _require_small(g: LayerGraph) -> None:
    g.require_middle()
    if g.N > MAX_TABLE_SIDE:
        raise ScaleError(f"exact tables need N <= {MAX_TABLE_SIDE}, got N={g.N}")


@dataclass(frozen=True)
class PolymerConfig:
    side: Side
    polymers: tuple[Polymer, ...]
    total_size: int
    boundary: int

    @classmethod
    def build(cls, side: Side, polymers) -> "PolymerConfig":
        polymers = tuple(sorted(polymers, key=lambda p: p.mask))
        size = sum(p.size for p in polymers)
        boundary = 0
        for p in polymers:
            boundary |= p.boundary
        return cls(side, polymers, size, boundary)

    @property
    def mask(self) -> int:
        out = 0
        for p in self.polymers:
            out |= p.mask
        return out

    def validate(self) -> None:
        for i, p in enumerate(self.polymers):
            for q in self.polymers[i + 1:]:
                if not compatible(p, q):
                    raise InvariantError("configuration holds incompatible polymers")
        if self.total_size != self.mask.bit_count():
            raise InvariantError("cached size disagrees with the union")

    def labels(self, g: LayerGraph) -> list[list[str]]:
        return [g.labels(p.vertices) for p in self.polymers]


def polymer_configurations(g: LayerGraph, side: Side = Side.UPPER) -> list[PolymerConfig]:
    """All sets of pairwise-compatible polymers, the empty one first."""
    _require_small(g)
    polys = enumerate_polymers(g, g.N // 2, side)
    n = len(polys)
    conflict = [0] * n
    for i in range(n):
        for j in range(i + 1, n):
            if not compatible(polys[i], polys[j]):
                conflict[i] |= 1 << j
                conflict[j] |= 1 << i
    out: list[PolymerConfig] = []

    def rec(start: int, banned: int, chosen: list[int]) -> None:
        out.append(PolymerConfig.build(side, [polys[i] for i in chosen]))
        if len(out) > MAX_CONFIGS:
            raise ScaleError("too many polymer configurations")
        for i in range(start, n):
            if banned >> i & 1:
                continue
            chosen.append(i)
            rec(i + 1, banned | conflict[i], chosen)
            chosen.pop()

    # every polymer conflicts with itself, so each index is used at most once
    rec(0, 0, [])
    return out


def config_weight(c: PolymerConfig, lam: Fraction) -> Fraction:
    return lam ** c.total_size / (1 + lam) ** c.boundary.bit_count()


def exact_nu_table(g: LayerGraph, lam: Number, side: Side = Side.UPPER
                   ) -> list[tuple[PolymerConfig, Fraction]]:
    lam = _exact_lam(lam)
    configs = polymer_configurations(g, side)
    weights = [config_weight(c, lam) for c in configs]
    xi = sum(weights)
    return [(c, w / xi) for c, w in zip(configs, weights)]


def nu_partition(g: LayerGraph, lam: Number, side: Side = Side.UPPER) -> Fraction:
    lam = _exact_lam(lam)
    return sum(config_weight(c, lam) for c in polymer_configurations(g, side))


def _randbelow(rng: np.random.PCG64, total: int) -> int:
    """Uniform integer in [0, total) from raw 64-bit words, by rejection."""
    if total <= 0:
        raise ValueError("empty range")
    nbits = max((total - 1).bit_length(), 1)
    words = (nbits + 63) // 64
    while True:
        x = 0
        for _ in range(words):
            x = (x << 64) | rng.random_raw()
        x &= (1 << nbits) - 1
        if x < total:
            return x


def _bernoulli(rng: np.random.PCG64, p: Fraction) -> bool:
    return _randbelow(rng, p.denominator) < p.numerator


def sample_rng(seed: int, index: int) -> np.random.PCG64:
    """Stream for sample ``index``: PCG64 seeded by SeedSequence(seed, spawn_key=(index,))."""
    return np.random.PCG64(np.random.SeedSequence(seed, spawn_key=(index,)))


def minority_side(upper_count: int, lower_count: int) -> Side:
    """Upper is the minority only when strictly smaller; ties go to the lower side."""
    return Side.UPPER if upper_count < lower_count else Side.LOWER


@dataclass(frozen=True)
class SampleRecord:
    index: int
    defect: Side
    config: PolymerConfig
    upper: int
    lower: int

    @property
    def minority(self) -> Side:
        return minority_side(self.upper.bit_count(), self.lower.bit_count())

    def as_dict(self, g: LayerGraph) -> dict:
        return {"index": self.index, "defect_side": self.defect.value,
                "config": self.config.labels(g),
                "config_size": self.config.total_size,
                "upper": g.labels(VertexSet(Side.UPPER, self.upper)),
                "lower": g.labels(VertexSet(Side.LOWER, self.lower)),
                "minority_side": self.minority.value}


@dataclass
class SampleRun:
    g: LayerGraph
    lam: Fraction
    seed: int
    records: list[SampleRecord]

    @property
    def count(self) -> int:
        return len(self.records)

    def to_jsonl(self) -> str:
        return "".join(json.dumps(r.as_dict(self.g), sort_keys=True) + "\n"
                       for r in self.records)


class MuHatSampler:
    """Exact inverse-CDF sampler for mu_hat on B(2d-1, d)."""

    def __init__(self, g: LayerGraph, lam: Number):
        _require_small(g)
        self.g = g
        self.lam = _exact_lam(lam)
        self.fill_p = self.lam / (1 + self.lam)
        self.tables = {}
        for side in (Side.UPPER, Side.LOWER):
            table = exact_nu_table(g, self.lam, side)
            scale = math.lcm(*(p.denominator for _, p in table))
            cum = list(accumulate(int(p * scale) for _, p in table))
            if cum[-1] != scale:
                raise InvariantError("nu table does not sum to 1")
            self.tables[side] = ([c for c, _ in table], cum)

    def draw(self, seed: int, index: int) -> SampleRecord:
        rng = sample_rng(seed, index)
        defect = Side.UPPER if _randbelow(rng, 2) == 0 else Side.LOWER
        configs, cum = self.tables[defect]
        r = _randbelow(rng, cum[-1])
        config = configs[bisect_right(cum, r)]
        free = self.g.full(defect.other) & ~config.boundary
        fill = 0
        for v in bits_of(free):
            if _bernoulli(rng, self.fill_p):
                fill |= 1 << v
        upper, lower = (config.mask, fill) if defect is Side.UPPER else (fill, config.mask)
        if not is_independent(self.g, upper, lower):
            raise InvariantError(f"sample {index} is not an independent set")
        return SampleRecord(index, defect, config, upper, lower)

    def run(self, seed: int, count: int) -> SampleRun:
        if not 0 <= seed < 2 ** 64:
            raise ParameterError("seed must be a 64-bit unsigned integer")
        if count < 0:
            raise ParameterError("sample count must be non-negative")
        return SampleRun(self.g, self.lam, seed, [self.draw(seed, i) for i in range(count)])


def sample_mu_hat(g: LayerGraph, lam: Number, rng_seed: int, count: int = 1) -> SampleRun:
    return MuHatSampler(g, lam).run(rng_seed, count)


def is_independent(g: LayerGraph, upper: int, lower: int) -> bool:
    return all(not (g.nbr_mask(Side.UPPER, u) & lower) for u in bits_of(upper))


def independent_sets(g: LayerGraph):
    """Yield every independent set as (upper mask, lower mask)."""
    if g.size(Side.UPPER) > 16:
        raise ScaleError("independent-set listing limited to 16 upper vertices")
    full_low = g.full(Side.LOWER)
    for a in range(1 << g.size(Side.UPPER)):
        cov = 0
        for u in bits_of(a):
            cov |= g.nbr_mask(Side.UPPER, u)
        free = full_low & ~cov
        sub = free
        while True:
            yield a, sub
            if sub == 0:
                break
            sub = (sub - 1) & free


def exact_hardcore_table(g: LayerGraph, lam: Number) -> dict[tuple[int, int], Fraction]:
    lam = _exact_lam(lam)
    weights = {s: lam ** (s[0].bit_count() + s[1].bit_count()) for s in independent_sets(g)}
    z = sum(weights.values())
    return {s: w / z for s, w in weights.items()}


def _good_masks(g: LayerGraph, side: Side) -> set[int]:
    return {c.mask for c in polymer_configurations(g, side)}


def mu_hat_table(g: LayerGraph, lam: Number) -> dict[tuple[int, int], Fraction]:
    """mu_hat(I) = lam^|I| · #{sides D : I∩D is a configuration} / (2 (1+lam)^N Xi)."""
    _require_small(g)
    lam = _exact_lam(lam)
    good = {side: _good_masks(g, side) for side in (Side.UPPER, Side.LOWER)}
    xi = nu_partition(g, lam)
    norm = 2 * (1 + lam) ** g.N * xi
    out = {}
    for a, b in independent_sets(g):
        hits = (a in good[Side.UPPER]) + (b in good[Side.LOWER])
        if hits:
            out[(a, b)] = lam ** (a.bit_count() + b.bit_count()) * hits / norm
    return out


def mu_hat_convolution(g: LayerGraph, lam: Number) -> dict[tuple[int, int], Fraction]:
    """mu_hat by summing over (defect side, configuration, fill) triples."""
    _require_small(g)
    lam = _exact_lam(lam)
    p_in = lam / (1 + lam)
    p_out = 1 / (1 + lam)
    out: dict[tuple[int, int], Fraction] = {}
    for side in (Side.UPPER, Side.LOWER):
        for config, pr in exact_nu_table(g, lam, side):
            free = g.full(side.other) & ~config.boundary
            nfree = free.bit_count()
            sub = free
            while True:
                k = sub.bit_count()
                p = pr / 2 * p_in ** k * p_out ** (nfree - k)
                key = (config.mask, sub) if side is Side.UPPER else (sub, config.mask)
                out[key] = out.get(key, 0) + p
                if sub == 0:
                    break
                sub = (sub - 1) & free
    return out


def tv_distance(g: LayerGraph, lam: Number) -> dict:
    lam = _exact_lam(lam)
    mu = exact_hardcore_table(g, lam)
    mh = mu_hat_table(g, lam)
    keys = set(mu) | set(mh)
    tv = sum(abs(mh.get(k, 0) - mu.get(k, 0)) for k in keys) / 2
    xi = nu_partition(g, lam)
    b_sum = exact_restricted_sum(g, lam, "B_both").exact
    b_mass = b_sum / (2 * (1 + lam) ** g.N * xi)
    return {"tv": Fraction(tv), "b_mass": b_mass, "B_sum": b_sum, "Xi": xi}


def minority_defect_stats(run: SampleRun) -> dict:
    if run.count == 0:
        raise ParameterError("no samples in run")
    g = run.g
    N, d = g.N, g.d
    mismatch = sum(1 for r in run.records if r.minority is not r.defect)
    mean_size = math.fsum(r.config.total_size for r in run.records) / run.count
    return {"count": run.count,
            "rate_minority_ne_defect": fmt_float(mismatch / run.count),
            "mean_config_size": fmt_float(mean_size / N),
            "reference_rate_bound": fmt_float(2 * math.exp(-N / d ** 5)),
            "reference_size_bound": fmt_float(1 / d ** 2),
            "warnings": [f"reference bounds are asymptotic; d={d} is far from that regime"]}


def max_component(g: LayerGraph, side: Side, mask: int) -> int:
    if not mask:
        return 0
    return max(c.bit_count() for c in component_masks(g, side, mask))


def has_small_side(profile: tuple[int, int]) -> bool:
    """Some side has every 2-linked component of size at most 2."""
    return min(profile) <= 2


def structure_census(g: LayerGraph, lam: Number, mode: str = "exact",
                     samples: int = 0, seed: int = 0) -> dict:
    g.require_middle()
    if mode == "exact":
        table = exact_hardcore_table(g, lam)
        masses: dict[tuple[int, int], Fraction] = {}
        for (a, b), p in table.items():
            key = (max_component(g, Side.UPPER, a), max_component(g, Side.LOWER, b))
            masses[key] = masses.get(key, 0) + p
        frac = sum(p for k, p in masses.items() if has_small_side(k))
        profiles = [{"max_comp_upper": u, "max_comp_lower": l, "mass": fmt_rational(m)}
                    for (u, l), m in sorted(masses.items())]
        return {"mode": "exact", "sets": len(table), "profiles": profiles,
                "property_fraction": fmt_rational(frac),
                "property_fraction_float": fmt_float(float(frac)), "warnings": []}
    if mode == "sampled":
        if samples <= 0:
            raise ParameterError("sampled census needs a positive sample count")
        run = sample_mu_hat(g, lam, seed, samples)
        counts: dict[tuple[int, int], int] = {}
        for r in run.records:
            key = (max_component(g, Side.UPPER, r.upper), max_component(g, Side.LOWER, r.lower))
            counts[key] = counts.get(key, 0) + 1
        good = sum(c for k, c in counts.items() if has_small_side(k))
        profiles = [{"max_comp_upper": u, "max_comp_lower": l, "mass": c}
                    for (u, l), c in sorted(counts.items())]
        return {"mode": "sampled", "sets": samples, "profiles": profiles,
                "property_fraction": fmt_float(good / samples),
                "warnings": ["sampled under mu_hat, a proxy for the hard-core measure"]}
    raise ParameterError(f"unknown census mode {mode!r}")
