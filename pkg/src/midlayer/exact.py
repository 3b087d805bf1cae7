"""Exact desk-scale ground truth.

Everything here reduces to the one-side decomposition

    Z(lambda) = sum over A ⊆ upper layer of lambda^|A| (1+lambda)^(|lower| - |N(A)|)

(both layers are independent sets), so a sweep over the 2^N upper subsets
yields histograms over (|A|, |N(A)|) from which every quantity is an exact
polynomial in lambda.
"""

from __future__ import annotations

import math
import time
from dataclasses import dataclass
from fractions import Fraction
from functools import lru_cache
from itertools import combinations

import numpy as np

from . import _sweep
from .errors import ParameterError, ScaleError
from .lattice import LayerGraph, Side, bits_of, build_graph, middle_graph
from .polymers import good_mask
from .scalars import Number, fmt_float, fmt_rational, log_of

MAX_SWEEP_SIDE = 36
MAX_NAIVE_BITS = 22
MAX_TABLE_SIDE = 10
T_SUBSET_CAP = 2_000_000


@dataclass(frozen=True)
class ExactScalar:
    """Either an exact rational or (sign, ln|x|) for float inputs."""

    exact: Fraction | None = None
    log_value: float | None = None
    sign: int = 1

    @classmethod
    def of(cls, x: Number) -> "ExactScalar":
        if isinstance(x, float):
            if x == 0:
                return cls(None, -math.inf, 0)
            return cls(None, math.log(abs(x)), 1 if x > 0 else -1)
        return cls(Fraction(x))

    @property
    def is_exact(self) -> bool:
        return self.exact is not None

    def ln(self) -> float:
        if self.exact is not None:
            return log_of(self.exact)
        if self.sign <= 0:
            raise ValueError("log of non-positive value")
        return self.log_value

    def __float__(self) -> float:
        if self.exact is not None:
            return float(self.exact)
        return self.sign * math.exp(self.log_value) if self.sign else 0.0

    def to_json(self):
        if self.exact is not None:
            return fmt_rational(self.exact)
        return {"sign": self.sign, "log_value": fmt_float(self.log_value)}


def poly_eval(coeffs: list[int], lam: Number) -> ExactScalar:
    """sum_j coeffs[j] lam^j; exact for rational lam, log-space for floats."""
    if not isinstance(lam, float):
        acc = Fraction(0)
        for c in reversed(coeffs):
            acc = acc * lam + c
        return ExactScalar(acc)
    if lam <= 0:
        raise ParameterError("float evaluation needs lambda > 0")
    logs = [math.log(c) + j * math.log(lam) for j, c in enumerate(coeffs) if c > 0]
    if not logs:
        return ExactScalar(None, -math.inf, 0)
    top = max(logs)
    return ExactScalar(None, top + math.log(math.fsum(math.exp(x - top) for x in logs)), 1)


class CoverageCounter:
    """Hit counts of lower vertices under a subset of upper vertices.

    ``uncovered`` tracks how many lower vertices have no neighbour in the
    current subset; each toggle touches exactly deg(u) counters.
    """

    def __init__(self, g: LayerGraph):
        self.g = g
        self.hits = [0] * g.size(Side.LOWER)
        self.uncovered = len(self.hits)
        self.mask = 0
        self.covered = 0

    def toggle(self, u: int) -> None:
        bit = 1 << u
        step = -1 if self.mask & bit else 1
        self.mask ^= bit
        for v in self.g.neighbors(Side.UPPER, u):
            before = self.hits[v]
            self.hits[v] = before + step
            if before == 0:
                self.uncovered -= 1
                self.covered |= 1 << v
            elif self.hits[v] == 0:
                self.uncovered += 1
                self.covered ^= 1 << v

    def recompute(self) -> int:
        """Uncovered count from scratch, for consistency checks."""
        cov = 0
        for u in bits_of(self.mask):
            cov |= self.g.nbr_mask(Side.UPPER, u)
        return self.g.size(Side.LOWER) - cov.bit_count()


def reference_sweep(g: LayerGraph) -> np.ndarray:
    """Pure-Python Gray-code sweep with a CoverageCounter (hist_all only)."""
    n_up, n_low = g.size(Side.UPPER), g.size(Side.LOWER)
    if n_up > 16:
        raise ScaleError("the reference sweep is limited to 16 upper vertices")
    hist = np.zeros((n_up + 1, n_low + 1), dtype=np.int64)
    cc = CoverageCounter(g)
    hist[0, 0] += 1
    for i in range(1, 1 << n_up):
        cc.toggle((i & -i).bit_length() - 1)
        hist[cc.mask.bit_count(), n_low - cc.uncovered] += 1
    return hist


def coefficients_from_hist(hist: np.ndarray, n_low: int) -> list[int]:
    """Expand sum h[a,b] x^a (1+x)^(n_low-b) into a coefficient list."""
    n_up = hist.shape[0] - 1
    out = [0] * (n_up + n_low + 1)
    for a, b in zip(*np.nonzero(hist)):
        c = int(hist[a, b])
        free = n_low - int(b)
        for j in range(free + 1):
            out[int(a) + j] += c * math.comb(free, j)
    while len(out) > 1 and out[-1] == 0:
        out.pop()
    return out


_shard_bits = [8]


def set_shard_bits(bits: int) -> None:
    """Number of top vertex ids fixed per Gray-code shard (2^bits shards)."""
    if not 0 <= bits <= 20:
        raise ParameterError("shard bits must lie in [0, 20]")
    _shard_bits[0] = bits


@lru_cache(maxsize=8)
def _cached_sweep(n: int, k: int, method: str, bits: int) -> _sweep.SweepResult:
    g = build_graph(n, k)
    want_good = g.is_middle
    if method == "orbit":
        return _sweep.orbit_sweep(g, want_good)
    return _sweep.graycode_sweep(g, want_good, bits)


def _pick_method(g: LayerGraph, method: str) -> str:
    if method not in ("auto", "graycode", "orbit", "naive"):
        raise ParameterError(f"unknown method {method!r}")
    if method == "auto":
        return "orbit" if g.size(Side.UPPER) > 20 else "graycode"
    return method


def sweep(g: LayerGraph, method: str = "auto") -> _sweep.SweepResult:
    if g.size(Side.UPPER) > MAX_SWEEP_SIDE:
        raise ScaleError(f"exact sweep needs at most {MAX_SWEEP_SIDE} upper vertices, "
                         f"B({g.n},{g.k}) has {g.size(Side.UPPER)}")
    m = _pick_method(g, method)
    if m == "naive":
        raise ParameterError("the naive method does not produce sweep histograms")
    return _cached_sweep(g.n, g.k, m, _shard_bits[0] if m == "graycode" else 0)


def naive_coefficients(g: LayerGraph) -> list[int]:
    """Independent-set counts by size from all 2^(|V|) vertex subsets."""
    n_up, n_low = g.size(Side.UPPER), g.size(Side.LOWER)
    total_bits = n_up + n_low
    if total_bits > MAX_NAIVE_BITS:
        raise ScaleError(f"naive enumeration limited to {MAX_NAIVE_BITS} vertices")
    edges = [(u, n_up + v) for u in range(n_up) for v in g.neighbors(Side.UPPER, u)]
    counts = np.zeros(total_bits + 1, dtype=np.int64)
    chunk = 1 << min(total_bits, 20)
    for start in range(0, 1 << total_bits, chunk):
        m = np.arange(start, start + chunk, dtype=np.int64)
        ok = np.ones(chunk, dtype=bool)
        for u, v in edges:
            ok &= ((m >> u) & (m >> v) & 1) == 0
        pc = np.zeros(chunk, dtype=np.int64)
        for b in range(total_bits):
            pc += (m >> b) & 1
        counts += np.bincount(pc[ok], minlength=total_bits + 1)
    out = [int(c) for c in counts]
    while len(out) > 1 and out[-1] == 0:
        out.pop()
    return out


@dataclass
class ZResult:
    g: LayerGraph
    lam: Number
    value: ExactScalar
    coefficients: list[int]
    method: str
    shards: int
    wall_time_ms: float = 0.0

    def to_json(self, with_coefficients: bool = False, timing: bool = False) -> dict:
        out = {"n": self.g.n, "k": self.g.k,
               "d": self.g.d if self.g.is_middle else None,
               "lambda": _fmt_lambda(self.lam),
               "Z": self.value.to_json(), "ln_Z": fmt_float(self.value.ln()),
               "method": self.method, "shards": self.shards}
        if self.value.is_exact and self.lam == 1:
            out["Z_decimal"] = str(self.value.exact.numerator)
        if with_coefficients:
            out["coefficients"] = [str(c) for c in self.coefficients]
        if timing:
            out["wall_time_ms"] = fmt_float(self.wall_time_ms)
        return out


def _fmt_lambda(lam: Number):
    return fmt_float(lam) if isinstance(lam, float) else fmt_rational(lam)


def independence_coefficients(g: LayerGraph, method: str = "auto") -> tuple[list[int], str, int]:
    m = _pick_method(g, method)
    if m == "naive":
        return naive_coefficients(g), "naive", 1
    res = sweep(g, m)
    return coefficients_from_hist(res.hist_all, g.size(Side.LOWER)), res.method, res.shards


def exact_Z(g: LayerGraph, lam: Number, method: str = "auto") -> ZResult:
    """Independence polynomial of B(n, k) at lambda, plus its coefficients."""
    if lam < 0:
        raise ParameterError("lambda must be non-negative")
    t0 = time.perf_counter()
    coeffs, used, shards = independence_coefficients(g, method)
    value = poly_eval(coeffs, lam)
    return ZResult(g, lam, value, coeffs, used, shards,
                   (time.perf_counter() - t0) * 1000)


def _side_goodness(g: LayerGraph, side: Side) -> list[bool]:
    n = g.size(side)
    if n > MAX_TABLE_SIDE:
        raise ScaleError(f"per-side goodness tables limited to {MAX_TABLE_SIDE} vertices")
    return [good_mask(g, side, m) for m in range(1 << n)]


@lru_cache(maxsize=4)
def _both_coefficients(d: int) -> list[int]:
    g = middle_graph(d)
    N = g.N
    good_up = _side_goodness(g, Side.UPPER)
    good_low = _side_goodness(g, Side.LOWER)
    # lower-side polynomial of good subsets of each free set, by subset sum
    low_poly: dict[int, list[int]] = {}
    out = [0] * (2 * N + 1)
    for a in range(1 << N):
        if not good_up[a]:
            continue
        cov = 0
        for u in bits_of(a):
            cov |= g.nbr_mask(Side.UPPER, u)
        free = g.full(Side.LOWER) & ~cov
        poly = low_poly.get(free)
        if poly is None:
            poly = [0] * (N + 1)
            sub = free
            while True:
                if good_low[sub]:
                    poly[sub.bit_count()] += 1
                if sub == 0:
                    break
                sub = (sub - 1) & free
            low_poly[free] = poly
        base = a.bit_count()
        for j, c in enumerate(poly):
            out[base + j] += c
    while len(out) > 1 and out[-1] == 0:
        out.pop()
    return out


def restricted_coefficients(g: LayerGraph, family: str) -> list[int]:
    """Coefficients of sum lambda^|I| over M_side (upper part good) or B_both."""
    g.require_middle()
    if family == "M_side":
        res = sweep(g)
        return coefficients_from_hist(res.hist_good, g.N)
    if family == "B_both":
        return list(_both_coefficients(g.d))
    raise ParameterError(f"unknown family {family!r}; use M_side or B_both")


def exact_restricted_sum(g: LayerGraph, lam: Number, family: str) -> ExactScalar:
    return poly_eval(restricted_coefficients(g, family), lam)


def xi_exact(g: LayerGraph, lam: Number) -> ExactScalar:
    """The polymer partition function on one side, via the M_side sum."""
    s = exact_restricted_sum(g, lam, "M_side")
    if s.is_exact:
        return ExactScalar(s.exact / (1 + Fraction(lam)) ** g.N)
    return ExactScalar(None, s.log_value - g.N * math.log1p(lam), s.sign)


def identity_check(d: int, lam: Number) -> dict:
    """2(1+lambda)^N Xi == Z + B-sum, evaluated exactly."""
    g = middle_graph(d)
    lam = Fraction(lam)
    xi = xi_exact(g, lam).exact
    z = exact_Z(g, lam).value.exact
    b = exact_restricted_sum(g, lam, "B_both").exact
    lhs = 2 * (1 + lam) ** g.N * xi
    return {"d": d, "lambda": fmt_rational(lam), "lhs": fmt_rational(lhs),
            "Z": fmt_rational(z), "B_sum": fmt_rational(b), "Xi": fmt_rational(xi),
            "holds": lhs == z + b}


def t_subset_lower_bound(d: int) -> dict:
    """Sum over t-subsets T of the upper layer of 2^(N-|N(T)|), t = round(N/2^d).

    Summing over all t-subsets counts exactly the independent sets whose upper
    part has size t, so it is a lower bound on Z(1).
    """
    if d < 2:
        raise ParameterError("d must be at least 2")
    N = math.comb(2 * d - 1, d)
    t = round(Fraction(N, 2 ** d))
    expo = N / 2 ** d + math.log(2) * math.comb(d, 2) * N / 4 ** d
    log2_formula = 1 + N + expo / math.log(2)
    out = {"d": d, "N": N, "t": t, "formula_log2": fmt_float(log2_formula),
           "formula_value": fmt_float(2.0 ** log2_formula) if log2_formula < 1000 else None,
           "warnings": ["o(1) terms set to 0; asymptotic formula at small d"]}
    if t == 0:
        raise ScaleError("t rounds to 0; only the formula is available")
    if math.comb(N, t) > T_SUBSET_CAP or N > 62:
        out["exact_sum"] = None
        out["warnings"].append(f"C(N,t) above {T_SUBSET_CAP}; exact sum skipped")
        return out
    g = middle_graph(d)
    nb = [g.nbr_mask(Side.UPPER, u) for u in range(N)]
    total = 0
    sizes: dict[int, int] = {}
    for T in combinations(range(N), t):
        cov = 0
        for u in T:
            cov |= nb[u]
        b = cov.bit_count()
        sizes[b] = sizes.get(b, 0) + 1
        total += 1 << (N - b)
    out["exact_sum"] = str(total)
    out["boundary_sizes"] = {str(b): c for b, c in sorted(sizes.items())}
    return out


def expected_boundary(d: int, t: int) -> dict:
    """E|N(T)| for a uniform t-subset T of the upper layer, exactly and approximately."""
    if d < 2:
        raise ParameterError("d must be at least 2")
    N = math.comb(2 * d - 1, d)
    if not 0 <= t <= N:
        raise ParameterError(f"t must lie in [0, {N}]")
    exact = N * (1 - Fraction(math.comb(N - d, t), math.comb(N, t)))
    approx = d * t - math.comb(d, 2) * t * t / N
    return {"d": d, "t": t, "N": N, "exact": fmt_rational(exact),
            "exact_float": fmt_float(float(exact)), "approx": fmt_float(approx)}


def asymptotic_count_estimate(d: int, with_exact: bool = False) -> dict:
    """log2 of 2·2^N·exp(N 2^-d + C(d,2) N 2^-2d) with the o(1) term dropped."""
    if d < 2:
        raise ParameterError("d must be at least 2")
    N = math.comb(2 * d - 1, d)
    first = N / 2 ** d
    second = math.comb(d, 2) * N / 4 ** d
    log2_count = 1 + N + (first + second) / math.log(2)
    # log2 of the Stirling approximation 2^(2d-1)/sqrt(pi d)
    stirling_log2 = 2 * d - 1 - 0.5 * math.log2(math.pi * d)
    out = {"d": d, "log2_count": fmt_float(log2_count),
           "components": {"N": N, "N_over_2d": fmt_float(first),
                          "binom_d2_N_over_4d": fmt_float(second)},
           "stirling": {"N_approx_log2": fmt_float(stirling_log2),
                        "ratio": fmt_float(2 ** (math.log2(N) - stirling_log2))},
           "warnings": []}
    if d < 10:
        out["warnings"].append(f"asymptotic formula evaluated at d={d} < 10")
    if with_exact:
        if d > 4:
            raise ScaleError("exact count only available for d <= 4")
        z = exact_Z(middle_graph(d), Fraction(1)).value.exact
        out["exact_log2"] = fmt_float(log_of(z) / math.log(2))
        out["gap_log2"] = fmt_float(log2_count - log_of(z) / math.log(2))
    return out


example31_lower_bound = t_subset_lower_bound
theorem14_estimate = asymptotic_count_estimate
