"""Command-line front end: ``midlayer <command> [flags]``.

Every command prints one report (JSON by default). Errors print a JSON
payload on stderr and exit with the code carried by the exception.
"""

from __future__ import annotations

import argparse
import sys
import time
from pathlib import Path

from . import exact, expansion, polymers, sampler, verify
from .errors import InvariantError, MidlayerError, ParameterError
from .lattice import (Side, build_graph, isoperimetry_check, middle_graph)
from .report import Report, dumps, emit
from .scalars import fmt_float, fmt_rational, parse_lambda
from .ursell import UrsellCache

COMMANDS = ("graph", "count", "expand", "kp-check", "container", "sample",
            "census", "verify", "estimate")


class _Parser(argparse.ArgumentParser):
    def error(self, message):
        raise ParameterError(message)


def _positive_int(text: str) -> int:
    try:
        v = int(text)
    except ValueError as exc:
        raise argparse.ArgumentTypeError(f"not an integer: {text!r}") from exc
    if v < 0:
        raise argparse.ArgumentTypeError(f"must be non-negative: {text!r}")
    return v


def _common(p: argparse.ArgumentParser, shape: bool = True, lam: bool = True) -> None:
    if shape:
        p.add_argument("--d", type=_positive_int)
        p.add_argument("--n", type=_positive_int)
        p.add_argument("--k", type=_positive_int)
    if lam:
        p.add_argument("--lambda", dest="lam", type=str)
    p.add_argument("--format", choices=("json", "csv"), default="json")
    p.add_argument("--output")
    p.add_argument("--config")
    p.add_argument("--timing", action="store_true")


def build_parser() -> argparse.ArgumentParser:
    top = _Parser(prog="midlayer", description="Independent sets in the middle two "
                  "layers of the Boolean lattice: exact counts, polymer expansion, sampling.")
    sub = top.add_subparsers(dest="command", parser_class=_Parser)
    sub.required = True

    p = sub.add_parser("graph", help="sizes and degrees of B(n,k)")
    _common(p, lam=False)
    p.add_argument("--iso", choices=("i", "ii", "iii"))
    p.add_argument("--max-size", type=_positive_int)
    p.add_argument("--samples", type=_positive_int, default=0)
    p.add_argument("--seed", type=_positive_int, default=0)

    p = sub.add_parser("count", help="exact independence polynomial")
    _common(p)
    p.add_argument("--method", choices=("auto", "graycode", "orbit", "naive"), default="auto")
    p.add_argument("--coefficients", action="store_true")
    p.add_argument("--family", choices=("M_side", "B_both"))
    p.add_argument("--shards", type=_positive_int)

    p = sub.add_parser("expand", help="cluster expansion terms L_1..L_k")
    _common(p)
    p.add_argument("--k-max", type=_positive_int, default=2)
    p.add_argument("--source", choices=("closed-form", "closed_form", "enumerated"),
                   default="enumerated")
    p.add_argument("--c0", type=float, default=1.0)

    p = sub.add_parser("kp-check", help="convergence condition up to a polymer size cap")
    _common(p)
    p.add_argument("--max-size", type=_positive_int, default=2)
    p.add_argument("--aux-c", type=float, default=1.0)
    p.add_argument("--c0", type=float, default=1.0)

    p = sub.add_parser("container", help="container family G(a,b)")
    _common(p)
    p.add_argument("--a", type=_positive_int, required=False)
    p.add_argument("--b", type=_positive_int, required=False)
    p.add_argument("--c1", type=float)
    p.add_argument("--members", action="store_true")

    p = sub.add_parser("sample", help="draw from mu_hat")
    _common(p)
    p.add_argument("--seed", type=_positive_int, default=0)
    p.add_argument("--samples", type=_positive_int, default=10)
    p.add_argument("--records", help="write per-sample JSON lines to this path")

    p = sub.add_parser("census", help="component-size census of independent sets")
    _common(p)
    p.add_argument("--mode", choices=("exact", "sampled"), default="exact")
    p.add_argument("--seed", type=_positive_int, default=0)
    p.add_argument("--samples", type=_positive_int, default=0)

    p = sub.add_parser("verify", help="run a named self-check suite")
    _common(p, shape=False, lam=False)
    p.add_argument("--suite", choices=("fast", "all"), default="fast")

    p = sub.add_parser("estimate", help="asymptotic formulas next to exact values")
    _common(p)
    p.add_argument("--t", type=_positive_int)
    p.add_argument("--k-max", type=_positive_int, default=2)
    p.add_argument("--source", choices=("closed-form", "closed_form", "enumerated"),
                   default="closed-form")
    p.add_argument("--exact", action="store_true", help="also compute exact log2 Z(1)")
    return top


def read_config(path: str) -> dict:
    """``key = value`` lines; keys mirror flag names, ``#`` starts a comment."""
    out = {}
    try:
        text = Path(path).read_text()
    except OSError as exc:
        raise ParameterError(f"cannot read config {path}: {exc}") from exc
    for lineno, raw in enumerate(text.splitlines(), 1):
        line = raw.split("#", 1)[0].strip()
        if not line:
            continue
        if "=" not in line:
            raise ParameterError(f"{path}:{lineno}: expected key = value")
        key, value = (s.strip() for s in line.split("=", 1))
        out[key.replace("-", "_")] = value
    return out


def _argv_with_config(parser: argparse.ArgumentParser, argv: list[str]) -> argparse.Namespace:
    args = parser.parse_args(argv)
    if not args.config:
        return args
    given = {a.split("=", 1)[0] for a in argv if a.startswith("--")}
    extra = []
    for key, value in read_config(args.config).items():
        flag = "--" + ("lambda" if key in ("lambda", "lam") else key.replace("_", "-"))
        if flag in given or flag == "--config":
            continue
        if value.lower() in ("true", "yes", "on"):
            extra.append(flag)
        elif value.lower() in ("false", "no", "off"):
            continue
        else:
            extra += [flag, value]
    return parser.parse_args([argv[0]] + extra + argv[1:])


def _graph(args):
    if args.d is not None:
        if args.n is not None or args.k is not None:
            raise ParameterError("give either --d or --n/--k, not both")
        return middle_graph(args.d)
    if args.n is None or args.k is None:
        raise ParameterError("need --d, or both --n and --k")
    return build_graph(args.n, args.k)


def _middle(args):
    g = _graph(args)
    g.require_middle()
    return g


def _lam(args, default: str = "1"):
    return parse_lambda(args.lam if args.lam is not None else default)


def _fmt_lam(lam):
    return fmt_float(lam) if isinstance(lam, float) else fmt_rational(lam)


def cmd_graph(args) -> Report:
    g = _graph(args)
    up, low = Side.UPPER, Side.LOWER
    degs = {s.value: sorted({g.degree(s, v) for v in range(g.size(s))}) for s in (up, low)}
    res = {"n": g.n, "k": g.k, "upper_size": g.size(up), "lower_size": g.size(low),
           "edges": sum(g.degree(up, v) for v in range(g.size(up))),
           "degree": {s: (v[0] if len(v) == 1 else v) for s, v in degs.items()},
           "regular": degs["upper"] == degs["lower"] and len(degs["upper"]) == 1,
           "middle": g.is_middle}
    if g.is_middle:
        res["d"] = g.d
        res["N"] = g.N
    if args.iso:
        rep = isoperimetry_check(g, args.iso, args.max_size, samples=args.samples,
                                 seed=args.seed)
        res["isoperimetry"] = rep.as_dict()
    return Report("graph", {"n": g.n, "k": g.k}, res)


def cmd_count(args) -> Report:
    g = _graph(args)
    lam = _lam(args)
    if args.shards is not None:
        bits = args.shards.bit_length() - 1
        if args.shards < 1 or 1 << bits != args.shards:
            raise ParameterError("--shards must be a power of two")
        if args.method not in ("auto", "graycode"):
            raise ParameterError("--shards applies to the graycode method")
        previous = exact._shard_bits[0]
        exact.set_shard_bits(bits)
        try:
            r = exact.exact_Z(g, lam, args.method)
        finally:
            exact.set_shard_bits(previous)
    else:
        r = exact.exact_Z(g, lam, args.method)
    res = r.to_json(with_coefficients=args.coefficients)
    warnings = []
    if args.family:
        s = exact.exact_restricted_sum(g, lam, args.family)
        res["family"] = args.family
        res["restricted_sum"] = s.to_json()
        if args.family == "M_side":
            res["Xi"] = exact.xi_exact(g, lam).to_json()
    table = None
    if args.coefficients:
        table = {"columns": ["j", "coefficient"],
                 "rows": [[j, str(c)] for j, c in enumerate(r.coefficients)]}
    rep = Report("count", {"n": g.n, "k": g.k, "lambda": _fmt_lam(lam),
                           "method": args.method}, res, warnings, table=table)
    if args.timing:
        rep.timing = {"wall_time_ms": r.wall_time_ms}
    return rep


def cmd_expand(args) -> Report:
    g = _middle(args)
    lam = _lam(args)
    rep = expansion.expansion_report(g.d, lam, args.k_max, args.source, args.c0)
    body = rep.as_dict()
    warnings = body.pop("regime_warnings")
    rows = [[k + 1, t, s] for k, (t, s) in enumerate(zip(body["terms"], body["partial_sums"]))]
    return Report("expand", {"d": g.d, "lambda": _fmt_lam(lam), "k_max": args.k_max,
                             "source": rep.source}, body, warnings,
                  table={"columns": ["k", "L_k", "partial_sum"], "rows": rows})


def cmd_kp(args) -> Report:
    g = _middle(args)
    lam = _lam(args)
    w = polymers.WeightParams(lam, g.d, args.aux_c)
    res = expansion.kp_check(g, w, args.max_size, c0=args.c0)
    warnings = res.pop("warnings")
    return Report("kp-check", {"d": g.d, "lambda": _fmt_lam(lam), "max_size": args.max_size,
                               "aux_C": args.aux_c}, res, warnings)


def cmd_container(args) -> Report:
    g = _middle(args)
    lam = _lam(args)
    if args.a is None or args.b is None:
        raise ParameterError("container needs --a and --b")
    fam = polymers.enumerate_container_family(g, args.a, args.b)
    res = polymers.container_report(g, fam, lam, args.c1, args.members)
    warnings = []
    if args.c1 is not None:
        warnings.append("bound_shape uses a user-supplied constant C1")
    return Report("container", {"d": g.d, "lambda": _fmt_lam(lam), "a": args.a,
                                "b": args.b}, res, warnings)


def cmd_sample(args) -> Report:
    g = _middle(args)
    lam = _lam(args)
    run = sampler.sample_mu_hat(g, lam, args.seed, args.samples)
    res = {"seed": args.seed, "count": run.count}
    warnings = []
    if run.count:
        stats = sampler.minority_defect_stats(run)
        warnings += stats.pop("warnings")
        res["stats"] = stats
    if args.records:
        Path(args.records).write_text(run.to_jsonl())
        res["records_path"] = args.records
    else:
        res["records"] = [r.as_dict(g) for r in run.records]
    return Report("sample", {"d": g.d, "lambda": _fmt_lam(lam), "seed": args.seed,
                             "samples": args.samples}, res, warnings)


def cmd_census(args) -> Report:
    g = _middle(args)
    lam = _lam(args)
    res = sampler.structure_census(g, lam, args.mode, args.samples, args.seed)
    warnings = res.pop("warnings")
    rows = [[p["max_comp_upper"], p["max_comp_lower"], p["mass"]] for p in res["profiles"]]
    return Report("census", {"d": g.d, "lambda": _fmt_lam(lam), "mode": args.mode},
                  res, warnings,
                  table={"columns": ["max_comp_upper", "max_comp_lower", "mass"],
                         "rows": rows})


def cmd_verify(args) -> Report:
    res = verify.run_suite(args.suite, timing=args.timing)
    return Report("verify", {"suite": args.suite}, res)


def cmd_estimate(args) -> Report:
    if args.d is None:
        raise ParameterError("estimate needs --d")
    d = args.d
    res = {"count_formula": exact.asymptotic_count_estimate(d, with_exact=args.exact),
           "t_subset_bound": exact.t_subset_lower_bound(d)}
    warnings = (list(res["count_formula"].pop("warnings"))
                + list(res["t_subset_bound"].pop("warnings")))
    if args.t is not None:
        res["expected_boundary"] = exact.expected_boundary(d, args.t)
    if args.lam is not None:
        lam = _lam(args)
        pred = expansion.predict_partition(d, lam, args.k_max, args.source)
        warnings += pred.pop("warnings")
        res["predict_partition"] = {
            "log_Z_estimate": fmt_float(pred["log_Z_estimate"]),
            "epsilon_bound": fmt_float(pred["epsilon_bound"]),
            "log_epsilon_bound": fmt_float(pred["log_epsilon_bound"]),
            "terms": [fmt_float(t) if isinstance(t, float) else fmt_rational(t)
                      for t in pred["terms"]]}
    inputs = {"d": d}
    if args.lam is not None:
        inputs["lambda"] = args.lam
    return Report("estimate", inputs, res, warnings)


HANDLERS = {"graph": cmd_graph, "count": cmd_count, "expand": cmd_expand,
            "kp-check": cmd_kp, "container": cmd_container, "sample": cmd_sample,
            "census": cmd_census, "verify": cmd_verify, "estimate": cmd_estimate}


def run(argv: list[str]) -> tuple[Report, argparse.Namespace]:
    parser = build_parser()
    if argv and argv[0] in COMMANDS:
        args = _argv_with_config(parser, argv)
    else:
        args = parser.parse_args(argv)
    t0 = time.perf_counter()
    rep = HANDLERS[args.command](args)
    if args.timing and rep.timing is None:
        rep.timing = {"wall_time_ms": (time.perf_counter() - t0) * 1000}
    return rep, args


def main(argv: list[str] | None = None) -> int:
    argv = list(sys.argv[1:] if argv is None else argv)
    try:
        expansion.set_default_cache(UrsellCache.from_env())
        rep, args = run(argv)
        data = emit(rep, args.format)
        if args.output:
            Path(args.output).write_bytes(data)
        else:
            sys.stdout.buffer.write(data)
            sys.stdout.flush()
        expansion.save_default_cache()
        if rep.command == "verify" and rep.results["failed"]:
            raise InvariantError("failed checks: " + ", ".join(rep.results["failed"]))
    except MidlayerError as exc:
        sys.stderr.write(dumps(exc.payload()) + "\n")
        return exc.exit_code
    return 0


if __name__ == "__main__":
    raise SystemExit(main())
