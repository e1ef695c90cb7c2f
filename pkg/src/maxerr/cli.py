"""Command-line front end.

Subcommands cover the whole pipeline: ``analyze`` (worst-case error per
output), ``sweep`` (error vs gate error rate, with bound detection),
``spectrum`` (every input vector), ``validate`` (exact vs Monte Carlo)
and ``oracle-check`` (engine vs fault-set enumeration).  Output goes to
stdout or ``--output`` as CSV or JSON with probabilities at 6 decimals;
timing and diagnostics go to stderr so repeated runs with the same
arguments produce byte-identical files.

Exit codes: 0 success, 1 circuit parse error, 2 usage or resource
limit (join tree width, enumeration caps), 3 evidence unreachable on
every output.
"""

from __future__ import annotations

import argparse
import json
import sys
import time

import numpy as np

from .analysis import max_error, prepare, spectrum, sweep
from .circuit import BenchParseError, load_circuit, vector_string
from .jointree import choose_order
from .model import eps_by_net_name
from .oracle import FaultEnumerator, McConfig, monte_carlo
from .propagate import Propagator
from .valuation import WidthLimitError

EXIT_OK = 0
EXIT_PARSE = 1
EXIT_LIMIT = 2
EXIT_UNREACHABLE = 3


def _fmt(p: float) -> str:
    return "%.6f" % p


def _parse_grid(text: str) -> list[float]:
    """``start:stop:step`` (stop inclusive to within half a step) or a
    comma-separated list."""
    if ":" in text:
        parts = text.split(":")
        if len(parts) != 3:
            raise ValueError("grid must be start:stop:step or a comma list")
        start, stop, step = (float(x) for x in parts)
        if step <= 0 or stop < start:
            raise ValueError("grid must satisfy step > 0 and stop >= start")
        n = int(round((stop - start) / step))
        grid = [round(start + i * step, 12) for i in range(n + 1)]
    else:
        grid = [float(x) for x in text.split(",") if x.strip()]
    if not grid:
        raise ValueError("empty eps grid")
    if any(not 0.0 < e <= 0.5 for e in grid):
        raise ValueError("grid values must lie in (0, 0.5]")
    return grid


def _load_eps(args, c):
    """Resolve --epsilon / --epsilon-map into what build_error_model and
    the oracle accept (float or {gate index: eps})."""
    if args.epsilon_map:
        with open(args.epsilon_map, "r", encoding="utf-8") as fh:
            named = json.load(fh)
        if not isinstance(named, dict):
            raise ValueError("--epsilon-map must hold a JSON object {net: eps}")
        return eps_by_net_name(c, {str(k): float(v) for k, v in named.items()},
                               default=args.epsilon)
    if args.epsilon is None:
        raise ValueError("one of --epsilon / --epsilon-map is required")
    return args.epsilon


def _emit(args, text: str) -> None:
    if args.output:
        with open(args.output, "w", encoding="utf-8") as fh:
            fh.write(text)
    else:
        sys.stdout.write(text)


def _explain(net, tree, note: str = "") -> None:
    order = choose_order(net)
    print("elimination order: %s" % (order.order,), file=sys.stderr)
    print("join tree: %d clusters, width Z = %d%s"
          % (tree.n_clusters, tree.width, note), file=sys.stderr)
    print(tree.describe(net), file=sys.stderr)


def _inputs_header(c) -> str:
    return "# inputs: " + " ".join(c.inputs) + "\n"


def cmd_analyze(args) -> int:
    c = load_circuit(args.circuit)
    eps = _load_eps(args, c)
    net, tree = prepare(c, eps, width_limit=args.width_limit)
    t0 = time.perf_counter()
    rep = max_error(net, tree, use_seed=not args.no_seed,
                    prune=not args.no_prune, joint=args.joint_evidence)
    dt = time.perf_counter() - t0
    if args.explain:
        _explain(net, tree)
        for r in rep.per_output:
            print("query %s: expanded %d pruned %d"
                  % (r.output, r.nodes_expanded, r.nodes_pruned), file=sys.stderr)
    print("analyze: %.3fs" % dt, file=sys.stderr)

    if args.format == "json":
        doc = {
            "inputs": list(rep.input_order),
            "per_output": [
                {"output": r.output, "vector": r.vector,
                 "p_error": round(r.p_error, 6), "unreachable": r.unreachable,
                 "nodes_expanded": r.nodes_expanded,
                 "nodes_pruned": r.nodes_pruned}
                for r in rep.per_output],
            "max_error": round(rep.max_error, 6),
            "worst_vector": rep.worst_vector,
            "worst_output": rep.worst_output,
        }
        _emit(args, json.dumps(doc, indent=2) + "\n")
    else:
        lines = [_inputs_header(c).rstrip("\n"),
                 "output,vector,p_error,nodes_expanded,nodes_pruned"]
        for r in rep.per_output:
            lines.append("%s,%s,%s,%d,%d" % (
                r.output, r.vector if r.vector else "-", _fmt(r.p_error),
                r.nodes_expanded, r.nodes_pruned))
        lines.append("# max_error=%s worst_vector=%s worst_output=%s" % (
            _fmt(rep.max_error), rep.worst_vector or "-", rep.worst_output or "-"))
        _emit(args, "\n".join(lines) + "\n")

    if all(r.unreachable for r in rep.per_output):
        print("error evidence unreachable on every output", file=sys.stderr)
        return EXIT_UNREACHABLE
    return EXIT_OK


def cmd_sweep(args) -> int:
    c = load_circuit(args.circuit)
    if args.epsilon_map:
        raise ValueError("sweep varies a uniform eps; --epsilon-map not supported")
    grid = _parse_grid(args.grid)
    t0 = time.perf_counter()
    curve = sweep(c, grid, refine=args.refine, width_limit=args.width_limit)
    dt = time.perf_counter() - t0
    print("sweep: %d points, %.3fs total, %.3fs/point"
          % (len(grid), dt, dt / len(grid)), file=sys.stderr)

    if args.format == "json":
        doc = {
            "points": [{"epsilon": p.epsilon,
                        "max_error": round(p.max_error, 6),
                        "avg_error": round(p.avg_error, 6),
                        "worst_vector": p.worst_vector,
                        "worst_output": p.worst_output}
                       for p in curve.points],
            "error_bound": curve.error_bound,
            "refined_bound": curve.refined_bound,
        }
        _emit(args, json.dumps(doc, indent=2) + "\n")
    else:
        lines = ["epsilon,max_error,avg_error,worst_vector,worst_output"]
        for p in curve.points:
            lines.append("%g,%s,%s,%s,%s" % (
                p.epsilon, _fmt(p.max_error), _fmt(p.avg_error),
                p.worst_vector or "-", p.worst_output or "-"))
        lines.append("# error_bound=%s" % (
            "-" if curve.error_bound is None else "%g" % curve.error_bound))
        lines.append("# refined_bound=%s" % (
            "-" if curve.refined_bound is None else _fmt(curve.refined_bound)))
        _emit(args, "\n".join(lines) + "\n")
    return EXIT_OK


def cmd_spectrum(args) -> int:
    c = load_circuit(args.circuit)
    eps = _load_eps(args, c)
    t0 = time.perf_counter()
    sp = spectrum(c, eps, width_limit=args.width_limit)
    print("spectrum: %d vectors, %.3fs" % (len(sp.max_probs),
                                           time.perf_counter() - t0), file=sys.stderr)
    k = c.n_inputs
    if args.format == "json":
        doc = {
            "inputs": list(sp.input_order),
            "mu": round(sp.mu, 6),
            "sigma": round(sp.sigma, 6),
            "rows": [{"vector": vector_string(_bits(i, k)),
                      "per_output": [round(float(x), 6) for x in sp.per_output[i]],
                      "max": round(float(sp.max_probs[i]), 6)}
                     for i in range(1 << k)],
            "above": [{"vector": v, "max": round(p, 6)} for v, p in sp.above()],
        }
        _emit(args, json.dumps(doc, indent=2) + "\n")
    else:
        lines = [_inputs_header(c).rstrip("\n"),
                 "vector," + ",".join(c.outputs) + ",max"]
        for i in range(1 << k):
            cells = ",".join(_fmt(float(x)) for x in sp.per_output[i])
            lines.append("%s,%s,%s" % (vector_string(_bits(i, k)), cells,
                                       _fmt(float(sp.max_probs[i]))))
        lines.append("# mu=%s sigma=%s above_mu_plus_sigma=%d" % (
            _fmt(sp.mu), _fmt(sp.sigma), len(sp.above())))
        _emit(args, "\n".join(lines) + "\n")
    return EXIT_OK


def _bits(idx: int, k: int) -> tuple[int, ...]:
    return tuple((idx >> (k - 1 - j)) & 1 for j in range(k))


def cmd_validate(args) -> int:
    c = load_circuit(args.circuit)
    eps = _load_eps(args, c)
    enum = FaultEnumerator(c)
    exact = enum.cond_errors(eps)
    cfg = McConfig(runs=args.runs, seed=args.seed)
    t0 = time.perf_counter()
    rows = []
    for i in range(exact.shape[0]):
        bits = _bits(i, c.n_inputs)
        est = monte_carlo(c, bits, eps, cfg)
        for j, name in enumerate(c.outputs):
            rows.append((vector_string(bits), name, float(exact[i, j]),
                         float(est.p_error[j]), float(est.stderr[j])))
    print("validate: %d vectors x %d runs, %.3fs"
          % (exact.shape[0], args.runs, time.perf_counter() - t0), file=sys.stderr)

    if args.format == "json":
        doc = {"inputs": list(c.inputs), "runs": args.runs, "seed": args.seed,
               "rows": [{"vector": v, "output": o,
                         "exact": round(e, 6), "mc_estimate": round(m, 6),
                         "mc_stderr": round(s, 6), "abs_diff": round(abs(e - m), 6)}
                        for v, o, e, m, s in rows]}
        _emit(args, json.dumps(doc, indent=2) + "\n")
    else:
        lines = [_inputs_header(c).rstrip("\n"),
                 "vector,output,exact,mc_estimate,mc_stderr,abs_diff"]
        for v, o, e, m, s in rows:
            lines.append(",".join((v, o, _fmt(e), _fmt(m), _fmt(s), _fmt(abs(e - m)))))
        _emit(args, "\n".join(lines) + "\n")
    return EXIT_OK


def cmd_oracle_check(args) -> int:
    c = load_circuit(args.circuit)
    eps = _load_eps(args, c)
    enum = FaultEnumerator(c)
    exact = enum.cond_errors(eps)
    net, tree = prepare(c, eps, width_limit=args.width_limit)
    prop = Propagator(tree, net)
    if args.explain:
        _explain(net, tree)
    rows = []
    worst = 0.0
    for i in range(exact.shape[0]):
        bits = _bits(i, c.n_inputs)
        assign = {v: bits[j] for j, v in enumerate(net.input_vars)}
        for j, comp in enumerate(net.comparators):
            prop.set_evidence(assign)
            belief = prop.var_belief(comp)
            t = belief.table if not belief.log else np.exp(belief.table)
            engine = float(t[1]) / float(t[0] + t[1])
            diff = abs(engine - float(exact[i, j]))
            worst = max(worst, diff)
            rows.append((vector_string(bits), c.outputs[j], engine, float(exact[i, j]), diff))

    if args.format == "json":
        doc = {"inputs": list(c.inputs),
               "rows": [{"vector": v, "output": o, "engine": round(g, 9),
                         "exact": round(e, 9), "abs_diff": round(d, 9)}
                        for v, o, g, e, d in rows],
               "max_abs_diff": worst}
        _emit(args, json.dumps(doc, indent=2) + "\n")
    else:
        lines = [_inputs_header(c).rstrip("\n"),
                 "vector,output,engine,exact,abs_diff"]
        for v, o, g, e, d in rows:
            lines.append("%s,%s,%.9f,%.9f,%.2e" % (v, o, g, e, d))
        lines.append("# max_abs_diff=%.3e" % worst)
        _emit(args, "\n".join(lines) + "\n")
    print("oracle-check: max |engine - exact| = %.3e" % worst, file=sys.stderr)
    return EXIT_OK


def _build_parser() -> argparse.ArgumentParser:
    ap = argparse.ArgumentParser(
        prog="maxerr",
        description="Worst-case output error analysis for gate-level circuits.",
        epilog="MAXERR_THREADS caps Monte Carlo worker threads.")
    sub = ap.add_subparsers(dest="cmd", required=True)

    def common(p, eps=True):
        p.add_argument("circuit", help=".bench or .json circuit file")
        if eps:
            p.add_argument("--epsilon", type=float, default=None,
                           help="uniform gate error rate in [0, 0.5]")
            p.add_argument("--epsilon-map", default=None, metavar="FILE",
                           help="JSON {net: eps}; --epsilon fills unlisted nets")
        p.add_argument("--format", choices=("csv", "json"), default="csv")
        p.add_argument("--output", default=None, metavar="FILE",
                       help="write here instead of stdout")
        p.add_argument("--width-limit", type=int, default=None,
                       help="abort if a join tree cluster exceeds this many variables")
        p.add_argument("--explain", action="store_true",
                       help="dump elimination order, tree and node counts to stderr")

    p = sub.add_parser("analyze", help="worst-case error per output via MAP")
    common(p)
    p.add_argument("--joint-evidence", action="store_true",
                   help="single query with every output wrong at once")
    p.add_argument("--no-prune", action="store_true",
                   help="exhaustive search (for audits)")
    p.add_argument("--no-seed", action="store_true",
                   help="skip the greedy incumbent")
    p.set_defaults(fn=cmd_analyze)

    p = sub.add_parser("sweep", help="max/avg error across an eps grid")
    common(p)
    p.add_argument("--grid", required=True,
                   help="start:stop:step or comma-separated eps values")
    p.add_argument("--refine", action="store_true",
                   help="bisect the 0.5 crossing to +-1e-4")
    p.set_defaults(fn=cmd_sweep)

    p = sub.add_parser("spectrum", help="exact error for every input vector")
    common(p)
    p.set_defaults(fn=cmd_spectrum)

    p = sub.add_parser("validate", help="exact enumeration vs Monte Carlo")
    common(p)
    p.add_argument("--runs", type=int, default=1_000_000)
    p.add_argument("--seed", type=int, default=0)
    p.set_defaults(fn=cmd_validate)

    p = sub.add_parser("oracle-check", help="engine inference vs enumeration")
    common(p)
    p.set_defaults(fn=cmd_oracle_check)
    return ap


def main(argv=None) -> int:
    ap = _build_parser()
    args = ap.parse_args(argv)
    try:
        return args.fn(args)
    except BenchParseError as exc:
        print("parse error: %s" % exc, file=sys.stderr)
        return EXIT_PARSE
    except FileNotFoundError as exc:
        print("cannot read %s" % exc.filename, file=sys.stderr)
        return EXIT_PARSE
    except WidthLimitError as exc:
        print("join tree too wide: %s" % exc, file=sys.stderr)
        return EXIT_LIMIT
    except ValueError as exc:
        print("error: %s" % exc, file=sys.stderr)
        return EXIT_LIMIT


if __name__ == "__main__":
    raise SystemExit(main())
