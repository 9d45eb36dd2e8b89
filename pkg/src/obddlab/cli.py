"""Command-line entry point: ``obddlab <verb> ...``.

Exit codes: 10 SAT, 20 UNSAT, 30 node budget exhausted (``solve``); 0 pass
and 1 fail (``check``); 2 for usage and input errors.  Reports are CSV with
a header row.  Randomized verbs require ``--seed``, and for a fixed
configuration and seed their CSV output is byte-identical, except for
timing columns, which ``--timing off`` replaces by ``NA``.
"""

from __future__ import annotations

import argparse
import csv
import io
import math
import statistics
import sys
import time
from concurrent.futures import ProcessPoolExecutor
from fractions import Fraction
from pathlib import Path
from typing import Callable, Sequence

import numpy as np

from .cnf import DimacsError, gen_indmatch, gen_match, gen_php, read_cnf, save_cnf
from .obdd import NodeBudgetExceeded, VarOrder, node_cap_from_env
from .proof import ProofParseError, check_derivation, parse_proof, proof_size, write_proof
from .solver import BUDGET, SAT, UNSAT, choose_order, solve

EXIT_SAT = 10
EXIT_UNSAT = 20
EXIT_BUDGET = 30
EXIT_PASS = 0
EXIT_FAIL = 1
EXIT_USAGE = 2

GENERATORS = {"match": gen_match, "indmatch": gen_indmatch, "php": gen_php}
HEURISTICS = {"match": ("natural", "degree", "vertex-major"), "php": ("natural", "degree")}


class UsageError(Exception):
    pass


# ------------------------------------------------------------------ helpers
def _write_csv(rows: list[dict], columns: Sequence[str], out: str | None) -> None:
    buf = io.StringIO()
    w = csv.DictWriter(buf, fieldnames=list(columns), lineterminator="\n")
    w.writeheader()
    for r in rows:
        w.writerow(r)
    text = buf.getvalue()
    if out:
        Path(out).write_text(text)
    else:
        sys.stdout.write(text)


def _fmt(x) -> str:
    if isinstance(x, Fraction):
        x = float(x)
    if isinstance(x, float):
        return "NA" if math.isnan(x) else repr(x)
    return str(x)


def _parse_range(text: str) -> list[int]:
    """``3..8``, ``1,2,5`` or a single integer."""
    out: list[int] = []
    for part in text.split(","):
        part = part.strip()
        if ".." in part:
            a, b = part.split("..", 1)
            out.extend(range(int(a), int(b) + 1))
        elif part:
            out.append(int(part))
    if not out:
        raise UsageError(f"empty range {text!r}")
    return out


def _require_seed(args) -> int:
    if args.seed is None:
        raise UsageError(f"{args.command} is randomized and needs --seed")
    return int(args.seed)


def _node_cap(args) -> int:
    return int(args.node_cap) if args.node_cap is not None else node_cap_from_env()


def _cell_rng(seed: int, *keys: int) -> np.random.Generator:
    return np.random.default_rng(np.random.SeedSequence([seed, *keys]))


# -------------------------------------------------------------------- verbs
def cmd_gen(args) -> int:
    family = args.family
    if family not in GENERATORS:
        raise UsageError(f"unknown family {family!r}")
    cnf = GENERATORS[family](int(args.param))
    out_dir = Path(args.out or ".")
    out_dir.mkdir(parents=True, exist_ok=True)
    path, names = save_cnf(cnf, out_dir / f"{family}{args.param}.cnf")
    print(f"{path}\n{names}")
    return EXIT_PASS


def _load_cnf(args):
    try:
        return read_cnf(args.cnf, args.names)
    except DimacsError as exc:
        raise UsageError(f"{args.cnf}: {exc}") from None
    except OSError as exc:
        raise UsageError(str(exc)) from None


def cmd_solve(args) -> int:
    cnf = _load_cnf(args)
    try:
        order = choose_order(cnf, args.order)
    except (ValueError, OSError, KeyError) as exc:
        raise UsageError(f"order: {exc}") from None
    res = solve(cnf, order, node_cap=_node_cap(args))
    if args.emit_proof and res.verdict == UNSAT:
        Path(args.emit_proof).write_text(write_proof(res.derivation, cnf))
    size = proof_size(res.derivation) if res.verdict == UNSAT else "NA"
    secs = "NA" if args.timing == "off" else repr(round(res.seconds, 6))
    _write_csv(
        [{"verdict": res.verdict, "lines": len(res.derivation), "proof_size": size, "peak_nodes": res.peak_nodes, "seconds": secs}],
        ("verdict", "lines", "proof_size", "peak_nodes", "seconds"),
        args.out,
    )
    return {SAT: EXIT_SAT, UNSAT: EXIT_UNSAT, BUDGET: EXIT_BUDGET}[res.verdict]


def cmd_check(args) -> int:
    cnf = _load_cnf(args)
    try:
        deriv = parse_proof(Path(args.proof).read_text(), cnf)
    except ProofParseError as exc:
        print(f"FAIL {exc}")
        return EXIT_FAIL
    except OSError as exc:
        raise UsageError(str(exc)) from None
    verdict = check_derivation(cnf, deriv, refutation=not args.derivation_only)
    if verdict.ok:
        print("PASS")
        return EXIT_PASS
    print(f"FAIL {verdict.failure}")
    return EXIT_FAIL


def _bench_cell(task: tuple) -> dict:
    family, param, label, seed, k, cap, timing = task
    cnf = GENERATORS[family](param)
    if label.startswith("random-"):
        rng = _cell_rng(seed, 0 if family == "match" else 1, param, k)
        order = VarOrder(int(v) + 1 for v in rng.permutation(cnf.num_vars))
    else:
        order = choose_order(cnf, label)
    res = solve(cnf, order, node_cap=cap)
    size = proof_size(res.derivation) if res.verdict == UNSAT else "NA"
    return {
        "family": family,
        "param": param,
        "order": label,
        "proof_size": size,
        "peak_nodes": res.peak_nodes,
        "seconds": "NA" if timing == "off" else repr(round(res.seconds, 6)),
    }


BENCH_COLUMNS = ("family", "param", "order", "proof_size", "peak_nodes", "seconds")


def cmd_bench_growth(args) -> int:
    seed = _require_seed(args)
    family = args.family
    if family not in HEURISTICS:
        raise UsageError("bench-growth supports the match and php families")
    params = _parse_range(args.params)
    cap = _node_cap(args)
    tasks = []
    for param in params:
        for h in HEURISTICS[family]:
            tasks.append((family, param, h, seed, -1, cap, args.timing))
        for k in range(int(args.orders)):
            tasks.append((family, param, f"random-{k}", seed, k, cap, args.timing))
    jobs = max(1, int(args.jobs))
    if jobs == 1:
        rows = [_bench_cell(t) for t in tasks]
    else:
        with ProcessPoolExecutor(max_workers=jobs) as pool:
            rows = list(pool.map(_bench_cell, tasks))  # map keeps task order
    out: list[dict] = []
    for param in params:
        cells = [r for r in rows if r["param"] == param]
        out.extend(cells)
        rand = [r for r in cells if r["order"].startswith("random-") and r["proof_size"] != "NA"]
        for stat, fn in (("min", min), ("median", statistics.median_low)):
            out.append(
                {
                    "family": family,
                    "param": param,
                    "order": f"random-{stat}",
                    "proof_size": fn(r["proof_size"] for r in rand) if rand else "NA",
                    "peak_nodes": fn(r["peak_nodes"] for r in rand) if rand else "NA",
                    "seconds": "NA",
                }
            )
    _write_csv(out, BENCH_COLUMNS, args.out)
    return EXIT_PASS


def cmd_density(args) -> int:
    from .reduction.partition import density_exact, density_mc, density_profile, random_partition, read_partition

    seed = _require_seed(args)
    ms = _parse_range(args.m)
    samples = int(args.samples)
    rows = []
    for m in ms:
        for t in range(int(args.count)):
            rng = _cell_rng(seed, m, t)
            p = read_partition(args.partition, m) if args.partition else random_partition(m, rng)
            exact = density_exact(p)
            mc = density_mc(p, samples, rng)
            prof = density_profile(p, exact)
            z = (mc.mean - float(exact)) / mc.stderr if mc.stderr > 0 else 0.0
            bound = exact / 12 * m
            rows.append(
                {
                    "m": m,
                    "trial": t,
                    "delta_exact": _fmt(exact),
                    "delta_mc": _fmt(mc.mean),
                    "mc_stderr": _fmt(mc.stderr),
                    "z": _fmt(z),
                    "g_size": len(prof.g),
                    "g_bound": _fmt(bound),
                    "premise": int(exact * m >= 3),
                    "g_ok": int(len(prof.g) >= bound),
                }
            )
            if args.partition:
                break
    _write_csv(rows, ("m", "trial", "delta_exact", "delta_mc", "mc_stderr", "z", "g_size", "g_bound", "premise", "g_ok"), args.out)
    return EXIT_PASS


def cmd_reduce_sim(args) -> int:
    from .reduction.layout import LayoutProcess, StuckError, max_guarded_n
    from .reduction.partition import density_profile, full_partition, read_partition
    from .reduction.protocol import FullExchangeProtocol, extract_search_protocol
    from .reduction.reduce import random_disjoint, random_intersecting, run_reduction

    seed = _require_seed(args)
    rows = []
    for m in _parse_range(args.m):
        if args.protocol == "extracted":
            if not (args.cnf and args.proof):
                raise UsageError("--protocol extracted needs --cnf and --proof")
            cnf = _load_cnf(args)
            if cnf.family != "match" or cnf.m != m:
                raise UsageError(f"--cnf must be Match_{m}")
            proto = extract_search_protocol(cnf, parse_proof(Path(args.proof).read_text(), cnf))
            part = proto.partition
        else:
            part = read_partition(args.partition, m) if args.partition else full_partition(m)
            proto = FullExchangeProtocol(part)
        prof = density_profile(part)
        n = int(args.n) if args.n is not None else max_guarded_n(prof)
        if n < 0:
            raise UsageError(f"no layout length is guarded at m={m}")
        proc = LayoutProcess(prof, n)
        for kind, make in (("disjoint", random_disjoint), ("intersecting", random_intersecting)):
            if kind == "intersecting" and n == 0:
                continue
            for reps in _parse_range(args.reps):
                rng = _cell_rng(seed, m, reps, kind == "intersecting")
                ones = stuck = 0
                for _ in range(int(args.trials)):
                    try:
                        ones += run_reduction(prof, proto, make(n, rng), rng, reps, proc).answer
                    except StuckError:
                        stuck += 1
                trials = int(args.trials)
                rows.append(
                    {
                        "m": m,
                        "n": n,
                        "instances": kind,
                        "reps": reps,
                        "trials": trials,
                        "answered_intersect": ones,
                        "rate": _fmt(ones / trials),
                        "stuck": stuck,
                    }
                )
    _write_csv(rows, ("m", "n", "instances", "reps", "trials", "answered_intersect", "rate", "stuck"), args.out)
    return EXIT_PASS


def cmd_lemma_suite(args) -> int:
    from .reduction.suite import run_lemma_suite

    seed = _require_seed(args)
    rows = run_lemma_suite(seed, int(args.count), scale=args.scale)
    _write_csv([{k: _fmt(v) for k, v in r.items()} for r in rows], ("check", "instances", "passed", "worst_margin"), args.out)
    return EXIT_PASS if all(r["passed"] == r["instances"] for r in rows) else EXIT_FAIL


# ------------------------------------------------------------------- parser
def build_parser() -> argparse.ArgumentParser:
    ap = argparse.ArgumentParser(prog="obddlab", description=__doc__.splitlines()[0])
    sub = ap.add_subparsers(dest="command", required=True)

    def common(p: argparse.ArgumentParser, seed: bool = False) -> None:
        p.add_argument("--config", help="file of key=value lines; command-line flags take precedence")
        p.add_argument("--out", help="write the report here instead of stdout")
        if seed:
            p.add_argument("--seed", type=int)

    p = sub.add_parser("gen", help="write a DIMACS file and its variable-name map")
    p.add_argument("family", choices=sorted(GENERATORS))
    p.add_argument("param", type=int)
    common(p)
    p.set_defaults(func=cmd_gen)

    p = sub.add_parser("solve", help="bucket elimination; exit 10 SAT, 20 UNSAT, 30 budget")
    p.add_argument("--cnf", required=True)
    p.add_argument("--names")
    p.add_argument("--order", default="natural", help="natural | degree | vertex-major | @file")
    p.add_argument("--emit-proof")
    p.add_argument("--node-cap", type=int)
    p.add_argument("--timing", choices=("wall", "off"), default="wall")
    common(p)
    p.set_defaults(func=cmd_solve)

    p = sub.add_parser("check", help="verify a proof log; exit 0 pass, 1 fail")
    p.add_argument("--cnf", required=True)
    p.add_argument("--names")
    p.add_argument("--proof", required=True)
    p.add_argument("--derivation-only", action="store_true", help="do not require the last line to be FALSE")
    common(p)
    p.set_defaults(func=cmd_check)

    p = sub.add_parser("bench-growth", help="proof size and peak nodes over heuristic and random orders")
    p.add_argument("--family", required=True, choices=sorted(HEURISTICS))
    p.add_argument("--params", required=True, help="e.g. 1..3 or 3,5,8")
    p.add_argument("--orders", type=int, default=20, help="random orders per parameter")
    p.add_argument("--node-cap", type=int)
    p.add_argument("--jobs", type=int, default=1)
    p.add_argument("--timing", choices=("wall", "off"), default="wall")
    common(p, seed=True)
    p.set_defaults(func=cmd_bench_growth)

    p = sub.add_parser("density", help="exact versus Monte-Carlo density and the size of G")
    p.add_argument("--m", required=True)
    p.add_argument("--count", type=int, default=20)
    p.add_argument("--samples", type=int, default=100_000)
    p.add_argument("--partition")
    common(p, seed=True)
    p.set_defaults(func=cmd_density)

    p = sub.add_parser("reduce-sim", help="set disjointness through the bad-edge search")
    p.add_argument("--m", required=True)
    p.add_argument("--n", type=int)
    p.add_argument("--trials", type=int, default=1000)
    p.add_argument("--reps", default="1")
    p.add_argument("--protocol", choices=("full", "extracted"), default="full")
    p.add_argument("--partition")
    p.add_argument("--cnf")
    p.add_argument("--names")
    p.add_argument("--proof")
    common(p, seed=True)
    p.set_defaults(func=cmd_reduce_sim)

    p = sub.add_parser("lemma-suite", help="run every inequality checker on random instances")
    p.add_argument("--count", type=int, default=200)
    p.add_argument("--scale", choices=("small", "full"), default="small")
    common(p, seed=True)
    p.set_defaults(func=cmd_lemma_suite)
    return ap


def read_config(path: str) -> dict[str, str]:
    out: dict[str, str] = {}
    for ln, raw in enumerate(Path(path).read_text().splitlines(), start=1):
        line = raw.strip()
        if not line or line.startswith("#"):
            continue
        if "=" not in line:
            raise UsageError(f"{path} line {ln}: expected key=value")
        key, value = (t.strip() for t in line.split("=", 1))
        out[key.replace("-", "_")] = value
    return out


def _config_path(argv: Sequence[str]) -> str | None:
    for k, tok in enumerate(argv):
        if tok == "--config" and k + 1 < len(argv):
            return argv[k + 1]
        if tok.startswith("--config="):
            return tok.split("=", 1)[1]
    return None


def _apply_config(ap: argparse.ArgumentParser, argv: Sequence[str]) -> argparse.Namespace:
    path = _config_path(argv)
    command = next((t for t in argv if not t.startswith("-")), None)
    subs = next(a for a in ap._actions if isinstance(a, argparse._SubParsersAction)).choices
    if path is None or command not in subs:
        return ap.parse_args(argv)
    cfg = read_config(path)
    sub = subs[command]
    known = {a.dest: a for a in sub._actions}
    for key in cfg:
        if key not in known or key in ("help", "config"):
            raise UsageError(f"{path}: unknown key {key!r} for {command}")
    # file values become defaults, so explicit flags still win
    converted = {}
    for key, value in cfg.items():
        act = known[key]
        try:
            if isinstance(act, argparse._StoreTrueAction):
                converted[key] = value.lower() in ("1", "true", "yes", "on")
            else:
                converted[key] = act.type(value) if act.type else value
        except ValueError:
            raise UsageError(f"{path}: bad value {value!r} for {key}") from None
        if act.choices is not None and converted[key] not in act.choices:
            raise UsageError(f"{path}: {key} must be one of {sorted(act.choices)}")
        act.required = False
    sub.set_defaults(**converted)
    return ap.parse_args(argv)


def main(argv: Sequence[str] | None = None) -> int:
    ap = build_parser()
    argv = list(sys.argv[1:] if argv is None else argv)
    try:
        args = _apply_config(ap, argv)
        return args.func(args)
    except (UsageError, OSError) as exc:
        print(f"obddlab: error: {exc}", file=sys.stderr)
        return EXIT_USAGE


if __name__ == "__main__":
    sys.exit(main())
