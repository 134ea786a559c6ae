"""
fixpoint-cc command line: gen | solve | reduce | backmap | verify | bench.

Reports go to standard output as JSON (CSV for bench), status lines to the
error stream. Exit codes: 0 success, 2 usage or schema error, 3 protocol failure.
"""

import argparse
import sys
from typing import List, Optional

from dotenv import load_dotenv

from agents.experiment_agent import ExperimentAgent, log
from utils.errors import FixpointError
from utils.export import create_bench_report, export_to_csv, export_to_excel, export_to_json
from utils.serialization import dumps, read_json, write_json

EXIT_OK = 0
EXIT_USAGE = 2
EXIT_PROTOCOL = 3


def _emit(document, out: Optional[str]) -> None:
    if out:
        write_json(document, out)
        log(f"✅ Wrote {out}")
    else:
        sys.stdout.write(dumps(document))


def cmd_gen(agent: ExperimentAgent, args: argparse.Namespace) -> int:
    if args.family == "brouwer":
        params = {"kind": args.kind, "n": args.n, "lam": args.lam, "epsilon": args.epsilon, "norm": args.p}
        if args.kind == "local":
            params.update({"N": args.N, "r": args.r, "regions": args.regions, "scale": args.scale})
        else:
            params.update({"m": args.m, "anchor_count": args.anchors})
        document = agent.generate("brouwer", args.seed, **params)
    else:
        document = agent.generate("sperner", args.seed, d=args.d, k=args.k, t=args.t)
    _emit(document, args.out)
    return EXIT_OK


def cmd_solve(agent: ExperimentAgent, args: argparse.Namespace) -> int:
    report = agent.solve(
        read_json(args.instance),
        method=args.method,
        alpha=args.alpha,
        bits_per_coord=args.bits,
        eps_regret=args.eps_regret,
    )
    _emit(report.to_dict(), args.out)
    return EXIT_OK if report.exit_code == 0 else EXIT_PROTOCOL


def cmd_reduce(agent: ExperimentAgent, args: argparse.Namespace) -> int:
    target, record = agent.reduce(read_json(args.instance), args.target, c=args.c, alpha=args.alpha, k=args.k)
    _emit(target, args.out)
    if args.record:
        write_json(record, args.record)
        log(f"✅ Wrote back-map record {args.record}")
    return EXIT_OK


def cmd_backmap(agent: ExperimentAgent, args: argparse.Namespace) -> int:
    result = agent.backmap(read_json(args.record), read_json(args.solution))
    _emit(result, args.out)
    return EXIT_OK


def cmd_verify(agent: ExperimentAgent, args: argparse.Namespace) -> int:
    verdict = agent.verify(read_json(args.instance), read_json(args.solution), eps_regret=args.eps_regret)
    _emit(verdict, args.out)
    return EXIT_OK if verdict["ok"] else EXIT_PROTOCOL


def cmd_bench(agent: ExperimentAgent, args: argparse.Namespace) -> int:
    if args.sweep == "sperner":
        rows = agent.bench_sperner(args.d, args.ks, args.count, args.seed)
        params = {"d": args.d, "ks": args.ks, "count": args.count, "seed": args.seed}
    else:
        rows = agent.bench_brouwer(args.kind, args.n, args.steps, args.count, args.seed, args.lam, args.epsilon)
        params = {"kind": args.kind, "n": args.n, "steps": args.steps, "count": args.count, "seed": args.seed}
    sys.stdout.write(export_to_csv(rows))
    if args.excel:
        with open(args.excel, "wb") as f:
            f.write(export_to_excel(rows))
        log(f"✅ Wrote {args.excel}")
    if args.json:
        with open(args.json, "w") as f:
            f.write(export_to_json(rows))
        log(f"✅ Wrote {args.json}")
    summary = create_bench_report(rows, args.sweep, params)["summary"]
    log(f"📊 {summary['passed']}/{summary['settings']} settings passed, max ratio {summary['max_ratio']}")
    return EXIT_OK if summary["passed"] == summary["settings"] else EXIT_PROTOCOL


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(prog="fixpoint-cc", description="Fixed-point and Sperner communication protocols.")
    parser.add_argument("--timing", action="store_true", help="add wall time to solve reports")
    commands = parser.add_subparsers(dest="command", required=True)

    gen = commands.add_parser("gen", help="generate a seeded instance")
    families = gen.add_subparsers(dest="family", required=True)
    brouwer = families.add_parser("brouwer")
    brouwer.add_argument("--kind", choices=["comp", "concat", "mean", "local"], default="comp")
    brouwer.add_argument("--n", type=int, required=True)
    brouwer.add_argument("--m", type=int, default=None, help="middle dimension of a comp instance")
    brouwer.add_argument("--lambda", dest="lam", type=float, default=1.0)
    brouwer.add_argument("--epsilon", type=float, default=0.1)
    brouwer.add_argument("--p", default="inf", help="norm: a number >= 1 or 'inf'")
    brouwer.add_argument("--anchors", type=int, default=8)
    brouwer.add_argument("--N", type=int, default=8, help="input bits per player (local)")
    brouwer.add_argument("--r", type=int, default=2, help="locality (local)")
    brouwer.add_argument("--regions", type=int, default=2)
    brouwer.add_argument("--scale", type=float, default=0.5)
    brouwer.add_argument("--seed", type=int, required=True)
    brouwer.add_argument("--out", "-o")
    sperner = families.add_parser("sperner")
    sperner.add_argument("--d", type=int, required=True)
    sperner.add_argument("--k", type=int, required=True)
    sperner.add_argument("--t", type=int, default=1)
    sperner.add_argument("--seed", type=int, required=True)
    sperner.add_argument("--out", "-o")

    solve = commands.add_parser("solve", help="run a protocol and check its answer")
    solve.add_argument("instance")
    solve.add_argument("--method", default="auto", help="grid | surplus | single-missing | three-player | nash | auto")
    solve.add_argument("--alpha", type=float, default=None)
    solve.add_argument("--bits", type=int, default=None, help="bits per quantized coordinate")
    solve.add_argument("--eps-regret", type=float, default=None)
    solve.add_argument("--out", "-o")

    reduce = commands.add_parser("reduce", help="reduce an instance and write its back-map record")
    reduce.add_argument("instance")
    reduce.add_argument("--target", required=True, choices=["comp", "concat", "mean", "nash", "sperner"])
    reduce.add_argument("--c", type=float, default=None, help="slack constant of comp -> concat")
    reduce.add_argument("--alpha", type=float, default=None, help="grid step of comp -> nash")
    reduce.add_argument("--k", type=int, default=None, help="resolution of comp -> sperner")
    reduce.add_argument("--out", "-o")
    reduce.add_argument("--record", help="where to write the back-map record")

    backmap = commands.add_parser("backmap", help="map a target solution back to the source")
    backmap.add_argument("record")
    backmap.add_argument("solution")
    backmap.add_argument("--out", "-o")

    verify = commands.add_parser("verify", help="referee check of a solution")
    verify.add_argument("instance")
    verify.add_argument("solution")
    verify.add_argument("--eps-regret", type=float, default=0.0)
    verify.add_argument("--out", "-o")

    bench = commands.add_parser("bench", help="sweep k (Sperner) or alpha (Brouwer) and print CSV")
    sweeps = bench.add_subparsers(dest="sweep", required=True)
    sp = sweeps.add_parser("sperner")
    sp.add_argument("--d", type=int, default=2)
    sp.add_argument("--ks", type=int, nargs="+", default=[4, 8, 16])
    br = sweeps.add_parser("brouwer")
    br.add_argument("--kind", choices=["comp", "concat", "mean"], default="comp")
    br.add_argument("--n", type=int, default=1)
    br.add_argument("--steps", type=int, nargs="+", default=[4, 8, 16], help="grid steps s, alpha = 1/s")
    br.add_argument("--lambda", dest="lam", type=float, default=1.0)
    br.add_argument("--epsilon", type=float, default=0.1)
    for sub in (sp, br):
        sub.add_argument("--count", type=int, default=10)
        sub.add_argument("--seed", type=int, default=0)
        sub.add_argument("--excel", help="also write an Excel workbook")
        sub.add_argument("--json", help="also write the rows as JSON")
    return parser


COMMANDS = {
    "gen": cmd_gen,
    "solve": cmd_solve,
    "reduce": cmd_reduce,
    "backmap": cmd_backmap,
    "verify": cmd_verify,
    "bench": cmd_bench,
}


def main(argv: Optional[List[str]] = None) -> int:
    load_dotenv()
    args = build_parser().parse_args(argv)
    agent = ExperimentAgent(timing=args.timing)
    try:
        return COMMANDS[args.command](agent, args)
    except (FixpointError, ValueError) as e:
        log(f"❌ {e}")
        return EXIT_USAGE


if __name__ == "__main__":
    sys.exit(main())
