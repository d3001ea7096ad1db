"""Command-line entry point: ``corrclust {gen,run,replay,report}``.

Exit codes: 0 success, 2 invalid spec or input, 3 capacity error.
"""

from __future__ import annotations

import argparse
import json
import logging
import re
import sys
from pathlib import Path

from . import __version__
from .errors import CapacityError, InvalidInputError
from .experiment import (
    ALGORITHMS,
    ORDERS,
    ExperimentSpec,
    _strip_timing,
    dumps_report,
    read_report,
    run,
    write_csv,
    write_report,
)
from .generators import GENERATORS, generate
from .graph import write_graph
from .stream import read_replay, replay

EXIT_OK, EXIT_MISMATCH, EXIT_SPEC, EXIT_CAPACITY = 0, 1, 2, 3

log = logging.getLogger("corrclust")


def _seeds(text: str) -> list[int]:
    """``"3"``, ``"1,4,9"`` or ``"0-9"`` (inclusive)."""
    out = []
    for part in filter(None, (t.strip() for t in text.split(","))):
        m = re.fullmatch(r"(\d+)(?:-(\d+))?", part)
        if not m:
            raise argparse.ArgumentTypeError(f"bad seed list {text!r}")
        lo = int(m.group(1))
        out.extend(range(lo, int(m.group(2) or lo) + 1))
    return out


def _add_graph_flags(p: argparse.ArgumentParser) -> None:
    p.add_argument("--graph", choices=GENERATORS, help="graph generator")
    p.add_argument("--n", type=int, help="node count")
    p.add_argument("--p", type=float, help="edge probability (er)")
    p.add_argument("--k", type=int, help="cluster count (planted)")
    p.add_argument("--q", type=float, help="noise probability (planted)")
    p.add_argument("--path", help="graph file (file generator)")


def _gen_params(args) -> dict:
    return {k: getattr(args, k) for k in ("n", "p", "k", "q", "path") if getattr(args, k) is not None}


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(prog="corrclust", description=__doc__.splitlines()[0])
    parser.add_argument("--version", action="version", version=__version__)
    parser.add_argument("-v", "--verbose", action="store_true")
    sub = parser.add_subparsers(dest="command", required=True)

    g = sub.add_parser("gen", help="generate a graph file")
    _add_graph_flags(g)
    g.add_argument("--seed", type=int, default=0)
    g.add_argument("--out", required=True)

    r = sub.add_parser("run", help="run an experiment")
    r.add_argument("--config", help="JSON spec; flags override its fields")
    _add_graph_flags(r)
    r.add_argument("--algo", choices=ALGORITHMS)
    r.add_argument("--epsilon", type=float)
    r.add_argument("--c", type=float)
    r.add_argument("--a", type=int, help="rank bit factor (stream-adaptive)")
    r.add_argument("--order", choices=ORDERS)
    r.add_argument("--order-file", help="stream file for --order file")
    r.add_argument("--seeds", type=_seeds, help="e.g. 0-9 or 1,5,7")
    r.add_argument("--trials", type=int)
    r.add_argument("--out", help="report path (.json); a .csv is written next to it")
    r.add_argument("--mpc-machines", type=int)
    r.add_argument("--mpc-words", type=int)
    r.add_argument("--mpc-placement", choices=("contiguous", "hashed"))
    r.add_argument("--mpc-single-leader", action="store_true", default=None)
    r.add_argument("--timing", action="store_true", help="include wall times in the report")

    p = sub.add_parser("replay", help="rerun a report or a streaming replay file")
    p.add_argument("file")
    p.add_argument("--seeds", type=_seeds, help="restrict report replay to these seeds")

    s = sub.add_parser("report", help="summarize a report")
    s.add_argument("file")
    s.add_argument("--out", help="also write the records as CSV here")
    return parser


def _spec_from_args(args) -> ExperimentSpec:
    data = {}
    if args.config:
        try:
            data = json.loads(Path(args.config).read_text())
        except (OSError, json.JSONDecodeError) as exc:
            raise InvalidInputError(f"cannot read config {args.config}: {exc}") from None
    if args.graph is not None:
        data["generator"] = args.graph
        data["gen_params"] = {}
    gp = _gen_params(args)
    if gp:
        data["gen_params"] = {**data.get("gen_params", {}), **gp}
    for name in ("algo", "epsilon", "c", "a", "order", "order_file", "seeds", "trials", "out",
                 "mpc_machines", "mpc_words", "mpc_placement", "mpc_single_leader"):
        val = getattr(args, name)
        if val is not None:
            data[name] = val
    return ExperimentSpec.from_dict(data).validate()


def _print_aggregate(report: dict) -> None:
    agg = report["aggregate"]
    print(f"records: {len(report['records'])}  failures: {len(report.get('failures', []))}")
    for key, st in agg.items():
        if st is not None:
            print(f"  {key:<11} mean={st['mean']:.6g} stderr={st['stderr']:.3g} max={st['max']:.6g}")


def cmd_gen(args) -> int:
    if args.graph is None:
        raise InvalidInputError("gen needs --graph")
    graph = generate(args.graph, seed=args.seed, **_gen_params(args))
    write_graph(graph, args.out)
    print(f"wrote {args.out}: n={graph.n} m={graph.m}")
    return EXIT_OK


def cmd_run(args) -> int:
    spec = _spec_from_args(args)
    report = run(spec)
    if spec.out:
        js, cs = write_report(report, spec.out, timing=args.timing)
        print(f"wrote {js} and {cs}")
    else:
        sys.stdout.write(dumps_report(report, timing=args.timing))
    _print_aggregate(report)
    return EXIT_OK


def cmd_replay(args) -> int:
    data = json.loads(Path(args.file).read_text())
    if "variant" in data:
        out = replay(read_replay(args.file))
        print(f"variant={data['variant']} peak={out.peak} "
              f"containment_violations={out.containment_violations}")
        same = out.permutation.rank.tolist() == data["permutation"]
        print("permutation reproduced" if same else "permutation differs")
        return EXIT_OK if same else EXIT_MISMATCH
    original = read_report(args.file)
    spec = ExperimentSpec.from_dict(original["spec"])
    if args.seeds:
        spec.seeds = args.seeds
    spec.out = None
    fresh = _strip_timing(run(spec))
    keep = set(spec.seeds)
    old = [r for r in _strip_timing(original)["records"] if r["seed"] in keep]
    ok = fresh["records"] == old
    print(f"replayed {len(fresh['records'])} records: {'identical' if ok else 'DIFFERENT'}")
    return EXIT_OK if ok else EXIT_MISMATCH


def cmd_report(args) -> int:
    report = read_report(args.file)
    _print_aggregate(report)
    if args.out:
        print(f"wrote {write_csv(report, args.out, timing=True)}")
    return EXIT_OK


COMMANDS = {"gen": cmd_gen, "run": cmd_run, "replay": cmd_replay, "report": cmd_report}


def main(argv=None) -> int:
    args = build_parser().parse_args(argv)
    logging.basicConfig(level=logging.INFO if args.verbose else logging.WARNING,
                        format="%(levelname)s %(name)s: %(message)s")
    try:
        return COMMANDS[args.command](args)
    except CapacityError as exc:
        print(f"capacity error: {exc}", file=sys.stderr)
        return EXIT_CAPACITY
    except (InvalidInputError, OSError) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_SPEC


if __name__ == "__main__":
    sys.exit(main())
