"""Experiment specs, runs and reports."""

from __future__ import annotations

import csv
import json
import math
import time
from dataclasses import asdict, dataclass, field, fields
from pathlib import Path

import numpy as np

from .adversary import greedy_memory_adversary
from .errors import CapacityError, InvalidInputError, SpecError
from .generators import GENERATORS, generate, planted
from .graph import SignedGraph, disagreements
from .mpc import MpcTopology, measure_gstore, mpc_truncated_pivot
from .oracles import brute_force_opt, triangle_packing_lower_bound
from .pivot import (
    Permutation,
    TruncationParams,
    classic_pivot,
    truncated_pivot_parallel,
    truncated_pivot_sequential,
)
from .stream import (
    fixed_order,
    random_order,
    sorted_order,
    stream_adaptive,
    stream_fixed_permutation,
)

SCHEMA = "corrclust.report/1"
ALGORITHMS = ("pivot", "tp-parallel", "tp-sequential", "stream-fixed", "stream-adaptive", "mpc")
ORDERS = ("random", "adversary", "sorted", "file")
BRUTE_FORCE_MAX_N = 10
# Skip triangle packing when enumerating bad triangles would be too slow.
PACKING_MAX_WEDGES = 2_000_000


@dataclass
class ExperimentSpec:
    generator: str = "er"
    gen_params: dict = field(default_factory=lambda: {"n": 8, "p": 0.5})
    algo: str = "tp-parallel"
    epsilon: float = 0.2
    c: float = 8.0
    a: int = 3
    order: str = "random"
    order_file: str | None = None
    trials: int = 1
    seeds: list[int] = field(default_factory=lambda: [0])
    out: str | None = None
    mpc_machines: int = 4
    mpc_words: int | None = None
    mpc_placement: str = "contiguous"
    mpc_single_leader: bool = False

    def validate(self) -> "ExperimentSpec":
        if self.generator not in GENERATORS:
            raise SpecError(f"generator must be one of {GENERATORS}, got {self.generator!r}")
        if self.algo not in ALGORITHMS:
            raise SpecError(f"algo must be one of {ALGORITHMS}, got {self.algo!r}")
        if self.order not in ORDERS:
            raise SpecError(f"order must be one of {ORDERS}, got {self.order!r}")
        if self.order == "file" and not self.order_file:
            raise SpecError("order 'file' needs order_file")
        if not self.seeds:
            raise SpecError("seed list must not be empty")
        if self.trials < 1:
            raise SpecError(f"trials must be >= 1, got {self.trials}")
        if self.a < 1:
            raise SpecError(f"a must be a positive integer, got {self.a}")
        if self.mpc_machines < 1:
            raise SpecError(f"mpc_machines must be >= 1, got {self.mpc_machines}")
        try:
            self.params()
        except InvalidInputError as exc:
            raise SpecError(str(exc)) from None
        return self

    def params(self) -> TruncationParams:
        return TruncationParams(epsilon=float(self.epsilon), c=float(self.c))

    def to_dict(self) -> dict:
        return asdict(self)

    @classmethod
    def from_dict(cls, data: dict) -> "ExperimentSpec":
        known = {f.name for f in fields(cls)}
        unknown = set(data) - known
        if unknown:
            raise SpecError(f"unknown spec fields: {sorted(unknown)}")
        spec = cls(**data)
        spec.seeds = [int(s) for s in spec.seeds]
        return spec


def _run_seed(seed: int, trial: int) -> int:
    return int(np.random.SeedSequence([seed, trial]).generate_state(1)[0])


def _lower_bound(graph: SignedGraph, seed: int):
    if graph.n <= BRUTE_FORCE_MAX_N:
        return brute_force_opt(graph)[0], "brute-force"
    wedges = int((graph.degrees * (graph.degrees - 1) // 2).sum())
    if wedges <= PACKING_MAX_WEDGES:
        return triangle_packing_lower_bound(graph, seed), "triangle-packing"
    return None, None


def _make_graph(spec: ExperimentSpec, seed: int):
    truth = None
    if spec.generator == "planted":
        p = spec.gen_params
        try:
            graph, truth = planted(int(p["n"]), int(p["k"]), float(p["q"]), seed)
        except KeyError as exc:
            raise SpecError(f"generator 'planted' needs parameter {exc.args[0]!r}") from None
    else:
        graph = generate(spec.generator, seed=seed, **spec.gen_params)
    return graph, truth


def _stream_source(spec, graph, params, perm, rs):
    if spec.order == "random":
        return random_order(graph, rs)
    if spec.order == "sorted":
        return sorted_order(graph)
    if spec.order == "file":
        return fixed_order(spec.order_file)
    return greedy_memory_adversary(graph, params, perm=perm, seed=rs)


def _single_run(spec: ExperimentSpec, graph: SignedGraph, params: TruncationParams, rs: int) -> dict:
    rec: dict = {"peak_slots": None, "gstore": None, "rounds": None, "failure": None}
    algo = spec.algo
    if algo == "mpc":
        words = spec.mpc_words or MpcTopology.linear(graph.n, params, spec.mpc_machines).words
        topo = MpcTopology(spec.mpc_machines, int(words), spec.mpc_placement, spec.mpc_single_leader)
        rep = mpc_truncated_pivot(graph, topo, params, spec.trials, seed=rs)
        rec.update(cost=rep.selected_cost, rounds=rep.rounds, peak_words=rep.peak_words,
                   gstore=int(rep.gstore_words.max()))
        return rec
    if algo == "stream-adaptive":
        src = _stream_source(spec, graph, params, None, rs)
        out = stream_adaptive(src, graph.n, params, a=spec.a, seed=rs)
        rec.update(cost=disagreements(graph, out.clustering), peak_slots=out.peak,
                   gstore=measure_gstore(graph, out.permutation, params),
                   tails=int(out.tails.sum()), tie_breaks=out.tie_breaks)
        if not out.containment_held:
            rec["failure"] = out.replay_record(params, spec.a)
        return rec
    perm = Permutation.random(graph.n, rs)
    if algo == "stream-fixed":
        src = _stream_source(spec, graph, params, perm, rs)
        out = stream_fixed_permutation(src, graph.n, perm, params, seed=rs)
        rec.update(cost=disagreements(graph, out.clustering), peak_slots=out.peak)
    elif algo == "pivot":
        rec.update(cost=disagreements(graph, classic_pivot(graph, perm).clustering))
    elif algo == "tp-parallel":
        rec.update(cost=disagreements(graph, truncated_pivot_parallel(graph, perm, params).clustering))
    else:
        rec.update(cost=disagreements(graph, truncated_pivot_sequential(graph, perm, params).clustering))
    rec["gstore"] = measure_gstore(graph, perm, params)
    return rec


def run(spec: ExperimentSpec) -> dict:
    """Execute every (seed, trial) run and return the report dictionary."""
    spec.validate()
    params = spec.params()
    records, failures = [], []
    # MPC runs its trials internally, in parallel rounds.
    per_seed = 1 if spec.algo == "mpc" else spec.trials
    for seed in spec.seeds:
        try:
            graph, truth = _make_graph(spec, seed)
            lb, lb_kind = _lower_bound(graph, seed)
            truth_cost = None if truth is None else disagreements(graph, truth)
            for trial in range(per_seed):
                rs = _run_seed(seed, trial)
                t0 = time.perf_counter()
                rec = _single_run(spec, graph, params, rs)
                wall = time.perf_counter() - t0
                failure = rec.pop("failure")
                rec = {"seed": seed, "trial": trial, "run_seed": rs, "n": graph.n, "m": graph.m, **rec}
                rec["lower_bound"] = lb
                rec["lower_bound_kind"] = lb_kind
                rec["ratio"] = rec["cost"] / lb if lb else None
                rec["ground_truth_cost"] = truth_cost
                if rec["peak_slots"] is not None and graph.n > 1:
                    rec["peak_ratio"] = rec["peak_slots"] / (graph.n * math.log2(graph.n) / params.epsilon)
                rec["wall_time"] = wall
                records.append(rec)
                if failure is not None:
                    failures.append({"seed": seed, "trial": trial, **failure})
        except (InvalidInputError, CapacityError) as exc:
            exc.seed = seed
            exc.args = (f"seed {seed}: {exc}",) + exc.args[1:]
            raise
    return {
        "schema": SCHEMA,
        "spec": spec.to_dict(),
        "records": records,
        "aggregate": aggregate(records),
        "failures": failures,
    }


def _stats(values) -> dict | None:
    vals = np.array([v for v in values if v is not None], dtype=np.float64)
    if len(vals) == 0:
        return None
    se = float(vals.std(ddof=1) / math.sqrt(len(vals))) if len(vals) > 1 else 0.0
    return {"mean": float(vals.mean()), "stderr": se, "max": float(vals.max()), "count": int(len(vals))}


def aggregate(records: list[dict]) -> dict:
    keys = ("cost", "ratio", "peak_slots", "peak_ratio", "gstore", "rounds", "wall_time")
    return {k: _stats(r.get(k) for r in records) for k in keys}


def _strip_timing(report: dict) -> dict:
    out = dict(report)
    out["records"] = [{k: v for k, v in r.items() if k != "wall_time"} for r in report["records"]]
    out["aggregate"] = {k: v for k, v in report["aggregate"].items() if k != "wall_time"}
    return out


def dumps_report(report: dict, timing: bool = False) -> str:
    """JSON text; wall times are left out unless asked for, so reruns are byte-identical."""
    data = report if timing else _strip_timing(report)
    return json.dumps(data, indent=2, sort_keys=True) + "\n"


CSV_COLUMNS = ("seed", "trial", "run_seed", "n", "m", "cost", "lower_bound", "lower_bound_kind",
               "ratio", "ground_truth_cost", "peak_slots", "peak_ratio", "gstore", "rounds", "wall_time")


def write_csv(report: dict, path, timing: bool = False) -> Path:
    path = Path(path)
    cols = [c for c in CSV_COLUMNS if timing or c != "wall_time"]
    with path.open("w", newline="") as fh:
        w = csv.DictWriter(fh, fieldnames=cols, extrasaction="ignore")
        w.writeheader()
        for rec in report["records"]:
            w.writerow({c: rec.get(c) for c in cols})
    return path


def write_report(report: dict, path, timing: bool = False) -> tuple[Path, Path]:
    """Write ``<path>`` (JSON) and the same stem with ``.csv``."""
    path = Path(path)
    path.write_text(dumps_report(report, timing))
    return path, write_csv(report, path.with_suffix(".csv"), timing)


def read_report(path) -> dict:
    data = json.loads(Path(path).read_text())
    if data.get("schema") != SCHEMA:
        raise SpecError(f"{path}: unsupported report schema {data.get('schema')!r}")
    return data
