"""Scenario-driven command-line frontend.

Subcommands: ``obring run <file>``, ``obring explore <file>``,
``obring mc <file>``, plus ``obring bench`` for the backend comparison.
Scenario files are JSON; result records are JSON Lines with a stable field
order, each embedding the master seed and the scenario hash needed to
replay it byte-for-byte. Human-readable summaries go to stderr so stdout
stays machine-clean.

Exit codes: 0 pass, 1 config error, 2 judgement failure, 3 caps exceeded.
"""

from __future__ import annotations

import argparse
import hashlib
import json
import re
import sys
from dataclasses import dataclass
from pathlib import Path
from typing import Optional

from . import bench as bench_mod
from .analysis import (
    binomial_sigma,
    judge_const_direction,
    judge_log_election,
    mc_randomized_success,
)
from .codec import encode, from_int
from .errors import (
    ObringError,
    ScenarioError,
    StateCapExceededError,
    StepCapExceededError,
)
from .kernels import backend_name
from .protocols import (
    ConstDirection,
    LogElection,
    ProtocolMachine,
    RandomizedParams,
    randomized_make_id,
)
from .ring import RingConfig
from .rng import SplitMix64, derive_seed
from .scheduler import (
    DEFAULT_STEP_CAP,
    RunResult,
    explore_with_witnesses,
    make_strategy,
    run,
)

EXIT_PASS = 0
EXIT_CONFIG = 1
EXIT_JUDGEMENT = 2
EXIT_CAPS = 3

_ALGORITHMS = ("log-election", "const-direction", "randomized")
_RANDOM_DISTINCT = re.compile(r"^random-distinct\(\s*(\d+)\s*,\s*(\d+)\s*\)$")


@dataclass
class Scenario:
    """A validated scenario file plus the canonical hash of its content."""

    algorithm: str
    n: Optional[int]
    U: Optional[int]
    ids: Optional[list]
    d: object  # int or "auto"
    c: float
    c1: Optional[float]
    c2: Optional[float]
    n_choices: Optional[list]
    strategy: str
    seed: int
    script: Optional[list]
    step_cap: int
    repeat: int
    trials: int
    output_path: Optional[str]
    scenario_hash: str


def _fail(msg: str) -> "ScenarioError":
    return ScenarioError(msg)


def load_scenario(path: str) -> Scenario:
    """Parse and validate a scenario file; raises ScenarioError with a
    field-level diagnostic on anything malformed."""
    try:
        raw_text = Path(path).read_text()
    except OSError as exc:
        raise _fail(f"cannot read scenario file {path!r}: {exc}")
    try:
        data = json.loads(raw_text)
    except json.JSONDecodeError as exc:
        raise _fail(f"{path}:{exc.lineno}: invalid JSON: {exc.msg}")
    if not isinstance(data, dict):
        raise _fail(f"{path}: scenario must be a JSON object")

    known = {
        "algorithm", "n", "U", "ids", "d", "c", "c1", "c2", "n_choices",
        "scheduler", "step_cap", "repeat", "trials", "output",
    }
    for key in data:
        if key not in known:
            raise _fail(f"{path}: unknown field {key!r}")

    algorithm = data.get("algorithm")
    if algorithm not in _ALGORITHMS:
        raise _fail(
            f"{path}: field 'algorithm' must be one of {_ALGORITHMS}, got {algorithm!r}"
        )

    def _positive_int(name, value, minimum=1):
        if not isinstance(value, int) or isinstance(value, bool) or value < minimum:
            raise _fail(f"{path}: field {name!r} must be an integer >= {minimum}")
        return value

    n = data.get("n")
    if n is not None:
        n = _positive_int("n", n)
    U = data.get("U")
    if U is not None:
        U = _positive_int("U", U)
    if n is not None and U is not None and U < n:
        raise _fail(f"{path}: U={U} must be at least n={n}")

    ids = data.get("ids")
    if ids is not None:
        if isinstance(ids, str):
            m = _RANDOM_DISTINCT.match(ids.strip())
            if not m:
                raise _fail(
                    f"{path}: field 'ids' must be a list or \"random-distinct(seed, max)\""
                )
            if n is None:
                raise _fail(f"{path}: random-distinct ids need field 'n'")
            ids = _draw_distinct_ids(int(m.group(1)), int(m.group(2)), n, path)
        elif isinstance(ids, list):
            if not all(isinstance(v, int) and not isinstance(v, bool) and v >= 1 for v in ids):
                raise _fail(f"{path}: every id must be an integer >= 1")
            if n is not None and len(ids) != n:
                raise _fail(f"{path}: got {len(ids)} ids for n={n}")
            if n is None:
                n = len(ids)
        else:
            raise _fail(f"{path}: field 'ids' must be a list or a random-distinct string")

    d = data.get("d", "auto")
    if d != "auto":
        d = _positive_int("d", d)

    c = data.get("c", 1.0)
    if not isinstance(c, (int, float)) or isinstance(c, bool) or c <= 0:
        raise _fail(f"{path}: field 'c' must be a positive number")
    c1 = data.get("c1")
    c2 = data.get("c2")
    for name, val in (("c1", c1), ("c2", c2)):
        if val is not None and (not isinstance(val, (int, float)) or isinstance(val, bool) or val <= 0):
            raise _fail(f"{path}: field {name!r} must be a positive number")

    n_choices = data.get("n_choices")
    if n_choices is not None:
        if not isinstance(n_choices, list) or not n_choices:
            raise _fail(f"{path}: field 'n_choices' must be a non-empty list")
        n_choices = [_positive_int("n_choices[*]", v) for v in n_choices]

    sched = data.get("scheduler", {})
    if not isinstance(sched, dict):
        raise _fail(f"{path}: field 'scheduler' must be an object")
    strategy = sched.get("strategy", "seeded-random")
    if strategy not in ("seeded-random", "round-robin", "cw-priority", "script"):
        raise _fail(f"{path}: unknown scheduler strategy {strategy!r}")
    seed = sched.get("seed", 0)
    if not isinstance(seed, int) or isinstance(seed, bool) or seed < 0:
        raise _fail(f"{path}: scheduler seed must be a non-negative integer")
    script = sched.get("script")
    if script is not None and not (
        isinstance(script, list) and all(isinstance(v, int) for v in script)
    ):
        raise _fail(f"{path}: scheduler script must be a list of integers")

    step_cap = data.get("step_cap", DEFAULT_STEP_CAP)
    step_cap = _positive_int("step_cap", step_cap)
    repeat = _positive_int("repeat", data.get("repeat", 1))
    trials = _positive_int("trials", data.get("trials", 1))

    output = data.get("output", {})
    if not isinstance(output, dict):
        raise _fail(f"{path}: field 'output' must be an object")
    output_path = output.get("path")
    fmt = output.get("format", "jsonl")
    if fmt != "jsonl":
        raise _fail(f"{path}: only the 'jsonl' output format is supported")

    # algorithm-specific requirements
    if algorithm in ("log-election", "const-direction"):
        if ids is None:
            raise _fail(f"{path}: algorithm {algorithm!r} requires 'ids'")
    if algorithm == "randomized":
        if U is None:
            raise _fail(f"{path}: algorithm 'randomized' requires 'U'")

    canonical = json.dumps(data, sort_keys=True, separators=(",", ":"))
    scenario_hash = hashlib.sha256(canonical.encode()).hexdigest()[:16]
    return Scenario(
        algorithm=algorithm, n=n, U=U, ids=ids, d=d, c=float(c), c1=c1, c2=c2,
        n_choices=n_choices, strategy=strategy, seed=seed, script=script,
        step_cap=step_cap, repeat=repeat, trials=trials,
        output_path=output_path, scenario_hash=scenario_hash,
    )


def _draw_distinct_ids(seed: int, max_id: int, n: int, path: str) -> list:
    if max_id < n:
        raise _fail(f"{path}: random-distinct max {max_id} < n {n}")
    rng = SplitMix64(seed)
    seen: list = []
    chosen = set()
    while len(seen) < n:
        v = 1 + rng.below(max_id)
        if v not in chosen:
            chosen.add(v)
            seen.append(v)
    return seen


# ---------------------------------------------------------------------------
# record emission
# ---------------------------------------------------------------------------


class _Emitter:
    def __init__(self, output_path: Optional[str]):
        self.path = output_path
        self._fh = None

    def __enter__(self):
        if self.path and self.path != "-":
            self._fh = open(self.path, "w")
        return self

    def __exit__(self, *exc):
        if self._fh:
            self._fh.close()

    def record(self, obj: dict) -> None:
        line = json.dumps(obj, separators=(", ", ": "))
        if self._fh:
            self._fh.write(line + "\n")
        else:
            sys.stdout.write(line + "\n")


def _summary(msg: str) -> None:
    print(msg, file=sys.stderr)


def _trace_file(trace_dir: Optional[str], name: str, trace: list) -> tuple:
    text = "\n".join(trace) + "\n"
    sha = hashlib.sha256(text.encode()).hexdigest()
    if trace_dir is None:
        return None, sha
    directory = Path(trace_dir)
    directory.mkdir(parents=True, exist_ok=True)
    target = directory / name
    target.write_text(text)
    return str(target), sha


# ---------------------------------------------------------------------------
# obring run
# ---------------------------------------------------------------------------


def _run_record(scn: Scenario, index: int, run_seed: int, ids: list, d: Optional[int],
                U: int, result: RunResult, judgement, trace_path, trace_sha) -> dict:
    return {
        "record": "run",
        "scenario_hash": scn.scenario_hash,
        "run_index": index,
        "algorithm": scn.algorithm,
        "n": len(ids),
        "U": U,
        "ids": list(ids),
        "d": d,
        "strategy": scn.strategy,
        "seed": scn.seed,
        "run_seed": run_seed,
        "step_cap": scn.step_cap,
        "verdicts": list(result.verdicts),
        "leader": (result.leader_indices[0] if len(result.leader_indices) == 1 else None),
        "terminal": result.terminal,
        "steps": result.steps,
        "sent_cw": list(result.sent_cw),
        "sent_ccw": list(result.sent_ccw),
        "recv_cw": list(result.recv_cw),
        "recv_ccw": list(result.recv_ccw),
        "judgement": {
            "leader_ok": judgement.leader_ok,
            "quiescent_ok": judgement.quiescent_ok,
            "cw_count_ok": judgement.cw_count_ok,
            "ccw_count_ok": judgement.ccw_count_ok,
            "violated": judgement.violated,
        },
        "trace_path": trace_path,
        "trace_sha256": trace_sha,
    }


def cmd_run(scenario_path: str, seed_override: Optional[int] = None,
            trace_dir: Optional[str] = None, jobs: int = 1) -> int:
    try:
        scn = load_scenario(scenario_path)
    except ScenarioError as exc:
        _summary(f"config error: {exc}")
        return EXIT_CONFIG
    if seed_override is not None:
        scn.seed = seed_override

    all_pass = True
    with _Emitter(scn.output_path) as out:
        for index in range(scn.repeat):
            run_seed = derive_seed(scn.seed, index)
            try:
                record = _one_run(scn, index, run_seed, trace_dir)
            except ObringError as exc:
                _summary(f"config error: {exc}")
                return EXIT_CONFIG
            out.record(record)
            if record["judgement"]["violated"]:
                all_pass = False
    verdict = "pass" if all_pass else "FAIL"
    _summary(f"run: {scn.repeat} run(s) of {scn.algorithm} -> {verdict}")
    return EXIT_PASS if all_pass else EXIT_JUDGEMENT


def _one_run(scn: Scenario, index: int, run_seed: int, trace_dir: Optional[str]) -> dict:
    record_trace = True
    rng = SplitMix64(run_seed)

    if scn.algorithm == "randomized":
        U = scn.U
        n = scn.n
        if n is None:
            raise ScenarioError("randomized run needs field 'n'")
        params = RandomizedParams(U=U, c=scn.c, c1=scn.c1, c2=scn.c2, rng_seed=run_seed)
        ids = [randomized_make_id(params, rng) for _ in range(n)]
        arrangement = [from_int(v) for v in ids]
        d = params.d
        machines = [ProtocolMachine(LogElection(e, d)) for e in arrangement]
        judge = lambda res: judge_log_election(res, arrangement, d)
    elif scn.algorithm == "log-election":
        ids = list(scn.ids)
        U = scn.U if scn.U is not None else len(ids)
        d = U if scn.d == "auto" else scn.d
        arrangement = [encode(v) for v in ids]
        machines = [ProtocolMachine(LogElection(e, d)) for e in arrangement]
        judge = lambda res: judge_log_election(res, arrangement, d)
    else:  # const-direction
        ids = list(scn.ids)
        U = scn.U if scn.U is not None else len(ids)
        d = None
        machines = [ProtocolMachine(ConstDirection(v, U)) for v in ids]
        judge = lambda res: judge_const_direction(res, ids, U)

    strategy_seed = rng.next_u64()
    strategy = make_strategy(
        scn.strategy,
        seed=strategy_seed if scn.strategy == "seeded-random" else 0,
        script=scn.script,
    )
    config = RingConfig(len(ids), U)
    result = run(config, machines, strategy, scn.step_cap, record_trace=record_trace)
    judgement = judge(result)
    trace_path, trace_sha = _trace_file(
        trace_dir, f"run_{scn.scenario_hash}_{index}.trace", result.trace
    )
    return _run_record(scn, index, run_seed, ids, d, U, result, judgement,
                       trace_path, trace_sha)


# ---------------------------------------------------------------------------
# obring explore
# ---------------------------------------------------------------------------


def cmd_explore(scenario_path: str, seed_override: Optional[int] = None,
                trace_dir: Optional[str] = None, jobs: int = 1) -> int:
    try:
        scn = load_scenario(scenario_path)
    except ScenarioError as exc:
        _summary(f"config error: {exc}")
        return EXIT_CONFIG
    if scn.algorithm == "randomized":
        _summary("config error: explore needs an explicit-id algorithm")
        return EXIT_CONFIG
    n = len(scn.ids)
    if n > 3:
        _summary(f"config error: explore is capped at n <= 3, got n={n}")
        return EXIT_CONFIG

    U = scn.U if scn.U is not None else n
    if scn.algorithm == "log-election":
        d = U if scn.d == "auto" else scn.d
        arrangement = [encode(v) for v in scn.ids]
        mtypes = [LogElection(e, d) for e in arrangement]
        judge = lambda res: judge_log_election(res, arrangement, d)
    else:
        d = None
        mtypes = [ConstDirection(v, U) for v in scn.ids]
        judge = lambda res: judge_const_direction(res, scn.ids, U)

    try:
        sigs, finder = explore_with_witnesses(
            RingConfig(n, U), mtypes, step_cap=scn.step_cap
        )
    except (StepCapExceededError, StateCapExceededError) as exc:
        _summary(f"caps exceeded: {exc}")
        return EXIT_CAPS

    judged = []
    for sig in sorted(sigs):
        res = RunResult(
            verdicts=sig.verdicts, terminal=sig.terminal, steps=0,
            sent_cw=sig.sent_cw, sent_ccw=sig.sent_ccw,
            recv_cw=sig.recv_cw, recv_ccw=sig.recv_ccw,
        )
        judged.append((sig, judge(res)))

    with _Emitter(scn.output_path) as out:
        for sig, judgement in judged:
            out.record({
                "record": "signature",
                "scenario_hash": scn.scenario_hash,
                "algorithm": scn.algorithm,
                "ids": list(scn.ids),
                "d": d,
                "U": U,
                "verdicts": list(sig.verdicts),
                "terminal": sig.terminal,
                "sent_cw": list(sig.sent_cw),
                "sent_ccw": list(sig.sent_ccw),
                "recv_cw": list(sig.recv_cw),
                "recv_ccw": list(sig.recv_ccw),
                "passes": not judgement.violated,
                "violated": judgement.violated,
            })

    ok = len(judged) == 1 and not judged[0][1].violated
    if ok:
        _summary(f"explore: 1 terminal signature, passes judgement")
        return EXIT_PASS

    # witness: replay a schedule reaching the first offending signature
    witness_path = None
    bad = next((s for s, j in judged if j.violated), judged[0][0] if len(judged) > 1 else None)
    if bad is not None and trace_dir is not None:
        script = finder(bad)
        machines = [ProtocolMachine(mt) for mt in mtypes]
        result = run(
            RingConfig(n, U), machines, make_strategy("script", script=script),
            scn.step_cap, record_trace=True,
        )
        witness_path, _ = _trace_file(
            trace_dir, f"witness_{scn.scenario_hash}.trace", result.trace
        )
    _summary(
        f"explore: {len(judged)} terminal signature(s), "
        f"{sum(1 for _, j in judged if j.violated)} failing"
        + (f"; witness trace at {witness_path}" if witness_path else "")
    )
    return EXIT_JUDGEMENT


# ---------------------------------------------------------------------------
# obring mc
# ---------------------------------------------------------------------------


def cmd_montecarlo(scenario_path: str, seed_override: Optional[int] = None,
                   trace_dir: Optional[str] = None, jobs: int = 1) -> int:
    try:
        scn = load_scenario(scenario_path)
    except ScenarioError as exc:
        _summary(f"config error: {exc}")
        return EXIT_CONFIG
    if scn.algorithm != "randomized":
        _summary("config error: mc requires algorithm 'randomized'")
        return EXIT_CONFIG
    if seed_override is not None:
        scn.seed = seed_override

    n_choices = scn.n_choices
    if n_choices is None:
        n_choices = sorted({max(1, scn.U // 2), scn.U})
    try:
        report = mc_randomized_success(
            scn.U, scn.c, n_choices, scn.trials, scn.seed,
            c1=scn.c1, c2=scn.c2, step_cap=scn.step_cap, jobs=jobs,
        )
    except ObringError as exc:
        _summary(f"config error: {exc}")
        return EXIT_CONFIG

    sigma = binomial_sigma(report.bound, report.trials)
    estimate_ok = report.estimate >= report.bound - 3.0 * sigma
    counts_ok = report.count_violations == 0
    params = RandomizedParams(U=scn.U, c=scn.c, c1=scn.c1, c2=scn.c2)
    with _Emitter(scn.output_path) as out:
        out.record({
            "record": "mc",
            "scenario_hash": scn.scenario_hash,
            "algorithm": "randomized",
            "U": scn.U,
            "c": scn.c,
            "c1": params.c1,
            "c2": params.c2,
            "d": params.d,
            "n_choices": list(n_choices),
            "trials": report.trials,
            "seed": scn.seed,
            "successes": report.successes,
            "estimate": report.estimate,
            "bound": report.bound,
            "sigma": sigma,
            "estimate_ok": estimate_ok,
            "expected_cw": report.expected_cw,
            "count_violations": report.count_violations,
            "counts_ok": counts_ok,
            "taxonomy": report.taxonomy,
        })
    _summary(
        f"mc: {report.successes}/{report.trials} successes "
        f"(estimate {report.estimate:.4f}, bound {report.bound:.4f} - 3s band), "
        f"count violations {report.count_violations}"
    )
    return EXIT_PASS if (estimate_ok and counts_ok) else EXIT_JUDGEMENT


# ---------------------------------------------------------------------------
# entry point
# ---------------------------------------------------------------------------


def main(argv: Optional[list] = None) -> int:
    parser = argparse.ArgumentParser(
        prog="obring",
        description="Leader election on content-oblivious oriented rings",
    )
    sub = parser.add_subparsers(dest="command", required=True)
    for name, helptext in (
        ("run", "run a scenario and judge every run"),
        ("explore", "exhaustively enumerate delivery orders (n <= 3)"),
        ("mc", "Monte Carlo experiment for the randomized election"),
    ):
        p = sub.add_parser(name, help=helptext)
        p.add_argument("scenario", help="path to a JSON scenario file")
        p.add_argument("--seed", type=int, default=None, help="override the master seed")
        p.add_argument("--trace", default=None, metavar="DIR", help="write traces here")
        p.add_argument("--jobs", type=int, default=1, metavar="K", help="parallel trials")
    p = sub.add_parser("bench", help="compare the numba and pure backends")
    p.add_argument("--trials", type=int, default=2000)
    p.add_argument("--U", type=int, default=16)
    p.add_argument("--seed", type=int, default=7)

    args = parser.parse_args(argv)
    if args.command == "run":
        return cmd_run(args.scenario, args.seed, args.trace, args.jobs)
    if args.command == "explore":
        return cmd_explore(args.scenario, args.seed, args.trace, args.jobs)
    if args.command == "mc":
        return cmd_montecarlo(args.scenario, args.seed, args.trace, args.jobs)
    if args.command == "bench":
        return bench_mod.run_benchmark(trials=args.trials, U=args.U, seed=args.seed)
    return EXIT_CONFIG  # pragma: no cover


if __name__ == "__main__":
    sys.exit(main())
