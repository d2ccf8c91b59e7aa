"""Judging runs against the exact theorems, and the Monte Carlo experiments.

Judges are pure functions of a RunResult plus the instance inputs, so any
recorded run can be re-judged offline. Statistical acceptance uses a
3-sigma normal-approximation band around the analytic bound; the exact
per-process message counts are checked as integers with zero tolerance.
"""

from __future__ import annotations

import math
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass, field
from fractions import Fraction
from typing import Callable, Optional, Sequence, Union

from .codec import Arrangement, from_int, is_d_scattered, min_id_index
from .errors import BadParamError, NoUniqueMinError, StepCapExceededError
from .kernels import run_log_fast
from .protocols import ProtocolMachine, RandomizedParams, randomized_make_id
from .ring import LEADER, NON_LEADER, PORT1, RingConfig
from .rng import SplitMix64, derive_seed
from .scheduler import (
    DEADLOCK,
    DEFAULT_STEP_CAP,
    QUIESCENT,
    STEP_CAP_EXCEEDED,
    CwPriority,
    RunResult,
    run,
)


# ---------------------------------------------------------------------------
# Judgements
# ---------------------------------------------------------------------------


@dataclass
class Judgement:
    """Pass/fail flags for one run; ``violated`` names every failed check."""

    leader_ok: bool
    quiescent_ok: bool
    cw_count_ok: bool
    ccw_count_ok: bool
    violated: list = field(default_factory=list)

    @property
    def passed(self) -> bool:
        return not self.violated


def _leader_check(result: RunResult, expect: Optional[int], violated: list) -> bool:
    leaders = result.leader_indices
    if expect is None:
        violated.append(f"leader: no unique minimum exists; leaders={leaders}")
        return False
    ok = leaders == [expect] and all(
        v == NON_LEADER for j, v in enumerate(result.verdicts) if j != expect
    )
    if not ok:
        violated.append(
            f"leader: expected process {expect}, verdicts={list(result.verdicts)}"
        )
    return ok


def expected_log_counts(arrangement: Arrangement, d: int) -> tuple[int, int]:
    """Exact per-process (clockwise, counter-clockwise) send counts.

    Every process sends (2*len(e_min) - 1)*d clockwise pulses and
    1 + #zero-bits(e_min) counter-clockwise pulses, where e_min is the
    winning identifier — under every scheduler.
    """
    e_min = arrangement[min_id_index(arrangement)]
    return (2 * len(e_min) - 1) * d, 1 + e_min.zero_count


def judge_log_election(result: RunResult, arrangement: Arrangement, d: int) -> Judgement:
    """Check a logarithmic-election run: winner, quiescence, exact counts."""
    violated: list = []
    try:
        expect = min_id_index(arrangement)
        cw_expect, ccw_expect = expected_log_counts(arrangement, d)
    except NoUniqueMinError:
        expect = None
        cw_expect = ccw_expect = None

    leader_ok = _leader_check(result, expect, violated)
    quiescent_ok = result.terminal == QUIESCENT
    if not quiescent_ok:
        violated.append(f"quiescence: terminal={result.terminal}")
    cw_count_ok = cw_expect is not None and all(s == cw_expect for s in result.sent_cw)
    if not cw_count_ok:
        violated.append(
            f"cw-count: expected {cw_expect} per process, sent_cw={list(result.sent_cw)}"
        )
    ccw_count_ok = ccw_expect is not None and all(s == ccw_expect for s in result.sent_ccw)
    if not ccw_count_ok:
        violated.append(
            f"ccw-count: expected {ccw_expect} per process, sent_ccw={list(result.sent_ccw)}"
        )
    return Judgement(leader_ok, quiescent_ok, cw_count_ok, ccw_count_ok, violated)


def judge_const_direction(result: RunResult, ids: Sequence[int], bound: int) -> Judgement:
    """Check a constant-direction run: winner, quiescence, 3 ccw, cw bound."""
    violated: list = []
    n = len(ids)
    min_val = min(ids)
    expect = ids.index(min_val) if list(ids).count(min_val) == 1 else None

    leader_ok = _leader_check(result, expect, violated)
    quiescent_ok = result.terminal == QUIESCENT
    if not quiescent_ok:
        violated.append(f"quiescence: terminal={result.terminal}")
    ccw_count_ok = all(s == 3 for s in result.sent_ccw)
    if not ccw_count_ok:
        violated.append(
            f"ccw-count: expected exactly 3 per process, sent_ccw={list(result.sent_ccw)}"
        )
    cw_cap = bound * min_val + 2 * n
    cw_count_ok = all(s <= cw_cap for s in result.sent_cw)
    if not cw_count_ok:
        violated.append(
            f"cw-count: expected <= {cw_cap} per process, sent_cw={list(result.sent_cw)}"
        )
    return Judgement(leader_ok, quiescent_ok, cw_count_ok, ccw_count_ok, violated)


# ---------------------------------------------------------------------------
# Solitude patterns (a machine alone on the self-loop ring)
# ---------------------------------------------------------------------------


@dataclass(frozen=True)
class SolitudePattern:
    """cw[i] = clockwise receptions before the (i+1)-th counter-clockwise
    reception; cw[t] = clockwise receptions before termination."""

    t: int
    cw: tuple

    def __post_init__(self):
        if len(self.cw) != self.t + 1:
            raise BadParamError("pattern length must be t + 1")
        if any(a > b for a, b in zip(self.cw, self.cw[1:])):
            raise BadParamError(f"pattern must be non-decreasing, got {self.cw}")


def solitude_pattern(
    machine_factory: Union[Callable[[], ProtocolMachine], ProtocolMachine],
    step_cap: int = DEFAULT_STEP_CAP,
) -> SolitudePattern:
    """Run the machine alone on a size-1 ring, clockwise pulses first.

    Under the clockwise-priority scheduler the process receives a
    counter-clockwise pulse only when all its sent clockwise pulses have
    come back; the resulting reception profile depends only on the machine.
    """
    machine = machine_factory() if callable(machine_factory) else machine_factory
    cw_seen = 0
    marks: list = []

    def observe(ev):
        nonlocal cw_seen
        if ev.port == PORT1:
            cw_seen += 1
        else:
            marks.append(cw_seen)

    result = run(
        RingConfig(1), [machine], CwPriority(), step_cap, on_delivery=observe
    )
    if result.terminal == STEP_CAP_EXCEEDED:
        raise StepCapExceededError(
            f"no termination on the self-loop ring within {step_cap} deliveries"
        )
    if result.terminal == DEADLOCK:
        raise BadParamError("machine deadlocked on the self-loop ring")
    marks.append(cw_seen)
    return SolitudePattern(t=len(marks) - 1, cw=tuple(marks))


# ---------------------------------------------------------------------------
# Monte Carlo experiments
# ---------------------------------------------------------------------------


@dataclass
class MonteCarloReport:
    """Aggregate of seeded independent trials plus a failure taxonomy.

    ``estimate`` is the success fraction; ``bound`` the analytic success
    bound it is compared against. ``taxonomy`` counts, over the failed
    trials, which precondition or outcome broke (one trial may tick several
    boxes); ``count_violations`` counts successful trials whose per-process
    clockwise counts missed the exact formula.
    """

    trials: int
    successes: int
    bound: float
    seed: int
    taxonomy: dict = field(default_factory=dict)
    count_violations: int = 0
    expected_cw: Optional[int] = None

    def __post_init__(self):
        if not 0 <= self.successes <= self.trials:
            raise BadParamError("successes must lie in [0, trials]")

    @property
    def estimate(self) -> float:
        return self.successes / self.trials

    @property
    def failure_fraction(self) -> float:
        return 1.0 - self.estimate

    def merge(self, other: "MonteCarloReport") -> "MonteCarloReport":
        """Associative merge of disjoint trial batches (same experiment)."""
        taxonomy = dict(self.taxonomy)
        for k, v in other.taxonomy.items():
            taxonomy[k] = taxonomy.get(k, 0) + v
        return MonteCarloReport(
            trials=self.trials + other.trials,
            successes=self.successes + other.successes,
            bound=self.bound,
            seed=self.seed,
            taxonomy=taxonomy,
            count_violations=self.count_violations + other.count_violations,
            expected_cw=self.expected_cw,
        )


def binomial_sigma(p: float, trials: int) -> float:
    """Standard deviation of a fraction of ``trials`` Bernoulli(p) draws."""
    if trials < 1:
        raise BadParamError("trials must be >= 1")
    return math.sqrt(max(p * (1.0 - p), 0.0) / trials)


def exact_collision_probability(U: int, c1: float, n: int) -> float:
    """Birthday probability that n uniform draws from 2**ceil(c1 log2 U)
    values are not all distinct — the oracle for the uniqueness experiment."""
    space = 1 << RandomizedParams(U=U, c1=c1, c2=c1).rand_bits
    if n > space:
        return 1.0
    p_distinct = Fraction(1)
    for k in range(n):
        p_distinct *= Fraction(space - k, space)
    return float(1 - p_distinct)


def _draw_arrangement(params: RandomizedParams, n: int, rng: SplitMix64) -> list[int]:
    return [randomized_make_id(params, rng) for _ in range(n)]


def mc_randomized_success(
    U: int,
    c: float,
    n_choices: Sequence[int],
    trials: int,
    seed: int,
    *,
    c1: Optional[float] = None,
    c2: Optional[float] = None,
    step_cap: int = DEFAULT_STEP_CAP,
    backend: Optional[str] = None,
    jobs: int = 1,
) -> MonteCarloReport:
    """Estimate the success probability of the anonymous randomized election.

    Per trial: sample n from ``n_choices``, draw ids, run the logarithmic
    election with d = ceil(c2 log2 U) under a seeded-random scheduler.
    Success = quiescent termination with exactly one leader, sitting at the
    unique minimum id (all others non-leader). The report's bound is the
    analytic 1 - U**-c; failures are classified as id collision,
    scatteredness violation, wrong leader, or non-quiescent outcome.
    """
    if trials < 1:
        raise BadParamError(f"trials must be >= 1, got {trials}")
    if not n_choices:
        raise BadParamError("n_choices must be non-empty")
    if any(n < 1 or n > U for n in n_choices):
        raise BadParamError(f"every n must satisfy 1 <= n <= U={U}, got {n_choices}")
    params = RandomizedParams(U=U, c=c, c1=c1, c2=c2, rng_seed=seed)
    d = params.d
    expected_cw = params.expected_cw_per_process

    def one_trial(t: int):
        rng = SplitMix64(derive_seed(seed, t))
        n = n_choices[rng.below(len(n_choices))]
        ids = _draw_arrangement(params, n, rng)
        sched_seed = rng.next_u64()
        arrangement = [from_int(v) for v in ids]
        result = run_log_fast(arrangement, d, sched_seed, step_cap, backend=backend)

        collision = len(set(ids)) < n
        min_val = min(ids)
        unique_min = ids.count(min_val) == 1
        leaders = result.leader_indices
        success = (
            result.terminal == QUIESCENT
            and unique_min
            and leaders == [ids.index(min_val)]
            and all(
                v == NON_LEADER
                for j, v in enumerate(result.verdicts)
                if j != ids.index(min_val)
            )
        )
        tags = []
        if not success:
            if collision:
                tags.append("collision")
            if not is_d_scattered(arrangement, d):
                tags.append("scatter-violation")
            if result.terminal != QUIESCENT:
                tags.append("non-quiescent")
            elif len(leaders) == 1:
                tags.append("wrong-leader")
        count_bad = success and any(s != expected_cw for s in result.sent_cw)
        return success, tags, count_bad

    def run_batch(lo: int, hi: int):
        return [one_trial(t) for t in range(lo, hi)]

    if jobs > 1:
        chunk = (trials + jobs - 1) // jobs
        bounds = [(i, min(i + chunk, trials)) for i in range(0, trials, chunk)]
        with ThreadPoolExecutor(max_workers=jobs) as pool:
            batches = list(pool.map(lambda b: run_batch(*b), bounds))
        outcomes = [o for batch in batches for o in batch]
    else:
        outcomes = run_batch(0, trials)

    taxonomy = {"collision": 0, "scatter-violation": 0, "wrong-leader": 0, "non-quiescent": 0}
    successes = 0
    count_violations = 0
    for success, tags, count_bad in outcomes:
        successes += success
        count_violations += count_bad
        for tag in tags:
            taxonomy[tag] += 1
    return MonteCarloReport(
        trials=trials,
        successes=successes,
        bound=1.0 - float(U) ** (-c),
        seed=seed,
        taxonomy=taxonomy,
        count_violations=count_violations,
        expected_cw=expected_cw,
    )


def mc_scatteredness(
    U: int,
    c2: float,
    n: int,
    trials: int,
    seed: int,
    *,
    c1: Optional[float] = None,
    d: Optional[int] = None,
) -> MonteCarloReport:
    """Fraction of drawn arrangements that are d-scattered (codec oracle).

    d defaults to ceil(c2 log2 U). The report's bound is the aggregated
    success side 1 - min(1, ceil(c1 log2 U) * U**(1 - c2)): one union-bound
    term per random bit position.
    """
    if trials < 1:
        raise BadParamError(f"trials must be >= 1, got {trials}")
    if not 1 <= n <= U:
        raise BadParamError(f"need 1 <= n <= U, got n={n}, U={U}")
    params = RandomizedParams(U=U, c1=c1 if c1 is not None else c2, c2=c2)
    if d is None:
        d = params.d
    violations = 0
    for t in range(trials):
        rng = SplitMix64(derive_seed(seed, t))
        arrangement = [from_int(v) for v in _draw_arrangement(params, n, rng)]
        if not is_d_scattered(arrangement, d):
            violations += 1
    agg = params.rand_bits * float(U) ** (1.0 - c2)
    return MonteCarloReport(
        trials=trials,
        successes=trials - violations,
        bound=1.0 - min(1.0, agg),
        seed=seed,
        taxonomy={"scatter-violation": violations},
    )


def mc_collision(
    U: int,
    c1: float,
    n: int,
    trials: int,
    seed: int,
) -> MonteCarloReport:
    """Fraction of trials in which n drawn ids are all distinct.

    Pure id-draw experiment (the uniqueness lemma concerns only the draw);
    the report's bound is the success side 1 - U**(2 - c1). Compare the
    collision fraction against exact_collision_probability for the exact
    birthday oracle.
    """
    if trials < 1:
        raise BadParamError(f"trials must be >= 1, got {trials}")
    if not 1 <= n <= U:
        raise BadParamError(f"need 1 <= n <= U, got n={n}, U={U}")
    params = RandomizedParams(U=U, c1=c1, c2=c1)
    collisions = 0
    for t in range(trials):
        rng = SplitMix64(derive_seed(seed, t))
        ids = _draw_arrangement(params, n, rng)
        if len(set(ids)) < n:
            collisions += 1
    return MonteCarloReport(
        trials=trials,
        successes=trials - collisions,
        bound=1.0 - float(U) ** (2.0 - c1),
        seed=seed,
        taxonomy={"collision": collisions},
    )
