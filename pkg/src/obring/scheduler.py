"""Drives protocol machines on a ring under a pluggable delivery strategy.

A run alternates machine resumptions with strategy-chosen deliveries until
quiescent termination, non-quiescent termination, deadlock, or a step cap.
Runs are strictly sequential and deterministic given (config, strategy,
seed); the trace is a stable line-oriented log suitable for golden tests.

``explore_all`` enumerates every delivery choice at every branch point
(including the port choice of receive-any) for tiny instances and returns
the set of distinct terminal signatures.
"""

from __future__ import annotations

from dataclasses import dataclass, field
from typing import Callable, NamedTuple, Optional, Sequence, Union

from .errors import (
    BadParamError,
    ConfigMismatchError,
    StateCapExceededError,
    StepCapExceededError,
)
from .protocols import MachineType, ProtocolMachine
from .ring import (
    LEADER,
    NON_LEADER,
    PORT0,
    PORT1,
    UNFINISHED,
    DeliveryEvent,
    Return,
    RingConfig,
    SendPulse,
)
from .rng import SplitMix64

DEFAULT_STEP_CAP = 10_000_000

QUIESCENT = "quiescent"
NON_QUIESCENT = "non-quiescent-termination"
DEADLOCK = "deadlock"
STEP_CAP_EXCEEDED = "step-cap-exceeded"


# ---------------------------------------------------------------------------
# Delivery strategies
# ---------------------------------------------------------------------------
#
# A strategy picks an index into the enabled-event list, which is always
# presented in canonical order: ascending process index, port 0 before
# port 1. All strategies are fair at the model level: a perpetually
# deliverable pulse to a matching receiver is eventually delivered.


class RoundRobin:
    """Cycles deterministically: event k of a run picks index k mod #enabled."""

    name = "round-robin"

    def choose(self, enabled: list, k: int) -> int:
        return k % len(enabled)


class SeededRandom:
    """Uniform choice among enabled events from a splitmix64 stream.

    Draws exactly one 64-bit value per delivery, so the jit kernels can
    reproduce the same schedule from the same seed.
    """

    name = "seeded-random"

    def __init__(self, seed: int):
        self.seed = seed
        self._rng = SplitMix64(seed)

    def choose(self, enabled: list, k: int) -> int:
        return self._rng.next_u64() % len(enabled)


class CwPriority:
    """Delivers a clockwise pulse whenever one is deliverable.

    Ties break toward the lowest process index; counter-clockwise pulses
    move only when no clockwise pulse can. This is the scheduler under
    which solitude patterns are defined.
    """

    name = "cw-priority"

    def choose(self, enabled: list, k: int) -> int:
        for i, ev in enumerate(enabled):
            if ev.port == PORT1:
                return i
        return 0


class AdversarialScript:
    """Replays a branch-choice script: entry k picks index script[k] mod #enabled.

    Past the end of the script it falls back to index 0 (first enabled in
    canonical order), which keeps the run fair and terminating. Witness
    paths produced by explore_all replay through this strategy.
    """

    name = "script"

    def __init__(self, script: Sequence[int]):
        self.script = list(script)

    def choose(self, enabled: list, k: int) -> int:
        if k < len(self.script):
            return self.script[k] % len(enabled)
        return 0


Strategy = Union[RoundRobin, SeededRandom, CwPriority, AdversarialScript]


def make_strategy(kind: str, seed: int = 0, script: Optional[Sequence[int]] = None) -> Strategy:
    if kind == "round-robin":
        return RoundRobin()
    if kind == "seeded-random":
        return SeededRandom(seed)
    if kind == "cw-priority":
        return CwPriority()
    if kind == "script":
        return AdversarialScript(script or [])
    raise BadParamError(f"unknown scheduler strategy {kind!r}")


# ---------------------------------------------------------------------------
# Run results
# ---------------------------------------------------------------------------


@dataclass
class RunResult:
    """Outcome of one simulation run.

    ``terminal`` == "quiescent" implies every verdict is decided and every
    link counter is zero. Counters are indexed by process: ``sent_cw[j]``
    counts j's sends on port 0, ``recv_cw[j]`` its receptions on port 1,
    and the ccw twins ports 1 and 0 respectively.
    """

    verdicts: tuple
    terminal: str
    steps: int
    sent_cw: tuple
    sent_ccw: tuple
    recv_cw: tuple
    recv_ccw: tuple
    seed: Optional[int] = None
    strategy: Optional[str] = None
    trace: Optional[list] = None

    @property
    def leader_indices(self) -> list:
        return [j for j, v in enumerate(self.verdicts) if v == LEADER]


class Signature(NamedTuple):
    """Scheduler-independent fingerprint of a terminal configuration."""

    verdicts: tuple
    terminal: str
    sent_cw: tuple
    sent_ccw: tuple
    recv_cw: tuple
    recv_ccw: tuple


# ---------------------------------------------------------------------------
# The sequential run engine
# ---------------------------------------------------------------------------


class _Sim:
    """Mutable simulation state shared by run() and the invariant checks."""

    __slots__ = (
        "n", "machines", "cw", "ccw",
        "sent_cw", "sent_ccw", "recv_cw", "recv_ccw", "trace", "step",
    )

    def __init__(self, n: int, machines: Sequence[ProtocolMachine], record_trace: bool):
        self.n = n
        self.machines = machines
        self.cw = [0] * n
        self.ccw = [0] * n
        self.sent_cw = [0] * n
        self.sent_ccw = [0] * n
        self.recv_cw = [0] * n
        self.recv_ccw = [0] * n
        self.trace = [] if record_trace else None
        self.step = 0

    def apply_actions(self, j: int, actions: list) -> None:
        for act in actions:
            if isinstance(act, SendPulse):
                if act.port == PORT0:
                    self.cw[j] += 1
                    self.sent_cw[j] += 1
                else:
                    self.ccw[j] += 1
                    self.sent_ccw[j] += 1
                if self.trace is not None:
                    self.trace.append(f"step={self.step} kind=send proc={j} port={act.port}")
            elif isinstance(act, Return):
                if self.trace is not None:
                    self.trace.append(
                        f"step={self.step} kind=return proc={j} verdict={act.verdict}"
                    )

    def enabled_events(self) -> list:
        events = []
        n = self.n
        for j in range(n):
            blocked = self.machines[j].blocked
            if blocked.kind == "terminated":
                continue
            if blocked.accepts(PORT0) and self.ccw[(j + 1) % n] > 0:
                events.append(DeliveryEvent(j, PORT0))
            if blocked.accepts(PORT1) and self.cw[(j - 1) % n] > 0:
                events.append(DeliveryEvent(j, PORT1))
        return events

    def check_conservation(self) -> None:
        n = self.n
        for j in range(n):
            cw_expect = self.sent_cw[j] - self.recv_cw[(j + 1) % n]
            ccw_expect = self.sent_ccw[j] - self.recv_ccw[(j - 1) % n]
            assert self.cw[j] == cw_expect >= 0, (
                f"clockwise conservation broken on link {j}: "
                f"in transit {self.cw[j]}, sent-received {cw_expect}"
            )
            assert self.ccw[j] == ccw_expect >= 0, (
                f"counter-clockwise conservation broken on link {j}: "
                f"in transit {self.ccw[j]}, sent-received {ccw_expect}"
            )

    def check_cw_unbalance(self) -> None:
        for j in range(self.n):
            diff = self.sent_cw[j] - self.recv_cw[j]
            assert diff in (0, 1), (
                f"process {j} is clockwise-unbalanced by {diff} "
                "(sent-on-0 minus received-on-1 must stay in {0, 1})"
            )


def enabled_events(sim_or_machines, cw=None, ccw=None) -> list:
    """Deliveries whose source link is non-empty and whose target can accept.

    Accepts either a _Sim or (machines, cw, ccw) pieces; events come in
    canonical order (process ascending, port 0 before port 1).
    """
    if isinstance(sim_or_machines, _Sim):
        return sim_or_machines.enabled_events()
    machines = sim_or_machines
    sim = _Sim(len(machines), machines, record_trace=False)
    sim.cw = list(cw)
    sim.ccw = list(ccw)
    return sim.enabled_events()


def run(
    config: RingConfig,
    machines: Sequence[ProtocolMachine],
    strategy: Strategy,
    step_cap: int = DEFAULT_STEP_CAP,
    *,
    record_trace: bool = False,
    check_conservation: bool = False,
    check_cw_unbalance: bool = False,
    on_delivery: Optional[Callable[[DeliveryEvent], None]] = None,
) -> RunResult:
    """Drive the machines to a terminal configuration.

    Deterministic given (config, machines, strategy): identical inputs give
    a bit-identical trace. ``on_delivery`` is a per-delivery observer hook
    (used by the solitude-pattern extractor).
    """
    n = config.n
    if len(machines) != n:
        raise ConfigMismatchError(f"{len(machines)} machines for a ring of {n}")
    if step_cap < 1:
        raise BadParamError("step_cap must be >= 1")

    sim = _Sim(n, machines, record_trace)
    for j in range(n):
        if sim.trace is not None:
            sim.trace.append(f"step=0 kind=resume proc={j}")
        sim.apply_actions(j, machines[j].start())
    if check_conservation:
        sim.check_conservation()
    if check_cw_unbalance:
        sim.check_cw_unbalance()

    terminal = None
    while True:
        if all(m.terminated for m in machines):
            quiet = (
                sum(sim.cw) + sum(sim.ccw) == 0
                and all(m.verdict in (LEADER, NON_LEADER) for m in machines)
            )
            terminal = QUIESCENT if quiet else NON_QUIESCENT
            break
        events = sim.enabled_events()
        if not events:
            terminal = DEADLOCK
            break
        if sim.step >= step_cap:
            terminal = STEP_CAP_EXCEEDED
            break

        ev = events[strategy.choose(events, sim.step)]
        sim.step += 1
        if ev.port == PORT1:
            sim.cw[(ev.target - 1) % n] -= 1
            sim.recv_cw[ev.target] += 1
        else:
            sim.ccw[(ev.target + 1) % n] -= 1
            sim.recv_ccw[ev.target] += 1
        if sim.trace is not None:
            sim.trace.append(f"step={sim.step} kind=deliver proc={ev.target} port={ev.port}")
        if on_delivery is not None:
            on_delivery(ev)
        sim.apply_actions(ev.target, machines[ev.target].deliver(ev.port))
        if check_conservation:
            sim.check_conservation()
        if check_cw_unbalance:
            sim.check_cw_unbalance()

    return RunResult(
        verdicts=tuple(m.verdict if m.verdict is not None else UNFINISHED for m in machines),
        terminal=terminal,
        steps=sim.step,
        sent_cw=tuple(sim.sent_cw),
        sent_ccw=tuple(sim.sent_ccw),
        recv_cw=tuple(sim.recv_cw),
        recv_ccw=tuple(sim.recv_ccw),
        seed=getattr(strategy, "seed", None),
        strategy=getattr(strategy, "name", None),
        trace=sim.trace,
    )


# ---------------------------------------------------------------------------
# Exhaustive interleaving exploration
# ---------------------------------------------------------------------------


def _zeros_delta(n: int) -> tuple:
    z = (0,) * n
    return (z, z, z, z)


def _add_delta(a: tuple, b: tuple) -> tuple:
    return tuple(tuple(x + y for x, y in zip(ar, br)) for ar, br in zip(a, b))


def _sub_delta(a: tuple, b: tuple) -> tuple:
    return tuple(tuple(x - y for x, y in zip(ar, br)) for ar, br in zip(a, b))


@dataclass
class _Frame:
    key: tuple
    children: Optional[list] = None
    idx: int = 0
    pending: Optional[tuple] = None
    acc: set = field(default_factory=set)


class _Explorer:
    """Memoized DFS over every delivery order of a tiny instance.

    A state key is (machine states, links); counters are excluded because
    transitions never read them — each memo entry holds the counter
    *deltas* of the terminal signatures reachable from that key, shifted on
    the way back up. A key reachable along a cycle means an unbounded
    schedule exists; that raises StepCapExceededError rather than looping.
    """

    def __init__(self, config: RingConfig, machines, step_cap: int, state_cap: int):
        n = config.n
        if len(machines) != n:
            raise ConfigMismatchError(f"{len(machines)} machines for a ring of {n}")
        self.n = n
        self.step_cap = step_cap
        self.state_cap = state_cap
        self.mtypes = [m.mtype if isinstance(m, ProtocolMachine) else m for m in machines]

        # initial resumptions (index order; the initial sends cannot interact,
        # so any order yields this same base configuration)
        mstates = []
        cw = [0] * n
        ccw = [0] * n
        base = [[0] * n for _ in range(4)]  # sent_cw, sent_ccw, recv_cw, recv_ccw
        for j, mt in enumerate(self.mtypes):
            st, actions = mt.start()
            mstates.append(st)
            for act in actions:
                if isinstance(act, SendPulse):
                    if act.port == PORT0:
                        cw[j] += 1
                        base[0][j] += 1
                    else:
                        ccw[j] += 1
                        base[1][j] += 1
        self.root = (tuple(mstates), tuple(cw), tuple(ccw))
        self.base_counters = tuple(tuple(row) for row in base)
        self.memo: dict = {}

    def successors(self, key):
        """(child_key, step_delta) per enabled event in canonical order,
        or None when the key is terminal."""
        n = self.n
        kms, kcw, kccw = key
        events = []
        for j in range(n):
            blocked = self.mtypes[j].blocked_on(kms[j])
            if blocked.kind == "terminated":
                continue
            if blocked.accepts(PORT0) and kccw[(j + 1) % n] > 0:
                events.append((j, PORT0))
            if blocked.accepts(PORT1) and kcw[(j - 1) % n] > 0:
                events.append((j, PORT1))
        if not events:
            return None
        children = []
        for j, port in events:
            ncw = list(kcw)
            nccw = list(kccw)
            delta = [[0] * n for _ in range(4)]
            if port == PORT1:
                ncw[(j - 1) % n] -= 1
                delta[2][j] += 1
            else:
                nccw[(j + 1) % n] -= 1
                delta[3][j] += 1
            new_ms, actions = self.mtypes[j].step(kms[j], port)
            for act in actions:
                if isinstance(act, SendPulse):
                    if act.port == PORT0:
                        ncw[j] += 1
                        delta[0][j] += 1
                    else:
                        nccw[j] += 1
                        delta[1][j] += 1
            child = (kms[:j] + (new_ms,) + kms[j + 1 :], tuple(ncw), tuple(nccw))
            children.append((child, tuple(tuple(row) for row in delta)))
        return children

    def terminal_signature(self, key):
        n = self.n
        kms, kcw, kccw = key
        verdicts = []
        all_done = True
        for j in range(n):
            blocked = self.mtypes[j].blocked_on(kms[j])
            if blocked.kind == "terminated":
                verdicts.append(blocked.verdict if blocked.verdict is not None else UNFINISHED)
            else:
                verdicts.append(UNFINISHED)
                all_done = False
        if all_done:
            quiet = sum(kcw) + sum(kccw) == 0 and UNFINISHED not in verdicts
            terminal = QUIESCENT if quiet else NON_QUIESCENT
        else:
            terminal = DEADLOCK
        return (tuple(verdicts), terminal, _zeros_delta(n))

    def explore(self) -> None:
        memo = self.memo
        onpath = {self.root}
        stack = [_Frame(self.root)]
        while stack:
            if len(stack) > self.step_cap:
                raise StepCapExceededError(
                    f"exploration path exceeded {self.step_cap} deliveries"
                )
            if len(memo) + len(stack) > self.state_cap:
                raise StateCapExceededError(
                    f"exploration exceeded {self.state_cap} distinct states"
                )
            fr = stack[-1]
            if fr.children is None:
                succ = self.successors(fr.key)
                if succ is None:
                    memo[fr.key] = frozenset({self.terminal_signature(fr.key)})
                    onpath.discard(fr.key)
                    stack.pop()
                    continue
                fr.children = succ
            if fr.pending is not None:
                child_key, delta = fr.pending
                fr.pending = None
                fr.acc |= {(v, t, _add_delta(dc, delta)) for v, t, dc in memo[child_key]}
            if fr.idx == len(fr.children):
                memo[fr.key] = frozenset(fr.acc)
                onpath.discard(fr.key)
                stack.pop()
                continue
            child_key, delta = fr.children[fr.idx]
            fr.idx += 1
            if child_key in memo:
                fr.acc |= {(v, t, _add_delta(dc, delta)) for v, t, dc in memo[child_key]}
            elif child_key in onpath:
                raise StepCapExceededError(
                    "delivery-order cycle detected: an unbounded schedule exists"
                )
            else:
                fr.pending = (child_key, delta)
                onpath.add(child_key)
                stack.append(_Frame(child_key))

    def signatures(self) -> frozenset:
        return frozenset(
            Signature(v, t, *(_add_delta(self.base_counters, dc)))
            for v, t, dc in self.memo[self.root]
        )

    def witness_script(self, sig: Signature) -> list:
        """Branch-choice script steering a run() to the given signature.

        The script indexes the canonical enabled-event list at each delivery,
        so it replays through the AdversarialScript strategy.
        """
        counters = (sig.sent_cw, sig.sent_ccw, sig.recv_cw, sig.recv_ccw)
        want = _sub_delta(counters, self.base_counters)
        target = (sig.verdicts, sig.terminal, want)
        if target not in self.memo[self.root]:
            raise BadParamError(f"signature is not reachable: {sig}")
        script = []
        key = self.root
        remaining = want
        while True:
            children = self.successors(key)
            if children is None:
                return script
            for idx, (child, delta) in enumerate(children):
                left = _sub_delta(remaining, delta)
                if (sig.verdicts, sig.terminal, left) in self.memo[child]:
                    script.append(idx)
                    key = child
                    remaining = left
                    break
            else:  # pragma: no cover - memo guarantees a child matches
                raise BadParamError("witness reconstruction lost the target")


def explore_all(
    config: RingConfig,
    machines: Sequence[Union[ProtocolMachine, MachineType]],
    step_cap: int = 1_000_000,
    state_cap: int = 2_000_000,
) -> frozenset:
    """Enumerate every delivery order; return the distinct terminal signatures.

    Every delivery choice at every branch point is covered, including the
    port choice of receive-any. Intended for n <= 3 and small identifiers;
    raises StepCapExceededError / StateCapExceededError rather than
    truncating silently.
    """
    explorer = _Explorer(config, machines, step_cap, state_cap)
    explorer.explore()
    return explorer.signatures()


def explore_with_witnesses(
    config: RingConfig,
    machines: Sequence[Union[ProtocolMachine, MachineType]],
    step_cap: int = 1_000_000,
    state_cap: int = 2_000_000,
) -> tuple:
    """explore_all plus a ``finder(signature) -> script`` for witness replay."""
    explorer = _Explorer(config, machines, step_cap, state_cap)
    explorer.explore()
    return explorer.signatures(), explorer.witness_script
