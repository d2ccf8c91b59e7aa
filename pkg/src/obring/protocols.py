"""The election algorithms as resumable state machines.

Each machine type is a pure transition system: ``start()`` yields the
initial state and the actions of the first resumption; ``step(state, port)``
consumes one delivered pulse and yields the successor state plus the
actions it emits before blocking again. States are small flat tuples so
they can be snapshotted, hashed and explored exhaustively. One resumption
may emit several sends followed by at most one Return; local computation
is atomic (the scheduler applies all actions before the next delivery).

A blocking receive on a specific port never consumes pulses from the other
port — those stay in transit on their link and may accumulate.
"""

from __future__ import annotations

from dataclasses import dataclass
from fractions import Fraction
from typing import Optional, Union

from .codec import EncodedId, from_int
from .errors import AlreadyTerminatedError, BadParamError
from .ring import (
    BLOCKED_ANY,
    BLOCKED_ON_PORT0,
    BLOCKED_ON_PORT1,
    PORT0,
    PORT1,
    RETURN_LEADER,
    RETURN_NON_LEADER,
    SEND_CCW,
    SEND_CW,
    TERMINATED_LEADER,
    TERMINATED_NON_LEADER,
    TERMINATED_UNDECIDED,
    BlockedOn,
)

# ---------------------------------------------------------------------------
# Kill-a-clockwise-pulse-and-relay: the inactive processes' loop
# ---------------------------------------------------------------------------


@dataclass(frozen=True)
class KillRelayState:
    """Relay loop state: consecutive counter-clockwise receptions + kill flag."""

    consecutive_ccw: int = 0
    killed: int = 0
    terminated: bool = False


def kill_and_relay_step(state: KillRelayState, delivered_port: int):
    """One step of the inactive relay.

    The first clockwise pulse received with killed=0 is consumed without
    forwarding (it cancels the extra clockwise pulse this process sent just
    before going inactive); the consecutive-CCW counter is left untouched by
    that kill. Any later clockwise pulse resets the counter and is forwarded.
    A counter-clockwise pulse is always forwarded; the second consecutive
    one is forwarded first and then the process returns non-leader.
    """
    if state.terminated:
        raise AlreadyTerminatedError("relay already terminated")
    if delivered_port == PORT1:  # clockwise pulse
        if state.killed == 0:
            return KillRelayState(state.consecutive_ccw, 1), []
        return KillRelayState(0, 1), [SEND_CW]
    ccw = state.consecutive_ccw + 1
    if ccw == 2:
        return KillRelayState(ccw, state.killed, True), [SEND_CCW, RETURN_NON_LEADER]
    return KillRelayState(ccw, state.killed), [SEND_CCW]


# ---------------------------------------------------------------------------
# Logarithmic election (bit-by-bit elimination with d-step synchronization)
# ---------------------------------------------------------------------------

# phases; the state tuple is (phase, round_i, received_cw, killed, consec_ccw)
LOG_SYNC = 0      # synchronization loop, waiting on port 1
LOG_ZERO = 1      # zero-signaling: sent counter-clockwise, waiting on port 0
LOG_TERM = 2      # termination: sent the final counter-clockwise, waiting on port 0
LOG_NOZERO = 3    # no-zero-checking loop, waiting on any port
LOG_RELAY = 4     # inactive: kill-and-relay
LOG_DONE_LEADER = 5
LOG_DONE_NON_LEADER = 6
LOG_DONE_UNDECIDED = 7   # fell off the main loop; only malformed ids reach this

_LOG_BLOCKED = {
    LOG_SYNC: BLOCKED_ON_PORT1,
    LOG_ZERO: BLOCKED_ON_PORT0,
    LOG_TERM: BLOCKED_ON_PORT0,
    LOG_NOZERO: BLOCKED_ANY,
    LOG_RELAY: BLOCKED_ANY,
    LOG_DONE_LEADER: TERMINATED_LEADER,
    LOG_DONE_NON_LEADER: TERMINATED_NON_LEADER,
    LOG_DONE_UNDECIDED: TERMINATED_UNDECIDED,
}


class LogElection:
    """Elimination election over an encoded identifier, one bit per round.

    Round i: the synchronization loop sends/receives clockwise pulses until
    the cumulative clockwise reception count reaches (2i-1)*d. A process
    whose i-th bit is 0 then signals counter-clockwise and waits for the
    matching counter-clockwise pulse; a process whose i-th bit is 1 keeps
    pumping clockwise until either a counter-clockwise pulse eliminates it
    or its count reaches 2i*d (meaning no zero-bit process exists this
    round). The survivor of its last round circulates one extra
    counter-clockwise pulse to let every relay terminate, then returns
    leader with no pulse left in transit.
    """

    __slots__ = ("bits", "d", "length")

    def __init__(self, encoded_id: EncodedId, d: int):
        if d < 1:
            raise BadParamError(f"synchronization parameter d must be >= 1, got {d}")
        self.bits = encoded_id.bits
        self.d = d
        self.length = len(encoded_id.bits)

    def start(self):
        return (LOG_SYNC, 1, 0, 0, 0), [SEND_CW]

    def step(self, state, port):
        phase, i, rc, killed, consec = state
        d = self.d

        if phase == LOG_SYNC:
            rc += 1
            if rc == (2 * i - 1) * d:
                if self.bits[i - 1] == 0:
                    return (LOG_ZERO, i, rc, 0, 0), [SEND_CCW]
                return (LOG_NOZERO, i, rc, 0, 0), [SEND_CW]
            return (LOG_SYNC, i, rc, 0, 0), [SEND_CW]

        if phase == LOG_ZERO:
            if i == self.length:
                return (LOG_TERM, i, rc, 0, 0), [SEND_CCW]
            return (LOG_SYNC, i + 1, rc, 0, 0), [SEND_CW]

        if phase == LOG_TERM:
            return (LOG_DONE_LEADER, i, rc, 0, 0), [RETURN_LEADER]

        if phase == LOG_NOZERO:
            if port == PORT1:
                rc += 1
                if rc == 2 * i * d:
                    if i == self.length:
                        # all rounds won on a 1-ending id: no return statement
                        return (LOG_DONE_UNDECIDED, i, rc, 0, 0), []
                    return (LOG_SYNC, i + 1, rc, 0, 0), [SEND_CW]
                return (LOG_NOZERO, i, rc, 0, 0), [SEND_CW]
            # counter-clockwise pulse: eliminated; forward it, then relay
            return (LOG_RELAY, i, rc, 0, 0), [SEND_CCW]

        if phase == LOG_RELAY:
            krs, actions = kill_and_relay_step(KillRelayState(consec, killed), port)
            if krs.terminated:
                return (LOG_DONE_NON_LEADER, i, rc, krs.killed, krs.consecutive_ccw), actions
            return (LOG_RELAY, i, rc, krs.killed, krs.consecutive_ccw), actions

        raise AlreadyTerminatedError(f"machine in terminal phase {phase}")

    def blocked_on(self, state) -> BlockedOn:
        return _LOG_BLOCKED[state[0]]


# ---------------------------------------------------------------------------
# Constant counter-clockwise election (U*id competing iterations)
# ---------------------------------------------------------------------------

# phases; the state tuple is (phase, iteration, port0_count)
CD_COMPETE = 0      # competing loop, waiting on any port
CD_KILL = 1         # eliminated: waiting on port 1 to kill one clockwise pulse
CD_RELAY = 2        # relay loop, waiting on any port
CD_LEAD_FIRST = 3   # leader: first counter-clockwise sent, waiting on port 0
CD_LEAD_DRAIN = 4   # leader: draining clockwise pulses, waiting on any port
CD_LEAD_LAST = 5    # leader: final counter-clockwise sent, waiting on port 0
CD_DONE_LEADER = 6
CD_DONE_NON_LEADER = 7

_CD_BLOCKED = {
    CD_COMPETE: BLOCKED_ANY,
    CD_KILL: BLOCKED_ON_PORT1,
    CD_RELAY: BLOCKED_ANY,
    CD_LEAD_FIRST: BLOCKED_ON_PORT0,
    CD_LEAD_DRAIN: BLOCKED_ANY,
    CD_LEAD_LAST: BLOCKED_ON_PORT0,
    CD_DONE_LEADER: TERMINATED_LEADER,
    CD_DONE_NON_LEADER: TERMINATED_NON_LEADER,
}


class ConstDirection:
    """Election in which every process sends exactly 3 counter-clockwise pulses.

    A process competes for U*id iterations of send-clockwise/receive-any; the
    minimum identifier is the only one that completes them all without being
    interrupted by a counter-clockwise pulse. Everyone else forwards that
    pulse, kills one clockwise pulse to restore balance, and relays until two
    counter-clockwise pulses have passed. The winner's three counter-clockwise
    pulses: one to announce, one to flush the remaining clockwise pulses out
    of the ring, one to terminate everybody.
    """

    __slots__ = ("ident", "bound", "iterations")

    def __init__(self, ident: int, bound: int):
        if ident < 1 or bound < 1:
            raise BadParamError(f"need id >= 1 and U >= 1, got id={ident}, U={bound}")
        self.ident = ident
        self.bound = bound
        self.iterations = bound * ident

    def start(self):
        return (CD_COMPETE, 1, 0), [SEND_CW]

    def step(self, state, port):
        phase, it, p0count = state

        if phase == CD_COMPETE:
            if port == PORT0:
                # a counter-clockwise pulse: not the minimum; forward it
                return (CD_KILL, it, 0), [SEND_CCW]
            if it == self.iterations:
                return (CD_LEAD_FIRST, it, 0), [SEND_CCW]
            return (CD_COMPETE, it + 1, 0), [SEND_CW]

        if phase == CD_KILL:
            # the awaited clockwise pulse is consumed without forwarding
            return (CD_RELAY, it, 0), []

        if phase == CD_RELAY:
            if port == PORT1:
                return (CD_RELAY, it, p0count), [SEND_CW]
            p0count += 1
            if p0count == 2:
                return (CD_DONE_NON_LEADER, it, p0count), [SEND_CCW, RETURN_NON_LEADER]
            return (CD_RELAY, it, p0count), [SEND_CCW]

        if phase == CD_LEAD_FIRST:
            return (CD_LEAD_DRAIN, it, 0), [SEND_CCW]

        if phase == CD_LEAD_DRAIN:
            if port == PORT1:
                return (CD_LEAD_DRAIN, it, 0), [SEND_CW]
            return (CD_LEAD_LAST, it, 0), [SEND_CCW]

        if phase == CD_LEAD_LAST:
            return (CD_DONE_LEADER, it, 0), [RETURN_LEADER]

        raise AlreadyTerminatedError(f"machine in terminal phase {phase}")

    def blocked_on(self, state) -> BlockedOn:
        return _CD_BLOCKED[state[0]]


MachineType = Union[LogElection, ConstDirection]


# ---------------------------------------------------------------------------
# The resumable per-process wrapper used by the scheduler
# ---------------------------------------------------------------------------


class ProtocolMachine:
    """One process: a machine type plus its current state and block descriptor."""

    __slots__ = ("mtype", "state", "blocked")

    def __init__(self, mtype: MachineType):
        self.mtype = mtype
        self.state = None
        self.blocked: Optional[BlockedOn] = None

    def start(self) -> list:
        self.state, actions = self.mtype.start()
        self.blocked = self.mtype.blocked_on(self.state)
        return actions

    def deliver(self, port: int) -> list:
        if self.blocked is None:
            raise AlreadyTerminatedError("machine was never started")
        if self.blocked.kind == "terminated":
            raise AlreadyTerminatedError("delivery to a terminated machine")
        self.state, actions = self.mtype.step(self.state, port)
        self.blocked = self.mtype.blocked_on(self.state)
        return actions

    @property
    def terminated(self) -> bool:
        return self.blocked is not None and self.blocked.kind == "terminated"

    @property
    def verdict(self) -> Optional[str]:
        if self.terminated:
            return self.blocked.verdict
        return None


def log_election_new(encoded_id: EncodedId, d: int) -> ProtocolMachine:
    """Machine whose first resumption sends clockwise and blocks on port 1."""
    return ProtocolMachine(LogElection(encoded_id, d))


def const_direction_new(ident: int, bound: int) -> ProtocolMachine:
    """Machine for the three-counter-clockwise-pulse election."""
    return ProtocolMachine(ConstDirection(ident, bound))


# ---------------------------------------------------------------------------
# Randomized anonymous election: draw an id, run the logarithmic election
# ---------------------------------------------------------------------------


def ceil_mul_log2(c, U: int) -> int:
    """Exact ceil(c * log2(U)) for a non-negative real c and integer U >= 1.

    c is converted exactly to a fraction p/q and the result is the least k
    with 2**(k*q) >= U**p — integer arithmetic only, no floating point.
    """
    if U < 1:
        raise BadParamError(f"U must be >= 1, got {U}")
    frac = Fraction(c)
    if frac < 0:
        raise BadParamError(f"c must be >= 0, got {c}")
    p, q = frac.numerator, frac.denominator
    target = U**p
    k = 0
    while (1 << (k * q)) < target:
        k += 1
    return k


@dataclass(frozen=True)
class RandomizedParams:
    """Parameters of the anonymous randomized election.

    c is the success exponent (success probability at least 1 - U**-c);
    c1 and c2 default to c + 2, the choice under which that bound holds.
    """

    U: int
    c: float = 1.0
    c1: Optional[float] = None
    c2: Optional[float] = None
    rng_seed: int = 0

    def __post_init__(self):
        if self.U < 1:
            raise BadParamError(f"U must be >= 1, got {self.U}")
        if self.c1 is None:
            object.__setattr__(self, "c1", self.c + 2)
        if self.c2 is None:
            object.__setattr__(self, "c2", self.c + 2)

    @property
    def rand_bits(self) -> int:
        """Number of random bits per draw: ceil(c1 * log2 U)."""
        return ceil_mul_log2(self.c1, self.U)

    @property
    def d(self) -> int:
        """Synchronization parameter: ceil(c2 * log2 U), at least 1."""
        return max(1, ceil_mul_log2(self.c2, self.U))

    @property
    def id_bit_length(self) -> int:
        """Common bit length of every drawn identifier: rand_bits + 2."""
        return self.rand_bits + 2

    @property
    def expected_cw_per_process(self) -> int:
        """Exact clockwise pulses each process sends in a successful run."""
        return (2 * self.id_bit_length - 1) * self.d


def randomized_make_id(params: RandomizedParams, rng) -> int:
    """Draw one identifier: 2 * (2**L + rand), rand uniform on [0, 2**L - 1].

    L = params.rand_bits. The result is even, starts with a 1 bit, ends with
    a 0 bit and always has exactly L + 2 bits, so any set of draws is
    0-ended and strongly prefix-free by construction; it is deterministic
    given the generator state.
    """
    L = params.rand_bits
    rand = rng.masked(L)
    return 2 * ((1 << L) + rand)


def randomized_election_new(params: RandomizedParams, rng) -> ProtocolMachine:
    """Draw an id and wrap the logarithmic election around its raw bits."""
    ident = randomized_make_id(params, rng)
    return ProtocolMachine(LogElection(from_int(ident), params.d))
