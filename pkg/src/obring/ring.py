"""Oriented ring topology, pulse links, and the process/scheduler vocabulary.

Conventions, used verbatim everywhere in the package:

* Ports are the ints 0 and 1. At process ``p_j``, port 0 leads to
  ``p_{(j+1) mod n}`` and port 1 leads to ``p_{(j-1) mod n}``. A pulse sent
  on port 0 and received on port 1 travels clockwise; sent on port 1 and
  received on port 0, counter-clockwise.
* Pulses carry no content. A directed link is therefore just a count of
  in-transit pulses, never a queue of payloads.
* ``n = 1`` is a self-loop: a pulse the process sends on port 0 comes back
  to itself on port 1, and vice versa.
"""

from __future__ import annotations

from dataclasses import dataclass, field
from typing import NamedTuple, Optional

from .errors import BadParamError, EmptyLinkError

PORT0 = 0  # outbound clockwise / inbound counter-clockwise
PORT1 = 1  # outbound counter-clockwise / inbound clockwise

LEADER = "leader"
NON_LEADER = "non-leader"
UNFINISHED = "unfinished"


@dataclass(frozen=True)
class RingConfig:
    """Ring topology: size, known bound, optional identifier assignment.

    ``ids[j]`` is the identifier of process ``p_j``; ``ids`` is None for
    anonymous runs. ``U`` defaults to ``n`` when not given.
    """

    n: int
    U: Optional[int] = None
    ids: Optional[tuple[int, ...]] = None

    def __post_init__(self):
        if self.n < 1:
            raise BadParamError(f"ring size must be >= 1, got {self.n}")
        if self.U is not None and self.U < self.n:
            raise BadParamError(f"known bound U={self.U} is below n={self.n}")
        if self.ids is not None:
            if len(self.ids) != self.n:
                raise BadParamError(
                    f"got {len(self.ids)} ids for a ring of {self.n} processes"
                )
            object.__setattr__(self, "ids", tuple(self.ids))

    @property
    def bound(self) -> int:
        return self.U if self.U is not None else self.n


def neighbors(j: int, config: RingConfig) -> tuple[int, int]:
    """(clockwise successor, counter-clockwise successor) of process j."""
    n = config.n
    if not 0 <= j < n:
        raise BadParamError(f"process index {j} out of range for n={n}")
    return (j + 1) % n, (j - 1) % n


class DeliveryEvent(NamedTuple):
    """Delivery of one pulse to ``target`` on receiving port ``port``.

    Port 1 consumes a clockwise pulse from link ``target-1 mod n``;
    port 0 consumes a counter-clockwise pulse from link ``target+1 mod n``.
    """

    target: int
    port: int


@dataclass
class LinkState:
    """In-transit pulse counters, one per directed link.

    ``cw_in_transit[j]`` counts pulses sent by ``p_j`` on port 0 and not yet
    received by ``p_{j+1}``; ``ccw_in_transit[j]`` counts pulses sent by
    ``p_j`` on port 1 and not yet received by ``p_{j-1}``.
    """

    cw_in_transit: list[int]
    ccw_in_transit: list[int]

    @classmethod
    def zeros(cls, n: int) -> "LinkState":
        return cls([0] * n, [0] * n)

    @property
    def n(self) -> int:
        return len(self.cw_in_transit)

    def total_in_transit(self) -> int:
        return sum(self.cw_in_transit) + sum(self.ccw_in_transit)

    def copy(self) -> "LinkState":
        return LinkState(list(self.cw_in_transit), list(self.ccw_in_transit))


def apply_send(state: LinkState, sender: int, port: int) -> LinkState:
    """New LinkState after ``sender`` emits one pulse on ``port``."""
    out = state.copy()
    if port == PORT0:
        out.cw_in_transit[sender] += 1
    else:
        out.ccw_in_transit[sender] += 1
    return out


def apply_delivery(state: LinkState, event: DeliveryEvent) -> LinkState:
    """New LinkState after one pulse is consumed by ``event.target``.

    Raises EmptyLinkError when the source link holds no pulse — that is a
    scheduler bug, never a legal protocol situation.
    """
    n = state.n
    out = state.copy()
    if event.port == PORT1:
        src = (event.target - 1) % n
        if out.cw_in_transit[src] < 1:
            raise EmptyLinkError(
                f"no clockwise pulse in transit on link {src} -> {event.target}"
            )
        out.cw_in_transit[src] -= 1
    else:
        src = (event.target + 1) % n
        if out.ccw_in_transit[src] < 1:
            raise EmptyLinkError(
                f"no counter-clockwise pulse in transit on link {src} -> {event.target}"
            )
        out.ccw_in_transit[src] -= 1
    return out


# --- actions a machine may emit during one resumption ------------------------

@dataclass(frozen=True)
class SendPulse:
    port: int


@dataclass(frozen=True)
class Return:
    verdict: str  # LEADER or NON_LEADER


SEND_CW = SendPulse(PORT0)
SEND_CCW = SendPulse(PORT1)
RETURN_LEADER = Return(LEADER)
RETURN_NON_LEADER = Return(NON_LEADER)


# --- what a machine is waiting for -------------------------------------------

@dataclass(frozen=True)
class BlockedOn:
    """Blocking descriptor: a specific port, any port, or terminated.

    ``kind`` is "port", "any" or "terminated"; ``port`` is set for "port",
    ``verdict`` for "terminated" (None when the machine stopped without
    returning — only reachable on malformed inputs).
    """

    kind: str
    port: Optional[int] = None
    verdict: Optional[str] = None

    def accepts(self, port: int) -> bool:
        if self.kind == "any":
            return True
        return self.kind == "port" and self.port == port


BLOCKED_ON_PORT0 = BlockedOn("port", port=PORT0)
BLOCKED_ON_PORT1 = BlockedOn("port", port=PORT1)
BLOCKED_ANY = BlockedOn("any")
TERMINATED_LEADER = BlockedOn("terminated", verdict=LEADER)
TERMINATED_NON_LEADER = BlockedOn("terminated", verdict=NON_LEADER)
TERMINATED_UNDECIDED = BlockedOn("terminated", verdict=None)
