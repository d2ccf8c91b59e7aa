"""Identifier encoding and the arrangement predicates the election relies on.

Bit indexing is 1-based, most-significant first, matching the bit-by-bit
elimination rounds of the election: ``bit(e, 1)`` is the leading bit. All
well-formed identifiers start with 1, so ``bit(e, 1) == 1`` always.

An *arrangement* is the cyclic sequence of encoded identifiers in ring
order: index ``j`` holds process ``p_j``'s identifier.
"""

from __future__ import annotations

from dataclasses import dataclass
from typing import Iterable, Sequence

from .errors import InvalidIdError, NoUniqueMinError, OutOfRangeError


@dataclass(frozen=True)
class EncodedId:
    """A finite bit sequence over {0,1}, most-significant first."""

    bits: tuple[int, ...]

    def __post_init__(self):
        if len(self.bits) == 0:
            raise InvalidIdError("empty bit sequence")
        if any(b not in (0, 1) for b in self.bits):
            raise InvalidIdError(f"bits must be 0/1, got {self.bits!r}")
        if self.bits[0] != 1:
            raise InvalidIdError(f"leading bit must be 1, got {self.bits!r}")

    def __len__(self) -> int:
        return len(self.bits)

    def __str__(self) -> str:
        return "".join(str(b) for b in self.bits)

    @property
    def value(self) -> int:
        """Integer value of the whole bit sequence."""
        v = 0
        for b in self.bits:
            v = (v << 1) | b
        return v

    @property
    def zero_count(self) -> int:
        return len(self.bits) - sum(self.bits)


Arrangement = Sequence[EncodedId]


def bits_of(text: str) -> EncodedId:
    """EncodedId from a literal like "1010" (test/CLI convenience)."""
    return EncodedId(tuple(int(ch) for ch in text))


def from_int(value: int) -> EncodedId:
    """Raw binary bits of ``value`` (no framing). Requires value >= 1."""
    if value < 1:
        raise InvalidIdError(f"id must be >= 1, got {value}")
    return EncodedId(tuple(int(ch) for ch in format(value, "b")))


def encode(ident: int) -> EncodedId:
    """Frame id of binary length l as: l ones, 0, the l binary digits, 0.

    The output always starts with 1, ends with 0, and has length 2l + 2;
    any set of encoded distinct ids is 0-ended and strongly prefix-free.
    """
    if ident < 1:
        raise InvalidIdError(
            f"id must be >= 1, got {ident} (binary length undefined for 0; "
            "shift ids by +1 at ingestion if a scenario contains 0)"
        )
    digits = tuple(int(ch) for ch in format(ident, "b"))
    ell = len(digits)
    return EncodedId((1,) * ell + (0,) + digits + (0,))


def bit(e: EncodedId, i: int) -> int:
    """The i-th bit, 1-based from the most significant."""
    if not 1 <= i <= len(e.bits):
        raise OutOfRangeError(f"bit index {i} out of range 1..{len(e.bits)}")
    return e.bits[i - 1]


def prefix_value(e: EncodedId, i: int) -> int:
    """Integer value of the first i bits."""
    if not 1 <= i <= len(e.bits):
        raise OutOfRangeError(f"prefix length {i} out of range 1..{len(e.bits)}")
    v = 0
    for b in e.bits[:i]:
        v = (v << 1) | b
    return v


def is_0_ended(ids: Iterable[EncodedId]) -> bool:
    """True iff every identifier's last bit is 0."""
    ids = list(ids)
    if not ids:
        raise InvalidIdError("empty identifier set")
    return all(e.bits[-1] == 0 for e in ids)


def is_strongly_prefix_free(ids: Iterable[EncodedId]) -> bool:
    """True iff for every pair with v1 <= v2, v1 <= value of e2's first l1 bits.

    Lengths follow values automatically (leading bit is 1), so the l1 <= l2
    side condition holds for every checked pair. All ordered pairs are
    checked, O(k^2) — fine at desk scale.
    """
    ids = list(ids)
    if not ids:
        raise InvalidIdError("empty identifier set")
    for e1 in ids:
        for e2 in ids:
            if e1.value <= e2.value and e1.value > prefix_value(e2, len(e1)):
                return False
    return True


def ell_min(arrangement: Arrangement) -> int:
    """Length of the shortest identifier in the arrangement."""
    if len(arrangement) == 0:
        raise InvalidIdError("empty arrangement")
    return min(len(e) for e in arrangement)


def active_sets(arrangement: Arrangement, i: int) -> tuple[set[int], set[int], set[int]]:
    """(A_i, A_i^0, A_i^1) for elimination round i.

    A_i is the set of processes still in contention when round i begins:
    the ones whose (i-1)-bit prefix is minimal over the arrangement (for
    i = 1 that is everyone). A_i^0 / A_i^1 split A_i by the value of bit i,
    the bit round i compares. Consequently A_{i+1} = A_i^0 when A_i^0 is
    non-empty, and A_{i+1} = A_i otherwise.
    """
    lmin = ell_min(arrangement)
    if not 1 <= i <= lmin:
        raise OutOfRangeError(f"round {i} out of range 1..{lmin}")
    if i == 1:
        a_i = set(range(len(arrangement)))
    else:
        prefixes = [prefix_value(e, i - 1) for e in arrangement]
        best = min(prefixes)
        a_i = {j for j, p in enumerate(prefixes) if p == best}
    a0 = {j for j in a_i if bit(arrangement[j], i) == 0}
    return a_i, a0, a_i - a0


def is_d_scattered(arrangement: Arrangement, d: int) -> bool:
    """True iff at every round each bit-1 active process has a bit-0 active
    process within cyclic distance < d in both directions, distance counted
    over active processes only — or no bit-0 active process exists.

    Any arrangement of n identifiers is n-scattered (and hence U-scattered
    for any U >= n).
    """
    if d < 1:
        raise OutOfRangeError(f"d must be >= 1, got {d}")
    lmin = ell_min(arrangement)
    for i in range(1, lmin + 1):
        a_i, a0, a1 = active_sets(arrangement, i)
        if not a0:
            continue
        ordered = sorted(a_i)  # clockwise order of the active processes
        m = len(ordered)
        pos = {j: k for k, j in enumerate(ordered)}
        reach = min(d - 1, m - 1)
        for p in a1:
            k = pos[p]
            if not any(ordered[(k + s) % m] in a0 for s in range(1, reach + 1)):
                return False
            if not any(ordered[(k - s) % m] in a0 for s in range(1, reach + 1)):
                return False
    return True


def min_id_index(arrangement: Arrangement) -> int:
    """Index of the round-elimination winner.

    Runs the bit-by-bit elimination (the minimal bit at each round survives)
    through round ell_min; raises NoUniqueMinError if more than one process
    ties at every compared bit. For encoded identifiers this is the index of
    the numerically minimal raw id.
    """
    n = len(arrangement)
    if n == 0:
        raise InvalidIdError("empty arrangement")
    actives = list(range(n))
    for i in range(1, ell_min(arrangement) + 1):
        if len(actives) == 1:
            return actives[0]
        zeros = [j for j in actives if bit(arrangement[j], i) == 0]
        if zeros and len(zeros) < len(actives):
            actives = zeros
    if len(actives) == 1:
        return actives[0]
    raise NoUniqueMinError(
        f"processes {actives} tie at every compared bit through round "
        f"{ell_min(arrangement)}"
    )
