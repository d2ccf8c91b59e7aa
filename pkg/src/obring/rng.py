"""Deterministic 64-bit randomness: splitmix64.

All seeded behavior in the package (scheduler choices, identifier draws,
per-trial seed derivation) flows through this one generator so that runs
are replayable bit-for-bit and the jit-compiled kernels can consume the
exact same stream (kernels re-implement the same three lines on uint64,
equality is pinned by a test).

splitmix64 is the output-mixing generator of Steele, Lea & Flood,
"Fast splittable pseudorandom number generators" (OOPSLA 2014), as used
by java.util.SplittableRandom.
"""

from __future__ import annotations

MASK64 = (1 << 64) - 1
GOLDEN_GAMMA = 0x9E3779B97F4A7C15


def splitmix64_next(state: int) -> tuple[int, int]:
    """Advance the state by one step; return (new_state, 64-bit output)."""
    state = (state + GOLDEN_GAMMA) & MASK64
    z = state
    z = ((z ^ (z >> 30)) * 0xBF58476D1CE4E5B9) & MASK64
    z = ((z ^ (z >> 27)) * 0x94D049BB133111EB) & MASK64
    z = z ^ (z >> 31)
    return state, z


def derive_seed(master_seed: int, index: int) -> int:
    """Seed for the index-th independent substream of a master seed.

    Used for per-trial and per-repeat seeds; trials derived this way can
    run in any order (or in parallel) and still merge deterministically.
    """
    _, z = splitmix64_next((master_seed + index * GOLDEN_GAMMA) & MASK64)
    return z


class SplitMix64:
    """Tiny stateful wrapper around splitmix64_next."""

    __slots__ = ("state",)

    def __init__(self, seed: int):
        self.state = seed & MASK64

    def next_u64(self) -> int:
        self.state, z = splitmix64_next(self.state)
        return z

    def below(self, bound: int) -> int:
        """Integer in [0, bound). Modulo reduction (bias < bound / 2**64)."""
        if bound <= 0:
            raise ValueError("bound must be positive")
        return self.next_u64() % bound

    def masked(self, nbits: int) -> int:
        """Exactly uniform integer in [0, 2**nbits) via masking."""
        if nbits == 0:
            return 0
        return self.next_u64() & ((1 << nbits) - 1)
