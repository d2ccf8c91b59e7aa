"""Jit-compiled whole-run kernels for bulk simulation sweeps.

The Monte Carlo experiments and the acceptance sweeps run thousands of
complete elections under the seeded-random scheduler; these kernels execute
one full run each over small int64 arrays. They mirror the library engine
(protocols + scheduler) transition-for-transition: same canonical event
order, same one-splitmix64-draw-per-delivery schedule, so a kernel run and
a library run with the same seed produce identical verdicts, counters and
step counts (pinned by tests).

Backend selection: numba @njit when available, controlled by the
OBRING_NUMBA env var ("0"/"false" forces the pure path). The pure path
executes the *same function source* uncompiled (``Dispatcher.py_func``
style), so both backends are semantically identical by construction;
``python -m obring.bench`` compares their throughput.
"""

from __future__ import annotations

import os
import warnings

import numpy as np

from .errors import BadParamError
from .rng import MASK64
from .scheduler import (
    DEADLOCK,
    DEFAULT_STEP_CAP,
    NON_QUIESCENT,
    QUIESCENT,
    STEP_CAP_EXCEEDED,
    RunResult,
)
from .ring import LEADER, NON_LEADER, UNFINISHED

try:
    import numba

    HAVE_NUMBA = True
except ImportError:  # pragma: no cover - env without numba
    numba = None
    HAVE_NUMBA = False


def _env_wants_numba() -> bool | None:
    raw = os.environ.get("OBRING_NUMBA", "").strip().lower()
    if raw in ("0", "false", "off", "no"):
        return False
    if raw in ("1", "true", "on", "yes"):
        return True
    return None


_want = _env_wants_numba()
if _want and not HAVE_NUMBA:  # pragma: no cover
    warnings.warn("OBRING_NUMBA=1 but numba is not importable; using the pure path")
USE_NUMBA = HAVE_NUMBA if _want is None else (_want and HAVE_NUMBA)

# splitmix64 constants as uint64 scalars (numba reads module globals as consts)
_GAMMA = np.uint64(0x9E3779B97F4A7C15)
_MIX1 = np.uint64(0xBF58476D1CE4E5B9)
_MIX2 = np.uint64(0x94D049BB133111EB)
_S30 = np.uint64(30)
_S27 = np.uint64(27)
_S31 = np.uint64(31)

_TERMINAL_NAMES = (QUIESCENT, NON_QUIESCENT, DEADLOCK, STEP_CAP_EXCEEDED)
_VERDICT_NAMES = (UNFINISHED, LEADER, NON_LEADER)


def _run_log_impl(bits, lengths, d, seed, step_cap,
                  verdicts, sent_cw, sent_ccw, recv_cw, recv_ccw):
    """One full logarithmic-election run under the seeded-random scheduler.

    bits: int8[n, maxlen] identifier bits (MSB first); lengths: int64[n].
    Output arrays are filled in place; returns (terminal_code, steps).
    Terminal codes: 0 quiescent, 1 non-quiescent, 2 deadlock, 3 step cap.
    Verdict codes: 0 unfinished, 1 leader, 2 non-leader.
    """
    n = bits.shape[0]
    # phases: 0 sync(wait p1), 1 zero(wait p0), 2 term(wait p0),
    #         3 nozero(any), 4 relay(any), >=5 done
    phase = np.zeros(n, np.int64)
    rnd = np.ones(n, np.int64)
    rc = np.zeros(n, np.int64)
    killed = np.zeros(n, np.int64)
    consec = np.zeros(n, np.int64)
    blocked = np.empty(n, np.int64)  # 0 wait-p0, 1 wait-p1, 2 any, 3 done
    cw = np.zeros(n, np.int64)
    ccw = np.zeros(n, np.int64)
    ev_t = np.empty(2 * n, np.int64)
    ev_p = np.empty(2 * n, np.int64)

    for j in range(n):
        cw[j] += 1
        sent_cw[j] += 1
        blocked[j] = 1

    state = np.uint64(seed)
    steps = 0
    done = 0
    while True:
        if done == n:
            quiet = True
            for j in range(n):
                if cw[j] != 0 or ccw[j] != 0 or verdicts[j] == 0:
                    quiet = False
                    break
            return (0 if quiet else 1), steps
        cnt = 0
        for j in range(n):
            b = blocked[j]
            if b == 3:
                continue
            if (b == 0 or b == 2) and ccw[(j + 1) % n] > 0:
                ev_t[cnt] = j
                ev_p[cnt] = 0
                cnt += 1
            if (b == 1 or b == 2) and cw[(j - 1) % n] > 0:
                ev_t[cnt] = j
                ev_p[cnt] = 1
                cnt += 1
        if cnt == 0:
            return 2, steps
        if steps >= step_cap:
            return 3, steps

        state = state + _GAMMA
        z = state
        z = (z ^ (z >> _S30)) * _MIX1
        z = (z ^ (z >> _S27)) * _MIX2
        z = z ^ (z >> _S31)
        k = np.int64(z % np.uint64(cnt))
        j = ev_t[k]
        p = ev_p[k]
        steps += 1
        if p == 1:
            cw[(j - 1) % n] -= 1
            recv_cw[j] += 1
        else:
            ccw[(j + 1) % n] -= 1
            recv_ccw[j] += 1

        ph = phase[j]
        if ph == 0:  # synchronization loop (delivery is on port 1)
            rc[j] += 1
            if rc[j] == (2 * rnd[j] - 1) * d:
                if bits[j, rnd[j] - 1] == 0:
                    ccw[j] += 1
                    sent_ccw[j] += 1
                    phase[j] = 1
                    blocked[j] = 0
                else:
                    cw[j] += 1
                    sent_cw[j] += 1
                    phase[j] = 3
                    blocked[j] = 2
            else:
                cw[j] += 1
                sent_cw[j] += 1
        elif ph == 1:  # zero-signaling wait (port 0)
            if rnd[j] == lengths[j]:
                ccw[j] += 1
                sent_ccw[j] += 1
                phase[j] = 2
                blocked[j] = 0
            else:
                rnd[j] += 1
                cw[j] += 1
                sent_cw[j] += 1
                phase[j] = 0
                blocked[j] = 1
        elif ph == 2:  # termination wait (port 0)
            verdicts[j] = 1
            phase[j] = 5
            blocked[j] = 3
            done += 1
        elif ph == 3:  # no-zero-checking loop (any port)
            if p == 1:
                rc[j] += 1
                if rc[j] == 2 * rnd[j] * d:
                    if rnd[j] == lengths[j]:
                        phase[j] = 7  # fell off the main loop: undecided
                        blocked[j] = 3
                        done += 1
                    else:
                        rnd[j] += 1
                        cw[j] += 1
                        sent_cw[j] += 1
                        phase[j] = 0
                        blocked[j] = 1
                else:
                    cw[j] += 1
                    sent_cw[j] += 1
            else:
                ccw[j] += 1
                sent_ccw[j] += 1
                phase[j] = 4
                blocked[j] = 2
                killed[j] = 0
                consec[j] = 0
        else:  # ph == 4: kill-and-relay (any port)
            if p == 1:
                if killed[j] == 0:
                    killed[j] = 1
                else:
                    consec[j] = 0
                    cw[j] += 1
                    sent_cw[j] += 1
            else:
                consec[j] += 1
                ccw[j] += 1
                sent_ccw[j] += 1
                if consec[j] == 2:
                    verdicts[j] = 2
                    phase[j] = 6
                    blocked[j] = 3
                    done += 1


def _run_const_impl(ids, bound, seed, step_cap,
                    verdicts, sent_cw, sent_ccw, recv_cw, recv_ccw):
    """One full constant-counter-clockwise election run (same contract)."""
    n = ids.shape[0]
    # phases: 0 compete(any), 1 kill(wait p1), 2 relay(any),
    #         3 lead-first(wait p0), 4 lead-drain(any), 5 lead-last(wait p0)
    phase = np.zeros(n, np.int64)
    it = np.ones(n, np.int64)
    p0c = np.zeros(n, np.int64)
    blocked = np.full(n, 2, np.int64)
    cw = np.zeros(n, np.int64)
    ccw = np.zeros(n, np.int64)
    ev_t = np.empty(2 * n, np.int64)
    ev_p = np.empty(2 * n, np.int64)

    for j in range(n):
        cw[j] += 1
        sent_cw[j] += 1

    state = np.uint64(seed)
    steps = 0
    done = 0
    while True:
        if done == n:
            quiet = True
            for j in range(n):
                if cw[j] != 0 or ccw[j] != 0 or verdicts[j] == 0:
                    quiet = False
                    break
            return (0 if quiet else 1), steps
        cnt = 0
        for j in range(n):
            b = blocked[j]
            if b == 3:
                continue
            if (b == 0 or b == 2) and ccw[(j + 1) % n] > 0:
                ev_t[cnt] = j
                ev_p[cnt] = 0
                cnt += 1
            if (b == 1 or b == 2) and cw[(j - 1) % n] > 0:
                ev_t[cnt] = j
                ev_p[cnt] = 1
                cnt += 1
        if cnt == 0:
            return 2, steps
        if steps >= step_cap:
            return 3, steps

        state = state + _GAMMA
        z = state
        z = (z ^ (z >> _S30)) * _MIX1
        z = (z ^ (z >> _S27)) * _MIX2
        z = z ^ (z >> _S31)
        k = np.int64(z % np.uint64(cnt))
        j = ev_t[k]
        p = ev_p[k]
        steps += 1
        if p == 1:
            cw[(j - 1) % n] -= 1
            recv_cw[j] += 1
        else:
            ccw[(j + 1) % n] -= 1
            recv_ccw[j] += 1

        ph = phase[j]
        if ph == 0:  # competing loop (any port)
            if p == 0:
                ccw[j] += 1
                sent_ccw[j] += 1
                phase[j] = 1
                blocked[j] = 1
            elif it[j] == bound * ids[j]:
                ccw[j] += 1
                sent_ccw[j] += 1
                phase[j] = 3
                blocked[j] = 0
            else:
                it[j] += 1
                cw[j] += 1
                sent_cw[j] += 1
        elif ph == 1:  # kill wait: the clockwise pulse is consumed, not forwarded
            phase[j] = 2
            blocked[j] = 2
            p0c[j] = 0
        elif ph == 2:  # relay loop (any port)
            if p == 1:
                cw[j] += 1
                sent_cw[j] += 1
            else:
                p0c[j] += 1
                ccw[j] += 1
                sent_ccw[j] += 1
                if p0c[j] == 2:
                    verdicts[j] = 2
                    phase[j] = 7
                    blocked[j] = 3
                    done += 1
        elif ph == 3:  # leader: first counter-clockwise out, wait port 0
            ccw[j] += 1
            sent_ccw[j] += 1
            phase[j] = 4
            blocked[j] = 2
        elif ph == 4:  # leader: drain clockwise pulses (any port)
            if p == 1:
                cw[j] += 1
                sent_cw[j] += 1
            else:
                ccw[j] += 1
                sent_ccw[j] += 1
                phase[j] = 5
                blocked[j] = 0
        else:  # ph == 5: leader: final counter-clockwise came back
            verdicts[j] = 1
            phase[j] = 6
            blocked[j] = 3
            done += 1


_run_log_py = _run_log_impl
_run_const_py = _run_const_impl
if HAVE_NUMBA:
    _jit = numba.njit(cache=True, nogil=True)
    _run_log_jit = _jit(_run_log_impl)
    _run_const_jit = _jit(_run_const_impl)
else:  # pragma: no cover - env without numba
    _run_log_jit = None
    _run_const_jit = None


def backend_name(backend: str | None = None) -> str:
    """The backend a call with this ``backend`` argument would use."""
    if backend is None:
        return "numba" if USE_NUMBA else "pure"
    if backend not in ("numba", "pure"):
        raise BadParamError(f"backend must be 'numba' or 'pure', got {backend!r}")
    if backend == "numba" and not HAVE_NUMBA:
        raise BadParamError("numba backend requested but numba is not importable")
    return backend


def pack_bits(encoded_ids) -> tuple[np.ndarray, np.ndarray]:
    """(bits int8[n, maxlen], lengths int64[n]) from a list of EncodedIds."""
    n = len(encoded_ids)
    lengths = np.array([len(e.bits) for e in encoded_ids], dtype=np.int64)
    bits = np.zeros((n, int(lengths.max())), dtype=np.int8)
    for j, e in enumerate(encoded_ids):
        bits[j, : len(e.bits)] = e.bits
    return bits, lengths


def _finish(code: int, steps: int, verdicts, counters, seed: int) -> RunResult:
    return RunResult(
        verdicts=tuple(_VERDICT_NAMES[v] for v in verdicts),
        terminal=_TERMINAL_NAMES[code],
        steps=int(steps),
        sent_cw=tuple(int(x) for x in counters[0]),
        sent_ccw=tuple(int(x) for x in counters[1]),
        recv_cw=tuple(int(x) for x in counters[2]),
        recv_ccw=tuple(int(x) for x in counters[3]),
        seed=seed,
        strategy="seeded-random",
    )


def run_log_fast(encoded_ids, d: int, seed: int,
                 step_cap: int = DEFAULT_STEP_CAP,
                 backend: str | None = None) -> RunResult:
    """Logarithmic election on the arrangement, seeded-random scheduler."""
    if d < 1:
        raise BadParamError(f"d must be >= 1, got {d}")
    bits, lengths = pack_bits(encoded_ids)
    n = len(encoded_ids)
    verdicts = np.zeros(n, np.int64)
    counters = [np.zeros(n, np.int64) for _ in range(4)]
    args = (bits, lengths, d, np.uint64(seed & MASK64), step_cap, verdicts, *counters)
    if backend_name(backend) == "numba":
        code, steps = _run_log_jit(*args)
    else:
        with np.errstate(over="ignore"):
            code, steps = _run_log_py(*args)
    return _finish(code, steps, verdicts, counters, seed)


def run_const_fast(ids, bound: int, seed: int,
                   step_cap: int = DEFAULT_STEP_CAP,
                   backend: str | None = None) -> RunResult:
    """Constant-direction election on raw ids, seeded-random scheduler."""
    if bound < 1 or any(i < 1 for i in ids):
        raise BadParamError("need U >= 1 and all ids >= 1")
    ids_arr = np.array(list(ids), dtype=np.int64)
    n = len(ids_arr)
    verdicts = np.zeros(n, np.int64)
    counters = [np.zeros(n, np.int64) for _ in range(4)]
    args = (ids_arr, bound, np.uint64(seed & MASK64), step_cap, verdicts, *counters)
    if backend_name(backend) == "numba":
        code, steps = _run_const_jit(*args)
    else:
        with np.errstate(over="ignore"):
            code, steps = _run_const_py(*args)
    return _finish(code, steps, verdicts, counters, seed)
