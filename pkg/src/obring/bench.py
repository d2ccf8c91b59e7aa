"""Throughput comparison of the jit kernels against the pure-Python path.

Runs the randomized-election Monte Carlo workload on both backends, checks
they produce identical reports (same seeds, same splitmix64 streams), and
prints trials/second for each. Invoke as ``obring bench`` or
``python -m obring.bench``.
"""

from __future__ import annotations

import sys
import time

from .analysis import mc_randomized_success
from .kernels import HAVE_NUMBA


def _time_mc(trials: int, U: int, seed: int, backend: str) -> tuple:
    start = time.perf_counter()
    report = mc_randomized_success(
        U, 1.0, [max(1, U // 2), U], trials, seed, backend=backend
    )
    return time.perf_counter() - start, report


def run_benchmark(trials: int = 2000, U: int = 16, seed: int = 7) -> int:
    print(f"workload: randomized election Monte Carlo, U={U}, c=1, seed={seed}")

    if not HAVE_NUMBA:
        elapsed, report = _time_mc(trials, U, seed, "pure")
        print("numba unavailable; pure path only")
        print(f"pure:  {trials} trials in {elapsed:.2f}s ({trials / elapsed:.0f} trials/s), "
              f"successes {report.successes}/{report.trials}")
        return 0

    # compile before timing
    _time_mc(1, U, seed, "numba")

    check = min(trials, 200)
    _, via_jit = _time_mc(check, U, seed, "numba")
    _, via_py = _time_mc(check, U, seed, "pure")
    same = (
        via_jit.successes == via_py.successes
        and via_jit.taxonomy == via_py.taxonomy
        and via_jit.count_violations == via_py.count_violations
    )
    print(f"backend agreement over {check} shared-seed trials: "
          f"{'identical' if same else 'MISMATCH'}")
    if not same:
        return 2

    jit_elapsed, report = _time_mc(trials, U, seed, "numba")
    pure_trials = min(trials, 300)
    pure_elapsed, _ = _time_mc(pure_trials, U, seed, "pure")
    jit_rate = trials / jit_elapsed
    pure_rate = pure_trials / pure_elapsed
    print(f"numba: {trials} trials in {jit_elapsed:.2f}s ({jit_rate:.0f} trials/s), "
          f"successes {report.successes}/{report.trials}")
    print(f"pure:  {pure_trials} trials in {pure_elapsed:.2f}s ({pure_rate:.0f} trials/s)")
    print(f"speedup: {jit_rate / pure_rate:.1f}x")
    return 0


if __name__ == "__main__":
    sys.exit(run_benchmark())
