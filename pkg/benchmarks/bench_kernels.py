"""Time the compiled kernels against the numpy fallback.

    python benchmarks/bench_kernels.py --pulses 5000000 --evals 20000
"""
from __future__ import annotations

import argparse
import time

import numpy as np

from qsatlink import _backend, _fallback
from qsatlink.channel import from_db
from qsatlink.detstat import DetectorModel, ProtocolParams

try:
    from qsatlink import _kernels
except ImportError:
    _kernels = None

SKL_ARGS = (0.74, 0.137, 0.77, 0.71, 0.9, from_db(30.8), 1e9, 1e-8, 1e-3, 1e-3,
            1e-9, 1e-15, 19.0, 1.16)


def _best_of(fn, repeats: int) -> float:
    best = float("inf")
    for _ in range(repeats):
        t0 = time.perf_counter()
        fn()
        best = min(best, time.perf_counter() - t0)
    return best


def bench_pulses(impl, n_pulses: int, repeats: int) -> tuple[float, np.ndarray]:
    tables = _backend.pulse_tables(ProtocolParams(), from_db(30.0), DetectorModel())
    out = {}

    def run():
        out["tally"] = impl.simulate_pulses(np.random.PCG64(1), n_pulses, *tables)
    return _best_of(run, repeats), out["tally"]


def bench_skl(impl, evals: int, repeats: int) -> tuple[float, float]:
    out = {}

    def run():
        for _ in range(evals):
            out["v"] = impl.skl_raw(*SKL_ARGS)
    return _best_of(run, repeats), out["v"]


def main() -> None:
    p = argparse.ArgumentParser(description="Compiled versus fallback kernel timings")
    p.add_argument("--pulses", type=int, default=5_000_000)
    p.add_argument("--evals", type=int, default=20_000)
    p.add_argument("--repeats", type=int, default=3)
    args = p.parse_args()

    impls = [("python", _fallback)]
    if _kernels is not None:
        impls.insert(0, ("compiled", _kernels))
    else:
        print("compiled extension not built; timing the fallback only")

    rows = []
    for name, impl in impls:
        t_mc, tally = bench_pulses(impl, args.pulses, args.repeats)
        t_skl, value = bench_skl(impl, args.evals, args.repeats)
        rows.append((name, t_mc, t_skl, tally, value))
        print(f"{name:>9}: pulses {args.pulses / t_mc / 1e6:8.2f} M/s   "
              f"key length {t_skl / args.evals * 1e6:8.3f} us/eval")
    if len(rows) == 2:
        (_, mc_c, skl_c, tally_c, v_c), (_, mc_p, skl_p, tally_p, v_p) = rows
        print(f"  speedup: pulses x{mc_p / mc_c:.1f}, key length x{skl_p / skl_c:.1f}")
        print(f"  identical tallies: {bool(np.array_equal(tally_c, tally_p))}, "
              f"key length difference: {abs(v_c - v_p):.3e}")


if __name__ == "__main__":
    main()
