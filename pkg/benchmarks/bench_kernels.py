"""Benchmark the numba kernels against the pure-numpy fallback.

Times the two hot pieces of the interior-point iteration (batched
congruence transforms and Hermitian packing) across the block sizes the
measure SDPs actually produce, then an end-to-end solve through each
kernel path in a subprocess (the path is fixed at import time by
COHLAB_KERNELS).

Run:  python3 benchmarks/bench_kernels.py [--repeats 200]
"""

from __future__ import annotations

import argparse
import subprocess
import sys
import time

import numpy as np

from cohlab import kernels


def rand_stack(rng, m, n):
    g = rng.standard_normal((m, n, n)) + 1j * rng.standard_normal((m, n, n))
    return 0.5 * (g + np.conj(np.transpose(g, (0, 2, 1))))


def time_fn(fn, *args, repeats=200):
    fn(*args)  # warm (jit compile / cache load)
    t0 = time.perf_counter()
    for _ in range(repeats):
        fn(*args)
    return (time.perf_counter() - t0) / repeats


def bench_kernels(repeats: int) -> None:
    rng = np.random.default_rng(0)
    print(f"{'case':<26}{'numpy':>12}{'numba':>12}{'speedup':>10}")
    for m, n in [(16, 4), (34, 4), (130, 8), (322, 8), (130, 16)]:
        stack = rand_stack(rng, m, n)
        g = rng.standard_normal((n, n)) + 1j * rng.standard_normal((n, n))
        w = 0.5 * (g + g.conj().T)
        t_np = time_fn(kernels.congruence_batch_numpy, w, stack,
                       repeats=repeats)
        if kernels.HAVE_NUMBA:
            t_nb = time_fn(kernels.congruence_batch_numba, w, stack,
                           repeats=repeats)
            ratio = f"{t_np / t_nb:9.2f}x"
        else:
            t_nb, ratio = float("nan"), "      n/a"
        print(f"{'congruence m=%-4d n=%-3d' % (m, n):<26}"
              f"{t_np * 1e6:10.1f}us{t_nb * 1e6:10.1f}us{ratio}")
    for m, n in [(34, 4), (322, 8), (130, 16)]:
        stack = rand_stack(rng, m, n)
        t_np = time_fn(kernels.pack_hvec_batch_numpy, stack, repeats=repeats)
        if kernels.HAVE_NUMBA:
            t_nb = time_fn(kernels.pack_hvec_batch_numba, stack,
                           repeats=repeats)
            ratio = f"{t_np / t_nb:9.2f}x"
        else:
            t_nb, ratio = float("nan"), "      n/a"
        print(f"{'pack m=%-4d n=%-3d' % (m, n):<26}"
              f"{t_np * 1e6:10.1f}us{t_nb * 1e6:10.1f}us{ratio}")


_SOLVE_SNIPPET = """
import time
import numpy as np
from cohlab import measures as ms
from cohlab.sampler import SeededRng, ginibre_state
rho = ginibre_state([2, 2, 2], 8, SeededRng(5))
ms.max_coherence(rho, [0, 1], ms.SmoothParams(0.05))  # warm
t0 = time.perf_counter()
for _ in range(5):
    ms.max_coherence(rho, [0, 1], ms.SmoothParams(0.05))
print((time.perf_counter() - t0) / 5)
"""


def bench_solve() -> None:
    print()
    print("end-to-end smooth coherence solve on a three-qubit state:")
    for mode in ("numpy", "numba"):
        out = subprocess.run([sys.executable, "-c", _SOLVE_SNIPPET],
                             env={"PATH": "/usr/bin:/bin",
                                  "COHLAB_KERNELS": mode},
                             capture_output=True, text=True)
        if out.returncode != 0:
            print(f"  {mode:<7} failed: {out.stderr.strip().splitlines()[-1]}")
            continue
        print(f"  {mode:<7} {float(out.stdout.strip()) * 1e3:8.1f} ms/solve")


if __name__ == "__main__":
    parser = argparse.ArgumentParser()
    parser.add_argument("--repeats", type=int, default=200)
    parser.add_argument("--skip-solve", action="store_true")
    args = parser.parse_args()
    print(f"active kernel path: {kernels.ACTIVE}")
    bench_kernels(args.repeats)
    if not args.skip_solve:
        bench_solve()
