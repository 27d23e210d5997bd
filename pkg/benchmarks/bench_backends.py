"""Benchmark: compiled stepping kernel vs the NumPy fallback.

Times the raw kernel at several grid sizes and a full closed-loop run,
and verifies on the way that both backends produce identical bits.

    python benchmarks/bench_backends.py
"""

import time

import numpy as np

from tipwave import EsoLoop, Grid, SystemParams
from tipwave._backend import available_backends, get_kernel
from tipwave._kernels_py import LEFT_ROBIN, RIGHT_TIP_MASS


def time_kernel(kernel, n_nodes, repeats):
    rng = np.random.default_rng(7)
    prev = rng.standard_normal(n_nodes)
    curr = rng.standard_normal(n_nodes)
    out = np.empty_like(curr)
    grid = Grid(n_cells=n_nodes - 1, r=0.5)
    args = (grid.r, grid.dx, grid.dt, LEFT_ROBIN, 0.3, 1.5, 1.5,
            RIGHT_TIP_MASS, 0.1, 5.0)
    kernel(prev, curr, out, *args)  # warm up
    best = float("inf")
    for _ in range(5):
        t0 = time.perf_counter()
        for _ in range(repeats):
            kernel(prev, curr, out, *args)
        best = min(best, (time.perf_counter() - t0) / repeats)
    return best, out.copy()


def time_loop(backend, n_cells, horizon):
    grid = Grid(n_cells=n_cells, r=0.5)
    params = SystemParams()
    x = grid.nodes()
    loop = EsoLoop(grid, params, x ** 3 - 3 * x ** 2, 0 * x, -2 * x ** 3,
                   0 * x, 0 * x, 0 * x, initial_disturbance=1.0,
                   kernel=get_kernel(backend))
    n_steps = int(round(horizon / grid.dt))
    t0 = time.perf_counter()
    for k in range(n_steps):
        t = k * grid.dt
        loop.step(f_value=float(np.sin(loop.tip_displacement())),
                  d_value=float(np.cos(2 * t)))
    elapsed = time.perf_counter() - t0
    return elapsed, n_steps, loop.u.curr.copy()


def main():
    backends = available_backends()
    print(f"available backends: {', '.join(backends)}")
    if "cython" not in backends:
        print("compiled kernel not built; benchmarking the NumPy kernel only")

    print("\n-- raw kernel (one field step, Robin + tip mass) --")
    print(f"{'nodes':>8} " + " ".join(f"{b:>14}" for b in backends) + "   speedup")
    for n_nodes in (101, 1001, 10001, 100001):
        repeats = max(20, 2_000_000 // n_nodes)
        times, outputs = {}, {}
        for b in backends:
            times[b], outputs[b] = time_kernel(get_kernel(b), n_nodes, repeats)
        if len(backends) == 2:
            assert np.array_equal(outputs["python"], outputs["cython"]), \
                "backends disagree"
            speedup = f"{times['python'] / times['cython']:8.1f}x"
        else:
            speedup = "     n/a"
        cells = " ".join(f"{times[b] * 1e6:12.2f}us" for b in backends)
        print(f"{n_nodes:>8} {cells} {speedup}")

    print("\n-- full estimator loop (3 fields, traces, control) --")
    print(f"{'cells':>8} {'horizon':>8} " + " ".join(f"{b:>14}" for b in backends)
          + "   speedup")
    for n_cells, horizon in ((100, 20.0), (1000, 2.0)):
        times, finals = {}, {}
        for b in backends:
            elapsed, n_steps, final = time_loop(b, n_cells, horizon)
            times[b], finals[b] = elapsed, final
        if len(backends) == 2:
            assert np.array_equal(finals["python"], finals["cython"]), \
                "backends disagree"
            speedup = f"{times['python'] / times['cython']:8.2f}x"
        else:
            speedup = "     n/a"
        cells = " ".join(f"{times[b]:13.3f}s" for b in backends)
        print(f"{n_cells:>8} {horizon:>8.1f} {cells} {speedup}")
    print("\nbit-identity between backends verified on every comparison")


if __name__ == "__main__":
    main()
