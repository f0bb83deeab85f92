"""Timing comparison between the compiled accelerator and the numpy fallback.

Run:  python3 benchmarks/bench_backends.py
"""

import time

import numpy as np

from toalab import _accel
from toalab._accel import fallback


def timed(fn, *args, repeats=3):
    best = float("inf")
    for _ in range(repeats):
        start = time.perf_counter()
        result = fn(*args)
        best = min(best, time.perf_counter() - start)
    return best, result


def bench_bilinear(rng, n, n_t):
    from toalab._accel import _kernels
    a = rng.normal(size=(n, n)) + 1j * rng.normal(size=(n, n))
    m = a + a.conj().T
    eps = rng.uniform(0.0, 10.0, n)
    times = np.linspace(0.0, 20.0, n_t)
    return (f"bilinear_phase_series  n={n:5d} n_t={n_t:4d}",
            (m, eps, times), _kernels.bilinear_phase_series, fallback.bilinear_phase_series)


def bench_pair_sum(rng, n_cells, n_l):
    table = np.exp(-np.abs(np.linspace(-16.0, 16.0, 8193)))
    nodes_a = rng.uniform(-100.0, 900.0, n_cells)
    nodes_b = nodes_a + rng.normal(scale=2.0, size=n_cells)
    weights = rng.normal(size=n_cells) * np.exp(1j * rng.uniform(0, 6.28, n_cells))
    l_values = np.linspace(300.0, 700.0, n_l)
    args = (l_values, nodes_a, nodes_b, weights, 0.99, 0.995, -16.0, 32.0 / 8192, table)
    return (f"envelope_pair_sum      cells={n_cells:7d} n_L={n_l:4d}",
            args, _accel.envelope_pair_sum, fallback.envelope_pair_sum)


def main():
    if _accel.BACKEND != "compiled":
        print("compiled backend not available; nothing to compare")
        return
    rng = np.random.default_rng(0)
    cases = [bench_bilinear(rng, 256, 512), bench_bilinear(rng, 1024, 512),
             bench_bilinear(rng, 2048, 256),
             bench_pair_sum(rng, 20_000, 512), bench_pair_sum(rng, 200_000, 512)]
    print(f"{'case':46s} {'compiled':>10s} {'fallback':>10s} {'ratio':>7s}")
    for label, args, compiled, fb in cases:
        t_c, r_c = timed(compiled, *args)
        t_f, r_f = timed(fb, *args)
        vc = r_c[0] if isinstance(r_c, tuple) else r_c
        vf = r_f[0] if isinstance(r_f, tuple) else r_f
        assert np.allclose(vc, vf, rtol=1e-9, atol=1e-12)
        print(f"{label:46s} {t_c * 1e3:8.1f}ms {t_f * 1e3:8.1f}ms {t_f / t_c:6.1f}x")
    print("\nratio > 1: compiled wins.  The bilinear form is a batched matmul, so "
          "the BLAS-backed numpy implementation wins there and is what both "
          "backends use in production; the fused interpolation loops are where "
          "the extension pays off.")


if __name__ == "__main__":
    main()
