"""Time the JIT kernels against their plain-numpy twins.

Run from the repository root:

    python3 benchmarks/bench_kernels.py

With TWINMEC_NO_NUMBA=1 both columns time the same interpreted code, so
the script only reports the fallback path in that case.
"""

import time

import numpy as np

from twinmec import kernels


def timeit(fn, args, repeats=5, min_loops=3):
    """Best wall time over a few repeats, looped enough to be measurable."""
    loops = min_loops
    while True:
        t0 = time.perf_counter()
        for _ in range(loops):
            fn(*args)
        span = time.perf_counter() - t0
        if span > 0.02:
            break
        loops *= 4
    best = span / loops
    for _ in range(repeats - 1):
        t0 = time.perf_counter()
        for _ in range(loops):
            fn(*args)
        best = min(best, (time.perf_counter() - t0) / loops)
    return best


def build_cases(rng):
    n_actions, n_states = 6, 11
    trans = rng.random((n_actions, n_states, n_states))
    trans /= trans.sum(axis=2, keepdims=True)
    rewards = rng.normal(size=(n_states, n_actions))
    values = rng.normal(size=n_states)

    n_steps, n_filter = 64, 11
    ks = rng.random((n_steps, n_filter, n_filter))
    ks /= ks.sum(axis=2, keepdims=True)
    logliks = rng.normal(size=(n_steps, n_filter)) * 2.0
    init = np.full(n_filter, 1.0 / n_filter)

    batch, n_in, h1, h2, n_out = 64, 28, 64, 64, 121
    x = rng.normal(size=(batch, n_in))
    w1, b1 = rng.normal(size=(n_in, h1)), rng.normal(size=h1)
    w2, b2 = rng.normal(size=(h1, h2)), rng.normal(size=h2)
    w3, b3 = rng.normal(size=(h2, n_out)), rng.normal(size=n_out)
    a1 = np.maximum(x @ w1 + b1, 0.0)
    a2 = np.maximum(a1 @ w2 + b2, 0.0)
    dout = rng.normal(size=(batch, n_out))

    n_ant, n_sub = 8, 12
    h_re = rng.normal(size=(n_ant, n_sub))
    h_im = rng.normal(size=(n_ant, n_sub))
    powers = np.full(n_sub, 0.5)
    order = rng.permutation(n_sub)

    return [
        ("value_iteration", (trans, rewards, 0.6, 1e-10, 200)),
        ("greedy_actions", (trans, rewards, 0.6, values)),
        ("forward_filter", (ks, logliks, init)),
        ("mlp_forward", (x, w1, b1, w2, b2, w3, b3)),
        ("mlp_backward", (x, a1, a2, dout, w2, w3)),
        ("sic_sinr", (h_re, h_im, powers, order, 1e-13)),
    ]


def main():
    kernels.warmup()
    rng = np.random.default_rng(0)
    cases = build_cases(rng)

    if not kernels.USING_NUMBA:
        print("numba disabled; timing the numpy fallback only\n")
        print(f"{'kernel':<18} {'numpy':>12}")
        for name, args in cases:
            t = timeit(getattr(kernels, name + "_py"), args)
            print(f"{name:<18} {t * 1e6:>10.1f}us")
        return

    print(f"numba {kernels.numba_version()}, numpy {np.__version__}\n")
    print(f"{'kernel':<18} {'numba':>12} {'numpy':>12} {'speedup':>9}")
    for name, args in cases:
        fast = timeit(getattr(kernels, name), args)
        slow = timeit(getattr(kernels, name + "_py"), args)
        print(
            f"{name:<18} {fast * 1e6:>10.1f}us {slow * 1e6:>10.1f}us "
            f"{slow / fast:>8.1f}x"
        )


if __name__ == "__main__":
    main()
