"""Benchmark: compiled kernels vs the pure-Python fallback.

Usage:  python benchmarks/bench_kernels.py [--pairs N] [--steps N]

Times the three hot operations and a small training epoch loop on both
backends and prints the speedup. The two backends produce bit-identical
results (asserted here as a sanity check).
"""

import argparse
import time

import numpy as np

from amlworkbench.kernels import available_backends, get_backend


def bench(fn, repeat=3):
    best = float("inf")
    for _ in range(repeat):
        t0 = time.perf_counter()
        fn()
        best = min(best, time.perf_counter() - t0)
    return best


def main():
    parser = argparse.ArgumentParser(description=__doc__)
    parser.add_argument("--pairs", type=int, default=200_000)
    parser.add_argument("--steps", type=int, default=20_000)
    args = parser.parse_args()

    backends = available_backends()
    if "ext" not in backends:
        print("compiled extension not built; only the fallback is available")
    mods = {name: get_backend(name) for name in backends}

    rng = np.random.Generator(np.random.PCG64(1))
    pts = rng.normal(0, 0.25, (1000, 3))
    pts /= np.maximum(1.0, np.linalg.norm(pts, axis=1, keepdims=True) / 0.9)
    pairs = rng.integers(0, len(pts), size=(args.pairs, 2))

    emb0 = np.ascontiguousarray(rng.normal(0, 0.001, (2000, 3)))
    anchors = rng.integers(0, 2000, size=args.steps)
    positives = (anchors + 1 + rng.integers(0, 1998, size=args.steps)) % 2000
    negs = rng.integers(0, 2000, size=(args.steps, 10)).astype(np.int64)

    rows = []
    results = {}
    for name, mod in mods.items():
        def run_dist(mod=mod):
            for a, b in pairs:
                mod.pair_distance(pts[a], pts[b])

        def run_grad(mod=mod):
            for a, b in pairs[: args.pairs // 4]:
                if a != b:
                    mod.pair_distance_grad(pts[a], pts[b])

        def run_steps(mod=mod):
            emb = emb0.copy()
            total = 0.0
            for i in range(args.steps):
                total += mod.edge_step(
                    emb, int(anchors[i]), int(positives[i]), negs[i],
                    1.5, 0.1, 1e-5,
                )
            results[mod.BACKEND] = (total, emb)

        rows.append(
            (
                name,
                bench(run_dist),
                bench(run_grad),
                bench(run_steps),
            )
        )

    print(f"{'backend':<8} {'pair_distance':>14} {'distance_grad':>14} "
          f"{'edge_step':>14}")
    for name, d, g, s in rows:
        print(f"{name:<8} {d:>12.3f} s {g:>12.3f} s {s:>12.3f} s")
    if len(rows) == 2:
        (n0, d0, g0, s0), (n1, d1, g1, s1) = rows
        slow, fast = ((n1, d1, g1, s1), (n0, d0, g0, s0)) if d0 < d1 else (
            (n0, d0, g0, s0), (n1, d1, g1, s1))
        print(
            f"\nspeedup ({fast[0]} over {slow[0]}): "
            f"distance x{slow[1] / fast[1]:.1f}, grad x{slow[2] / fast[2]:.1f}, "
            f"edge_step x{slow[3] / fast[3]:.1f}"
        )
    if len(results) == 2:
        (t0, e0), (t1, e1) = results.values()
        assert t0 == t1 and np.array_equal(e0, e1), "backends diverged!"
        print("bitwise agreement across backends: confirmed")


if __name__ == "__main__":
    main()
