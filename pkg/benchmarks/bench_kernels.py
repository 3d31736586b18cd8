"""Compare the compiled and numpy kernel backends on design-circuit construction.

    python benchmarks/bench_kernels.py [--repeat 5] [--n 8:12]
"""
from __future__ import annotations

import argparse
import timeit

import numpy as np

from markovianize import _backend, designs
from markovianize.cli import parse_range
from markovianize.numerics import RngStream


def bench(n: int, repeat: int) -> dict[str, tuple[float, float, float]]:
    t = 10
    ps = designs.phase_sets(t)
    L = ps.modulus
    pairs = designs.qubit_pairs(n)
    idx = designs.sample_rdc_indices(n, t, RngStream(0))
    m = np.random.default_rng(0).standard_normal((1 << n, 2 << n))
    spec = designs.CircuitSpec(n, t, 1e-3, 2)
    out = {}
    for name in ("python", "cython"):
        k = _backend.get(name)
        phase = min(timeit.repeat(
            lambda: k.accumulate_pair_phases(n, pairs, idx, L // ps.n_phi, L // ps.n_theta, L),
            number=10, repeat=repeat)) / 10
        had = min(timeit.repeat(lambda: k.hadamard_rows(m.copy()), number=1, repeat=repeat))
        _backend.kernels = k
        circ = min(timeit.repeat(lambda: designs.build_w_circuit(spec, RngStream(1)),
                                 number=1, repeat=repeat))
        out[name] = (phase, had, circ)
    return out


def main() -> None:
    ap = argparse.ArgumentParser(description=__doc__.splitlines()[0])
    ap.add_argument("--n", default="8:12")
    ap.add_argument("--repeat", type=int, default=5)
    args = ap.parse_args()
    default = _backend.kernels
    print(f"{'n':>3} {'kernel':>10} {'python ms':>11} {'cython ms':>11} {'speedup':>8}")
    try:
        for n in parse_range(args.n):
            res = bench(n, args.repeat)
            for j, label in enumerate(("phases", "hadamard", "W_2 build")):
                py, cy = res["python"][j] * 1e3, res["cython"][j] * 1e3
                print(f"{n:>3} {label:>10} {py:>11.3f} {cy:>11.3f} {py / cy:>7.2f}x")
    finally:
        _backend.kernels = default


if __name__ == "__main__":
    main()
