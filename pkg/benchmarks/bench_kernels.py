"""Compare the compiled and numpy trajectory kernels.

    python benchmarks/bench_kernels.py [--shots N] [--repeat R]

Each kernel is timed on identical inputs under both backends; the outputs are
checked for agreement before timings are reported.
"""

import argparse
import timeit

import numpy as np

from flyingcat import kernels
from flyingcat.montecarlo import CheckSpec, sample_batch
from flyingcat.paritycheck import ParityCheckConfig


def workloads(shots):
    xi = np.zeros(8, dtype=complex)
    xi[[0, 3, 5, 6]] = 0.5
    states = np.repeat(xi[None, :], shots, axis=0)
    streams = np.arange(shots, dtype=np.uint64)
    spec = CheckSpec(ParityCheckConfig(1.0, (0.02, 0.02, 0.02)), (0, 1, 2))
    amps = np.full(9, 0.5)
    return {
        "sample_checks": lambda: sample_batch(states, spec, 7, streams),
        "repeated_decisions (soft)": lambda: kernels.repeated_decisions(7, streams, amps, True),
        "repeated_decisions (hard)": lambda: kernels.repeated_decisions(7, streams, amps, False),
    }


def _same(a, b):
    # integer draws match exactly; floats to libm rounding
    if isinstance(a, tuple):
        return all(_same(x, y) for x, y in zip(a, b))
    return np.allclose(np.asarray(a), np.asarray(b), rtol=1e-12, atol=1e-12)


def main(argv=None):
    ap = argparse.ArgumentParser(description=__doc__.splitlines()[0])
    ap.add_argument("--shots", type=int, default=100_000)
    ap.add_argument("--repeat", type=int, default=5)
    args = ap.parse_args(argv)

    backends = kernels.available_backends()
    if "cython" not in backends:
        print("compiled backend not built; timing the numpy backend only")
    prev = kernels.get_backend()
    results = {}
    try:
        for name in backends:
            kernels.set_backend(name)
            for label, fn in workloads(args.shots).items():
                out = fn()
                best = min(timeit.repeat(fn, number=1, repeat=args.repeat))
                results[(label, name)] = (best, out)
    finally:
        kernels.set_backend(prev)

    print(f"{'kernel':<28}" + "".join(f"{b:>12}" for b in backends) + f"{'speedup':>10}")
    for label in workloads(1):
        row = f"{label:<28}" + "".join(f"{results[(label, b)][0] * 1e3:>10.1f}ms" for b in backends)
        if len(backends) == 2:
            (tc, oc), (tp, op) = results[(label, "cython")], results[(label, "python")]
            assert _same(oc, op), f"{label}: backends disagree"
            row += f"{tp / tc:>9.1f}x"
        print(row)
    print(f"shots per call: {args.shots}")


if __name__ == "__main__":
    main()
