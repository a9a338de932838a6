"""Time the compiled and numpy backends of the affine recursion.

Usage::

    python3 benchmarks/bench_kernels.py [--repeat 3]

Two workloads are timed: a Monte Carlo ensemble of the 4-dimensional model
(many trajectories, moderate length) and the 2-dimensional kernel filter
used for spectrum estimation (few very long paths).
"""

import argparse
import timeit

import numpy as np

from bosefeedback import kernels
from bosefeedback.colored_noise import kernel_from_dimensionless, kernel_recursion
from bosefeedback.linear_model import build_system
from bosefeedback.params import from_dimensionless


def workloads():
    rng = np.random.default_rng(0)
    sys = build_system(from_dimensionless(0.5, 2 ** 0.5, n_mean=1000, n_cond=1000))
    dt = 0.005
    F = np.eye(4) + sys.drift * dt
    ens = (F, sys.noise_gain, np.zeros((1000, 4)), rng.normal(size=(1000, 2000, 2)) * dt ** 0.5)
    e, g = kernel_recursion(kernel_from_dimensionless(1.25, 0.7), 0.0025)
    filt = (e, g, np.zeros((4, 2)), rng.normal(size=(4, 400_000, 2)) * 0.05)
    return {"ensemble 1000 x 2000 x 4": ens, "kernel filter 4 x 400000 x 2": filt}


def main():
    parser = argparse.ArgumentParser(description=__doc__.split("\n")[0])
    parser.add_argument("--repeat", type=int, default=3)
    args = parser.parse_args()
    backends = ["python"] + (["cython"] if kernels.BACKEND == "cython" else [])
    print(f"import-time backend: {kernels.BACKEND}")
    for name, work in workloads().items():
        times = {}
        for b in backends:
            times[b] = min(timeit.repeat(lambda: kernels.linear_recursion(*work, backend=b),
                                         number=1, repeat=args.repeat))
        line = ", ".join(f"{b} {t * 1e3:8.1f} ms" for b, t in times.items())
        if len(times) == 2:
            line += f", speed-up {times['python'] / times['cython']:.1f}x"
            np.testing.assert_allclose(kernels.linear_recursion(*work, backend="cython"),
                                       kernels.linear_recursion(*work, backend="python"),
                                       rtol=1e-10, atol=1e-12)
        print(f"{name:30s} {line}")


if __name__ == "__main__":
    main()
