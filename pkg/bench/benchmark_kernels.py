"""Timing comparison of the compiled and pure-numpy optimizer kernels.

Runs the three hot kernels on a spread of problem shapes plus two
end-to-end optimizer calls, once per available backend, and prints
per-call times with the speedup of the compiled path. The two backends
produce bitwise-identical iterates (tests/test_kernels_equiv.py), so the
timed work is the same by construction.

Usage: python3 bench/benchmark_kernels.py [--repeats 5] [--restarts 8]
"""
import argparse
import math
import time

import numpy as np

from commoninfo import kernels
from commoninfo.csbs import csbs3_joint, dsbs_joint
from commoninfo.dist import JointPMF
from commoninfo.wyner import OptConfig, wyner_ci, _digits_table  # bench pokes internals


def _random_joint(rng, sizes):
    t = rng.dirichlet(np.ones(int(np.prod(sizes))))
    return JointPMF.from_tensor(t.reshape(sizes))


def _problem(pmf, w_size, seed=0):
    """Kernel-ready arrays for one source/auxiliary-size pair."""
    rng = np.random.default_rng(seed)
    sizes = pmf.sizes
    ncells = pmf.spec.ncells
    p_x = np.asarray(pmf.probs)
    digits = _digits_table(sizes)
    sizes_arr = np.asarray(sizes, dtype=np.int64)

    r = rng.dirichlet(np.ones(w_size), size=ncells)
    pw = rng.dirichlet(np.ones(w_size))
    max_s = max(sizes)
    chans = np.zeros((len(sizes), w_size, max_s))
    for i, s in enumerate(sizes):
        chans[i, :, :s] = rng.dirichlet(np.ones(s), size=w_size)
    return {
        "p_x": p_x, "digits": digits, "sizes": sizes_arr,
        "r": r, "pw": pw, "chans": chans,
    }


def _time_best(fn, repeats):
    fn()  # warm up and calibrate
    t0 = time.perf_counter()
    fn()
    once = time.perf_counter() - t0
    inner = max(1, int(0.02 / max(once, 1e-9)))
    best = math.inf
    for _ in range(repeats):
        t0 = time.perf_counter()
        for _ in range(inner):
            fn()
        best = min(best, (time.perf_counter() - t0) / inner)
    return best


def _kernel_calls(prob):
    impl = kernels.active()
    p_x, digits, sizes = prob["p_x"], prob["digits"], prob["sizes"]

    def call_a():
        r = prob["r"]
        impl.route_a_step(p_x, digits, sizes, r, 0.5, 1.0, np.empty_like(r))

    def call_tables():
        impl.aux_tables(prob["pw"], prob["chans"], sizes, p_x)

    def call_b():
        pw = prob["pw"].copy()
        chans = prob["chans"].copy()
        impl.route_b_stage(p_x, sizes, pw, chans, 16.0, 0.0,
                           0.25, 1.25, 0.5, 40,
                           300, 1e-12, 50, 1e-8,
                           np.empty_like(pw), np.empty_like(chans), -math.inf)

    return [("route_a_step", call_a), ("aux_tables", call_tables),
            ("route_b_stage", call_b)]


def main():
    ap = argparse.ArgumentParser(description=__doc__.splitlines()[0])
    ap.add_argument("--repeats", type=int, default=5)
    ap.add_argument("--restarts", type=int, default=8,
                    help="restarts for the end-to-end runs")
    args = ap.parse_args()

    backends = kernels.available_backends()
    default = kernels.get_backend()
    print(f"backends: {', '.join(backends)} (default {default})")
    if "cython" not in backends:
        print("compiled extension not importable; timing the fallback only")

    rng = np.random.default_rng(7)
    problems = [
        ("dsbs(0.25) |W|=4", _problem(dsbs_joint(0.25), 4)),
        ("csbs3(0.25) |W|=8", _problem(csbs3_joint(0.25), 8)),
        ("random 3x3 |W|=9", _problem(_random_joint(rng, (3, 3)), 9)),
        ("random 2^4 |W|=16", _problem(_random_joint(rng, (2, 2, 2, 2)), 16)),
    ]

    rows = []
    for pname, prob in problems:
        for kname, _ in _kernel_calls(prob):
            times = {}
            for backend in backends:
                kernels.set_backend(backend)
                fn = dict(_kernel_calls(prob))[kname]
                times[backend] = _time_best(fn, args.repeats)
            rows.append((pname, kname, times))

    print(f"\nmicrokernels, best of {args.repeats}, us/call")
    head = f"{'problem':<20} {'kernel':<14}" + "".join(
        f"{b:>12}" for b in backends)
    if len(backends) == 2:
        head += f"{'speedup':>10}"
    print(head)
    for pname, kname, times in rows:
        line = f"{pname:<20} {kname:<14}" + "".join(
            f"{times[b] * 1e6:>12.1f}" for b in backends)
        if len(backends) == 2:
            line += f"{times['python'] / times['cython']:>9.1f}x"
        print(line)

    cfg_kw = {"restarts": args.restarts, "seed": 0}
    e2e = [
        ("wyner_ci dsbs(0.25)", dsbs_joint(0.25)),
        ("wyner_ci csbs3(0.25)", csbs3_joint(0.25)),
    ]
    print("\nend-to-end, best of 3, seconds")
    for name, pmf in e2e:
        times = {}
        for backend in backends:
            kernels.set_backend(backend)
            times[backend] = _time_best(
                lambda: wyner_ci(pmf, OptConfig(**cfg_kw)), 3)
        line = f"{name:<34}" + "".join(
            f"{times[b]:>12.3f}" for b in backends)
        if len(backends) == 2:
            line += f"{times['python'] / times['cython']:>9.1f}x"
        print(line)

    kernels.set_backend(default)


if __name__ == "__main__":
    main()
