"""Timing comparison of the compiled and pure-numpy kernel backends.

Covers the two hot paths: brute-force configuration enumeration for the
partition function, and the cyclic Jacobi eigensolver for Hermitian
matrices.  Run as a script:

    python benchmarks/bench_backends.py
"""

import os
import time

import numpy as np


def set_backend(name):
    os.environ["BETHE_COVER_BACKEND"] = name


def timed(fn, *args, repeat=3, **kwargs):
    best = float("inf")
    value = None
    for _ in range(repeat):
        t0 = time.perf_counter()
        value = fn(*args, **kwargs)
        best = min(best, time.perf_counter() - t0)
    return value, best


def bench_enumeration():
    from bethecover import nfg
    from bethecover.cover import CoverSpec, build_cover
    from bethecover.generators import GeneratorSpec, gen

    print("== configuration enumeration ==")
    base = gen(GeneratorSpec(topology="fig3", kind="double-edge",
                             ensemble="psd-random", seed=1))
    rng = np.random.default_rng(0)
    spec = CoverSpec(2, {e.eid: tuple(rng.permutation(2))
                         for e in base.edges})
    small = build_cover(base, spec)          # 4**10 ~ 1.05e6 configurations
    big = gen(GeneratorSpec(topology="cycle", n=11, kind="standard",
                            ensemble="positive-s-nfg", alphabet=4,
                            seed=2))         # 4**11 ~ 4.2e6 configurations

    for label, graph in (("double-edge 2-cover, 1.0e6 configs", small),
                         ("standard 11-cycle,   4.2e6 configs", big)):
        results = {}
        for backend in ("numba", "numpy"):
            set_backend(backend)
            z, dt = timed(nfg.partition_exact, graph)
            results[backend] = (z, dt)
        z_nb, t_nb = results["numba"]
        z_np, t_np = results["numpy"]
        gap = abs(z_nb - z_np) / max(abs(z_nb), 1e-30)
        print(f"{label}:  numba {t_nb * 1e3:8.1f} ms   "
              f"numpy {t_np * 1e3:8.1f} ms   "
              f"speedup {t_np / t_nb:5.1f}x   agreement {gap:.1e}")


def bench_eigensolver():
    from bethecover._kernels import jacobi_eigh

    print("== Jacobi eigensolver (100 Hermitian matrices per size) ==")
    rng = np.random.default_rng(3)
    for side in (4, 8, 16):
        mats = []
        for _ in range(100):
            a = (rng.standard_normal((side, side))
                 + 1j * rng.standard_normal((side, side)))
            mats.append(a @ a.conj().T)

        def run_all():
            worst = 0.0
            for h in mats:
                vals, vecs = jacobi_eigh(h)
                worst = max(worst, float(np.max(np.abs(
                    (vecs * vals) @ vecs.conj().T - h))))
            return worst

        results = {}
        for backend in ("numba", "numpy"):
            set_backend(backend)
            worst, dt = timed(run_all)
            results[backend] = (worst, dt)
        w_nb, t_nb = results["numba"]
        w_np, t_np = results["numpy"]
        print(f"side {side:2d}:  numba {t_nb * 1e3:8.1f} ms   "
              f"numpy {t_np * 1e3:8.1f} ms   "
              f"speedup {t_np / t_nb:5.1f}x   "
              f"worst reconstruction {max(w_nb, w_np):.1e}")


if __name__ == "__main__":
    set_backend("numba")    # trigger compilation before timing
    bench_enumeration()
    bench_eigensolver()
