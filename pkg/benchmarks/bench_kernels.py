"""Compare the compiled and NumPy kernel backends.

    python benchmarks/bench_kernels.py [--threads 4] [--repeat 3]

Times single-particle stepping on 2D lattices and one many-body sweep,
checks that both backends agree, and prints one line per case.
"""
import argparse
import time

import numpy as np

from qlga import _kernels
from qlga.algebra import ModelParams, build_collision_matrix
from qlga.engine import evolve, random_field
from qlga.fock import FockSpace
from qlga.manybody import ManyBodyState, SiteCollisionT, collide


def best_of(fn, repeat):
    times = []
    for _ in range(repeat):
        t0 = time.perf_counter()
        out = fn()
        times.append(time.perf_counter() - t0)
    return min(times), out


def bench_engine(N, steps, repeat):
    params = ModelParams(2, -1j)
    S = build_collision_matrix(params)
    f0 = random_field(params, (N, N), np.random.default_rng(0))
    res = {}
    for name in _kernels.available_backends():
        t, f = best_of(lambda: evolve(f0, S, steps, backend=name), repeat)
        res[name] = (t, f.amplitudes)
    return res


def bench_manybody(L, n, repeat):
    space = FockSpace.cartesian((L,))
    S = build_collision_matrix(ModelParams(1, -1j))
    T = SiteCollisionT.from_collision(S)
    rng = np.random.default_rng(1)
    dim = ManyBodyState(space, np.zeros(__import__("math").comb(space.n_slots, n)), n).sector.dim
    st = ManyBodyState(space, rng.standard_normal(dim) + 1j * rng.standard_normal(dim), n)
    st.sector.site_tables
    res = {}
    for name in _kernels.available_backends():
        t, out = best_of(lambda: collide(st, T, backend=name), repeat)
        res[name] = (t, out.amplitudes)
    return res


def report(label, res, work):
    ref = res["python"][1]
    for name, (t, out) in res.items():
        err = float(np.abs(out - ref).max())
        speed = res["python"][0] / t
        print(f"{label:<28} {name:<9} {t * 1e3:10.2f} ms  {work / t / 1e6:9.2f} Mupd/s "
              f"x{speed:5.1f}  max|diff|={err:.1e}")


def main():
    ap = argparse.ArgumentParser(description=__doc__.splitlines()[0])
    ap.add_argument("--threads", type=int, default=1)
    ap.add_argument("--repeat", type=int, default=3)
    args = ap.parse_args()
    _kernels.set_num_threads(args.threads)
    print(f"backends: {_kernels.available_backends()}  threads: {args.threads}")
    for N, steps in ((64, 200), (256, 40), (512, 10)):
        report(f"engine 2D N={N} steps={steps}", bench_engine(N, steps, args.repeat),
               N * N * 4 * steps)
    for L, n in ((10, 3), (12, 4)):
        res = bench_manybody(L, n, args.repeat)
        report(f"many-body L={L} n={n}", res, len(res["python"][1]) * L)


if __name__ == "__main__":
    main()
