"""Compare the compiled geometry kernels with the NumPy fallback.

Usage: python benchmarks/bench_kernels.py [--points N] [--repeat R]

Inputs mirror the volume experiment: gradients of |xi|^2/2 over an annulus
and the one-dimensional resonance lattices at hbar = 2^-10.
"""

import argparse
import importlib
import timeit

import numpy as np

from skam import _kernels_py
from skam.context import SemiclassicalContext
from skam.hamiltonian import free
from skam.resonance import Annulus, resonance_lattices, zone_threshold


def inputs(points, seed=0):
    ctx = SemiclassicalContext(d=2, hbar=2.0 ** -10)
    H = free(2)
    rng = np.random.default_rng(seed)
    xi = Annulus([0.0, 0.0], 8.0, 1.0).sample(rng, points)
    lats = resonance_lattices(1, ctx)
    frames = np.stack([R.frame for R in lats])
    thr = np.array([zone_threshold(1, R.covolume, ctx) for R in lats])
    starts = rng.uniform(-8, 8, size=(points // 16, len(lats)))
    ends = starts + rng.uniform(0, 0.5, size=starts.shape)
    return H.gradient(xi), frames, thr, starts, ends


def bench(impl, args, repeat):
    g, frames, thr, s, e = args
    t_zone = min(timeit.repeat(lambda: impl.zone_any(g, frames, thr), number=1, repeat=repeat))
    t_union = min(timeit.repeat(lambda: impl.interval_union_length(s, e), number=1, repeat=repeat))
    return t_zone, t_union


def main():
    ap = argparse.ArgumentParser(description=__doc__.splitlines()[0])
    ap.add_argument("--points", type=int, default=1 << 20)
    ap.add_argument("--repeat", type=int, default=3)
    args = ap.parse_args()
    data = inputs(args.points)
    impls = {"python": _kernels_py}
    try:
        impls["compiled"] = importlib.import_module("skam._kernels")
    except ImportError:
        print("compiled extension not built; timing the fallback only")
    results = {name: bench(impl, data, args.repeat) for name, impl in impls.items()}
    if "compiled" in impls:
        a = impls["compiled"].zone_any(*data[:3])
        b = _kernels_py.zone_any(*data[:3])
        assert np.array_equal(a, b), "backends disagree on zone membership"
    print(f"{'backend':<10} {'zone_any [s]':>14} {'union_length [s]':>18}")
    for name, (tz, tu) in results.items():
        print(f"{name:<10} {tz:>14.4f} {tu:>18.4f}")
    if "compiled" in results:
        pz, pu = results["python"]
        cz, cu = results["compiled"]
        print(f"speedup    {pz / cz:>13.1f}x {pu / cu:>17.1f}x")
    print(f"points={args.points}, lattices={data[1].shape[0]}")


if __name__ == "__main__":
    main()
