"""Time the compiled kernels against the pure-Python reference.

    python3 bench/bench_kernels.py [--repeat N]

Both backends get identical inputs; the table reports the median time per
call and the speed-up of the compiled backend.
"""
import argparse
import statistics
import time

import numpy as np

from wirebend import _kernels_py as py
from wirebend import motion

try:
    from wirebend import _ckernels as cy
except ImportError:  # extension not built
    cy = None


def _bodies(rng, m):
    kinds = rng.integers(0, 3, m)
    params = np.zeros((m, 15))
    for j, k in enumerate(kinds):
        if k == 0:
            n = rng.normal(size=3)
            n /= np.linalg.norm(n)
            params[j, :6] = (*(rng.normal(size=3) - 3.0 * n), *n)
        elif k == 1:
            params[j, :7] = (*rng.normal(size=3), *rng.normal(size=3), rng.uniform(0.05, 0.3))
        else:
            R, _ = np.linalg.qr(rng.normal(size=(3, 3)))
            params[j, :3] = rng.normal(size=3)
            params[j, 3:12] = R.ravel()
            params[j, 12:] = rng.uniform(0.05, 0.5, 3)
    return kinds.astype(np.int64), params


def cases(rng):
    p0, p1, q0, q1 = rng.normal(size=(4, 3))
    a, b = rng.normal(size=(8, 3)), rng.normal(size=(8, 3))
    radii = rng.uniform(0.01, 0.1, 8)
    kinds, params = _bodies(rng, 12)
    mask = np.ones((8, 12), np.uint8)
    w0, w1 = rng.normal(size=(40, 3)), rng.normal(size=(40, 3))
    curve = np.cumsum(rng.normal(scale=0.01, size=(500, 3)), axis=0)
    robot = motion.ur3e()
    args = (robot._off, robot._ax, robot._base, robot._tool, robot._lo, robot._hi)
    target = robot.fk(robot.random_config(rng))
    q_seed = robot.random_config(rng)
    R, _ = np.linalg.qr(rng.normal(size=(3, 3)))
    R *= np.sign(np.linalg.det(R))
    return {
        "segment_distance": lambda k: k.segment_distance(p0, p1, q0, q1),
        "capsules_clear (8 x 12)": lambda k: k.capsules_clear(a, b, radii, mask, kinds, params, 0.0),
        "capsules_segments_clear (8 x 40)": lambda k: k.capsules_segments_clear(a, b, radii, w0, w1, 0.001, 0.0),
        "rdp_keep (500 pts)": lambda k: k.rdp_keep(curve, 0.005),
        "rotation_log": lambda k: k.rotation_log(R),
        "dls_solve": lambda k: k.dls_solve(*args, target, q_seed.copy(), 150, 0.02, 1e-4, 1e-3, 25),
    }


def median_time(fn, repeat):
    fn()  # warm-up
    number = 1
    while True:
        t0 = time.perf_counter()
        for _ in range(number):
            fn()
        if time.perf_counter() - t0 > 0.02:
            break
        number *= 4
    samples = []
    for _ in range(repeat):
        t0 = time.perf_counter()
        for _ in range(number):
            fn()
        samples.append((time.perf_counter() - t0) / number)
    return statistics.median(samples)


def main(argv=None):
    ap = argparse.ArgumentParser(description=__doc__.splitlines()[0])
    ap.add_argument("--repeat", type=int, default=5)
    ns = ap.parse_args(argv)
    if cy is None:
        raise SystemExit("compiled extension not built; run `pip install -e . --no-build-isolation`")
    print(f"{'kernel':34s} {'python':>12s} {'cython':>12s} {'speed-up':>9s}")
    for name, fn in cases(np.random.default_rng(0)).items():
        tp = median_time(lambda: fn(py), ns.repeat)
        tc = median_time(lambda: fn(cy), ns.repeat)
        print(f"{name:34s} {tp * 1e6:10.1f}us {tc * 1e6:10.1f}us {tp / tc:8.1f}x")


if __name__ == "__main__":
    main()
