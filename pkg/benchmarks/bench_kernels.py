"""Time the compiled kernels against the numpy fallback.

Usage: ``python benchmarks/bench_kernels.py [--repeat N]``
"""
import argparse
import timeit

import numpy as np

from dichannel import _fallback
from dichannel.geometry import directions

try:
    from dichannel import _kernels
except ImportError:  # extension not built
    _kernels = None


def cases(rng):
    _, c, s = directions(2048)
    d2, d3, c3 = np.sqrt(0.6), 0.6, 0.4
    h = _fallback.support_values(c, s, d2, d3, c3)
    px, py = rng.uniform(0, 1, (2, 841))
    e1, e2 = rng.uniform(0, 0.01, (2, 841))
    poly_a = _fallback.contact_points(c[::8], s[::8], d2, d3, c3)
    poly_b = _fallback.contact_points(c[::8], s[::8], 0.7, 0.5, 0.2)
    m = rng.normal(size=(4, 4)) + 1j * rng.normal(size=(4, 4))
    herm = 0.5 * (m + m.conj().T)
    return {
        "support_values (2048 dirs)": lambda k: k.support_values(c, s, d2, d3, c3),
        "contact_points (2048 dirs)": lambda k: k.contact_points(c, s, d2, d3, c3),
        "polygon_from_support": lambda k: k.polygon_from_support(c, s, h),
        "max_margins (841 pts x 2048)": lambda k: k.max_margins(px, py, c, s, h, e1, e2, 2.0),
        "exact_margins (841 pts)": lambda k: k.exact_margins(px, py, e1, e2, 0.0, d2, d3, c3, 2048),
        "clip_convex (256-gons)": lambda k: k.clip_convex(poly_a, poly_b),
        "jacobi_eigvalsh (4x4)": lambda k: k.jacobi_eigvalsh(herm),
    }


def main():
    ap = argparse.ArgumentParser(description=__doc__.splitlines()[0])
    ap.add_argument("--repeat", type=int, default=5)
    args = ap.parse_args()
    rng = np.random.default_rng(0)
    print(f"{'kernel':32s} {'fallback':>12s} {'compiled':>12s} {'speedup':>8s}")
    for name, fn in cases(rng).items():
        number = 20
        t_py = min(timeit.repeat(lambda: fn(_fallback), number=number, repeat=args.repeat)) / number
        if _kernels is None:
            print(f"{name:32s} {t_py * 1e3:10.3f}ms {'n/a':>12s}")
            continue
        t_c = min(timeit.repeat(lambda: fn(_kernels), number=number, repeat=args.repeat)) / number
        print(f"{name:32s} {t_py * 1e3:10.3f}ms {t_c * 1e3:10.3f}ms {t_py / t_c:7.1f}x")


if __name__ == "__main__":
    main()
