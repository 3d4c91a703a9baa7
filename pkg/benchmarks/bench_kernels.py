"""Compare the compiled and numpy kernel backends on a 320x240 frame.

    python benchmarks/bench_kernels.py [--repeat N]
"""
import argparse
import timeit

import numpy as np

from monofollow._kernels import backends
from monofollow.features import GrayImage, gradients, shi_tomasi


def textured(h=240, w=320, shift=(0.0, 0.0)):
    r, c = np.mgrid[0:h, 0:w].astype(float)
    x = c - shift[0]
    y = r - shift[1]
    img = 0.5 + 0.2 * np.sin(0.21 * x) * np.cos(0.17 * y) + 0.15 * np.sin(0.05 * x + 0.09 * y)
    return np.clip(img, 0.0, 1.0)


def main():
    ap = argparse.ArgumentParser(description=__doc__.splitlines()[0])
    ap.add_argument("--repeat", type=int, default=5)
    args = ap.parse_args()

    I = textured()
    J = textured(shift=(2.0, 3.0))
    gx, gy = gradients(I)
    corners = shi_tomasi(GrayImage(I), max_corners=200)
    pts = np.array([c.position for c in corners]) - 0.5
    guess = np.zeros_like(pts)
    print(f"frame 320x240, {len(pts)} corners, LK window 21, 30 iterations max")

    results = {}
    for name, mod in backends().items():
        t_eig = min(timeit.repeat(lambda: mod.min_eig_response(gx, gy, 2), number=1, repeat=args.repeat))
        t_lk = min(timeit.repeat(lambda: mod.lk_track_level(I, J, gx, gy, pts, guess, 10, 30, 0.01),
                                 number=1, repeat=args.repeat))
        results[name] = (t_eig, t_lk)
        print(f"{name:>7}: min_eig_response {t_eig * 1e3:8.2f} ms   lk_track_level {t_lk * 1e3:8.2f} ms")
    if len(results) == 2:
        (pe, pl), (ce, cl) = results["python"], results["cython"]
        print(f"speed-up: min_eig_response x{pe / ce:.1f}   lk_track_level x{pl / cl:.1f}")
    else:
        print("compiled backend not built; only the numpy fallback was timed")


if __name__ == "__main__":
    main()
