"""Benchmark the numba kernel against the pure-numpy fallback.

Runs the denoiser on a synthetic textured image across window radii and
variants, timing both backends and cross-checking their outputs. The
naive per-pixel reference can be included at small sizes for scale.

Usage:
    python benchmarks/bench_engines.py
    python benchmarks/bench_engines.py --size 256 --d 4,10,15 --repeats 3 --naive
"""

import argparse
import time

import numpy as np

from nlmlab import (DenoiseConfig, NoiseSpec, add_gaussian_noise, denoise,
                    naive_reference_denoise, numba_available, parse_variant)
from nlmlab.config import DistanceSource


def textured_image(n, seed=0):
    rng = np.random.default_rng(seed)
    yy, xx = np.mgrid[0:n, 0:n].astype(np.float64)
    img = 128.0 + 60.0 * np.sin(xx / 7.0) * np.cos(yy / 11.0)
    img += 40.0 * (rng.uniform(size=(n, n)) < 0.002).astype(np.float64)
    blur = np.pad(img, 2, mode="reflect")
    out = np.zeros_like(img)
    for i in range(5):
        for j in range(5):
            out += blur[i : i + n, j : j + n]
    return out / 25.0


def timed(fn, repeats):
    best = np.inf
    result = None
    for _ in range(repeats):
        t0 = time.perf_counter()
        result = fn()
        best = min(best, time.perf_counter() - t0)
    return best, result


def main():
    ap = argparse.ArgumentParser(description=__doc__)
    ap.add_argument("--size", type=int, default=128)
    ap.add_argument("--d", default="4,10,15", help="comma list of window radii")
    ap.add_argument("--variants", default="w,w_u0")
    ap.add_argument("--sigma", type=float, default=20.0)
    ap.add_argument("--repeats", type=int, default=2)
    ap.add_argument("--naive", action="store_true", help="also time the per-pixel reference")
    args = ap.parse_args()

    u = textured_image(args.size)
    noisy, _ = add_gaussian_noise(u, NoiseSpec(args.sigma, 1))
    d_values = [float(t) for t in args.d.split(",")]
    variants = [parse_variant(t.strip()) for t in args.variants.split(",")]

    if numba_available():
        # warm the jit cache outside the timed region
        denoise(noisy[:16, :16], DenoiseConfig(d=2.0, sigma=args.sigma), engine="numba")

    print(f"image {args.size}x{args.size}, sigma={args.sigma}, best of {args.repeats}")
    header = f"{'variant':8} {'d':>4} {'numba':>9} {'numpy':>9} {'ratio':>7} {'max|diff|':>10}"
    if args.naive:
        header += f" {'naive':>9}"
    print(header)
    for variant in variants:
        oracle = u if variant.source is DistanceSource.ORACLE else None
        for d in d_values:
            cfg = variant.config(d=d, sigma=args.sigma)
            t_nb, out_nb = (timed(lambda: denoise(noisy, cfg, oracle, engine="numba"),
                                  args.repeats) if numba_available() else (np.nan, None))
            t_np, out_np = timed(lambda: denoise(noisy, cfg, oracle, engine="numpy"),
                                 args.repeats)
            diff = np.abs(out_nb - out_np).max() if out_nb is not None else np.nan
            line = (f"{variant.label:8} {d:4g} {t_nb:8.3f}s {t_np:8.3f}s "
                    f"{t_np / t_nb:6.1f}x {diff:10.2e}")
            if args.naive:
                t_na, out_na = timed(
                    lambda: naive_reference_denoise(noisy, cfg, oracle), 1)
                line += f" {t_na:8.3f}s"
                assert np.abs(out_np - out_na).max() < 1e-10
            print(line)


if __name__ == "__main__":
    main()
