"""Time the numba kernels against their pure-numpy twins.

Shapes follow one training batch of the overfit configuration (4 clips,
500 frames, 64 mel bins, stage widths 8/8/16/16). Each pair is also checked
for agreement before timing.

    python benchmarks/bench_kernels.py [--repeat 5] [--float32]
"""

import argparse
import time

import numpy as np

from seld3d import kernels
from seld3d._accel import HAVE_NUMBA


def best_of(fn, repeat):
    fn()    # warm-up, includes JIT compilation on the first call
    times = []
    for _ in range(repeat):
        t0 = time.perf_counter()
        fn()
        times.append(time.perf_counter() - t0)
    return min(times)


def cases(dtype, rng):
    B, T = 4, 500
    out = []
    for f, cin, cout in ((64, 7, 8), (32, 8, 8), (16, 8, 16), (8, 16, 16)):
        x = rng.standard_normal((B, T, f, cin)).astype(dtype)
        w = rng.standard_normal((3, 3, cin, cout)).astype(dtype)
        b = rng.standard_normal(cout).astype(dtype)
        g = rng.standard_normal((B, T, f, cout)).astype(dtype)
        tag = f"{f}x{cin}->{cout}"
        out.append((f"conv3x3 fwd {tag}", kernels.conv3x3_fwd_np, kernels.conv3x3_fwd_nb, (x, w, b)))
        out.append((f"conv3x3 bwd {tag}", kernels.conv3x3_bwd_np, kernels.conv3x3_bwd_nb, (x, w, g)))
    z = rng.standard_normal((B, 100, 113)).astype(dtype)
    w = rng.standard_normal((3, 113, 64)).astype(dtype)
    b = rng.standard_normal(64).astype(dtype)
    g = rng.standard_normal((B, 100, 64)).astype(dtype)
    out.append(("dilated fwd 113->64", kernels.dilated_conv_fwd_np, kernels.dilated_conv_fwd_nb, (z, w, b, 2)))
    out.append(("dilated bwd 113->64", kernels.dilated_conv_bwd_np, kernels.dilated_conv_bwd_nb, (z, w, g, 2)))
    a = rng.standard_normal((B, T, 64)).astype(dtype)
    out.append(("temporal pool fwd", kernels.temporal_pool_fwd_np, kernels.temporal_pool_fwd_nb, (a,)))
    gp = rng.standard_normal((B, T // 5, 64)).astype(dtype)
    _, idx = kernels.temporal_pool_fwd_np(a)
    out.append(("temporal pool bwd", kernels.temporal_pool_bwd_np, kernels.temporal_pool_bwd_nb, (gp, idx)))
    return out


def max_rel_diff(a, b):
    a = a if isinstance(a, tuple) else (a,)
    b = b if isinstance(b, tuple) else (b,)
    return max(float(np.max(np.abs(x - y)) / (np.max(np.abs(x)) + 1e-30)) for x, y in zip(a, b))


def main():
    ap = argparse.ArgumentParser(description=__doc__.splitlines()[0])
    ap.add_argument("--repeat", type=int, default=5)
    ap.add_argument("--float32", action="store_true")
    args = ap.parse_args()
    if not HAVE_NUMBA:
        raise SystemExit("numba is not installed; nothing to compare")
    dtype = np.float32 if args.float32 else np.float64
    rng = np.random.default_rng(0)
    print(f"dtype {np.dtype(dtype).name}, best of {args.repeat}")
    print(f"{'kernel':28s} {'numpy ms':>10s} {'numba ms':>10s} {'speedup':>8s} {'max rel diff':>13s}")
    tot_np = tot_nb = 0.0
    for name, f_np, f_nb, inputs in cases(dtype, rng):
        diff = max_rel_diff(f_np(*inputs), f_nb(*inputs))
        t_np = best_of(lambda: f_np(*inputs), args.repeat)
        t_nb = best_of(lambda: f_nb(*inputs), args.repeat)
        tot_np += t_np
        tot_nb += t_nb
        print(f"{name:28s} {1e3 * t_np:10.2f} {1e3 * t_nb:10.2f} {t_np / t_nb:7.2f}x {diff:13.1e}")
    print(f"{'total':28s} {1e3 * tot_np:10.2f} {1e3 * tot_nb:10.2f} {tot_np / tot_nb:7.2f}x")


if __name__ == "__main__":
    main()
