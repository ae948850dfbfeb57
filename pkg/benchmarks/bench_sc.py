"""Compare the compiled and numpy SC kernels on batched decoding.

Frames are all-zero codewords of rate-1/2 codes from the bundled order,
sent over BPSK/AWGN at the given Es/N0.

    python benchmarks/bench_sc.py [--batch 2000] [--repeat 5] [--snr 1.0]
"""
import argparse
import time

import numpy as np

from nestpolar import kernels
from nestpolar.channel import awgn_bpsk_llr
from nestpolar.design import bundled_order
from nestpolar.polar_core import code_from_order


def best_time(fn, repeat):
    times = []
    for _ in range(repeat):
        t = time.perf_counter()
        fn()
        times.append(time.perf_counter() - t)
    return min(times)


def main():
    ap = argparse.ArgumentParser()
    ap.add_argument("--batch", type=int, default=2000)
    ap.add_argument("--repeat", type=int, default=5)
    ap.add_argument("--snr", type=float, default=1.0, help="Es/N0 in dB")
    args = ap.parse_args()

    compiled = kernels.sc_decode_batch_compiled
    if compiled is None:
        print("compiled kernel not available, timing the numpy backend only")
    rng = np.random.default_rng(0)
    q = bundled_order()
    print(f"batch {args.batch}, Es/N0 {args.snr} dB, best of {args.repeat}; times in ms")
    print(f"{'N':>5} {'check node':>10} {'numpy':>9} {'cython':>9} {'speedup':>8}")
    for N in (16, 32, 64, 128, 256):
        info = code_from_order(q, N, N // 2)
        frozen = (~info.info_mask_array()).astype(np.uint8)
        llr = awgn_bpsk_llr(np.zeros((args.batch, N), dtype=np.uint8), args.snr, rng)
        for min_sum in (False, True):
            label = "min-sum" if min_sum else "exact"
            t_np = best_time(lambda: kernels.sc_decode_batch_numpy(llr, frozen, min_sum), args.repeat)
            if compiled is None:
                print(f"{N:>5} {label:>10} {1e3 * t_np:>9.2f} {'-':>9} {'-':>8}")
                continue
            t_c = best_time(lambda: compiled(llr, frozen, min_sum), args.repeat)
            print(f"{N:>5} {label:>10} {1e3 * t_np:>9.2f} {1e3 * t_c:>9.2f} {t_np / t_c:>7.1f}x")


if __name__ == "__main__":
    main()
