"""Numpy successive-cancellation kernel, vectorized over frames.

Same contract as the compiled ``_ckernels`` module; used when the
extension is unavailable or ``NESTPOLAR_PURE_PYTHON`` is set.
"""
from __future__ import annotations

import numpy as np


def f_exact(a: np.ndarray, b: np.ndarray) -> np.ndarray:
    """Check-node update 2 atanh(tanh(a/2) tanh(b/2)), stable for all magnitudes."""
    A, B = np.abs(a), np.abs(b)
    m = np.minimum(A, B)
    s = np.where((a < 0) != (b < 0), -1.0, 1.0)
    with np.errstate(invalid="ignore", over="ignore", divide="ignore"):
        big = m + np.log1p(np.exp(-(A + B))) - np.log1p(np.exp(-np.abs(A - B)))
        # small magnitudes: the min/correction form cancels catastrophically
        t = np.tanh(0.5 * A) * np.tanh(0.5 * B)
        small = np.log1p(2.0 * t / (1.0 - t))
    mag = np.where(m < 1.0, small, big)
    return s * np.where(np.isinf(m), m, mag)


def f_minsum(a: np.ndarray, b: np.ndarray) -> np.ndarray:
    m = np.minimum(np.abs(a), np.abs(b))
    return np.where((a < 0) != (b < 0), -m, m)


def _decode(alpha, frozen, u_start, u_out, f):
    size = alpha.shape[1]
    if frozen[u_start:u_start + size].all():
        # every leaf below is frozen: all decisions are zero whatever the LLRs
        return np.zeros((alpha.shape[0], size), dtype=np.uint8)
    if size == 1:
        if frozen[u_start]:
            bit = np.zeros(alpha.shape[0], dtype=np.uint8)
        else:
            bit = (alpha[:, 0] < 0).astype(np.uint8)
        u_out[:, u_start] = bit
        return bit[:, None]
    h = size // 2
    a, b = alpha[:, :h], alpha[:, h:]
    beta_left = _decode(f(a, b), frozen, u_start, u_out, f)
    with np.errstate(invalid="ignore"):
        g = np.where(beta_left.astype(bool), b - a, b + a)
    beta_right = _decode(g, frozen, u_start + h, u_out, f)
    return np.concatenate((beta_left ^ beta_right, beta_right), axis=1)


def sc_decode_batch(llr: np.ndarray, frozen: np.ndarray, min_sum: bool = False):
    """SC-decode every row of ``llr``; returns ``(u_hat, x_hat)`` as uint8 arrays."""
    llr = np.ascontiguousarray(llr, dtype=np.float64)
    B, N = llr.shape
    frozen = np.asarray(frozen, dtype=np.uint8)
    if frozen.shape != (N,):
        raise ValueError("frozen mask length mismatch")
    if N & (N - 1):
        raise ValueError("block length must be a power of two")
    u = np.zeros((B, N), dtype=np.uint8)
    x = _decode(llr, frozen, 0, u, f_minsum if min_sum else f_exact)
    return u, np.ascontiguousarray(x, dtype=np.uint8)
