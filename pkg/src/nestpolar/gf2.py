"""Small GF(2) matrix helpers on bit-packed rows.

A matrix with ``n`` columns is a list of ``n``-bit integers; bit ``c`` of
row ``r`` is entry ``(r, c)``.
"""
from __future__ import annotations

from typing import Sequence


def rank(rows: Sequence[int]) -> int:
    pivots: dict[int, int] = {}
    r = 0
    for row in rows:
        while row:
            top = row.bit_length() - 1
            if top in pivots:
                row ^= pivots[top]
            else:
                pivots[top] = row
                r += 1
                break
    return r


def is_invertible(rows: Sequence[int], n: int) -> bool:
    return len(rows) == n and rank(rows) == n


def inverse(rows: Sequence[int], n: int) -> list[int]:
    """Gauss-Jordan inverse; raises ``ValueError`` for singular input."""
    if len(rows) != n:
        raise ValueError("matrix must be square")
    a = list(rows)
    inv = [1 << r for r in range(n)]
    for col in range(n):
        piv = next((r for r in range(col, n) if a[r] >> col & 1), None)
        if piv is None:
            raise ValueError("matrix is singular over GF(2)")
        a[col], a[piv] = a[piv], a[col]
        inv[col], inv[piv] = inv[piv], inv[col]
        for r in range(n):
            if r != col and a[r] >> col & 1:
                a[r] ^= a[col]
                inv[r] ^= inv[col]
    return inv


def matvec(rows: Sequence[int], x: int) -> int:
    out = 0
    for r, row in enumerate(rows):
        out |= (bin(row & x).count("1") & 1) << r
    return out


def matmul(a: Sequence[int], b: Sequence[int]) -> list[int]:
    """Product ``a @ b``; row r of the result is the XOR of b's rows selected by a[r]."""
    out = []
    for row in a:
        acc = 0
        c = 0
        while row:
            if row & 1:
                acc ^= b[c]
            row >>= 1
            c += 1
        out.append(acc)
    return out


def identity(n: int) -> list[int]:
    return [1 << r for r in range(n)]
