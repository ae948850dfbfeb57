import numpy as np
import pytest
from hypothesis import given, strategies as st

from nestpolar import gf2


def dense(rows, n):
    return np.array([[row >> c & 1 for c in range(n)] for row in rows], dtype=np.int64)


def rank_dense(M):
    M = M.copy() % 2
    r = 0
    rows, cols = M.shape
    for c in range(cols):
        piv = next((i for i in range(r, rows) if M[i, c]), None)
        if piv is None:
            continue
        M[[r, piv]] = M[[piv, r]]
        for i in range(rows):
            if i != r and M[i, c]:
                M[i] ^= M[r]
        r += 1
    return r


matrices = st.integers(1, 8).flatmap(
    lambda n: st.tuples(st.just(n), st.lists(st.integers(0, (1 << n) - 1), min_size=n, max_size=n))
)


@given(matrices)
def test_rank_matches_dense(nm):
    n, rows = nm
    assert gf2.rank(rows) == rank_dense(dense(rows, n))


@given(matrices)
def test_inverse_roundtrip(nm):
    n, rows = nm
    if not gf2.is_invertible(rows, n):
        with pytest.raises(ValueError):
            gf2.inverse(rows, n)
        return
    inv = gf2.inverse(rows, n)
    assert gf2.matmul(rows, inv) == gf2.identity(n)
    assert gf2.matmul(inv, rows) == gf2.identity(n)
    assert np.array_equal(dense(inv, n), dense(inv, n))


@given(matrices, st.data())
def test_matvec_and_matmul_match_dense(nm, data):
    n, a = nm
    b = data.draw(st.lists(st.integers(0, (1 << n) - 1), min_size=n, max_size=n))
    x = data.draw(st.integers(0, (1 << n) - 1))
    xv = np.array([x >> c & 1 for c in range(n)])
    y = gf2.matvec(a, x)
    assert [y >> r & 1 for r in range(n)] == list(dense(a, n) @ xv % 2)
    assert np.array_equal(dense(gf2.matmul(a, b), n), dense(a, n) @ dense(b, n) % 2)


def test_identity_and_singular():
    assert gf2.is_invertible(gf2.identity(5), 5)
    assert not gf2.is_invertible([1, 1, 4], 3)
    assert gf2.rank([0, 0]) == 0
