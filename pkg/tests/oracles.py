"""Independent reference implementations used as test oracles.

Nothing here imports the library's algorithms; everything is computed the
slow, obvious way from the definitions.
"""
from __future__ import annotations

import itertools
import math
from statistics import NormalDist

import numpy as np


# ---------------------------------------------------------------- UPO


def upo_relation_brute(n: int) -> np.ndarray:
    """R[i, j] = True iff j is reachable from i by left swaps and adding 1-bits."""
    N = 1 << n
    succ = [set() for _ in range(N)]
    for i in range(N):
        for l in range(n):
            if not i >> l & 1:
                succ[i].add(i | 1 << l)  # binary domination
            elif l + 1 < n and not i >> (l + 1) & 1:
                succ[i].add(i - (1 << l) + (1 << (l + 1)))  # left swap
    R = np.zeros((N, N), dtype=bool)
    for i in range(N):
        stack, seen = [i], {i}
        while stack:
            v = stack.pop()
            for w in succ[v]:
                if w not in seen:
                    seen.add(w)
                    stack.append(w)
        R[i, list(seen)] = True
    return R


def upsets_brute(n: int) -> list[frozenset]:
    """Every up-closed subset of the UPO poset, by checking all 2**N subsets."""
    N = 1 << n
    R = upo_relation_brute(n)
    ups = [int(sum(1 << j for j in np.flatnonzero(R[i]))) for i in range(N)]
    out = []
    for mask in range(1 << N):
        if all(not (mask >> i & 1) or (ups[i] & ~mask) == 0 for i in range(N)):
            out.append(frozenset(i for i in range(N) if mask >> i & 1))
    return out


def closure_brute(gens, n: int) -> set:
    R = upo_relation_brute(n)
    return {j for g in gens for j in np.flatnonzero(R[g]).tolist()}


# ---------------------------------------------------------------- encoding


def generator_dense(n: int) -> np.ndarray:
    G = np.ones((1, 1), dtype=np.int64)
    F = np.array([[1, 0], [1, 1]], dtype=np.int64)
    for _ in range(n):
        G = np.kron(F, G)
    return G


def encode_dense(info, msg, n: int) -> np.ndarray:
    u = np.zeros(1 << n, dtype=np.int64)
    u[sorted(info)] = msg
    return (u @ generator_dense(n)) % 2


def all_codewords(info, n: int) -> np.ndarray:
    k = len(info)
    msgs = np.array(list(itertools.product([0, 1], repeat=k)), dtype=np.int64).reshape(-1, k)
    G = generator_dense(n)[sorted(info)]
    return (msgs @ G) % 2


# ---------------------------------------------------------------- decoding


def _logsumexp(v: np.ndarray) -> float:
    m = float(np.max(v))
    return m + math.log(float(np.sum(np.exp(v - m))))


def sc_brute(frozen: set, llr: np.ndarray, n: int) -> np.ndarray:
    """Exact SC: u_i from the marginal likelihood of the prefix, all later bits uniform."""
    N = 1 << n
    G = generator_dense(n)
    u = []
    for i in range(N):
        if i in frozen:
            u.append(0)
            continue
        rest = N - i - 1
        tails = np.array(list(itertools.product([0, 1], repeat=rest)), dtype=np.int64).reshape(1 << rest, rest)
        lik = []
        for bit in (0, 1):
            prefix = np.array(u + [bit], dtype=np.int64)
            U = np.hstack([np.tile(prefix, (tails.shape[0], 1)), tails])
            X = (U @ G) % 2
            lik.append(_logsumexp(0.5 * ((1 - 2 * X) * llr).sum(axis=1)))
        u.append(1 if lik[1] > lik[0] else 0)
    return np.array(u)


def f_reference(a: float, b: float) -> float:
    import mpmath

    mpmath.mp.dps = 60
    return float(2 * mpmath.atanh(mpmath.tanh(mpmath.mpf(a) / 2) * mpmath.tanh(mpmath.mpf(b) / 2)))


def correlation(c, llr) -> float:
    return float(np.sum((1 - 2 * np.asarray(c, dtype=np.int64)) * np.asarray(llr)))


# ---------------------------------------------------------------- channel


def qfunc(x: float) -> float:
    return 0.5 * math.erfc(x / math.sqrt(2.0))


def repetition_required_eb_db(N: int, epsilon: float) -> float:
    """Length-N repetition code with optimal combining: BLER = Q(sqrt(2 N Es/N0))."""
    x = -NormalDist().inv_cdf(epsilon)
    es = x * x / (2.0 * N)
    return 10.0 * math.log10(es) + 10.0 * math.log10(N)


def phi_reference(x: float) -> float:
    """Standard two-piece GA fit, valid for x > 0."""
    if x < 10.0:
        return math.exp(-0.4527 * x**0.86 + 0.0218)
    return math.sqrt(math.pi / x) * math.exp(-x / 4.0) * (1.0 - 10.0 / (7.0 * x))


def inverse_phi_reference(y: float, lo: float = 0.867861, hi: float = 1e4) -> float:
    for _ in range(200):
        mid = 0.5 * (lo + hi)
        if phi_reference(mid) > y:
            lo = mid
        else:
            hi = mid
    return 0.5 * (lo + hi)


# ---------------------------------------------------------------- design


def exhaustive_best_path(codes_mu: dict, N: int, z_max: int):
    """Brute-force minimum of the summed metric over all chains from K=0 to K=N.

    ``codes_mu`` maps frozenset information sets to mu. Vertices are
    (set, z) pairs; edges follow the augmented connectivity rule.
    """
    verts = []
    for s, mu in codes_mu.items():
        K = len(s)
        for z in range(0, max(0, min(z_max, K - 1)) + 1):
            m = mu if z == 0 else mu + 10 * math.log10(K / (K - z))
            verts.append((s, z, m))

    def connected(a, b):
        sa, za, _ = a
        sb, zb, _ = b
        if len(sb) - zb != len(sa) - za + 1:
            return False
        return sa == sb or (za == 0 and sa <= sb)

    start = next(v for v in verts if not v[0])
    best = [math.inf, None]

    def walk(v, total, chain):
        if len(v[0]) == N and v[1] == 0:
            if total < best[0]:
                best[0], best[1] = total, list(chain)
            return
        for w in verts:
            if connected(v, w):
                chain.append(w)
                walk(w, total + w[2], chain)
                chain.pop()

    walk(start, start[2], [start])
    return best[0], best[1]
