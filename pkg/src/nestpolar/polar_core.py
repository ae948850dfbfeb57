"""Polar transform, encoding and universal-partial-order (UPO) machinery.

Indices use the LSB-first binary expansion throughout: bit ``l`` of index
``i`` is ``(i >> l) & 1`` and bit ``n - 1`` is the most significant one.
An information set is stored as an integer bitmask over ``[0, 2**n)``.
"""
from __future__ import annotations

from dataclasses import dataclass
from functools import lru_cache
from typing import Iterable, Sequence

import numpy as np

MAX_N = 8
DEFAULT_ENUM_CEILING = 2_000_000


class ResourceLimitError(RuntimeError):
    """Raised when a request would exceed a configured size ceiling."""


class ContractError(ValueError):
    """Raised when an input violates an operation's precondition."""


def _check_n(n: int) -> None:
    if not 0 <= n <= MAX_N:
        raise ValueError(f"n must lie in [0, {MAX_N}], got {n}")


def _mask_to_indices(mask: int) -> tuple[int, ...]:
    out = []
    while mask:
        low = mask & -mask
        out.append(low.bit_length() - 1)
        mask ^= low
    return tuple(out)


@dataclass(frozen=True)
class InformationSet:
    """Information set of a length ``2**n`` polar code (bitmask storage)."""

    n: int
    mask: int

    def __post_init__(self):
        _check_n(self.n)
        if self.mask < 0 or self.mask >> (1 << self.n):
            raise ValueError("information set contains indices >= 2**n")

    @classmethod
    def from_indices(cls, n: int, indices: Iterable[int]) -> "InformationSet":
        _check_n(n)
        N = 1 << n
        mask = 0
        for i in indices:
            i = int(i)
            if not 0 <= i < N:
                raise ValueError(f"index {i} outside [0, {N})")
            if mask >> i & 1:
                raise ValueError(f"duplicate index {i}")
            mask |= 1 << i
        return cls(n, mask)

    @classmethod
    def full(cls, n: int) -> "InformationSet":
        return cls(n, (1 << (1 << n)) - 1)

    @classmethod
    def empty(cls, n: int) -> "InformationSet":
        return cls(n, 0)

    @property
    def N(self) -> int:
        return 1 << self.n

    @property
    def K(self) -> int:
        return bin(self.mask).count("1")

    @property
    def indices(self) -> tuple[int, ...]:
        return _mask_to_indices(self.mask)

    @property
    def frozen(self) -> tuple[int, ...]:
        return _mask_to_indices(~self.mask & ((1 << self.N) - 1))

    def __contains__(self, i: int) -> bool:
        return 0 <= i < self.N and bool(self.mask >> i & 1)

    def __len__(self) -> int:
        return self.K

    def issubset(self, other: "InformationSet") -> bool:
        return self.n == other.n and self.mask & ~other.mask == 0

    def info_mask_array(self) -> np.ndarray:
        """Boolean array of length N, True at information positions."""
        arr = np.zeros(self.N, dtype=bool)
        arr[list(self.indices)] = True
        return arr

    def sort_key(self) -> tuple:
        return (self.K, self.indices)

    def is_upo_compliant(self) -> bool:
        return upo_closure_mask(self.n, self.mask) == self.mask

    def to_json(self) -> dict:
        return {"n": self.n, "info": list(self.indices)}

    @classmethod
    def from_json(cls, obj: dict) -> "InformationSet":
        return cls.from_indices(int(obj["n"]), obj["info"])

    def __repr__(self) -> str:
        return f"InformationSet(n={self.n}, K={self.K}, info={list(self.indices)})"


@dataclass(frozen=True)
class TotalOrder:
    """Permutation of ``[0, 2**n)`` listed in ascending reliability."""

    n: int
    q: tuple[int, ...]

    def __post_init__(self):
        object.__setattr__(self, "q", tuple(int(v) for v in self.q))

    @property
    def N(self) -> int:
        return 1 << self.n

    def is_permutation(self) -> bool:
        return len(self.q) == self.N and sorted(self.q) == list(range(self.N))

    def restrict(self, N: int) -> list[int]:
        """Subsequence of entries below ``N`` (lower nesting)."""
        return [v for v in self.q if v < N]

    def to_json(self) -> dict:
        return {"n": self.n, "q": list(self.q)}

    @classmethod
    def from_json(cls, obj: dict) -> "TotalOrder":
        q = [int(v) for v in obj["q"]]
        return cls(int(obj["n"]), tuple(q))

    def to_text(self, per_row: int = 16) -> str:
        rows = []
        for start in range(0, len(self.q), per_row):
            rows.append(" ".join(str(v) for v in self.q[start:start + per_row]))
        return "\n".join(rows) + "\n"

    @classmethod
    def from_text(cls, text: str) -> "TotalOrder":
        values = [int(tok) for tok in text.replace(",", " ").replace("&", " ").split()]
        N = len(values)
        if N == 0 or N & (N - 1):
            raise ValueError(f"order length {N} is not a power of two")
        return cls(N.bit_length() - 1, tuple(values))


# ---------------------------------------------------------------- transform


def polar_transform(u: np.ndarray) -> np.ndarray:
    """Compute ``u @ G_N`` over GF(2) along the last axis (butterfly, O(N log N)).

    ``G_N`` is its own inverse, so the same call maps codewords back to ``u``.
    """
    x = np.array(u, dtype=np.uint8, copy=True)
    N = x.shape[-1]
    if N & (N - 1):
        raise ValueError(f"length {N} is not a power of two")
    lead = x.shape[:-1]
    h = 1
    while h < N:
        v = x.reshape(*lead, N // (2 * h), 2, h)
        v[..., 0, :] ^= v[..., 1, :]
        h *= 2
    return x


def generator_matrix(n: int) -> np.ndarray:
    F = np.array([[1, 0], [1, 1]], dtype=np.uint8)
    G = np.ones((1, 1), dtype=np.uint8)
    for _ in range(n):
        G = np.kron(G, F)
    return G


def _message_to_u(info_set: InformationSet, msg) -> np.ndarray:
    msg = np.asarray(msg, dtype=np.uint8)
    if msg.shape[-1] != info_set.K:
        raise ValueError(f"message length {msg.shape[-1]} != K={info_set.K}")
    u = np.zeros(msg.shape[:-1] + (info_set.N,), dtype=np.uint8)
    u[..., list(info_set.indices)] = msg & 1
    return u


def encode(info_set: InformationSet, msg) -> np.ndarray:
    """Non-systematic encoding; accepts a single message or a batch (last axis)."""
    return polar_transform(_message_to_u(info_set, msg))


def systematic_encode(info_set: InformationSet, msg) -> np.ndarray:
    """Two-pass systematic encoding: the codeword carries ``msg`` on the info positions."""
    x = polar_transform(_message_to_u(info_set, msg))
    x[..., ~info_set.info_mask_array()] = 0
    return polar_transform(x)


def extract_message(info_set: InformationSet, codeword) -> np.ndarray:
    u = polar_transform(codeword)
    return u[..., list(info_set.indices)]


def is_codeword(info_set: InformationSet, codeword) -> np.ndarray | bool:
    u = polar_transform(codeword)
    frozen = ~info_set.info_mask_array()
    res = ~np.any(u[..., frozen], axis=-1)
    return bool(res) if np.ndim(res) == 0 else res


# ---------------------------------------------------------------- UPO


def _one_positions_desc(i: int) -> list[int]:
    return [b for b in range(i.bit_length() - 1, -1, -1) if i >> b & 1]


def upo_leq(i: int, j: int, n: int) -> bool:
    """True iff ``i`` precedes (is at most as reliable as) ``j`` under the UPO."""
    N = 1 << n
    if not (0 <= i < N and 0 <= j < N):
        raise ValueError("indices out of range")
    pi = _one_positions_desc(i)
    pj = _one_positions_desc(j)
    if len(pi) > len(pj):
        return False
    return all(a <= b for a, b in zip(pi, pj))


@lru_cache(maxsize=None)
def upo_masks(n: int) -> tuple[tuple[int, ...], tuple[int, ...]]:
    """Per index: bitmask of all elements above it, and of all elements below it."""
    _check_n(n)
    N = 1 << n
    up = [0] * N
    down = [0] * N
    for i in range(N):
        for j in range(i, N):
            if upo_leq(i, j, n):
                up[i] |= 1 << j
                down[j] |= 1 << i
    return tuple(up), tuple(down)


@lru_cache(maxsize=None)
def upo_matrix(n: int) -> np.ndarray:
    """Boolean ``(N, N)`` array with ``[i, j]`` true iff ``i`` precedes ``j``."""
    up, _ = upo_masks(n)
    N = 1 << n
    mat = np.zeros((N, N), dtype=bool)
    for i in range(N):
        mat[i, list(_mask_to_indices(up[i]))] = True
    return mat


def upo_closure_mask(n: int, gens_mask: int) -> int:
    up, _ = upo_masks(n)
    out = 0
    m = gens_mask
    while m:
        low = m & -m
        out |= up[low.bit_length() - 1]
        m ^= low
    return out


@dataclass(frozen=True)
class MinInfoSet:
    n: int
    generators: tuple[int, ...]

    def __post_init__(self):
        object.__setattr__(self, "generators", tuple(sorted(int(g) for g in self.generators)))


def upo_closure(gens: MinInfoSet | Sequence[int], n: int | None = None) -> InformationSet:
    """Smallest UPO-compliant information set containing the generators."""
    if isinstance(gens, MinInfoSet):
        n, items = gens.n, gens.generators
    else:
        if n is None:
            raise TypeError("n is required when generators are given as a sequence")
        items = tuple(gens)
    mask = InformationSet.from_indices(n, items).mask
    return InformationSet(n, upo_closure_mask(n, mask))


def min_info_set(info: InformationSet) -> MinInfoSet:
    if not info.is_upo_compliant():
        raise ContractError("information set does not follow the UPO")
    _, down = upo_masks(info.n)
    gens = [i for i in info.indices if (down[i] & info.mask) == 1 << i]
    return MinInfoSet(info.n, tuple(gens))


def enumerate_upo_codes(
    n: int,
    max_generators: int | None = None,
    ceiling: int = DEFAULT_ENUM_CEILING,
) -> list[InformationSet]:
    """All UPO-compliant information sets of length ``2**n`` in canonical order.

    Canonical order is by K, then lexicographically by the sorted index tuple.
    """
    _check_n(n)
    if max_generators is None:
        if n > 7:
            raise ResourceLimitError("unrestricted enumeration is limited to n <= 7")
        masks = _enumerate_upsets(n, ceiling)
    else:
        if max_generators < 0:
            raise ValueError("max_generators must be non-negative")
        masks = _enumerate_by_antichains(n, max_generators, ceiling)
    codes = [InformationSet(n, m) for m in masks]
    codes.sort(key=InformationSet.sort_key)
    return codes


def _enumerate_upsets(n: int, ceiling: int) -> list[int]:
    # Indices are processed from N-1 down to 0; this is a linear extension of
    # the reversed UPO because i precedes j implies i <= j.
    _, down = upo_masks(n)
    N = 1 << n
    out: list[int] = []
    stack = [(N - 1, 0, 0)]
    while stack:
        pos, incl, excl = stack.pop()
        free = ~excl & ((1 << (pos + 1)) - 1) if pos >= 0 else 0
        if not free:
            out.append(incl)
            if len(out) > ceiling:
                raise ResourceLimitError(f"enumeration exceeds ceiling of {ceiling} codes")
            continue
        p = free.bit_length() - 1
        stack.append((p - 1, incl, excl | down[p]))
        stack.append((p - 1, incl | 1 << p, excl))
    return out


def _enumerate_by_antichains(n: int, max_gens: int, ceiling: int) -> list[int]:
    up, down = upo_masks(n)
    N = 1 << n
    out: list[int] = []

    def rec(start: int, chosen_up: int, comparable: int, depth: int) -> None:
        out.append(chosen_up)
        if len(out) > ceiling:
            raise ResourceLimitError(f"enumeration exceeds ceiling of {ceiling} codes")
        if depth == max_gens:
            return
        for g in range(start, N):
            if comparable >> g & 1:
                continue
            rec(g + 1, chosen_up | up[g], comparable | up[g] | down[g], depth + 1)

    rec(0, 0, 0, 0)
    return out


# ---------------------------------------------------------------- nesting


def nested_subcodes(info: InformationSet) -> tuple[InformationSet, InformationSet]:
    """Low and high nested subcodes of half length."""
    if info.n == 0:
        raise ValueError("a length-1 code has no nested subcodes")
    half = info.N // 2
    low_mask = info.mask & ((1 << half) - 1)
    high_mask = info.mask >> half
    return InformationSet(info.n - 1, low_mask), InformationSet(info.n - 1, high_mask)


def supercode(info: InformationSet, t: int) -> InformationSet:
    """Length ``2**t * N`` code generated by the same minimum information set."""
    if t < 0 or info.n + t > MAX_N:
        raise ValueError("invalid length extension")
    gens = min_info_set(info).generators
    return upo_closure(MinInfoSet(info.n + t, gens))


def code_from_order(q: TotalOrder, N: int, K: int) -> InformationSet:
    """Lower-nesting construction: the last K entries of the order restricted to [0, N)."""
    if N <= 0 or N & (N - 1) or N > q.N:
        raise ValueError(f"invalid block length {N} for an order of length {q.N}")
    if not 0 <= K <= N:
        raise ValueError(f"K={K} outside [0, {N}]")
    qn = q.restrict(N)
    n = N.bit_length() - 1
    return InformationSet.from_indices(n, qn[N - K:] if K else [])
