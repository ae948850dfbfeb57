"""Affine permutations, stabilizers, block profiles and BLTA sampling."""
from __future__ import annotations

import itertools
from dataclasses import dataclass, field
from functools import lru_cache
from typing import Sequence

import numpy as np

from . import gf2
from .polar_core import (
    InformationSet,
    ResourceLimitError,
    generator_matrix,
    is_codeword,
)

BRUTE_FORCE_MAX_N = 6


@dataclass(frozen=True)
class AffinePermutation:
    """Index map ``j = A i + b`` over GF(2) on LSB-first bit vectors.

    ``A`` is stored as row bitmasks: bit ``c`` of ``A[r]`` is entry ``(r, c)``,
    so output bit ``r`` is the parity of ``A[r] & i`` plus bit ``r`` of ``b``.
    """

    n: int
    A: tuple[int, ...]
    b: int = 0
    _map: np.ndarray = field(default=None, init=False, repr=False, compare=False, hash=False)

    def __post_init__(self):
        object.__setattr__(self, "A", tuple(int(r) for r in self.A))
        if len(self.A) != self.n or any(r >> self.n for r in self.A):
            raise ValueError("A must be an n x n binary matrix")
        if self.b >> self.n or self.b < 0:
            raise ValueError("b must be an n-bit vector")
        if not gf2.is_invertible(self.A, self.n):
            raise ValueError("A is not invertible over GF(2)")

    @classmethod
    def identity(cls, n: int) -> "AffinePermutation":
        return cls(n, tuple(gf2.identity(n)), 0)

    @classmethod
    def from_bit_permutation(cls, sigma: Sequence[int]) -> "AffinePermutation":
        """Matrix form of ``f_sigma``: input bit ``l`` moves to output bit ``sigma[l]``."""
        n = len(sigma)
        rows = [0] * n
        for l, target in enumerate(sigma):
            rows[target] |= 1 << l
        return cls(n, tuple(rows), 0)

    @property
    def N(self) -> int:
        return 1 << self.n

    def apply(self, i: int) -> int:
        return gf2.matvec(self.A, i) ^ self.b

    def index_map(self) -> np.ndarray:
        if self._map is None:
            m = np.fromiter((self.apply(i) for i in range(self.N)), dtype=np.intp, count=self.N)
            m.setflags(write=False)
            object.__setattr__(self, "_map", m)
        return self._map

    def inverse(self) -> "AffinePermutation":
        ainv = gf2.inverse(self.A, self.n)
        return AffinePermutation(self.n, tuple(ainv), gf2.matvec(ainv, self.b))

    def compose(self, other: "AffinePermutation") -> "AffinePermutation":
        """``self after other``."""
        return AffinePermutation(
            self.n, tuple(gf2.matmul(self.A, other.A)), gf2.matvec(self.A, other.b) ^ self.b
        )

    def is_identity(self) -> bool:
        return self.b == 0 and list(self.A) == gf2.identity(self.n)

    def to_json(self) -> dict:
        return {"n": self.n, "A": list(self.A), "b": self.b}

    @classmethod
    def from_json(cls, obj: dict) -> "AffinePermutation":
        return cls(int(obj["n"]), tuple(int(r) for r in obj["A"]), int(obj["b"]))


def apply_affine(perm: AffinePermutation, i: int) -> int:
    if not 0 <= i < perm.N:
        raise ValueError(f"index {i} outside [0, {perm.N})")
    return perm.apply(i)


def permute_vector(perm: AffinePermutation, v: np.ndarray) -> np.ndarray:
    """Return ``w`` with ``w[perm(i)] = v[i]`` along the last axis."""
    v = np.asarray(v)
    if v.shape[-1] != perm.N:
        raise ValueError(f"vector length {v.shape[-1]} != {perm.N}")
    w = np.empty_like(v)
    w[..., perm.index_map()] = v
    return w


# ---------------------------------------------------------------- stabilizers


@dataclass(frozen=True)
class BlockProfile:
    sizes: tuple[int, ...]

    def __post_init__(self):
        object.__setattr__(self, "sizes", tuple(int(s) for s in self.sizes))
        if any(s <= 0 for s in self.sizes):
            raise ValueError("block sizes must be positive")

    @property
    def n(self) -> int:
        return sum(self.sizes)

    def blocks(self) -> list[range]:
        out, start = [], 0
        for s in self.sizes:
            out.append(range(start, start + s))
            start += s
        return out

    def block_of(self) -> list[int]:
        return [k for k, s in enumerate(self.sizes) for _ in range(s)]

    def refines(self, other: "BlockProfile") -> bool:
        """True iff every block of ``other`` is contained in a block of ``self``.

        In that case ``self`` describes a group at least as large as ``other``.
        """
        if self.n != other.n:
            return False
        mine = self.block_of()
        return all(len({mine[p] for p in blk}) == 1 for blk in other.blocks())

    def permutations(self) -> list[tuple[int, ...]]:
        """All bit permutations that keep every block in place."""
        per_block = [list(itertools.permutations(blk)) for blk in self.blocks()]
        out = []
        for combo in itertools.product(*per_block):
            sigma = [0] * self.n
            for blk, img in zip(self.blocks(), combo):
                for src, dst in zip(blk, img):
                    sigma[src] = dst
            out.append(tuple(sigma))
        return out

    def group_order(self) -> int:
        """Order of BLTA(s): offsets, invertible diagonal blocks, free sub-diagonal entries."""
        order = 1 << self.n
        below = 0
        seen = 0
        for s in self.sizes:
            order *= _gl2_order(s)
            below += s * seen
            seen += s
        return order << below


def _gl2_order(s: int) -> int:
    out = 1
    for k in range(s):
        out *= (1 << s) - (1 << k)
    return out


def bit_permute_index(sigma: Sequence[int], i: int) -> int:
    j = 0
    for l, target in enumerate(sigma):
        j |= (i >> l & 1) << target
    return j


def stabilizes(sigma: Sequence[int], info: InformationSet) -> bool:
    return all(bit_permute_index(sigma, i) in info for i in info.indices)


@lru_cache(maxsize=None)
def _all_bit_permutation_maps(n: int) -> tuple[list[tuple[int, ...]], np.ndarray]:
    perms = list(itertools.permutations(range(n)))
    maps = np.array([[bit_permute_index(s, i) for i in range(1 << n)] for s in perms], dtype=np.intp)
    return perms, maps


def stabilizer_brute(info: InformationSet) -> list[tuple[int, ...]]:
    """All sigma in S_n with f_sigma(I) contained in I, by exhaustive search."""
    if info.n > BRUTE_FORCE_MAX_N:
        raise ResourceLimitError(f"brute-force stabilizer limited to n <= {BRUTE_FORCE_MAX_N}")
    perms, maps = _all_bit_permutation_maps(info.n)
    member = info.info_mask_array()
    ok = np.all(member[maps] | ~member, axis=1)
    return [p for p, keep in zip(perms, ok) if keep]


def block_profile(info: InformationSet) -> BlockProfile:
    """Block sizes of the stabilizer of a UPO-compliant information set.

    Adjacent singleton blocks are merged whenever the transposition across
    their boundary stabilizes the set; transpositions generate the block group.
    """
    n = info.n
    if n == 0:
        return BlockProfile(())
    if info.K in (0, info.N):
        return BlockProfile((n,))
    sizes = [1]
    for l in range(n - 1):
        sigma = list(range(n))
        sigma[l], sigma[l + 1] = l + 1, l
        if stabilizes(sigma, info):
            sizes[-1] += 1
        else:
            sizes.append(1)
    return BlockProfile(tuple(sizes))


# ---------------------------------------------------------------- BLTA


def _random_invertible(s: int, rng: np.random.Generator) -> list[int]:
    while True:
        rows = [int(r) for r in rng.integers(0, 1 << s, size=s)]
        if gf2.is_invertible(rows, s):
            return rows


def sample_blta(
    profile: BlockProfile | Sequence[int],
    rng: np.random.Generator,
    with_offset: bool = True,
) -> AffinePermutation:
    """Uniform draw from BLTA(s): block-lower-triangular invertible A, uniform b."""
    if not isinstance(profile, BlockProfile):
        profile = BlockProfile(tuple(profile))
    n = profile.n
    rows = [0] * n
    for blk in profile.blocks():
        start, s = blk.start, len(blk)
        diag = _random_invertible(s, rng)
        for k in range(s):
            low = int(rng.integers(0, 1 << start)) if start else 0
            rows[start + k] = low | diag[k] << start
    b = int(rng.integers(0, 1 << n)) if with_offset and n else 0
    return AffinePermutation(n, tuple(rows), b)


def is_blta(perm: AffinePermutation, profile: BlockProfile) -> bool:
    """No entry above the block diagonal."""
    offs = np.cumsum((0,) + profile.sizes)
    for k, blk in enumerate(profile.blocks()):
        allowed = (1 << int(offs[k + 1])) - 1
        if any(perm.A[r] & ~allowed for r in blk):
            return False
    return True


def is_automorphism(perm: AffinePermutation, info: InformationSet) -> bool:
    """True iff every permuted generator row is again a codeword."""
    if perm.n != info.n:
        return False
    if info.K == 0:
        return True
    rows = generator_matrix(info.n)[list(info.indices)]
    permuted = permute_vector(perm, rows)
    return bool(np.all(is_codeword(info, permuted)))
