"""Successive cancellation and automorphism ensemble SC decoding."""
from __future__ import annotations

from dataclasses import dataclass
from typing import Iterable, Sequence

import numpy as np

from . import kernels
from .polar_core import InformationSet, polar_transform
from .symmetry import AffinePermutation, block_profile, is_automorphism, sample_blta

# Scores clip infinite LLRs so that genie inputs stay comparable.
_SCORE_CLIP = 1e15


@dataclass(frozen=True)
class DecodeResult:
    message: np.ndarray
    codeword: np.ndarray
    score: float


@dataclass(frozen=True)
class EnsembleConfig:
    """A fixed ensemble of automorphisms used by AE-SC decoding."""

    perms: tuple[AffinePermutation, ...]
    include_identity: bool = True
    padded_positions: frozenset[int] | None = None
    min_sum: bool = False

    def __post_init__(self):
        object.__setattr__(self, "perms", tuple(self.perms))
        if not self.perms:
            raise ValueError("ensemble must contain at least one permutation")
        if len(set(self.perms)) != len(self.perms):
            raise ValueError("ensemble permutations must be pairwise distinct")
        if self.include_identity and not self.perms[0].is_identity():
            raise ValueError("include_identity requires the identity as first permutation")
        if self.padded_positions is not None:
            object.__setattr__(self, "padded_positions", frozenset(int(p) for p in self.padded_positions))

    @property
    def M(self) -> int:
        return len(self.perms)

    def to_json(self) -> dict:
        return {
            "M": self.M,
            "include_identity": self.include_identity,
            "perms": [p.to_json() for p in self.perms],
            "padded_positions": sorted(self.padded_positions) if self.padded_positions else None,
            "min_sum": self.min_sum,
        }


def make_ensemble(
    info: InformationSet,
    M: int,
    rng: np.random.Generator,
    include_identity: bool = True,
    padded_positions: Iterable[int] | None = None,
    min_sum: bool = False,
) -> EnsembleConfig:
    """Draw ``M`` distinct permutations from BLTA(s) of the code, without replacement.

    ``M`` is capped at the group order for very small codes.
    """
    if M < 1:
        raise ValueError("ensemble size must be positive")
    profile = block_profile(info)
    M = min(M, profile.group_order())
    perms: list[AffinePermutation] = []
    if include_identity:
        perms.append(AffinePermutation.identity(info.n))
    seen = set(perms)
    while len(perms) < M:
        p = sample_blta(profile, rng)
        if p in seen or (include_identity and p.is_identity()):
            continue
        seen.add(p)
        perms.append(p)
    return EnsembleConfig(tuple(perms), include_identity, padded_positions, min_sum)


def _frozen_mask(info: InformationSet, extra: Iterable[int] | None = None) -> np.ndarray:
    frozen = (~info.info_mask_array()).astype(np.uint8)
    if extra is not None:
        idx = list(extra)
        if idx:
            frozen[idx] = 1
    return frozen


def correlation_scores(codewords: np.ndarray, llr: np.ndarray) -> np.ndarray:
    """BPSK correlation sum((1 - 2c) * llr); the ML metric under AWGN."""
    llr = np.clip(np.asarray(llr, dtype=np.float64), -_SCORE_CLIP, _SCORE_CLIP)
    return np.sum((1.0 - 2.0 * codewords) * llr, axis=-1)


def sc_decode_batch(
    info: InformationSet,
    llr: np.ndarray,
    frozen_overrides: Iterable[int] | None = None,
    min_sum: bool = False,
) -> tuple[np.ndarray, np.ndarray]:
    """SC-decode each row of ``llr``; returns (messages, codewords)."""
    llr = np.ascontiguousarray(llr, dtype=np.float64)
    if llr.ndim != 2 or llr.shape[1] != info.N:
        raise ValueError(f"expected LLRs of shape (B, {info.N}), got {llr.shape}")
    u, x = kernels.sc_decode_batch(llr, _frozen_mask(info, frozen_overrides), min_sum)
    return u[:, list(info.indices)], x


def sc_decode(
    info: InformationSet,
    llr,
    frozen_overrides: Iterable[int] | None = None,
    min_sum: bool = False,
) -> DecodeResult:
    llr = np.asarray(llr, dtype=np.float64)
    if llr.shape != (info.N,):
        raise ValueError(f"LLR length {llr.shape} != ({info.N},)")
    msg, cw = sc_decode_batch(info, llr[None, :], frozen_overrides, min_sum)
    return DecodeResult(msg[0], cw[0], float(correlation_scores(cw[0], llr)))


def ml_select(candidates: Sequence[DecodeResult], llr) -> DecodeResult:
    """Candidate with maximal correlation; ties go to the lowest index."""
    if not candidates:
        raise ValueError("no candidates to select from")
    scores = [float(correlation_scores(c.codeword, llr)) for c in candidates]
    best = int(np.argmax(scores))
    c = candidates[best]
    return DecodeResult(c.message, c.codeword, scores[best])


def ae_sc_decode_batch(
    info: InformationSet,
    llr: np.ndarray,
    cfg: EnsembleConfig,
    return_branches: bool = False,
):
    """AE-SC over a batch. Returns (messages, codewords, scores[, branch codewords]).

    Branch ``k`` decodes ``pi_k(llr)`` and maps its estimate back with ``pi_k^-1``;
    the branch with the largest correlation wins, lowest branch index on ties.
    """
    llr = np.ascontiguousarray(llr, dtype=np.float64)
    if llr.ndim != 2 or llr.shape[1] != info.N:
        raise ValueError(f"expected LLRs of shape (B, {info.N}), got {llr.shape}")
    B = llr.shape[0]
    base_frozen = _frozen_mask(info)
    padded_frozen = _frozen_mask(info, cfg.padded_positions) if cfg.padded_positions else base_frozen
    branch_cw = np.empty((cfg.M, B, info.N), dtype=np.uint8)
    for k, perm in enumerate(cfg.perms):
        pmap = perm.index_map()
        permuted = np.empty_like(llr)
        permuted[:, pmap] = llr
        frozen = padded_frozen if (k == 0 and cfg.include_identity) else base_frozen
        _, x = kernels.sc_decode_batch(permuted, frozen, cfg.min_sum)
        branch_cw[k] = x[:, pmap]
    scores = correlation_scores(branch_cw, llr[None, :, :])
    best = np.argmax(scores, axis=0)
    rows = np.arange(B)
    cw = branch_cw[best, rows]
    msg = polar_transform(cw)[:, list(info.indices)]
    out = (msg, cw, scores[best, rows])
    if return_branches:
        out = out + (branch_cw,)
    return out


def ae_sc_decode(
    info: InformationSet,
    llr,
    cfg: EnsembleConfig,
    verify: bool = False,
) -> DecodeResult:
    llr = np.asarray(llr, dtype=np.float64)
    if llr.shape != (info.N,):
        raise ValueError(f"LLR length {llr.shape} != ({info.N},)")
    if verify:
        for p in cfg.perms:
            if not is_automorphism(p, info):
                raise ValueError("ensemble contains a permutation that is not an automorphism")
    msg, cw, score = ae_sc_decode_batch(info, llr[None, :], cfg)
    return DecodeResult(msg[0], cw[0], float(score[0]))


@dataclass(frozen=True)
class DecoderConfig:
    """Decoder recipe: ``kind`` is ``"sc"`` or ``"ae-sc"``; the ensemble is drawn per code."""

    kind: str = "ae-sc"
    M: int = 8
    include_identity: bool = True
    min_sum: bool = False

    def __post_init__(self):
        if self.kind not in ("sc", "ae-sc"):
            raise ValueError(f"unknown decoder kind {self.kind!r}")
        if self.M < 1:
            raise ValueError("M must be positive")

    @property
    def label(self) -> str:
        return "SC" if self.kind == "sc" else f"AE-SC-{self.M}"

    def to_json(self) -> dict:
        return {"kind": self.kind, "M": self.M, "include_identity": self.include_identity,
                "min_sum": self.min_sum}
