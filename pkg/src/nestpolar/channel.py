"""AWGN/BPSK link simulation, required-SNR search and GA density evolution.

Monte-Carlo trials are grouped in fixed-size blocks. Block ``b`` draws its
messages and noise from a stream seeded by ``(seed, code key, b)``, so an
estimate depends only on the seed and configuration, never on the number of
worker threads. The noise of a block does not depend on the SNR either,
which keeps BLER-vs-SNR estimates consistent along a search.
"""
from __future__ import annotations

import math
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass
from typing import Callable, Iterable

import numpy as np

from .decoders import (
    DecoderConfig,
    EnsembleConfig,
    ae_sc_decode_batch,
    make_ensemble,
    sc_decode_batch,
)
from .polar_core import InformationSet, polar_transform

_ENSEMBLE_STREAM = 0x454E53
_TRIAL_STREAM = 0x545249


class SearchError(RuntimeError):
    """Raised when the required-SNR bracket cannot be found in range."""


def es_to_eb(es_n0_db: float, K: int, N: int) -> float:
    if K <= 0:
        raise ValueError("Eb/N0 is undefined for K = 0")
    return es_n0_db - 10.0 * math.log10(K / N)


def eb_to_es(eb_n0_db: float, K: int, N: int) -> float:
    if K <= 0:
        raise ValueError("Eb/N0 is undefined for K = 0")
    return eb_n0_db + 10.0 * math.log10(K / N)


def noise_sigma(es_n0_db: float) -> float:
    return math.sqrt(1.0 / (2.0 * 10.0 ** (es_n0_db / 10.0)))


@dataclass(frozen=True)
class SnrPoint:
    es_n0_db: float | None
    eb_n0_db: float

    @classmethod
    def from_es(cls, es_n0_db: float, K: int, N: int) -> "SnrPoint":
        return cls(es_n0_db, es_to_eb(es_n0_db, K, N))


@dataclass(frozen=True)
class BlerEstimate:
    errors: int
    trials: int
    bler: float
    half_width_95: float

    @classmethod
    def from_counts(cls, errors: int, trials: int) -> "BlerEstimate":
        p = errors / trials if trials else 0.0
        hw = 1.959963984540054 * math.sqrt(p * (1.0 - p) / trials) if trials else 0.0
        return cls(errors, trials, p, hw)


@dataclass(frozen=True)
class StopRule:
    min_errors: int = 100
    max_trials: int = 10_000_000
    block_size: int = 500

    def __post_init__(self):
        if self.min_errors <= 0 or self.max_trials <= 0 or self.block_size <= 0:
            raise ValueError("stop bounds must be positive")


def awgn_bpsk_llr(codeword, es_n0_db: float, rng: np.random.Generator) -> np.ndarray:
    """BPSK (0 -> +1, 1 -> -1) over AWGN; returns channel LLRs 2y/sigma^2."""
    if not math.isfinite(es_n0_db):
        raise ValueError("SNR must be finite")
    c = np.asarray(codeword)
    sigma = noise_sigma(es_n0_db)
    y = 1.0 - 2.0 * c + sigma * rng.standard_normal(c.shape)
    return 2.0 * y / sigma**2


def code_key(info: InformationSet) -> list[int]:
    """Integer words identifying a code, used to derive its random streams."""
    words = [info.n]
    mask = info.mask
    for _ in range(max(1, info.N // 32)):
        words.append(mask & 0xFFFFFFFF)
        mask >>= 32
    return words


def block_rng(seed: int, key: Iterable[int], block: int) -> np.random.Generator:
    return np.random.default_rng(np.random.SeedSequence([int(seed), _TRIAL_STREAM, *key, int(block)]))


def ensemble_for(info: InformationSet, decoder: DecoderConfig, seed: int,
                 padded_positions: Iterable[int] | None = None) -> EnsembleConfig:
    rng = np.random.default_rng(np.random.SeedSequence([int(seed), _ENSEMBLE_STREAM, *code_key(info)]))
    return make_ensemble(info, decoder.M, rng, decoder.include_identity, padded_positions, decoder.min_sum)


class _Simulator:
    """One code + decoder + SNR; ``run_block`` returns (errors, trials) of a block."""

    def __init__(self, info, decoder, es_n0_db, seed, padded_positions, decoder_knows_padding,
                 all_zero, ensemble):
        self.info = info
        self.decoder = decoder
        self.sigma = noise_sigma(es_n0_db)
        self.seed = seed
        self.key = code_key(info)
        self.all_zero = all_zero
        info_idx = list(info.indices)
        self.pad_cols = []
        padded = sorted(padded_positions) if padded_positions else []
        for p in padded:
            if p not in info:
                raise ValueError(f"padded position {p} is not an information index")
            self.pad_cols.append(info_idx.index(p))
        known = padded if (padded and decoder_knows_padding) else None
        self.known = known
        if decoder.kind == "ae-sc":
            if ensemble is None:
                ensemble = ensemble_for(info, decoder, seed, known)
            elif known is not None and ensemble.padded_positions is None:
                ensemble = EnsembleConfig(ensemble.perms, ensemble.include_identity, known, ensemble.min_sum)
        self.ensemble = ensemble

    def run_block(self, block: int, size: int) -> tuple[int, int]:
        info = self.info
        rng = block_rng(self.seed, self.key, block)
        msg = rng.integers(0, 2, size=(size, info.K), dtype=np.uint8)
        noise = rng.standard_normal((size, info.N))
        if self.all_zero:
            msg[:] = 0
        if self.pad_cols:
            msg[:, self.pad_cols] = 0
        u = np.zeros((size, info.N), dtype=np.uint8)
        u[:, list(info.indices)] = msg
        x = polar_transform(u)
        s2 = self.sigma**2
        llr = (2.0 / s2) * (1.0 - 2.0 * x + self.sigma * noise)
        if self.decoder.kind == "sc":
            msg_hat, _ = sc_decode_batch(info, llr, self.known, self.decoder.min_sum)
        else:
            msg_hat, _, _ = ae_sc_decode_batch(info, llr, self.ensemble)
        errors = int(np.count_nonzero(np.any(msg_hat != msg, axis=1)))
        return errors, size


def estimate_bler(
    info: InformationSet,
    decoder: DecoderConfig,
    es_n0_db: float,
    stop: StopRule = StopRule(),
    seed: int = 0,
    threads: int = 1,
    padded_positions: Iterable[int] | None = None,
    decoder_knows_padding: bool = True,
    all_zero: bool = False,
    ensemble: EnsembleConfig | None = None,
) -> BlerEstimate:
    """Monte-Carlo BLER; stops after the first block reaching ``min_errors`` or ``max_trials``."""
    sim = _Simulator(info, decoder, es_n0_db, seed, padded_positions, decoder_knows_padding,
                     all_zero, ensemble)
    if info.K == 0:
        e, t = sim.run_block(0, min(stop.block_size, stop.max_trials))
        return BlerEstimate.from_counts(e, t)

    def sizes():
        b, done = 0, 0
        while done < stop.max_trials:
            size = min(stop.block_size, stop.max_trials - done)
            yield b, size
            done += size
            b += 1

    errors = trials = 0
    schedule = sizes()
    if threads <= 1:
        for b, size in schedule:
            e, t = sim.run_block(b, size)
            errors += e
            trials += t
            if errors >= stop.min_errors:
                break
        return BlerEstimate.from_counts(errors, trials)

    with ThreadPoolExecutor(max_workers=threads) as pool:
        finished = False
        while not finished:
            wave = [job for _, job in zip(range(threads), schedule)]
            if not wave:
                break
            results = list(pool.map(lambda job: sim.run_block(*job), wave))
            for e, t in results:
                errors += e
                trials += t
                if errors >= stop.min_errors:
                    finished = True
                    break
    return BlerEstimate.from_counts(errors, trials)


def search_crossing(
    bler_at: Callable[[float], float],
    epsilon: float,
    tol_db: float,
    start_db: float,
    step_db: float = 0.5,
    limits: tuple[float, float] = (-40.0, 40.0),
) -> float:
    """SNR in dB where ``bler_at`` crosses ``epsilon`` (coarse scan, then bisection)."""
    if not 0.0 < epsilon < 1.0:
        raise ValueError("epsilon must lie in (0, 1)")
    if tol_db <= 0 or step_db <= 0:
        raise ValueError("tolerances must be positive")
    lo_lim, hi_lim = limits
    x = min(max(start_db, lo_lim), hi_lim)
    if bler_at(x) > epsilon:
        lo = x
        while True:
            x = x + step_db
            if x > hi_lim:
                raise SearchError(f"BLER stays above {epsilon} up to {hi_lim} dB")
            if bler_at(x) <= epsilon:
                hi = x
                break
            lo = x
    else:
        hi = x
        while True:
            x = x - step_db
            if x < lo_lim:
                raise SearchError(f"BLER stays below {epsilon} down to {lo_lim} dB")
            if bler_at(x) > epsilon:
                lo = x
                break
            hi = x
    while hi - lo > tol_db:
        mid = 0.5 * (lo + hi)
        if bler_at(mid) > epsilon:
            lo = mid
        else:
            hi = mid
    return 0.5 * (lo + hi)


def required_snr(
    info: InformationSet,
    decoder: DecoderConfig,
    epsilon: float = 1e-3,
    tol_db: float = 0.05,
    seed: int = 0,
    stop: StopRule = StopRule(),
    threads: int = 1,
    start_eb_db: float = 3.0,
    step_db: float = 0.5,
    limits: tuple[float, float] = (-40.0, 40.0),
    trial_cap_factor: float = 4.0,
    padded_positions: Iterable[int] | None = None,
    log: list | None = None,
) -> SnrPoint:
    """Es/N0 (and Eb/N0) needed to reach BLER ``epsilon``; the K = 0 code has Eb/N0 = 0 by convention.

    Each SNR point stops after ``trial_cap_factor * min_errors / epsilon`` trials
    at most: with that many trials an estimate short of ``min_errors`` errors is
    already clearly below ``epsilon``.
    """
    if info.K == 0:
        return SnrPoint(None, 0.0)
    cap = int(math.ceil(trial_cap_factor * stop.min_errors / epsilon))
    point_stop = StopRule(stop.min_errors, min(stop.max_trials, cap), stop.block_size)
    ensemble = None
    if decoder.kind == "ae-sc":
        ensemble = ensemble_for(info, decoder, seed, padded_positions)
    cache: dict[float, float] = {}

    def bler_at(es: float) -> float:
        es = round(es, 9)
        if es not in cache:
            est = estimate_bler(info, decoder, es, point_stop, seed, threads,
                                padded_positions=padded_positions, ensemble=ensemble)
            cache[es] = est.bler
            if log is not None:
                log.append((es, est))
        return cache[es]

    start = eb_to_es(start_eb_db, info.K, info.N)
    es = search_crossing(bler_at, epsilon, tol_db, start, step_db, limits)
    return SnrPoint.from_es(es, info.K, info.N)


# ---------------------------------------------------------------- density evolution

_PHI_LOW = 0.867861
_PHI_SPLIT = 10.0
_A2, _A1 = 0.0564, 0.48560


def log_phi(x: np.ndarray) -> np.ndarray:
    """Logarithm of the piecewise Gaussian-approximation phi function.

    Below 0.867861 the quadratic-exponent fit is used; the classic two-piece
    fit (crossover at 10) covers the rest.
    """
    x = np.asarray(x, dtype=np.float64)
    out = np.zeros_like(x)
    low = x < _PHI_LOW
    mid = (x >= _PHI_LOW) & (x < _PHI_SPLIT)
    large = x >= _PHI_SPLIT
    out[low] = _A2 * x[low] ** 2 - _A1 * x[low]
    out[mid] = -0.4527 * x[mid] ** 0.86 + 0.0218
    xl = x[large]
    out[large] = 0.5 * np.log(np.pi / xl) - xl / 4.0 + np.log1p(-10.0 / (7.0 * xl))
    return out


def phi(x: np.ndarray) -> np.ndarray:
    return np.exp(log_phi(x))


def _inverse_phi_from_log(target: np.ndarray, tol: float) -> np.ndarray:
    target = np.asarray(target, dtype=np.float64)
    out = np.empty_like(target)
    low = target > float(log_phi(np.array([_PHI_LOW]))[0])
    # quadratic piece, stable root of A2 y^2 - A1 y - L = 0
    L = target[low]
    out[low] = -2.0 * L / (_A1 + np.sqrt(_A1**2 + 4.0 * _A2 * L))
    t = target[~low]
    if t.size:
        lo = np.full_like(t, _PHI_LOW)
        hi = np.maximum(-8.0 * t, 2.0 * _PHI_SPLIT)
        # absolute tolerance, relaxed to the float spacing for large means
        while np.any(hi - lo > tol * np.maximum(1.0, hi)):
            mid = 0.5 * (lo + hi)
            above = log_phi(mid) > t
            lo = np.where(above, mid, lo)
            hi = np.where(above, hi, mid)
        out[~low] = 0.5 * (lo + hi)
    return out


def _check_node_mean(m: np.ndarray, tol: float = 1e-12) -> np.ndarray:
    """phi^-1(1 - (1 - phi(m))^2) with 1 - phi evaluated without cancellation."""
    lp = log_phi(m)
    p = np.exp(lp)
    one_minus = -np.expm1(lp)
    # 1 - (1 - p)^2 = p (2 - p); each form is accurate on one side of p = 1/2
    target = np.where(p < 0.5, lp + np.log(2.0 - p), np.log1p(-np.minimum(one_minus, 0.5) ** 2))
    return _inverse_phi_from_log(target, tol)


@dataclass(frozen=True)
class ReliabilityVector:
    n: int
    nu: np.ndarray

    def to_json(self) -> dict:
        return {"n": self.n, "nu": [float(v) for v in self.nu]}


def density_evolution_ga(n: int, design_es_n0_db: float = 0.0) -> ReliabilityVector:
    """Mean LLR of every synthetic channel under the Gaussian approximation."""
    if not 0 <= n <= 8:
        raise ValueError("n must lie in [0, 8]")
    m0 = 4.0 * 10.0 ** (design_es_n0_db / 10.0)
    means = np.array([m0])
    for _ in range(n):
        nxt = np.empty(2 * means.size)
        nxt[0::2] = _check_node_mean(means)
        nxt[1::2] = 2.0 * means
        means = nxt
    return ReliabilityVector(n, means)
