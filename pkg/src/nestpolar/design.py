"""Shortest-path design of rate-compatible and nested polar code sequences.

A dataset holds one measured performance value ``mu_db`` (required Eb/N0 in
dB) per information set. Zero-padded variants of every code are added
without further simulation; a shortest path from the empty code to the full
code then gives the best rate-compatible sequence. Partial orders are lists
of index groups stored least reliable first.
"""
from __future__ import annotations

import json
import math
from dataclasses import dataclass, field
from importlib import resources
from typing import Iterable, Mapping, Sequence

import numpy as np

from .channel import ReliabilityVector
from .polar_core import (
    InformationSet,
    TotalOrder,
    supercode,
    upo_matrix,
)

DEFAULT_Z_MAX = 8


class DesignError(RuntimeError):
    """No feasible sequence exists, or a partial order is inconsistent."""


class DatasetError(ValueError):
    """Malformed or incomplete dataset."""


def zero_pad_mu(mu_db: float, k_full: int, z: int) -> float:
    """Rate-loss adjusted metric of a code padded with ``z`` zeros."""
    if z < 0 or z >= k_full:
        raise ValueError(f"padding z={z} must lie in [0, {k_full})")
    if z == 0:
        return float(mu_db)
    return float(mu_db) + 10.0 * math.log10(k_full / (k_full - z))


def edge_cost(mu_i: float, mu_j: float) -> float:
    return 0.5 * (mu_i + mu_j)


# ---------------------------------------------------------------- records


@dataclass(frozen=True)
class DatasetRecord:
    info: InformationSet
    mu_db: float | None
    meta: Mapping = field(default_factory=dict, compare=False)

    def to_json(self) -> dict:
        return {"n": self.info.n, "info": list(self.info.indices), "mu_db": self.mu_db,
                "meta": dict(self.meta)}

    @classmethod
    def from_json(cls, obj: dict) -> "DatasetRecord":
        info = InformationSet.from_indices(int(obj["n"]), obj["info"])
        mu = obj.get("mu_db")
        return cls(info, None if mu is None else float(mu), obj.get("meta") or {})


def dump_dataset(records: Iterable[DatasetRecord]) -> str:
    return "".join(json.dumps(r.to_json(), sort_keys=False) + "\n" for r in records)


def load_dataset(text: str) -> list[DatasetRecord]:
    out = []
    for lineno, line in enumerate(text.splitlines(), 1):
        if not line.strip():
            continue
        try:
            out.append(DatasetRecord.from_json(json.loads(line)))
        except (ValueError, KeyError, TypeError) as exc:
            raise DatasetError(f"line {lineno}: {exc}") from exc
    return out


# ---------------------------------------------------------------- graph


@dataclass(frozen=True)
class DesignVertex:
    info: InformationSet
    z: int
    mu_db: float

    @property
    def effective_k(self) -> int:
        return self.info.K - self.z

    def key(self) -> tuple:
        return (self.effective_k, self.info.indices, self.z)


@dataclass
class DesignGraph:
    """Layered DAG; ``preds[v]`` lists the sources of edges ending in ``v``."""

    N: int
    vertices: list[DesignVertex]
    preds: list[np.ndarray]
    source: int
    target: int

    def layer(self, k: int) -> list[int]:
        return [v for v, d in enumerate(self.vertices) if d.effective_k == k]

    def edges(self) -> list[tuple[int, int]]:
        return [(int(u), v) for v, ps in enumerate(self.preds) for u in ps]


def _mask_words(masks: Sequence[int], N: int) -> np.ndarray:
    W = max(1, N // 64)
    out = np.zeros((len(masks), W), dtype=np.uint64)
    for r, m in enumerate(masks):
        for w in range(W):
            out[r, w] = (m >> (64 * w)) & 0xFFFFFFFFFFFFFFFF
    return out


def _validated_records(dataset: Sequence[DatasetRecord]) -> tuple[int, list[DatasetRecord]]:
    if not dataset:
        raise DatasetError("empty dataset")
    n = dataset[0].info.n
    seen = set()
    for r in dataset:
        if r.info.n != n:
            raise DatasetError("dataset mixes block lengths")
        if r.info.mask in seen:
            raise DatasetError(f"duplicate information set {list(r.info.indices)}")
        seen.add(r.info.mask)
        if r.mu_db is None or not math.isfinite(r.mu_db):
            raise DatasetError(f"record {list(r.info.indices)} has no finite mu")
    full = (1 << (1 << n)) - 1
    if 0 not in seen or full not in seen:
        raise DatasetError("dataset must contain both trivial codes (K=0 and K=N)")
    return n, sorted(dataset, key=lambda r: r.info.sort_key())


def build_graph(dataset: Sequence[DatasetRecord], z_max: int = DEFAULT_Z_MAX) -> DesignGraph:
    """Augmented graph: every (code, z) with z <= min(z_max, K - 1), edges per the
    connectivity rule (padding shrinks by one, or an unpadded subcode jumps)."""
    if z_max < 0:
        raise ValueError("z_max must be non-negative")
    n, records = _validated_records(dataset)
    N = 1 << n

    vertices: list[DesignVertex] = []
    index: dict[tuple[int, int], int] = {}
    for r in records:
        K = r.info.K
        for z in range(0, max(0, min(z_max, K - 1)) + 1):
            index[(r.info.mask, z)] = len(vertices)
            vertices.append(DesignVertex(r.info, z, zero_pad_mu(r.mu_db, K, z) if K else r.mu_db))

    by_k: dict[int, list[int]] = {}
    for ri, r in enumerate(records):
        by_k.setdefault(r.info.K, []).append(ri)
    words = _mask_words([r.info.mask for r in records], N)

    preds: list[list[int]] = [[] for _ in vertices]
    for (mask, z), v in index.items():
        if z > 0:
            # the same code with one less padded bit
            preds[index[(mask, z - 1)]].append(v)
    for ri, r in enumerate(records):
        src = index[(r.info.mask, 0)]
        K = r.info.K
        for zj in range(0, z_max + 1):
            targets = by_k.get(K + 1 + zj)
            if not targets:
                continue
            cand = words[targets]
            sub = np.all((words[ri] & ~cand) == 0, axis=1)
            for t in np.flatnonzero(sub):
                rj = records[targets[t]]
                if zj <= rj.info.K - 1:
                    preds[index[(rj.info.mask, zj)]].append(src)

    pred_arrays = [np.array(sorted(set(p)), dtype=np.int64) for p in preds]
    return DesignGraph(N, vertices, pred_arrays, index[(0, 0)], index[((1 << N) - 1, 0)])


# ---------------------------------------------------------------- search


@dataclass(frozen=True)
class SequencePath:
    vertices: tuple[DesignVertex, ...]
    cost: float

    @property
    def N(self) -> int:
        return self.vertices[-1].info.N

    @property
    def mu_sum(self) -> float:
        return math.fsum(v.mu_db for v in self.vertices)

    @property
    def average_mu(self) -> float:
        """Average metric over all dimensions, mu(S) / N."""
        return self.mu_sum / self.N

    def checkpoints(self) -> list[DesignVertex]:
        return [v for v in self.vertices if v.z == 0]

    def to_json(self) -> dict:
        return {"N": self.N, "cost": self.cost,
                "vertices": [{"info": list(v.info.indices), "z": v.z, "mu_db": v.mu_db}
                             for v in self.vertices]}


def shortest_path(graph: DesignGraph) -> SequencePath:
    """Minimum-cost path from the empty to the full code.

    Every edge raises the effective dimension by one, so vertices can be
    settled layer by layer. Among equal-cost predecessors the one with the
    smaller (effective K, information set, z) key wins, which makes the
    result independent of input order.
    """
    V = graph.vertices
    order = sorted(range(len(V)), key=lambda v: V[v].key())
    dist = [math.inf] * len(V)
    back = [-1] * len(V)
    dist[graph.source] = 0.0
    for v in order:
        if v == graph.source:
            continue
        best, best_u = math.inf, -1
        for u in graph.preds[v]:
            u = int(u)
            if dist[u] == math.inf:
                continue
            c = dist[u] + edge_cost(V[u].mu_db, V[v].mu_db)
            if c < best or (c == best and V[u].key() < V[best_u].key()):
                best, best_u = c, u
        dist[v], back[v] = best, best_u
    if dist[graph.target] == math.inf:
        raise DesignError(f"no path from K=0 to K={graph.N} for N={graph.N}")
    path = [graph.target]
    while path[-1] != graph.source:
        path.append(back[path[-1]])
    return SequencePath(tuple(V[v] for v in reversed(path)), dist[graph.target])


# ---------------------------------------------------------------- partial orders


@dataclass(frozen=True)
class PartialOrder:
    """Per block length, disjoint index groups covering ``[0, N)``, least reliable first."""

    levels: tuple[tuple[int, tuple[tuple[int, ...], ...]], ...] = ()

    def __post_init__(self):
        norm = []
        seen = set()
        for N, groups in self.levels:
            N = int(N)
            if N in seen:
                raise ValueError(f"block length {N} appears twice")
            seen.add(N)
            gs = tuple(tuple(sorted(int(i) for i in g)) for g in groups)
            flat = [i for g in gs for i in g]
            if sorted(flat) != list(range(N)) or any(not g for g in gs):
                raise ValueError(f"groups for N={N} must be non-empty and partition [0, {N})")
            norm.append((N, gs))
        object.__setattr__(self, "levels", tuple(norm))

    @property
    def lengths(self) -> list[int]:
        return [N for N, _ in self.levels]

    @property
    def N_max(self) -> int:
        return max(self.lengths) if self.levels else 0

    def groups(self, N: int) -> tuple[tuple[int, ...], ...]:
        for M, gs in self.levels:
            if M == N:
                return gs
        raise KeyError(N)

    def merge(self, other: "PartialOrder") -> "PartialOrder":
        return PartialOrder(self.levels + other.levels)

    def is_total(self) -> bool:
        return all(len(g) == 1 for _, gs in self.levels for g in gs)

    def to_json(self) -> list[dict]:
        return [{"N": N, "groups": [list(g) for g in gs]} for N, gs in self.levels]

    @classmethod
    def from_json(cls, obj) -> "PartialOrder":
        if isinstance(obj, dict):
            obj = obj.get("levels", [obj])
        return cls(tuple((int(e["N"]), tuple(tuple(g) for g in e["groups"])) for e in obj))


def restrict_groups(groups: Sequence[Sequence[int]], N: int) -> list[tuple[int, ...]]:
    out = []
    for g in groups:
        r = tuple(i for i in g if i < N)
        if r:
            out.append(r)
    return out


def extract_partial_order(path: SequencePath) -> PartialOrder:
    checkpoints = path.checkpoints()
    added = []
    prev = 0
    for v in checkpoints[1:]:
        added.append(InformationSet(v.info.n, v.info.mask & ~prev).indices)
        prev = v.info.mask
    return PartialOrder(((path.N, tuple(reversed(added))),))


def is_compatible(info: InformationSet, groups: Sequence[Sequence[int]]) -> bool:
    """The earliest touched group may be hit partially; every later group must be contained."""
    touched = False
    for g in groups:
        hits = sum(1 for i in g if info.mask >> i & 1)
        if touched and hits != len(g):
            return False
        touched = touched or hits > 0
    return True


def filter_dataset(dataset: Sequence[DatasetRecord], P: PartialOrder, N: int) -> list[DatasetRecord]:
    keep = []
    for r in dataset:
        if r.info.N != N:
            continue
        ok = True
        for M, groups in P.levels:
            L = min(N, M)
            restricted = InformationSet(L.bit_length() - 1, r.info.mask & ((1 << L) - 1))
            if not is_compatible(restricted, restrict_groups(groups, L)):
                ok = False
                break
        if ok:
            keep.append(r)
    return keep


def design_rate_compatible(N: int, dataset: Sequence[DatasetRecord], z_max: int = DEFAULT_Z_MAX,
                           return_path: bool = False):
    records = [r for r in dataset if r.info.N == N]
    path = shortest_path(build_graph(records, z_max))
    P = extract_partial_order(path)
    return (P, path) if return_path else P


def design_nested(schedule: Sequence[int], datasets: Mapping[int, Sequence[DatasetRecord]],
                  z_max: int = DEFAULT_Z_MAX, return_paths: bool = False):
    """Sequential nested design: filter by the orders found so far, then optimize."""
    if len(set(schedule)) != len(schedule):
        raise ValueError("schedule contains a block length twice")
    P = PartialOrder()
    paths: dict[int, SequencePath] = {}
    for N in schedule:
        if N not in datasets:
            raise DatasetError(f"no dataset for N={N}")
        filtered = filter_dataset(datasets[N], P, N)
        try:
            P_new, path = design_rate_compatible(N, filtered, z_max, return_path=True)
        except (DesignError, DatasetError) as exc:
            raise DesignError(f"design failed for N={N}: {exc}") from exc
        P = P.merge(P_new)
        paths[N] = path
    return (P, paths) if return_paths else P


def supercode_augmentation(paths: Iterable[SequencePath], n: int) -> list[InformationSet]:
    """Length-``2**n`` supercodes generated from every code on shorter designed paths."""
    out = {}
    for path in paths:
        for v in path.checkpoints():
            if v.info.n < n and v.info.K > 0:
                sc = supercode(v.info, n - v.info.n)
                out[sc.mask] = sc
    return sorted(out.values(), key=InformationSet.sort_key)


# ---------------------------------------------------------------- total orders


def _more_reliable_sets(P: PartialOrder, N: int) -> list[int]:
    """Bitmask per index of all indices placed after it by some level of P."""
    after = [0] * N
    for M, groups in P.levels:
        later = 0
        for g in reversed(groups):
            for i in g:
                after[i] |= later
            for i in g:
                later |= 1 << i
    return after


def disambiguate(P: PartialOrder, nu: ReliabilityVector | np.ndarray,
                 enforce_upo: bool = True) -> TotalOrder:
    """Total order (ascending reliability) refining P, ambiguities resolved by ``nu``.

    The order is filled from the most reliable end: an index may be placed once
    every index P (and, optionally, the UPO) ranks above it has been placed,
    and among those the one with the largest ``nu`` goes next; equal values
    place the larger index first. The result is read back in ascending order.
    """
    N = P.N_max
    if N == 0:
        raise ValueError("empty partial order")
    if set(range(N)) != {i for g in P.groups(N) for i in g}:
        raise ValueError(f"partial order does not cover [0, {N})")
    values = np.asarray(nu.nu if isinstance(nu, ReliabilityVector) else nu, dtype=np.float64)
    if values.shape != (N,):
        raise ValueError(f"reliability vector has length {values.size}, expected {N}")
    n = N.bit_length() - 1
    need = _more_reliable_sets(P, N)
    if enforce_upo:
        M = upo_matrix(n)
        for i in range(N):
            for j in np.flatnonzero(M[i]):
                if j != i:
                    need[i] |= 1 << int(j)
    placed = 0
    rev: list[int] = []
    remaining = set(range(N))
    for _ in range(N):
        cand = [i for i in remaining if need[i] & ~placed == 0]
        if not cand:
            raise DesignError("partial order is inconsistent: no index can be placed")
        best = max(cand, key=lambda i: (values[i], i))
        rev.append(best)
        remaining.discard(best)
        placed |= 1 << best
    return TotalOrder(n, tuple(reversed(rev)))


def bundled_order_text() -> str:
    """Reference 256-entry nested order shipped with the package."""
    return resources.files("nestpolar").joinpath("data/nested_order_256.txt").read_text()


def bundled_order() -> TotalOrder:
    return TotalOrder.from_text(bundled_order_text())


@dataclass
class ValidationReport:
    violations: list[str] = field(default_factory=list)
    checked: list[str] = field(default_factory=list)

    @property
    def ok(self) -> bool:
        return not self.violations

    def to_json(self) -> dict:
        return {"ok": self.ok, "checked": self.checked, "violations": self.violations}


def _upo_violations(seq: Sequence[int], n: int, limit: int) -> list[str]:
    pos = {v: k for k, v in enumerate(seq)}
    M = upo_matrix(n)
    out = []
    for i, j in zip(*np.nonzero(M)):
        i, j = int(i), int(j)
        if i != j and pos[j] < pos[i]:
            out.append(f"UPO: {j} placed before {i} although {i} precedes {j}")
            if len(out) >= limit:
                break
    return out


def validate_order(q: TotalOrder, P: PartialOrder | None = None, limit: int = 20) -> ValidationReport:
    rep = ValidationReport()
    rep.checked.append("permutation")
    if not q.is_permutation():
        missing = sorted(set(range(q.N)) - set(q.q))
        rep.violations.append(f"not a permutation of [0, {q.N}): length {len(q.q)}, "
                              f"missing {missing[:limit]}")
        return rep
    rep.checked.append("upo")
    rep.violations += _upo_violations(q.q, q.n, limit)
    if P is not None:
        rep.checked.append("partial-order")
        pos = {v: k for k, v in enumerate(q.q)}
        for M, groups in P.levels:
            if M > q.N:
                rep.violations.append(f"partial order level N={M} exceeds order length {q.N}")
                continue
            for a, b in zip(groups, groups[1:]):
                if max(pos[i] for i in a) > min(pos[j] for j in b):
                    rep.violations.append(f"P(N={M}): group {list(a)} not entirely before {list(b)}")
    rep.checked.append("nesting")
    for m in range(q.n):
        sub = q.restrict(1 << m)
        if sorted(sub) != list(range(1 << m)):
            rep.violations.append(f"nesting: restriction to N={1 << m} is not a permutation")
            continue
        for msg in _upo_violations(sub, m, limit):
            rep.violations.append(f"nesting N={1 << m}: {msg}")
    return rep
