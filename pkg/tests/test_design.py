import hashlib
import json
import math

import numpy as np
import pytest
from hypothesis import given, settings, strategies as st

from nestpolar.channel import density_evolution_ga
from nestpolar.design import (
    DatasetError,
    DatasetRecord,
    DesignError,
    PartialOrder,
    SequencePath,
    DesignVertex,
    build_graph,
    bundled_order,
    bundled_order_text,
    design_nested,
    design_rate_compatible,
    disambiguate,
    dump_dataset,
    edge_cost,
    extract_partial_order,
    filter_dataset,
    is_compatible,
    load_dataset,
    shortest_path,
    supercode_augmentation,
    validate_order,
    zero_pad_mu,
)
from nestpolar.polar_core import InformationSet, TotalOrder, enumerate_upo_codes

from oracles import exhaustive_best_path

FIXTURE_SHA256 = "db72faecc6acdc9c9fec5569bd8866ca7a204ae5c2bf06a842c74de9a89a25ba"


def _I(n, idx):
    return InformationSet.from_indices(n, idx)


def random_dataset(n, rng, lo=0.0, hi=10.0):
    out = []
    for c in enumerate_upo_codes(n):
        out.append(DatasetRecord(c, 0.0 if c.K == 0 else float(rng.uniform(lo, hi))))
    return out


# ---------------------------------------------------------------- metric


def test_zero_pad_mu_examples():
    assert zero_pad_mu(3.0, 100, 0) == 3.0
    assert zero_pad_mu(0.0, 100, 1) == pytest.approx(0.04365, abs=1e-5)
    assert zero_pad_mu(1.0, 8, 4) == pytest.approx(1.0 + 10 * math.log10(2))
    for z in (-1, 8):
        with pytest.raises(ValueError):
            zero_pad_mu(1.0, 8, z)


def test_edge_cost():
    assert edge_cost(1.0, 3.0) == 2.0


# ---------------------------------------------------------------- datasets


def test_dataset_roundtrip():
    recs = [DatasetRecord(_I(2, []), 0.0), DatasetRecord(_I(2, [3]), 1.5, {"trials": 9}),
            DatasetRecord(_I(2, [1, 2, 3]), None)]
    back = load_dataset(dump_dataset(recs))
    assert back == recs and back[1].meta == {"trials": 9}
    assert json.loads(dump_dataset(recs).splitlines()[1]) == {"n": 2, "info": [3], "mu_db": 1.5,
                                                             "meta": {"trials": 9}}
    with pytest.raises(DatasetError):
        load_dataset('{"n": 2}\n')


def test_graph_rejects_bad_datasets(rng):
    good = random_dataset(2, rng)
    with pytest.raises(DatasetError):
        build_graph(good[1:])
    with pytest.raises(DatasetError):
        build_graph(good + [good[2]])
    with pytest.raises(DatasetError):
        build_graph(good + [DatasetRecord(_I(3, []), 0.0)])
    with pytest.raises(DatasetError):
        build_graph(good[:2] + [DatasetRecord(good[2].info, None)] + good[3:])
    with pytest.raises(DatasetError):
        build_graph([])


# ---------------------------------------------------------------- graph


def test_chain_graph_n2(rng):
    ds = random_dataset(2, rng)
    g = build_graph(ds, z_max=0)
    assert len(g.vertices) == 5 and len(g.edges()) == 4
    g = build_graph(ds, z_max=8)
    # K=0,1 one vertex each, then K vertices for K=2,3,4
    assert len(g.vertices) == 1 + 1 + 2 + 3 + 4


def test_vertex_count_for_padding():
    ds = [DatasetRecord(_I(2, []), 0.0), DatasetRecord(_I(2, [1, 2, 3]), 1.0),
          DatasetRecord(_I(2, range(4)), 2.0)]
    g = build_graph(ds, z_max=2)
    assert sum(1 for v in g.vertices if v.info.K == 3) == 3
    assert [v.effective_k for v in shortest_path(g).vertices] == [0, 1, 2, 3, 4]


def test_padding_edges_follow_connectivity_rule(rng):
    g = build_graph(random_dataset(3, rng), z_max=3)
    for u, v in g.edges():
        a, b = g.vertices[u], g.vertices[v]
        assert b.effective_k == a.effective_k + 1
        if a.info == b.info:
            assert b.z == a.z - 1
        else:
            assert a.z == 0 and a.info.mask & ~b.info.mask == 0


def test_parallel_paths_tie_break_on_key():
    ds = [DatasetRecord(_I(1, s), 1.0 if s else 0.0) for s in ([], [0], [1], [0, 1])]
    p1 = shortest_path(build_graph(ds, 0))
    p2 = shortest_path(build_graph(list(reversed(ds)), 0))
    assert p1 == p2
    assert p1.vertices[1].info.indices == (0,)


def test_no_path_raises():
    ds = [DatasetRecord(_I(2, s), 1.0) for s in ([], [3], [0, 1, 2, 3])]
    with pytest.raises(DesignError, match="N=4"):
        shortest_path(build_graph(ds, 0))


@pytest.mark.parametrize("n,z_max", [(1, 0), (2, 0), (2, 2), (3, 0), (3, 1), (3, 2)])
def test_shortest_path_matches_exhaustive(n, z_max, rng):
    for _ in range(6):
        ds = random_dataset(n, rng, -2.0, 8.0)
        path = shortest_path(build_graph(ds, z_max))
        best, chain = exhaustive_best_path({frozenset(r.info.indices): r.mu_db for r in ds}, 1 << n, z_max)
        assert path.mu_sum == pytest.approx(best, abs=1e-9)
        mu0, muN = ds[0].mu_db, ds[-1].mu_db
        # summed edge cost counts interior vertices once and the endpoints by half
        assert path.cost == pytest.approx(path.mu_sum - 0.5 * (mu0 + muN), abs=1e-9)


@settings(max_examples=25)
@given(seed=st.integers(0, 2**32 - 1), c=st.floats(-5, 5))
def test_shift_invariance(seed, c):
    rng = np.random.default_rng(seed)
    ds = random_dataset(3, rng)
    shifted = [DatasetRecord(r.info, r.mu_db + c) for r in ds]
    a = shortest_path(build_graph(ds, 0))
    b = shortest_path(build_graph(shifted, 0))
    assert [v.info for v in a.vertices] == [v.info for v in b.vertices]
    assert b.cost == pytest.approx(a.cost + 8 * c, abs=1e-9)


def test_planted_optimum(rng):
    codes = enumerate_upo_codes(3)
    chain, cur = [codes[0]], codes[0]
    while cur.K < 8:
        nxt = [c for c in codes if c.K == cur.K + 1 and cur.mask & ~c.mask == 0]
        cur = nxt[rng.integers(len(nxt))]
        chain.append(cur)
    planted = {c.mask for c in chain}
    ds = [DatasetRecord(c, -5.0 if c.mask in planted and c.K else (0.0 if c.K == 0 else float(rng.uniform(0, 5))))
          for c in codes]
    path = shortest_path(build_graph(ds, 2))
    assert [v.info for v in path.vertices] == chain


# ---------------------------------------------------------------- partial orders


def test_extract_partial_order_examples():
    seq = [_I(2, s) for s in ([], [3], [2, 3], [1, 2, 3], range(4))]
    path = SequencePath(tuple(DesignVertex(i, 0, 0.0) for i in seq), 0.0)
    assert extract_partial_order(path).groups(4) == ((0,), (1,), (2,), (3,))
    I3 = _I(2, [1, 2, 3])
    padded = SequencePath((DesignVertex(seq[0], 0, 0.0), DesignVertex(I3, 2, 0.0), DesignVertex(I3, 1, 0.0),
                           DesignVertex(I3, 0, 0.0), DesignVertex(seq[-1], 0, 0.0)), 0.0)
    assert extract_partial_order(padded).groups(4) == ((0,), (1, 2, 3))


def test_partial_order_validation_and_json():
    P = PartialOrder(((4, ((0,), (1, 2), (3,))),))
    assert PartialOrder.from_json(P.to_json()) == P
    assert PartialOrder.from_json({"levels": P.to_json()}) == P
    assert not P.is_total() and P.N_max == 4
    with pytest.raises(ValueError):
        PartialOrder(((4, ((0,), (1, 2))),))
    with pytest.raises(ValueError):
        PartialOrder(((2, ((0, 1),)), (2, ((0,), (1,)))))


def test_compatibility_examples():
    groups = [(0,), (1,), (2,), (3,)]
    assert is_compatible(_I(2, [3]), groups)
    assert not is_compatible(_I(2, [2]), groups)
    assert is_compatible(_I(2, [1, 2, 3]), [(0, 1), (2, 3)])
    assert not is_compatible(_I(2, [1, 2]), [(0, 1), (2, 3)])


def test_filter_examples():
    P = PartialOrder(((4, ((0,), (1,), (2,), (3,))),))
    keep = DatasetRecord(_I(3, [3, 5, 6, 7]), 1.0)
    drop = DatasetRecord(_I(3, [2, 6, 7]), 1.0)
    other = DatasetRecord(_I(2, [3]), 1.0)
    assert filter_dataset([keep, drop, other], P, 8) == [keep]


def _compatible_with(path, P):
    N = path.N
    return all(filter_dataset([DatasetRecord(v.info, v.mu_db)], P, N) for v in path.checkpoints())


def test_design_nested_compatibility(rng):
    ds = {4: random_dataset(2, rng), 8: random_dataset(3, rng)}
    P, paths = design_nested([4, 8], ds, z_max=2, return_paths=True)
    assert P.lengths == [4, 8]
    assert _compatible_with(paths[8], PartialOrder(((4, P.groups(4)),)))
    P2 = design_nested([8, 4], ds, z_max=2)
    assert P2.lengths == [8, 4]
    q = disambiguate(P, density_evolution_ga(3, 0.0))
    assert validate_order(q, P).ok
    with pytest.raises(DatasetError):
        design_nested([4, 16], ds)
    with pytest.raises(ValueError):
        design_nested([4, 4], ds)


def test_design_nested_infeasible_names_length(rng):
    ds4 = random_dataset(2, rng)
    # the only length-8 chain conflicts with any order on [0, 4) that puts 3 last
    ds8 = [DatasetRecord(_I(3, s), 1.0) for s in ([], [0], [0, 1], [0, 1, 2], [0, 1, 2, 3], range(5),
                                                  range(6), range(7), range(8))]
    with pytest.raises(DesignError, match="N=8"):
        design_nested([4, 8], {4: ds4, 8: ds8}, z_max=0)
    # padding the full code always yields a feasible sequence
    assert design_nested([4, 8], {4: ds4, 8: ds8}).lengths == [4, 8]


def test_design_is_deterministic(rng):
    ds = random_dataset(3, rng)
    a = design_rate_compatible(8, ds, 2, return_path=True)
    b = design_rate_compatible(8, list(reversed(ds)), 2, return_path=True)
    assert a == b


def test_supercode_augmentation(rng):
    P, paths = design_nested([4], {4: random_dataset(2, rng)}, return_paths=True)
    sup = supercode_augmentation(paths.values(), 4)
    assert all(s.n == 4 and s.is_upo_compliant() for s in sup)
    assert len(sup) == 4


# ---------------------------------------------------------------- disambiguation


def test_disambiguate_examples():
    P = PartialOrder(((2, ((0, 1),)),))
    assert disambiguate(P, np.array([5.0, 1.0]), enforce_upo=False).q == (1, 0)
    assert disambiguate(P, np.array([1.0, 5.0]), enforce_upo=False).q == (0, 1)
    # UPO forces 0 before 1 whatever the reliabilities say
    assert disambiguate(P, np.array([5.0, 1.0])).q == (0, 1)
    total = PartialOrder(((4, ((0,), (2,), (1,), (3,))),))
    for nu in (np.arange(4.0), -np.arange(4.0)):
        assert disambiguate(total, nu, enforce_upo=False).q == (0, 2, 1, 3)
        assert disambiguate(PartialOrder(((4, ((0,), (1,), (2,), (3,))),)), nu).q == (0, 1, 2, 3)


def test_disambiguate_inconsistent():
    with pytest.raises(DesignError):
        disambiguate(PartialOrder(((2, ((1,), (0,))),)), np.zeros(2))
    P = PartialOrder(((4, ((0,), (1,), (2,), (3,))), (2, ((1,), (0,)))))
    with pytest.raises(DesignError):
        disambiguate(P, np.zeros(4), enforce_upo=False)
    with pytest.raises(ValueError):
        disambiguate(PartialOrder(((4, ((0, 1, 2, 3),)),)), np.zeros(3))


@settings(max_examples=30)
@given(seed=st.integers(0, 2**32 - 1))
def test_disambiguate_refines_order(seed):
    rng = np.random.default_rng(seed)
    P = design_nested([4, 8], {4: random_dataset(2, rng), 8: random_dataset(3, rng)}, z_max=1)
    q = disambiguate(P, rng.normal(size=8))
    assert validate_order(q, P).ok


# ---------------------------------------------------------------- validation


def test_bundled_fixture_checksum():
    assert hashlib.sha256(bundled_order_text().encode()).hexdigest() == FIXTURE_SHA256


def test_validate_bundled_and_reversed():
    q = bundled_order()
    rep = validate_order(q)
    assert rep.ok and rep.checked == ["permutation", "upo", "nesting"]
    bad = validate_order(TotalOrder(8, tuple(reversed(q.q))))
    assert not bad.ok and len(bad.violations) >= 20


def test_bundled_restriction():
    assert bundled_order().restrict(32) == [0, 1, 2, 4, 8, 16, 3, 5, 6, 9, 17, 10, 12, 18, 20, 24, 7, 11, 19,
                                            13, 14, 21, 22, 25, 26, 28, 15, 23, 27, 29, 30, 31]


def test_validate_reports_partial_order_conflicts():
    q = TotalOrder(2, (0, 1, 2, 3))
    assert validate_order(q, PartialOrder(((4, ((0,), (1, 2), (3,))),))).ok
    rep = validate_order(q, PartialOrder(((4, ((0,), (2,), (1,), (3,))),)))
    assert not rep.ok and "P(N=4)" in rep.violations[0]
    rep = validate_order(TotalOrder(2, (0, 2, 1, 3)), PartialOrder(((8, tuple((i,) for i in range(8))),)))
    assert not rep.ok
