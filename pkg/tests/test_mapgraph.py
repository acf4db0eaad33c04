import itertools
import math
from fractions import Fraction

import numpy as np
import pytest

from rholab import mapgraph, oracle, theory
from rholab.core import CapacityError, DomainError, Params, RngStream, encode_window, roll_window
from rholab.mapgraph import (
    MapTable,
    analyze_graph,
    batch_analyze,
    batch_map_trajectories,
    build_map,
    diag_fixed_point_prob,
    diagonal_codes,
    trajectory,
)
from rholab.stats import empirical_pmf, tv_distance


def test_build_single_state_map():
    f = build_map(Params(1, 2), RngStream(0, 0))
    assert f.values.tolist() == [0]


def test_dense_build_deterministic():
    a = build_map(Params(2, 2), RngStream(3, 1))
    b = build_map(Params(2, 2), RngStream(3, 1))
    assert np.array_equal(a.values, b.values)


def test_dense_budget():
    with pytest.raises(CapacityError):
        build_map(Params(10, 3), RngStream(0, 0), budget=999)


def test_lazy_memoizes():
    f = build_map(Params(1000, 3), RngStream(1, 1), mode="lazy")
    first = [f[c] for c in (5, 17, 5, 999_999_999, 17)]
    assert first[0] == first[2] and first[1] == first[4]
    assert all(0 <= v < 1000 for v in first)
    with pytest.raises(DomainError):
        analyze_graph(f)


def test_bad_mode_and_table():
    with pytest.raises(DomainError):
        build_map(Params(2, 2), RngStream(0, 0), mode="sparse")
    with pytest.raises(DomainError):
        MapTable(Params(2, 2), [0, 1, 2, 0])


FIRST = MapTable(Params(2, 2), [0, 0, 1, 1])  # f(a, b) = a


def test_trajectory_examples():
    r = trajectory(FIRST, encode_window((0, 1), FIRST.params))
    assert (r.mu, r.tau, r.period) == (2, 4, 2)
    r = trajectory(FIRST, 0)
    assert (r.mu, r.tau, r.period) == (2, 3, 1)
    swap = MapTable(Params(2, 1), [1, 0])
    r = trajectory(swap, 0)
    assert (r.mu, r.tau, r.period) == (1, 3, 2)


def test_trajectory_rejects_bad_seed():
    with pytest.raises(DomainError):
        trajectory(FIRST, 4)


def test_analyze_examples():
    g = analyze_graph(FIRST)
    assert g.n_cycles == 3
    assert g.cycle_length_hist == {1: 2, 2: 1}
    assert g.tau_star == 4
    assert g.frac_seeds_period1 == 0.5
    assert g.has_diag_fixed_point
    ident = analyze_graph(MapTable(Params(2, 1), [0, 1]))
    assert (ident.n_cycles, ident.tau_star, ident.frac_seeds_period1) == (2, 2, 1.0)


def test_from_function_matches_table():
    assert np.array_equal(MapTable.from_function(Params(2, 2), lambda a, b: a).values, FIRST.values)


def test_mean_tau_star_over_all_m2_k2_maps_matches_oracle():
    params = Params(2, 2)
    stars = [analyze_graph(MapTable(params, t)).tau_star for t in itertools.product(range(2), repeat=4)]
    assert Fraction(sum(stars), len(stars)) == oracle.enumerate_maps_exact(params).E_tau_star


def check_graph(f: MapTable):
    params = f.params
    g = analyze_graph(f)
    for seed in range(params.M):
        r = trajectory(f, seed)
        assert (g.tau[seed], g.mu[seed]) == (r.tau, r.mu)
    # every state is either on a cycle or at positive distance from one
    on_cycle = int(np.sum(g.mu == params.k))
    assert g.states_on_cycles == on_cycle <= params.M
    assert g.n_cycles >= 1
    assert g.tau_star >= g.mean_tau >= params.k + 1
    diag = diagonal_codes(params)
    fixed = any(roll_window(int(d), f[int(d)], params) == d for d in diag)
    assert fixed == g.has_diag_fixed_point == (g.frac_seeds_period1 > 0)
    return g


@pytest.mark.parametrize("m,k,n_maps", [(2, 2, 30), (3, 2, 30), (2, 5, 10), (10, 3, 3), (4, 1, 30), (100, 2, 1)])
def test_graph_agrees_with_trajectories(m, k, n_maps):
    params = Params(m, k)
    for i in range(n_maps):
        check_graph(build_map(params, RngStream(m * 100 + k, i)))


def test_period1_iff_diagonal_fixed_point_exhaustive_m2_k2():
    params = Params(2, 2)
    for table in itertools.product(range(2), repeat=4):
        check_graph(MapTable(params, table))


def test_lazy_and_dense_agree_in_law():
    params = Params(3, 2)
    exact = oracle.enumerate_maps_exact(params).as_float("marginal_tau")
    lazy = batch_map_trajectories(params, 100_000, 4, mode="lazy", workers=1)
    assert tv_distance(empirical_pmf(lazy["tau"]), exact) < 0.01


def test_map_trajectories_match_oracle_m2():
    params = Params(2, 2)
    exact = oracle.enumerate_maps_exact(params).as_float("joint")
    res = batch_map_trajectories(params, 100_000, 9, workers=1)
    joint = empirical_pmf(res["mu"] * 1000 + res["tau"])
    joint = {(a // 1000, a % 1000): p for a, p in joint.items()}
    assert tv_distance(joint, exact) < 0.01


def test_diag_examples():
    assert diag_fixed_point_prob(1, 50, 0, workers=1).value == 1.0
    est = diag_fixed_point_prob(2, 20_000, 0, workers=1)
    assert est.exact == 0.75
    assert abs(est.value - 0.75) < 4 * est.stderr


def test_diag_large_m():
    est = diag_fixed_point_prob(1000, 10_000, 123, workers=1)
    assert est.exact == pytest.approx(0.63230, abs=1e-5)
    assert abs(est.value - est.exact) < 0.01


def test_diagonal_codes():
    params = Params(3, 3)
    assert diagonal_codes(params).tolist() == [encode_window((j,) * 3, params) for j in range(3)]
    assert diagonal_codes(Params(1, 4)).tolist() == [0]


def test_batch_analyze_worker_invariant():
    a = batch_analyze(Params(10, 2), 40, 3, workers=1)
    b = batch_analyze(Params(10, 2), 40, 3, workers=2)
    for key in a:
        assert np.array_equal(a[key], b[key])


def test_tau_star_tail_b3():
    params = Params(100, 2)
    census = batch_analyze(params, 200, 5, workers=1)
    cut = theory.tau_star_threshold(params, 3.0)
    assert np.mean(census["tau_star"] > cut) < 0.1


def test_diag_hits_independent_of_workers():
    a = mapgraph.batch_diag_hits(50, 40, 11, workers=1)
    b = mapgraph.batch_diag_hits(50, 40, 11, workers=3)
    assert list(a["trial"]) == list(range(40))
    assert np.array_equal(a["hit"], b["hit"])
    est = mapgraph.diag_estimate(a["hit"], 50)
    assert est.value == pytest.approx(a["hit"].mean()) and est.n == 40
