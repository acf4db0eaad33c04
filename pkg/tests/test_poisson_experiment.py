import math

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from rholab import theory
from rholab.core import DomainError, Params, RngStream, window_codes
from rholab.poisson_experiment import (
    batch_Z,
    gap_from_samples,
    pair_collisions,
    poisson_gap,
    sample_Z,
)
from rholab.seqsim import batch_sample, sample_rho


def naive_pairs(codes):
    c = codes.tolist()
    return sum(c[i] == c[j] for i in range(len(c)) for j in range(i + 1, len(c)))


def test_single_letter_two_windows():
    rec = sample_Z(Params(1, 2), 0.6, RngStream(0, 0))
    assert rec.N == 1 and rec.z == 1


@settings(max_examples=100)
@given(st.integers(1, 30), st.integers(0, 200), st.integers(0, 2**32))
def test_multiplicities_match_naive_count(m, n, seed):
    codes = np.random.default_rng(seed).integers(0, m, size=n)
    assert pair_collisions(codes) == naive_pairs(codes)


def test_large_window_count_path():
    codes = np.random.default_rng(1).integers(0, 40, size=600)
    assert pair_collisions(codes) == naive_pairs(codes)


def test_record_bounds():
    params = Params(5, 2)
    for i in range(200):
        rec = sample_Z(params, 1.0, RngStream(2, i))
        assert 0 <= rec.z <= math.comb(rec.N + 1, 2)


def test_mean_z_matches_pair_count():
    # E Z over the N + 1 sampled windows is C(N+1, 2) m^-k (= 1.05 at m=10, x=1)
    params = Params(10, 2)
    z = batch_Z(params, 1.0, 100_000, 7, workers=1)["z"]
    b = theory.chen_stein_bounds(params, 1.0)
    want = b.pair_count_alt / 100
    assert want == pytest.approx(1.05)
    assert abs(z.mean() - want) < 4 * z.std() / math.sqrt(len(z))


def test_p0_near_poisson_atom_m100():
    params = Params(100, 2)
    n = 10_000
    z = batch_Z(params, 1.0, n, 3, workers=1)["z"]
    lam = theory.chen_stein_bounds(params, 1.0).lambda_
    p0 = np.mean(z == 0)
    assert abs(p0 - math.exp(-lam)) < 3 * math.sqrt(math.exp(-lam) * (1 - math.exp(-lam)) / n)


@pytest.mark.parametrize("m,k,x", [(10, 2, 1.0), (30, 2, 0.5), (5, 3, 2.0)])
def test_zero_collisions_iff_late_repeat(m, k, x):
    # same stream: Z = 0 exactly when tau > N + k
    params = Params(m, k)
    N = theory.chen_stein_bounds(params, x).N
    for i in range(300):
        z = sample_Z(params, x, RngStream(11, i)).z
        tau = sample_rho(params, RngStream(11, i)).tau
        assert (z == 0) == (tau > N + k)


def test_zero_collisions_vs_seqsim_monte_carlo():
    params = Params(30, 2)
    n = 20_000
    N = theory.chen_stein_bounds(params, 0.5).N
    p_z = np.mean(batch_Z(params, 0.5, n, 21, workers=1)["z"] == 0)
    p_tau = np.mean(batch_sample(params, n, 22, workers=1).records["tau"] > N + 2)
    se = math.sqrt(2 * p_z * (1 - p_z) / n)
    assert abs(p_z - p_tau) < 3 * se


def test_poisson_gap_report():
    g = poisson_gap(Params(30, 2), 0.5, 10_000, 1, workers=1)
    assert g.bounds.N == 30
    assert g.p0_gap <= g.bound
    # sqrt(support size / n) with a handful of atoms
    assert 0.01 < g.tv_error_bar < 0.05
    assert set(g.to_dict()) >= {"tv_empirical", "tv_error_bar", "bound", "p0_gap"}


def test_poisson_gap_minimum_trials():
    with pytest.raises(DomainError):
        poisson_gap(Params(30, 2), 0.5, 100, 1, workers=1)


def test_gap_from_samples_exact_poisson_input():
    params = Params(300, 2)
    lam = theory.chen_stein_bounds(params, 0.5).lambda_
    z = np.random.default_rng(0).poisson(lam, size=100_000)
    g = gap_from_samples(params, 0.5, z)
    assert g.tv_empirical < 0.01
    assert g.p0_poisson == pytest.approx(math.exp(-lam))
