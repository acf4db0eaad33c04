import itertools

import numpy as np
import pytest
from hypothesis import given
from hypothesis import strategies as st
from scipy import stats as sps

from rholab.core import (
    DomainError,
    Params,
    RngStream,
    decode_window,
    encode_window,
    next_symbol,
    roll_window,
    window_codes,
)


def test_params_derives_state_count():
    assert Params(3, 2).M == 9
    assert Params(2, 63).M == 2**63
    assert Params(2**32 - 1, 2).M == (2**32 - 1) ** 2


@pytest.mark.parametrize("m,k", [(0, 2), (2, 0), (-1, 1)])
def test_params_rejects_bad_sizes(m, k):
    with pytest.raises(DomainError):
        Params(m, k)


def test_params_rejects_overflow():
    with pytest.raises(DomainError, match="64 bits"):
        Params(2, 65)
    with pytest.raises(DomainError):
        Params(10**10, 2)


@pytest.mark.parametrize(
    "m,k,symbols,code",
    [(3, 2, (0, 0), 0), (3, 2, (1, 2), 5), (2, 3, (1, 0, 1), 5)],
)
def test_encode_examples(m, k, symbols, code):
    assert encode_window(symbols, Params(m, k)) == code


def test_encode_rejects_out_of_range():
    with pytest.raises(DomainError):
        encode_window((0, 3), Params(3, 2))
    with pytest.raises(DomainError):
        encode_window((0,), Params(3, 2))


@pytest.mark.parametrize(
    "m,k,code,x,expected",
    [(3, 2, 5, 0, 6), (2, 3, 5, 1, 3), (1, 2, 0, 0, 0)],
)
def test_roll_examples(m, k, code, x, expected):
    assert roll_window(code, x, Params(m, k)) == expected


def test_roll_rejects_out_of_range():
    with pytest.raises(DomainError):
        roll_window(0, 2, Params(2, 2))


@pytest.mark.parametrize("m,k", [(2, 16), (4, 8), (16, 4), (256, 2), (7, 5)])
def test_codec_bijection_exhaustive(m, k):
    params = Params(m, k)
    assert params.M <= 2**16
    seen = set()
    for code in range(params.M):
        w = decode_window(code, params)
        assert all(0 <= x < m for x in w)
        assert encode_window(w, params) == code
        seen.add(w)
    assert len(seen) == params.M


@pytest.mark.parametrize("m,k", [(2, 11), (4, 5), (8, 4), (64, 2), (5, 3)])
def test_roll_consistency_exhaustive(m, k):
    params = Params(m, k)
    assert params.M <= 2**12
    for code in range(params.M):
        w = decode_window(code, params)
        for x in range(m):
            assert roll_window(code, x, params) == encode_window(w[1:] + (x,), params)


@given(st.integers(1, 9), st.integers(1, 6), st.data())
def test_codec_random_tuples(m, k, data):
    params = Params(m, k)
    w = tuple(data.draw(st.lists(st.integers(0, m - 1), min_size=k, max_size=k)))
    assert decode_window(encode_window(w, params), params) == w


def test_window_codes_matches_scalar_encoding():
    params = Params(5, 3)
    x = RngStream(1, 2).symbols(5, 50)
    codes = window_codes(x, params)
    assert len(codes) == 48
    for i, c in enumerate(codes):
        assert int(c) == encode_window(tuple(x[i : i + 3].tolist()), params)


def test_next_symbol_single_letter_alphabet():
    s = RngStream(3, 4)
    assert all(next_symbol(s, 1) == 0 for _ in range(100))


def test_stream_determinism():
    a = RngStream(123, 9)
    b = RngStream(123, 9)
    assert [next_symbol(a, 7) for _ in range(1000)] == [next_symbol(b, 7) for _ in range(1000)]


def test_stream_chunking_does_not_change_sequence():
    whole = RngStream(5, 1).symbols(1000, 500)
    s = RngStream(5, 1)
    parts = np.concatenate([s.symbols(1000, n) for n in (1, 10, 89, 400)])
    single = RngStream(5, 1)
    ones = [single.symbol(1000) for _ in range(500)]
    assert np.array_equal(whole, parts)
    assert whole.tolist() == ones


def test_streams_are_order_independent():
    later_first = RngStream(77, 1000).symbols(10, 20)
    for i in range(5):
        RngStream(77, i).symbols(10, 20)
    assert np.array_equal(RngStream(77, 1000).symbols(10, 20), later_first)


def test_distinct_indices_give_distinct_streams():
    assert not np.array_equal(RngStream(1, 0).symbols(2**30, 8), RngStream(1, 1).symbols(2**30, 8))
    assert not np.array_equal(RngStream(1, 0).symbols(2**30, 8), RngStream(2, 0).symbols(2**30, 8))


def test_symbol_frequencies_m6():
    # 6e6 draws; each count is Binomial(6e6, 1/6), sd = sqrt(6e6 * 1/6 * 5/6)
    x = RngStream(2024, 0).symbols(6, 6_000_000)
    counts = np.bincount(x, minlength=6)
    sd = np.sqrt(6e6 * (1 / 6) * (5 / 6))
    assert np.all(np.abs(counts - 1e6) < 5 * sd)


def test_distinct_streams_pairwise_independent():
    m = 8
    n = 200_000
    for i, j in [(0, 1), (1, 2), (0, 12345)]:
        a = RngStream(99, i).symbols(m, n)
        b = RngStream(99, j).symbols(m, n)
        table = np.zeros((m, m))
        np.add.at(table, (a, b), 1)
        chi2 = ((table - n / m**2) ** 2 / (n / m**2)).sum()
        # 63 degrees of freedom
        assert sps.chi2.sf(chi2, m * m - 1) > 1e-4


def test_uniform_open_interval():
    u = RngStream(0, 0).uniform_open(100_000)
    assert u.min() > 0 and u.max() < 1
    assert abs(u.mean() - 0.5) < 0.005


def test_stream_rejects_bad_seed():
    with pytest.raises(DomainError):
        RngStream(-1, 0)
    with pytest.raises(DomainError):
        RngStream(0, 2**64)
