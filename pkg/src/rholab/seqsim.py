"""Rho shape of the window sequence driven by IID uniform symbols.

While no window has repeated, the next symbol of a random-map trajectory is
uniform and independent of the past, so (mu, tau) can be sampled from an IID
symbol stream without ever drawing the map.

Indexing: symbols are X_1, X_2, ...; window W_i = (X_i, ..., X_{i+k-1}).  If
W_R is the first window equal to an earlier W_s, then tau = R + k - 1,
mu = s + k - 1 and the period is R - s.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field
from typing import Iterable

import numpy as np

from rholab import theory
from rholab._parallel import map_index_range
from rholab.core import DomainError, Params, RngStream, isqrt_floor, roll_window, window_codes
from rholab.stats import StatSummary, summarize


class IncompleteTrajectoryError(RuntimeError):
    """A finite driver ran out of symbols before any window repeated."""


class UnsupportedArityError(ValueError):
    pass


@dataclass(frozen=True)
class RhoResult:
    mu: int
    tau: int
    period: int
    tail: int

    @classmethod
    def from_repeat(cls, R: int, s: int, k: int) -> "RhoResult":
        """Build from the 1-based indices of the repeating window and its twin."""
        return cls(mu=s + k - 1, tau=R + k - 1, period=R - s, tail=s - 1)


@dataclass
class HazardTrace:
    """Per-step hazard quantities for k = 2, indexed by symbol position.

    Arrays run over j = 1 .. tau - 1, so ``Y[j - 1]`` is Y_j, the number of
    earlier positions holding the same symbol as X_j.
    """

    Y: np.ndarray
    A: np.ndarray
    h_steps: np.ndarray
    h_star: float
    h_total: float
    H: np.ndarray
    T: np.ndarray

    @property
    def h_full(self) -> float:
        """Sum of h(j) over j <= tau - 1, the un-truncated accumulated hazard."""
        return float(np.sum(self.h_steps))


# ---------------------------------------------------------------- detection


def sample_rho_from_stream(driver: Iterable[int], params: Params) -> RhoResult:
    """Consume symbols until a window repeats.  Reference loop; no numpy."""
    k, m = params.k, params.m
    it = iter(driver)
    window = []
    try:
        for _ in range(k):
            x = next(it)
            if not 0 <= x < m:
                raise DomainError(f"symbol {x!r} outside [0, {m})")
            window.append(x)
        code = 0
        for x in window:
            code = code * m + x
        seen = {code: 1}
        idx = 1
        while True:
            code = roll_window(code, next(it), params)
            idx += 1
            if code in seen:
                return RhoResult.from_repeat(idx, seen[code], k)
            seen[code] = idx
    except StopIteration:
        raise IncompleteTrajectoryError("driver exhausted before a window repeated") from None


def first_repeat(codes: np.ndarray) -> tuple[int, int] | None:
    """1-based (R, s) of the first code equal to an earlier one, or None."""
    order = np.argsort(codes, kind="stable")
    sc = codes[order]
    dup = np.flatnonzero(sc[1:] == sc[:-1])
    if dup.size == 0:
        return None
    r = int(order[dup + 1].min())
    s = int(np.flatnonzero(codes[:r] == codes[r])[0])
    return r + 1, s + 1


def _initial_chunk(params: Params) -> int:
    # tau <= M + k always; P(tau > 3 sqrt(M)) is about e^-4.5
    return int(min(params.M + params.k, max(64, 3 * isqrt_floor(params.M) + params.k)))


def _first_repeat_small(symbols: list[int], params: Params) -> tuple[int, int] | None:
    k, m, high = params.k, params.m, params.high
    code = 0
    for x in symbols[:k]:
        code = code * m + x
    seen = {code: 1}
    for idx in range(2, len(symbols) - k + 2):
        code = (code % high) * m + symbols[idx + k - 2]
        if code in seen:
            return idx, seen[code]
        seen[code] = idx
    return None


_SMALL = 256


def _draw_until_repeat(params: Params, stream: RngStream) -> tuple[np.ndarray, int, int]:
    n0 = _initial_chunk(params)
    buf = stream.symbols(params.m, n0)
    if n0 <= _SMALL:
        hit = _first_repeat_small(buf.tolist(), params)
        if hit is not None:
            return buf, hit[0], hit[1]
    while True:
        hit = first_repeat(window_codes(buf, params))
        if hit is not None:
            return buf, hit[0], hit[1]
        extra = min(len(buf), params.M + params.k - len(buf))
        buf = np.concatenate([buf, stream.symbols(params.m, extra)])


def sample_rho(params: Params, stream: RngStream) -> RhoResult:
    """(mu, tau, period) for a uniformly random map and a uniformly random seed."""
    _, R, s = _draw_until_repeat(params, stream)
    return RhoResult.from_repeat(R, s, params.k)


# ------------------------------------------------------------------- hazard


def occurrence_ranks(x: np.ndarray) -> np.ndarray:
    """For each position, how many earlier positions hold the same value."""
    n = len(x)
    order = np.argsort(x, kind="stable")
    sx = x[order]
    starts = np.flatnonzero(np.r_[True, sx[1:] != sx[:-1]])
    group_start = np.repeat(starts, np.diff(np.r_[starts, n]))
    ranks = np.empty(n, dtype=np.int64)
    ranks[order] = np.arange(n) - group_start
    return ranks


def linearized_hazard(symbols: np.ndarray, m: int) -> np.ndarray:
    """H(j) = sum_{i <= j} Y_i / m for j = 1 .. len(symbols)."""
    return np.cumsum(occurrence_ranks(np.asarray(symbols))) / m


def hazard_trace(symbols: np.ndarray, tau: int, m: int, u: float) -> HazardTrace:
    """Hazard quantities for a k = 2 trajectory stopped at ``tau``.

    ``u`` in (0, 1) drives the fractional terminal hazard h*.
    """
    x = np.asarray(symbols[: tau - 1], dtype=np.int64)
    Y = occurrence_ranks(x)
    A = Y / m
    with np.errstate(divide="ignore"):
        h = -np.log1p(-A)
    # a repeat at tau needs Y_{tau-1} >= 1, so the last hazard is positive
    assert h[-1] > 0
    h_star = theory.conditioned_exp_from_uniform(float(h[-1]), u)
    h_total = h_star + math.fsum(h[:-1].tolist())
    return HazardTrace(
        Y=Y,
        A=A,
        h_steps=h,
        h_star=h_star,
        h_total=h_total,
        H=np.cumsum(Y) / m,
        T=np.bincount(x, minlength=m),
    )


def _hazard_scalars(symbols: list[int], tau: int, m: int, u: float) -> tuple[float, float, int]:
    """(h_total, H(tau - 1), max Y) without building a trace; same arithmetic."""
    counts: dict[int, int] = {}
    hs = []
    ysum = 0
    ymax = 0
    for x in symbols[: tau - 1]:
        y = counts.get(x, 0)
        counts[x] = y + 1
        ysum += y
        if y > ymax:
            ymax = y
        hs.append(-math.log1p(-y / m) if y < m else math.inf)
    h_star = theory.conditioned_exp_from_uniform(hs[-1], u)
    return h_star + math.fsum(hs[:-1]), ysum / m, ymax


def hazard_from_stream(driver: Iterable[int], params: Params, u: float) -> tuple[RhoResult, HazardTrace]:
    if params.k != 2:
        raise UnsupportedArityError(f"hazard instrumentation needs k = 2, got k = {params.k}")
    symbols = []
    it = iter(driver)

    def recording():
        for x in it:
            symbols.append(x)
            yield x

    rho = sample_rho_from_stream(recording(), params)
    return rho, hazard_trace(np.array(symbols), rho.tau, params.m, u)


def sample_rho_with_hazard(params: Params, stream: RngStream) -> tuple[RhoResult, HazardTrace]:
    """Like :func:`sample_rho` on the same stream, plus the hazard trace.

    The symbols consumed are identical to :func:`sample_rho`; one extra
    uniform is drawn afterwards for h*.
    """
    if params.k != 2:
        raise UnsupportedArityError(f"hazard instrumentation needs k = 2, got k = {params.k}")
    buf, R, s = _draw_until_repeat(params, stream)
    rho = RhoResult.from_repeat(R, s, params.k)
    return rho, hazard_trace(buf, rho.tau, params.m, stream.uniform_open())


def sample_linearized_hazard(m: int, steps: int, stream: RngStream) -> float:
    """H(steps) for a fresh IID sequence of ``steps`` symbols (no stopping).

    Uses the occupancy form sum_v C(T(v), 2) / m.
    """
    return occupancy_hazard(stream.symbols(m, steps), m)


def occupancy_hazard(symbols: np.ndarray, m: int) -> float:
    T = np.bincount(symbols, minlength=m)
    return int(np.sum(T * (T - 1))) // 2 / m


# -------------------------------------------------------------------- batch


@dataclass
class BatchResult:
    params: Params
    master_seed: int
    records: dict[str, np.ndarray]
    summary: StatSummary
    options: dict = field(default_factory=dict)


def _rho_chunk(start: int, stop: int, m: int, k: int, seed: int, hazard: bool) -> dict[str, np.ndarray]:
    params = Params(m, k)
    n = stop - start
    mu = np.empty(n, dtype=np.int64)
    tau = np.empty(n, dtype=np.int64)
    out = {"trial": np.arange(start, stop, dtype=np.int64), "mu": mu, "tau": tau}
    if hazard:
        h_total = np.empty(n)
        H_final = np.empty(n)
        max_Y = np.empty(n, dtype=np.int64)
        out.update(h_total=h_total, H_final=H_final, max_Y=max_Y)
    for t in range(n):
        stream = RngStream(seed, start + t)
        if hazard:
            buf, R, s = _draw_until_repeat(params, stream)
            rho = RhoResult.from_repeat(R, s, k)
            u = stream.uniform_open()
            if rho.tau <= _SMALL:
                h_total[t], H_final[t], max_Y[t] = _hazard_scalars(buf.tolist(), rho.tau, m, u)
            else:
                trace = hazard_trace(buf, rho.tau, m, u)
                h_total[t], H_final[t], max_Y[t] = trace.h_total, trace.H[-1], trace.Y.max()
        else:
            rho = sample_rho(params, stream)
        mu[t] = rho.mu
        tau[t] = rho.tau
    out["period"] = tau - mu
    return out


def _h_chunk(start: int, stop: int, m: int, steps: int, seed: int) -> dict[str, np.ndarray]:
    vals = np.array([sample_linearized_hazard(m, steps, RngStream(seed, i)) for i in range(start, stop)])
    return {"H": vals}


def batch_linearized_hazard(m: int, steps: int, n_trials: int, master_seed: int,
                            workers: int | None = None) -> np.ndarray:
    return map_index_range(_h_chunk, n_trials, (m, steps, master_seed), workers)["H"]


def summarize_rho(params: Params, records: dict[str, np.ndarray], x_threshold: float = 1.0,
                  max_period: int = 10) -> StatSummary:
    """Moments of tau and derived scalars, folded in trial order."""
    tau = records["tau"].astype(float)
    mu = records["mu"].astype(float)
    scaled = tau * tau / (2.0 * params.M)
    summary = summarize(tau)
    ratio = mu / tau
    n = len(tau)
    extra = {
        "x_threshold": float(x_threshold),
        "p_scaled_tau_ge_x": float(np.mean(scaled >= x_threshold)),
        "mean_mu_over_tau": float(np.mean(ratio)),
        "mean_scaled_tau": float(np.mean(scaled)),
    }
    if n > 1 and np.std(ratio) > 0 and np.std(tau) > 0:
        extra["corr_mu_over_tau_tau"] = float(np.corrcoef(ratio, tau)[0, 1])
    counts = np.bincount(records["period"], minlength=max_period + 1)
    for p in range(1, max_period + 1):
        extra[f"p_period_{p}"] = float(counts[p] / n)
    summary.extra.update(extra)
    return summary


def batch_sample(
    params: Params,
    n_trials: int,
    master_seed: int,
    hazard: bool = False,
    x_threshold: float = 1.0,
    workers: int | None = None,
) -> BatchResult:
    """Run ``n_trials`` independent trajectories; trial i uses stream i.

    The summary does not depend on ``workers``.
    """
    if n_trials < 1:
        raise DomainError("n_trials must be >= 1")
    if hazard and params.k != 2:
        raise UnsupportedArityError(f"hazard instrumentation needs k = 2, got k = {params.k}")
    records = map_index_range(
        _rho_chunk, n_trials, (params.m, params.k, int(master_seed), hazard), workers
    )
    summary = summarize_rho(params, records, x_threshold)
    if hazard:
        h = summarize(records["h_total"], theory.exponential_cdf)
        summary.extra.update(
            h_total_mean=h.mean,
            h_total_ks_D=h.ks.D,
            h_total_ks_p=h.ks.p_value,
        )
    return BatchResult(
        params=params,
        master_seed=int(master_seed),
        records=records,
        summary=summary,
        options={"hazard": hazard, "x_threshold": x_threshold},
    )
