"""Closed-form reference values for the rho shape of random k-ary maps."""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np

from rholab.core import DomainError, Params, RngStream, isqrt_floor


@dataclass(frozen=True)
class TauMoments:
    mean: float
    variance: float
    # moment convergence is only proven for k = 2; other k rely on the
    # distributional limit of tau^2 / (2 m^k)
    heuristic: bool


@dataclass(frozen=True)
class TheoryBounds:
    """Poisson-approximation quantities for the count of repeated windows.

    ``lambda_`` is C(N, 2) / m^k; ``pair_count_alt`` = C(N+1, 2) is the number
    of index pairs 0 <= i < j <= N, exposed alongside because the two differ.
    """

    x: float
    N: int
    lambda_: float
    b1: float
    b2: float
    pair_count: int
    pair_count_alt: int

    @property
    def bound(self) -> float:
        return self.b1 + self.b2

    def to_dict(self) -> dict:
        return {
            "x": self.x,
            "N": self.N,
            "lambda": self.lambda_,
            "b1": self.b1,
            "b2": self.b2,
            "b1_plus_b2": self.bound,
            "pair_count": self.pair_count,
            "pair_count_alt": self.pair_count_alt,
        }


def _inv_power(m: int, e: float) -> float:
    """m ** -e, through logs when the direct power would leave double range."""
    if e * math.log(m) > 600:
        return math.exp(-e * math.log(m))
    return float(m) ** -e


def asymptotic_tau_moments(params: Params) -> TauMoments:
    scale = math.exp(0.5 * params.k * math.log(params.m)) if params.m > 1 else 1.0
    return TauMoments(
        mean=scale * math.sqrt(math.pi / 2),
        variance=(2 - math.pi / 2) * scale * scale,
        heuristic=params.k != 2,
    )


def exponential_tail(x: float) -> float:
    if x < 0:
        raise DomainError(f"x must be nonnegative, got {x!r}")
    return math.exp(-x)


def exponential_cdf(t):
    t = np.asarray(t, dtype=float)
    return np.where(t > 0, -np.expm1(-np.maximum(t, 0.0)), 0.0)


def uniform_cdf(t):
    return np.clip(np.asarray(t, dtype=float), 0.0, 1.0)


def conditioned_exp_cdf(x: float):
    """CDF of a mean-1 exponential conditioned to lie below ``x``."""
    norm = -math.expm1(-x)

    def cdf(t):
        t = np.clip(np.asarray(t, dtype=float), 0.0, x)
        return -np.expm1(-t) / norm

    return cdf


def birthday_survival(M: int, n: int) -> float:
    """P(the first n uniform draws from a population of M are all distinct)."""
    if M < 1 or n < 0:
        raise DomainError("need M >= 1 and n >= 0")
    if n > M:
        return 0.0
    p = 1.0
    for i in range(1, n):
        p *= 1.0 - i / M
    return p


def birthday_mean(M: int) -> float:
    """Expected number of draws until the first repeat, by summing survivals."""
    total = 0.0
    p = 1.0
    # survival(0) = survival(1) = 1
    total += 1.0
    for n in range(1, M + 1):
        total += p
        p *= 1.0 - n / M
    return total


def chen_stein_bounds(params: Params, x: float) -> TheoryBounds:
    if not x > 0:
        raise DomainError(f"x must be positive, got {x!r}")
    m, k = params.m, params.k
    N = isqrt_floor(2.0 * params.M * x)
    pairs = N * (N - 1) // 2
    pk = _inv_power(m, k)
    lam = pairs * pk
    b1 = lam * (8 * k * N) * pk
    b2 = pairs * (16 * k * k * _inv_power(m, k + 1) + 8 * k * N * _inv_power(m, 2 * k))
    return TheoryBounds(
        x=float(x),
        N=N,
        lambda_=lam,
        b1=b1,
        b2=b2,
        pair_count=pairs,
        pair_count_alt=N * (N + 1) // 2,
    )


def hazard_H_moments(steps: int, m: int) -> tuple[float, float]:
    """Exact mean and variance of the linearized hazard after ``steps`` IID symbols."""
    if steps < 2 or m < 1:
        raise DomainError("need steps >= 2 and m >= 1")
    pairs = math.comb(steps, 2)
    return pairs / m**2, pairs * (1.0 / m**3 - 1.0 / m**4)


def conditioned_exp_from_uniform(x: float, u: float) -> float:
    """Inverse CDF of Exp(1) conditioned below ``x``, evaluated at ``u``.

    ``x`` may be infinite, in which case this is the plain Exp(1) quantile.
    """
    if not x > 0:
        raise DomainError(f"x must be positive, got {x!r}")
    value = -math.log1p(u * math.expm1(-x))
    # rounding can land exactly on x for u near 1
    return value if value < x else math.nextafter(x, 0.0)


def sample_conditioned_exp(x: float, stream: RngStream) -> float:
    if not x > 0:
        raise DomainError(f"x must be positive, got {x!r}")
    return conditioned_exp_from_uniform(x, stream.uniform_open())


def window_collision_prob(params: Params, i: int, j: int) -> float:
    """P(W_i = W_j) for IID uniform symbols; m^-k even when the windows overlap."""
    if i >= j:
        raise DomainError(f"need i < j, got ({i}, {j})")
    return _inv_power(params.m, params.k)


def diag_fixed_point_exact(m: int) -> float:
    """P(some symbol j has f(j, ..., j) = j) for a uniformly random map."""
    if m < 1:
        raise DomainError("m must be >= 1")
    return 1.0 - (1.0 - 1.0 / m) ** m


def tau_star_threshold(params: Params, b: float = 3.0) -> float:
    """sqrt(b k m^k log m), above which tau* is unlikely once b > 2."""
    return math.sqrt(b * params.k * params.M * math.log(params.m))
