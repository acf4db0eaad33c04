"""Goodness-of-fit tests, distances between pmfs and moment summaries."""

from __future__ import annotations

import math
from dataclasses import dataclass, field
from typing import Callable, Iterable, Mapping, Sequence

import numpy as np
from scipy.special import gammaincc

from rholab.core import DomainError


@dataclass(frozen=True)
class KSResult:
    D: float
    p_value: float
    n: int
    # asymptotic p-values are rough for small samples
    approximate: bool


@dataclass(frozen=True)
class ChiSquareResult:
    statistic: float
    dof: int
    p_value: float


@dataclass
class StatSummary:
    """Moments of a sample with standard errors, plus optional KS and extras."""

    n: int
    mean: float
    mean_se: float
    variance: float
    variance_se: float
    ks: KSResult | None = None
    extra: dict[str, float] = field(default_factory=dict)

    def to_dict(self) -> dict:
        out = {
            "n": self.n,
            "mean": self.mean,
            "mean_se": self.mean_se,
            "variance": self.variance,
            "variance_se": self.variance_se,
            "extra": dict(self.extra),
        }
        if self.ks is not None:
            out["ks"] = {"D": self.ks.D, "p_value": self.ks.p_value, "approximate": self.ks.approximate}
        return out


def kolmogorov_sf(lam: float, terms: int = 100) -> float:
    """P(K > lam) for the limiting Kolmogorov distribution."""
    if lam <= 0:
        return 1.0
    if lam < 1.0:
        # theta-function form converges fast for small arguments
        s = sum(
            math.exp(-((2 * j - 1) ** 2) * math.pi**2 / (8 * lam * lam))
            for j in range(1, terms + 1)
        )
        p = 1.0 - math.sqrt(2 * math.pi) / lam * s
    else:
        p = 2.0 * sum((-1) ** (j - 1) * math.exp(-2.0 * j * j * lam * lam) for j in range(1, terms + 1))
    return min(1.0, max(0.0, p))


def ks_statistic(samples: Iterable[float], cdf: Callable[[np.ndarray], np.ndarray]) -> float:
    x = np.sort(np.asarray(samples, dtype=float))
    n = len(x)
    if n == 0:
        raise DomainError("KS test needs at least one sample")
    F = np.asarray(cdf(x), dtype=float)
    i = np.arange(1, n + 1)
    return float(max(np.max(i / n - F), np.max(F - (i - 1) / n)))


def ks_test(samples: Iterable[float], cdf: Callable[[np.ndarray], np.ndarray]) -> KSResult:
    """One-sample Kolmogorov-Smirnov test against a fully specified CDF.

    ``cdf`` is applied to a sorted float array and must be vectorized.
    The p-value uses the asymptotic law of sqrt(n) * D.
    """
    samples = np.asarray(samples, dtype=float)
    D = ks_statistic(samples, cdf)
    n = len(samples)
    return KSResult(D=D, p_value=kolmogorov_sf(math.sqrt(n) * D), n=n, approximate=n < 35)


def _merge_small_bins(obs: np.ndarray, exp_counts: np.ndarray, min_expected: float):
    merged_o, merged_e = [], []
    acc_o = acc_e = 0.0
    for o, e in zip(obs, exp_counts):
        acc_o += o
        acc_e += e
        if acc_e >= min_expected:
            merged_o.append(acc_o)
            merged_e.append(acc_e)
            acc_o = acc_e = 0.0
    if acc_e > 0 or acc_o > 0:
        if merged_e:
            merged_o[-1] += acc_o
            merged_e[-1] += acc_e
        else:
            merged_o.append(acc_o)
            merged_e.append(acc_e)
    return np.array(merged_o), np.array(merged_e)


def chi_square_gof(
    observed: Sequence[float], expected: Sequence[float], min_expected: float = 5.0
) -> ChiSquareResult:
    """Pearson chi-square of observed counts against expected probabilities.

    Adjacent bins are pooled (left to right) until each pooled bin expects at
    least ``min_expected`` counts.
    """
    obs = np.asarray(observed, dtype=float)
    probs = np.asarray(expected, dtype=float)
    if obs.shape != probs.shape:
        raise DomainError(f"observed has {obs.size} bins but expected has {probs.size}")
    n = obs.sum()
    if n < 1:
        raise DomainError("need at least one observation")
    if np.any(probs < 0) or abs(probs.sum() - 1.0) > 1e-9:
        raise DomainError("expected probabilities must be nonnegative and sum to 1")
    o, e = _merge_small_bins(obs, probs * n, min_expected)
    keep = e > 0
    if np.any(o[~keep] > 0):
        return ChiSquareResult(statistic=math.inf, dof=max(int(keep.sum()) - 1, 0), p_value=0.0)
    o, e = o[keep], e[keep]
    stat = float(np.sum((o - e) ** 2 / e))
    dof = len(e) - 1
    p = 1.0 if dof <= 0 else float(gammaincc(dof / 2.0, stat / 2.0))
    return ChiSquareResult(statistic=stat, dof=dof, p_value=p)


def _check_pmf(p: Mapping, name: str) -> None:
    vals = list(p.values())
    if any(v < 0 for v in vals) or abs(math.fsum(vals) - 1.0) > 1e-9:
        raise DomainError(f"{name} is not a normalized pmf (sum={math.fsum(vals)!r})")


def tv_distance(p: Mapping, q: Mapping) -> float:
    """Half the L1 distance between two pmfs given as ``{atom: prob}``."""
    _check_pmf(p, "p")
    _check_pmf(q, "q")
    support = set(p) | set(q)
    return 0.5 * math.fsum(abs(float(p.get(a, 0.0)) - float(q.get(a, 0.0))) for a in support)


def poisson_pmf(lam: float, j: int) -> float:
    if lam < 0:
        raise DomainError("Poisson mean must be nonnegative")
    if j < 0:
        return 0.0
    if lam == 0:
        return 1.0 if j == 0 else 0.0
    return math.exp(-lam + j * math.log(lam) - math.lgamma(j + 1))


def poisson_truncation(lam: float) -> int:
    """Index beyond which the Poisson(lam) tail is negligible (< 1e-12)."""
    return int(math.ceil(lam + 40.0 * math.sqrt(lam) + 40.0))


def empirical_pmf(values: Iterable) -> dict:
    vals, counts = np.unique(np.asarray(list(values) if not isinstance(values, np.ndarray) else values),
                             return_counts=True)
    n = counts.sum()
    return {v.item(): c / n for v, c in zip(vals, counts)}


def tv_to_poisson(samples: np.ndarray, lam: float) -> float:
    """TV distance between the empirical law of integer samples and Poisson(lam)."""
    samples = np.asarray(samples, dtype=np.int64)
    top = max(int(samples.max()), poisson_truncation(lam))
    counts = np.bincount(samples, minlength=top + 1) / len(samples)
    pois = np.array([poisson_pmf(lam, j) for j in range(top + 1)])
    tail = max(0.0, 1.0 - math.fsum(pois))
    return 0.5 * (math.fsum(np.abs(counts - pois)) + tail)


def summarize(samples: Iterable[float], cdf: Callable | None = None) -> StatSummary:
    """Mean and variance with standard errors; KS against ``cdf`` when given."""
    x = np.asarray(samples, dtype=float)
    n = len(x)
    if n == 0:
        raise DomainError("cannot summarize an empty sample")
    mean = float(np.mean(x))
    var = float(np.var(x, ddof=1)) if n > 1 else 0.0
    mean_se = math.sqrt(var / n) if n > 1 else 0.0
    if n > 1:
        m4 = float(np.mean((x - mean) ** 4))
        var_se = math.sqrt(max(m4 - var * var, 0.0) / n)
    else:
        var_se = 0.0
    ks = ks_test(x, cdf) if cdf is not None else None
    return StatSummary(n=n, mean=mean, mean_se=mean_se, variance=var, variance_se=var_se, ks=ks)


def binomial_se(p: float, n: int) -> float:
    return math.sqrt(max(p * (1.0 - p), 0.0) / n)
