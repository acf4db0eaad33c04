"""Monte Carlo law of the repeated-window count Z against its Poisson limit."""

from __future__ import annotations

import math
from collections import Counter
from dataclasses import dataclass

import numpy as np

from rholab import theory
from rholab._parallel import map_index_range
from rholab.core import DomainError, Params, RngStream, window_codes
from rholab.stats import tv_to_poisson

MIN_TRIALS = 10_000


@dataclass(frozen=True)
class CollisionRecord:
    z: int
    params: Params
    x: float
    N: int


def pair_collisions(codes: np.ndarray) -> int:
    """Number of unordered index pairs holding equal codes."""
    n = len(codes)
    if n < 2:
        return 0
    if n <= 256:
        return sum(c * (c - 1) // 2 for c in Counter(codes.tolist()).values())
    s = np.sort(codes)
    ends = np.flatnonzero(s[1:] != s[:-1])
    runs = np.diff(np.concatenate(([-1], ends, [n - 1])))
    return int(np.sum(runs * (runs - 1) // 2))


def sample_Z(params: Params, x: float, stream: RngStream) -> CollisionRecord:
    """Count equal pairs among the N + 1 windows built from N + k IID symbols.

    Z = 0 exactly when those windows are distinct, i.e. when the
    first-repeat time of the same symbol stream satisfies tau > N + k.
    """
    N = theory.chen_stein_bounds(params, x).N
    symbols = stream.symbols(params.m, N + params.k)
    return CollisionRecord(z=pair_collisions(window_codes(symbols, params)), params=params, x=float(x), N=N)


def _z_chunk(start: int, stop: int, m: int, k: int, x: float, seed: int) -> dict[str, np.ndarray]:
    params = Params(m, k)
    N = theory.chen_stein_bounds(params, x).N
    z = np.empty(stop - start, dtype=np.int64)
    for t in range(stop - start):
        symbols = RngStream(seed, start + t).symbols(m, N + k)
        z[t] = pair_collisions(window_codes(symbols, params))
    return {"trial": np.arange(start, stop, dtype=np.int64), "z": z}


def batch_Z(params: Params, x: float, n_trials: int, master_seed: int,
            workers: int | None = None) -> dict[str, np.ndarray]:
    return map_index_range(_z_chunk, n_trials, (params.m, params.k, float(x), int(master_seed)), workers)


@dataclass
class PoissonGap:
    bounds: theory.TheoryBounds
    n_trials: int
    tv_empirical: float
    tv_error_bar: float
    p0_empirical: float
    p0_poisson: float
    p0_gap: float
    mean_z: float
    mean_z_se: float
    mean_z_exact: float

    @property
    def bound(self) -> float:
        return self.bounds.bound

    def to_dict(self) -> dict:
        return {
            "bounds": self.bounds.to_dict(),
            "n_trials": self.n_trials,
            "tv_empirical": self.tv_empirical,
            "tv_error_bar": self.tv_error_bar,
            "bound": self.bound,
            "p0_empirical": self.p0_empirical,
            "p0_poisson": self.p0_poisson,
            "p0_gap": self.p0_gap,
            "mean_z": self.mean_z,
            "mean_z_se": self.mean_z_se,
            "mean_z_exact": self.mean_z_exact,
        }


def gap_from_samples(params: Params, x: float, z: np.ndarray) -> PoissonGap:
    """Compare sampled Z against Poisson(lambda), lambda = C(N, 2) m^-k."""
    bounds = theory.chen_stein_bounds(params, x)
    n = len(z)
    lam = bounds.lambda_
    p0 = float(np.mean(z == 0))
    support = int(z.max()) + 1
    return PoissonGap(
        bounds=bounds,
        n_trials=n,
        tv_empirical=tv_to_poisson(z, lam),
        tv_error_bar=math.sqrt(support / n),
        p0_empirical=p0,
        p0_poisson=math.exp(-lam),
        p0_gap=abs(p0 - math.exp(-lam)),
        mean_z=float(np.mean(z)),
        mean_z_se=float(np.std(z, ddof=1) / math.sqrt(n)),
        # E Z over the N + 1 windows actually sampled
        mean_z_exact=bounds.pair_count_alt * theory.window_collision_prob(params, 0, 1),
    )


def poisson_gap(params: Params, x: float, n_trials: int, master_seed: int,
                workers: int | None = None) -> PoissonGap:
    if n_trials < MIN_TRIALS:
        raise DomainError(f"poisson_gap needs at least {MIN_TRIALS} trials, got {n_trials}")
    z = batch_Z(params, x, n_trials, master_seed, workers)["z"]
    return gap_from_samples(params, x, z)
