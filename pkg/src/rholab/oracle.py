"""Exact laws for tiny (m, k) by enumerating every map and every seed."""

from __future__ import annotations

import itertools
from collections import Counter
from dataclasses import dataclass
from fractions import Fraction
from typing import Sequence

from rholab.core import CapacityError, Params
from rholab.mapgraph import decompose
from rholab.seqsim import sample_rho_from_stream

MAP_WORK_LIMIT = 10**9
SEQUENCE_LIMIT = 10**8


@dataclass
class ExactDistribution:
    """Exact joint law of (mu, tau) for a random map and a random seed.

    All probabilities are ``Fraction``; ``as_float`` gives a float view.
    ``E_num_cycles`` is the mean over maps of the number of distinct cycles
    of the window graph; ``P_no_seed_period1`` is the fraction of maps with
    no seed falling into a cycle of length 1.
    """

    params: Params
    joint: dict[tuple[int, int], Fraction]
    marginal_tau: dict[int, Fraction]
    marginal_period: dict[int, Fraction]
    E_tau: Fraction
    P_period1: Fraction
    E_num_cycles: Fraction
    P_no_seed_period1: Fraction
    E_tau_star: Fraction

    def as_float(self, which: str = "joint") -> dict:
        return {key: float(v) for key, v in getattr(self, which).items()}

    def to_dict(self) -> dict:
        return {
            "m": self.params.m,
            "k": self.params.k,
            "joint": [
                {"mu": mu, "tau": tau, "p": float(p), "p_exact": str(p)}
                for (mu, tau), p in sorted(self.joint.items())
            ],
            "marginal_tau": {str(t): float(p) for t, p in sorted(self.marginal_tau.items())},
            "marginal_period": {str(t): float(p) for t, p in sorted(self.marginal_period.items())},
            "E_tau": float(self.E_tau),
            "P_period1": float(self.P_period1),
            "E_num_cycles": float(self.E_num_cycles),
            "P_no_seed_period1": float(self.P_no_seed_period1),
            "E_tau_star": float(self.E_tau_star),
            "exact": {
                name: str(getattr(self, name))
                for name in ("E_tau", "P_period1", "E_num_cycles", "P_no_seed_period1", "E_tau_star")
            },
        }


def map_work(params: Params) -> int:
    return params.m**params.M * params.M * params.M


def _marginals(joint: Counter, total: int):
    tau_c: Counter = Counter()
    per_c: Counter = Counter()
    for (mu, tau), c in joint.items():
        tau_c[tau] += c
        per_c[tau - mu] += c
    as_p = lambda cnt: {key: Fraction(c, total) for key, c in sorted(cnt.items())}
    return as_p(joint), as_p(tau_c), as_p(per_c)


def enumerate_maps_exact(params: Params, symbol_order: Sequence[int] | None = None,
                         work_limit: int = MAP_WORK_LIMIT) -> ExactDistribution:
    """Walk every table (odometer order) and every seed, counting exactly.

    ``symbol_order`` permutes the digit values the odometer runs through;
    any permutation visits the same set of maps, so results must not change.
    """
    work = map_work(params)
    if work > work_limit:
        raise CapacityError(f"exhaustive map enumeration needs work {work} > limit {work_limit}")
    m, k, M, high = params.m, params.k, params.M, params.high
    order = list(range(m)) if symbol_order is None else list(symbol_order)
    if sorted(order) != list(range(m)):
        raise ValueError("symbol_order must be a permutation of range(m)")
    base = [(c % high) * m for c in range(M)]
    diag = [j * sum(m**r for r in range(k)) for j in range(m)]

    joint: Counter = Counter()
    cycles_total = 0
    no_period1_maps = 0
    tau_star_total = 0
    n_maps = 0
    for table in itertools.product(order, repeat=M):
        succ = [b + v for b, v in zip(base, table)]
        dist, cyc, hist = decompose(succ)
        tau_star = 0
        for d, c in zip(dist, cyc):
            tau = d + c + k
            joint[(d + k, tau)] += 1
            if tau > tau_star:
                tau_star = tau
        cycles_total += sum(hist.values())
        tau_star_total += tau_star
        if not any(table[d] == j for j, d in enumerate(diag)):
            no_period1_maps += 1
        n_maps += 1

    total = n_maps * M
    joint_p, tau_p, per_p = _marginals(joint, total)
    return ExactDistribution(
        params=params,
        joint=joint_p,
        marginal_tau=tau_p,
        marginal_period=per_p,
        E_tau=sum((t * p for t, p in tau_p.items()), Fraction(0)),
        P_period1=per_p.get(1, Fraction(0)),
        E_num_cycles=Fraction(cycles_total, n_maps),
        P_no_seed_period1=Fraction(no_period1_maps, n_maps),
        E_tau_star=Fraction(tau_star_total, n_maps),
    )


def enumerate_sequences_exact(params: Params, limit: int = SEQUENCE_LIMIT) -> dict[tuple[int, int], Fraction]:
    """Exact (mu, tau) pmf from all IID symbol sequences of length M + k.

    M + k symbols always contain a repeated window, so every sequence
    resolves; each carries weight m^-(M + k).
    """
    horizon = params.M + params.k
    count = params.m**horizon
    if count > limit:
        raise CapacityError(f"sequence enumeration needs {count} sequences > limit {limit}")
    joint: Counter = Counter()
    for seq in itertools.product(range(params.m), repeat=horizon):
        r = sample_rho_from_stream(seq, params)
        joint[(r.mu, r.tau)] += 1
    return {key: Fraction(c, count) for key, c in sorted(joint.items())}
