"""Explicit random maps [m]^k -> [m] and their functional graphs on windows."""

from __future__ import annotations

import math
from collections import Counter
from dataclasses import dataclass, field

import numpy as np

from rholab._parallel import map_index_range
from rholab.core import CapacityError, DomainError, Params, RngStream
from rholab.seqsim import RhoResult

DEFAULT_BUDGET = 10**8


class MapTable:
    """A map f: [m]^k -> [m] stored by window code.

    ``mode="dense"`` draws all M values up front, in code order.
    ``mode="lazy"`` draws each value from the stream on first access and
    memoizes it; both modes give every entry an independent uniform value.
    """

    def __init__(self, params: Params, values=None, stream: RngStream | None = None,
                 mode: str = "dense") -> None:
        if mode not in ("dense", "lazy"):
            raise DomainError(f"unknown map mode {mode!r}")
        self.params = params
        self.mode = mode
        if mode == "dense":
            values = np.asarray(values, dtype=np.int64)
            if values.shape != (params.M,):
                raise DomainError(f"dense table needs {params.M} entries, got {values.shape}")
            if values.size and (values.min() < 0 or values.max() >= params.m):
                raise DomainError("table values must lie in [0, m)")
            self.values = values
            self._memo = None
            self._stream = None
        else:
            if stream is None:
                raise DomainError("lazy map needs a stream")
            self.values = None
            self._memo: dict[int, int] = {}
            self._stream = stream

    @classmethod
    def from_function(cls, params: Params, func) -> "MapTable":
        """Dense table from a Python callable on symbol tuples (testing aid)."""
        from rholab.core import decode_window

        return cls(params, [func(*decode_window(c, params)) for c in range(params.M)])

    def __getitem__(self, code: int) -> int:
        if self.mode == "dense":
            return int(self.values[code])
        v = self._memo.get(code)
        if v is None:
            v = self._stream.symbol(self.params.m)
            self._memo[code] = v
        return v

    def successors(self) -> np.ndarray:
        """Next-state code for every state (dense only)."""
        if self.mode != "dense":
            raise DomainError("successor array needs a dense map")
        codes = np.arange(self.params.M, dtype=np.int64)
        return (codes % self.params.high) * self.params.m + self.values


@dataclass
class GraphStats:
    tau_star: int
    mean_tau: float
    n_cycles: int
    cycle_length_hist: dict[int, int]
    frac_seeds_period1: float
    has_diag_fixed_point: bool
    tau: np.ndarray = field(repr=False)
    mu: np.ndarray = field(repr=False)

    @property
    def states_on_cycles(self) -> int:
        return sum(length * count for length, count in self.cycle_length_hist.items())

    def to_dict(self) -> dict:
        return {
            "tau_star": self.tau_star,
            "mean_tau": self.mean_tau,
            "n_cycles": self.n_cycles,
            "cycle_length_hist": {str(k): v for k, v in sorted(self.cycle_length_hist.items())},
            "frac_seeds_period1": self.frac_seeds_period1,
            "has_diag_fixed_point": self.has_diag_fixed_point,
        }


def build_map(params: Params, stream: RngStream, mode: str = "dense",
              budget: int = DEFAULT_BUDGET) -> MapTable:
    if mode == "dense":
        if params.M > budget:
            raise CapacityError(f"dense map needs {params.M} entries, budget is {budget}")
        return MapTable(params, stream.symbols(params.m, params.M))
    return MapTable(params, stream=stream, mode=mode)


def trajectory(fmap: MapTable, seed_code: int) -> RhoResult:
    """Iterate the window map from ``seed_code`` until a state repeats."""
    params = fmap.params
    if not 0 <= seed_code < params.M:
        raise DomainError(f"seed code {seed_code!r} outside [0, {params.M})")
    m, high = params.m, params.high
    state = int(seed_code)
    seen = {state: 1}
    idx = 1
    while True:
        state = (state % high) * m + fmap[state]
        idx += 1
        if state in seen:
            return RhoResult.from_repeat(idx, seen[state], params.k)
        seen[state] = idx


def decompose(succ: list[int]) -> tuple[list[int], list[int], Counter]:
    """Distance to cycle and cycle length of every node of a functional graph.

    Iterative three-colour walk; each node is entered once.
    """
    n = len(succ)
    UNSEEN, ON_PATH, DONE = 0, 1, 2
    color = [UNSEEN] * n
    dist = [0] * n
    cyc = [0] * n
    pos = [0] * n
    hist: Counter = Counter()
    for start in range(n):
        if color[start] != UNSEEN:
            continue
        path = []
        v = start
        while color[v] == UNSEEN:
            color[v] = ON_PATH
            pos[v] = len(path)
            path.append(v)
            v = succ[v]
        if color[v] == ON_PATH:
            cut = pos[v]
            length = len(path) - cut
            for u in path[cut:]:
                cyc[u] = length
                color[u] = DONE
            hist[length] += 1
            del path[cut:]
        for u in reversed(path):
            w = succ[u]
            dist[u] = dist[w] + 1
            cyc[u] = cyc[w]
            color[u] = DONE
    return dist, cyc, hist


def diagonal_codes(params: Params) -> np.ndarray:
    """Codes of the constant windows (j, ..., j), indexed by j."""
    unit = sum(params.m**r for r in range(params.k))
    return np.arange(params.m, dtype=np.int64) * unit


def analyze_graph(fmap: MapTable) -> GraphStats:
    if fmap.mode != "dense":
        raise DomainError("graph analysis needs a dense map")
    params = fmap.params
    dist, cyc, hist = decompose(fmap.successors().tolist())
    dist_a = np.asarray(dist, dtype=np.int64)
    cyc_a = np.asarray(cyc, dtype=np.int64)
    tau = dist_a + cyc_a + params.k
    diag = diagonal_codes(params)
    return GraphStats(
        tau_star=int(tau.max()),
        mean_tau=float(tau.mean()),
        n_cycles=sum(hist.values()),
        cycle_length_hist=dict(hist),
        frac_seeds_period1=float(np.mean(cyc_a == 1)),
        has_diag_fixed_point=bool(np.any(fmap.values[diag] == np.arange(params.m))),
        tau=tau,
        mu=dist_a + params.k,
    )


@dataclass(frozen=True)
class Estimate:
    value: float
    stderr: float
    exact: float
    n: int


def _diag_chunk(start: int, stop: int, m: int, seed: int) -> dict[str, np.ndarray]:
    target = np.arange(m)
    hits = np.empty(stop - start, dtype=bool)
    for t in range(stop - start):
        hits[t] = np.any(RngStream(seed, start + t).symbols(m, m) == target)
    return {"trial": np.arange(start, stop, dtype=np.int64), "hit": hits}


def diag_fixed_point_prob(m: int, n_maps: int, master_seed: int,
                          workers: int | None = None) -> Estimate:
    """Estimate P(some j has f(j, ..., j) = j) by drawing only the diagonal."""
    return diag_estimate(batch_diag_hits(m, n_maps, master_seed, workers)["hit"], m)


def batch_diag_hits(m: int, n_maps: int, master_seed: int, workers: int | None = None) -> dict[str, np.ndarray]:
    """Per-map indicator of a diagonal fixed point, keyed by trial."""
    if m < 1 or n_maps < 1:
        raise DomainError("need m >= 1 and n_maps >= 1")
    return map_index_range(_diag_chunk, n_maps, (m, int(master_seed)), workers)


def diag_estimate(hits, m: int) -> Estimate:
    n_maps = len(hits)
    p = float(np.mean(hits))
    return Estimate(value=p, stderr=math.sqrt(p * (1 - p) / n_maps), exact=1.0 - (1.0 - 1.0 / m) ** m, n=n_maps)


def sample_map_trajectory(params: Params, stream: RngStream, mode: str = "dense") -> RhoResult:
    """One (map, seed) draw: table first (dense) then the k seed symbols."""
    if mode == "dense":
        fmap = build_map(params, stream, "dense")
        seed = stream.symbols(params.m, params.k)
    else:
        seed = stream.symbols(params.m, params.k)
        fmap = build_map(params, stream, "lazy")
    code = 0
    for x in seed.tolist():
        code = code * params.m + x
    return trajectory(fmap, code)


def _traj_chunk(start: int, stop: int, m: int, k: int, seed: int, mode: str) -> dict[str, np.ndarray]:
    params = Params(m, k)
    res = [sample_map_trajectory(params, RngStream(seed, i), mode) for i in range(start, stop)]
    mu = np.array([r.mu for r in res], dtype=np.int64)
    tau = np.array([r.tau for r in res], dtype=np.int64)
    return {"trial": np.arange(start, stop, dtype=np.int64), "mu": mu, "tau": tau, "period": tau - mu}


def batch_map_trajectories(params: Params, n: int, master_seed: int, mode: str = "dense",
                           workers: int | None = None) -> dict[str, np.ndarray]:
    return map_index_range(_traj_chunk, n, (params.m, params.k, int(master_seed), mode), workers)


def _graph_chunk(start: int, stop: int, m: int, k: int, seed: int) -> dict[str, np.ndarray]:
    params = Params(m, k)
    rows = [analyze_graph(build_map(params, RngStream(seed, i))) for i in range(start, stop)]
    return {
        "map": np.arange(start, stop, dtype=np.int64),
        "tau_star": np.array([g.tau_star for g in rows], dtype=np.int64),
        "mean_tau": np.array([g.mean_tau for g in rows]),
        "n_cycles": np.array([g.n_cycles for g in rows], dtype=np.int64),
        "frac_seeds_period1": np.array([g.frac_seeds_period1 for g in rows]),
        "has_diag_fixed_point": np.array([g.has_diag_fixed_point for g in rows], dtype=bool),
    }


def batch_analyze(params: Params, n_maps: int, master_seed: int,
                  workers: int | None = None) -> dict[str, np.ndarray]:
    """Graph census of ``n_maps`` dense maps; map i is built from stream i."""
    return map_index_range(_graph_chunk, n_maps, (params.m, params.k, int(master_seed)), workers)
