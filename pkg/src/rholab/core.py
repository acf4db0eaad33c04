"""Parameters, window codec and seeded random streams."""

from __future__ import annotations

import math
from dataclasses import dataclass, field
from typing import Sequence

import numpy as np

UINT64_MAX = (1 << 64) - 1


class DomainError(ValueError):
    """An argument lies outside the domain of an operation."""


class CapacityError(RuntimeError):
    """A request exceeds a configured memory or work budget."""


@dataclass(frozen=True)
class Params:
    """Alphabet size ``m`` and arity ``k``; ``M = m**k`` is the state count."""

    m: int
    k: int
    M: int = field(init=False)

    def __post_init__(self) -> None:
        if int(self.m) != self.m or self.m < 1:
            raise DomainError(f"alphabet size m must be an integer >= 1, got {self.m!r}")
        if int(self.k) != self.k or self.k < 1:
            raise DomainError(f"arity k must be an integer >= 1, got {self.k!r}")
        M = int(self.m) ** int(self.k)
        if M > UINT64_MAX:
            raise DomainError(f"state count {self.m}**{self.k} does not fit in 64 bits")
        object.__setattr__(self, "m", int(self.m))
        object.__setattr__(self, "k", int(self.k))
        object.__setattr__(self, "M", M)

    @property
    def high(self) -> int:
        """m**(k-1), the place value of the earliest symbol in a window."""
        return self.M // self.m


def _check_symbol(x: int, m: int) -> None:
    if not 0 <= x < m:
        raise DomainError(f"symbol {x!r} outside [0, {m})")


def encode_window(symbols: Sequence[int], params: Params) -> int:
    """Pack a k-tuple into its base-m code, earliest symbol most significant."""
    if len(symbols) != params.k:
        raise DomainError(f"expected {params.k} symbols, got {len(symbols)}")
    code = 0
    for x in symbols:
        _check_symbol(x, params.m)
        code = code * params.m + int(x)
    return code


def decode_window(code: int, params: Params) -> tuple[int, ...]:
    if not 0 <= code < params.M:
        raise DomainError(f"window code {code!r} outside [0, {params.M})")
    out = []
    for _ in range(params.k):
        code, r = divmod(code, params.m)
        out.append(r)
    return tuple(reversed(out))


def roll_window(code: int, x_new: int, params: Params) -> int:
    """Drop the earliest symbol of the window and append ``x_new``."""
    _check_symbol(x_new, params.m)
    return (code % params.high) * params.m + x_new


def window_codes(symbols: np.ndarray, params: Params) -> np.ndarray:
    """Codes of all length-k windows of a symbol array (len - k + 1 of them)."""
    symbols = np.asarray(symbols, dtype=np.uint64)
    n = len(symbols) - params.k + 1
    if n <= 0:
        return np.empty(0, dtype=np.uint64)
    codes = np.zeros(n, dtype=np.uint64)
    m = np.uint64(params.m)
    for r in range(params.k):
        codes = codes * m + symbols[r : r + n]
    return codes


class RngStream:
    """Deterministic random source keyed by ``(master_seed, stream_index)``.

    Streams are derived by hashing the pair through numpy's ``SeedSequence``
    (the index becomes the spawn key), so any stream is reachable in O(1)
    without touching the others.  The bit generator is PCG64; bounded draws
    use numpy's rejection sampler, never a bare modulo.

    A stream is consumed as it is read and must not be shared across workers.
    """

    __slots__ = ("_master_seed", "_stream_index", "_gen")

    def __init__(self, master_seed: int, stream_index: int = 0) -> None:
        for name, v in (("master_seed", master_seed), ("stream_index", stream_index)):
            if int(v) != v or not 0 <= v <= UINT64_MAX:
                raise DomainError(f"{name} must be a 64-bit unsigned integer, got {v!r}")
        self._master_seed = int(master_seed)
        self._stream_index = int(stream_index)
        seq = np.random.SeedSequence(self._master_seed, spawn_key=(self._stream_index,))
        self._gen = np.random.Generator(np.random.PCG64(seq))

    @property
    def master_seed(self) -> int:
        return self._master_seed

    @property
    def stream_index(self) -> int:
        return self._stream_index

    def __repr__(self) -> str:
        return f"RngStream(master_seed={self._master_seed}, stream_index={self._stream_index})"

    def symbol(self, m: int) -> int:
        return int(self._gen.integers(0, m))

    def symbols(self, m: int, n: int) -> np.ndarray:
        """Next ``n`` symbols uniform on [0, m).

        Reading in chunks yields the same sequence as reading one at a time.
        """
        return self._gen.integers(0, m, size=n, dtype=np.int64)

    def uniform_open(self, n: int | None = None):
        """Uniform draws on the open interval (0, 1) with 53-bit resolution."""
        bits = self._gen.integers(0, 1 << 53, size=n, dtype=np.int64)
        out = (bits + 0.5) * 2.0**-53
        return float(out) if n is None else out


def next_symbol(stream: RngStream, m: int) -> int:
    """One symbol uniform on [0, m) drawn from ``stream``."""
    if int(m) != m or m < 1:
        raise DomainError(f"alphabet size m must be >= 1, got {m!r}")
    return stream.symbol(m)


def isqrt_floor(x: float) -> int:
    """floor(sqrt(x)) for a nonnegative float, exact at integer boundaries."""
    if x < 0:
        raise DomainError("negative argument")
    n = math.isqrt(int(x))
    while (n + 1) * (n + 1) <= x:
        n += 1
    while n * n > x:
        n -= 1
    return n
