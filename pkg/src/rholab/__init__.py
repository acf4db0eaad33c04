"""Cycle structure of iterated random k-ary maps.

Simulation, exact enumeration and reference theory for the rho shape
(tail, period, first-repeat time) of X_{n+k} = f(X_n, ..., X_{n+k-1})
when f is drawn uniformly from all maps [m]^k -> [m].
"""

from rholab.core import (
    CapacityError,
    DomainError,
    Params,
    RngStream,
    decode_window,
    encode_window,
    next_symbol,
    roll_window,
)

__version__ = "0.1.0"

__all__ = [
    "CapacityError",
    "DomainError",
    "Params",
    "RngStream",
    "__version__",
    "decode_window",
    "encode_window",
    "next_symbol",
    "roll_window",
]
