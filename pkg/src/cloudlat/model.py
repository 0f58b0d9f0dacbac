"""Two-level outbound latency model.

Total latency of a download is the data-center and core-network transfer time
on both ends plus the metro/edge delay::

    L   = 2 D / b_ds + 2 D / b_c + L_m
    L_m = D i_lan / s_lan + D i_sub / s_sub + rho N + c0

Units are bytes, meters and seconds throughout. Speeds ``s_lan`` and ``s_sub``
are in byte-meters per second. A speed of ``math.inf`` zeroes its term, which
is how unidentified coefficients from fitting are represented.
"""

from __future__ import annotations

import math
from dataclasses import dataclass

# 1 GB = 1e9 bytes
DEFAULT_B_DS = 1.25e9


def _check_positive(name, value):
    if not value > 0:
        raise ValueError(f"{name} must be > 0, got {value!r}")


def _check_nonneg(name, value):
    if not value >= 0 or math.isnan(value):
        raise ValueError(f"{name} must be >= 0, got {value!r}")


@dataclass(frozen=True)
class ModelParams:
    b_ds: float = DEFAULT_B_DS
    b_c: float = 1.0e9
    s_lan: float = 1.0e14
    s_sub: float = 1.0e14
    rho: float = 0.0
    c0: float = 0.0

    def __post_init__(self):
        for name in ("b_ds", "b_c", "s_lan", "s_sub"):
            _check_positive(name, getattr(self, name))
        _check_nonneg("rho", self.rho)
        _check_nonneg("c0", self.c0)


@dataclass(frozen=True)
class PathSpec:
    i_lan: float
    i_sub: float
    n_relays: int

    def __post_init__(self):
        _check_nonneg("i_lan", self.i_lan)
        _check_nonneg("i_sub", self.i_sub)
        if int(self.n_relays) != self.n_relays or self.n_relays < 0:
            raise ValueError(f"n_relays must be a non-negative integer, got {self.n_relays!r}")


@dataclass(frozen=True)
class DataSize:
    bytes: int

    def __post_init__(self):
        if int(self.bytes) != self.bytes or self.bytes < 0:
            raise ValueError(f"bytes must be a non-negative integer, got {self.bytes!r}")


def _size(d) -> float:
    return float(d.bytes if isinstance(d, DataSize) else d)


def metro_edge_latency(d: DataSize | int, path: PathSpec, params: ModelParams) -> float:
    """One-way metro/edge delay in seconds."""
    size = _size(d)
    return (
        size * path.i_lan / params.s_lan
        + size * path.i_sub / params.s_sub
        + params.rho * path.n_relays
        + params.c0
    )


def total_latency(d: DataSize | int, params: ModelParams, l_m: float) -> float:
    """End-to-end latency in seconds given a metro/edge delay ``l_m``."""
    _check_nonneg("l_m", l_m)
    size = _size(d)
    return 2 * size / params.b_ds + 2 * size / params.b_c + l_m


def predict(d: DataSize | int, path: PathSpec, params: ModelParams) -> float:
    return total_latency(d, params, metro_edge_latency(d, path, params))


def transmission_speed(d: DataSize | int, distance: float, elapsed: float) -> float:
    """Transfer speed in byte-meters per second.

    Unlike bandwidth, this accounts for how far the payload traveled.
    """
    size = _size(d)
    if not elapsed > 0:
        raise ValueError(f"elapsed must be > 0, got {elapsed!r}")
    if not distance > 0:
        raise ValueError(f"distance must be > 0, got {distance!r}")
    if not size > 0:
        raise ValueError(f"data size must be > 0, got {size!r}")
    return size * distance / elapsed
