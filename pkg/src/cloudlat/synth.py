"""Synthetic measurement records generated from known model parameters.

Random draws come from numpy's PCG64 bit generator seeded with the given
integer (``numpy.random.Generator(PCG64(seed)).standard_normal``), one
stream per call, consumed scenario by scenario and sample by sample.
"""

from __future__ import annotations

import csv
import math
from dataclasses import dataclass
from typing import Iterable

import numpy as np

from cloudlat.model import DataSize, ModelParams, PathSpec, predict
from cloudlat.records import FormatError, MeasurementRecord

RNG_ALGORITHM = "numpy.random.PCG64"
NOISE_KINDS = ("none", "multiplicative-lognormal")
SCENARIO_HEADER = ["client_id", "server_id", "i_lan_m", "i_sub_m", "n_relays", "bytes"]


@dataclass(frozen=True)
class NoiseSpec:
    kind: str = "none"
    sigma: float = 0.0
    seed: int = 0

    def __post_init__(self):
        if self.kind not in NOISE_KINDS:
            raise ValueError(f"noise kind must be one of {NOISE_KINDS}")
        if not self.sigma >= 0:
            raise ValueError("sigma must be >= 0")
        if not 0 <= self.seed < 2**64:
            raise ValueError("seed must fit in an unsigned 64-bit integer")


@dataclass(frozen=True)
class Scenario:
    client_id: str
    server_id: str
    path: PathSpec
    size: DataSize


def generate(
    truth: ModelParams,
    scenarios: Iterable[Scenario],
    noise: NoiseSpec = NoiseSpec(),
    samples: int = 5,
    ts_unix_ms: int = 0,
) -> list[MeasurementRecord]:
    """One ok record per scenario with ``samples`` latency samples in ms.

    Noise is multiplicative: each sample is the model value times
    ``exp(N(0, sigma))``, so samples stay positive.
    """
    if samples < 1:
        raise ValueError("samples must be >= 1")
    rng = np.random.Generator(np.random.PCG64(noise.seed))
    records = []
    for sc in scenarios:
        base_ms = predict(sc.size, sc.path, truth) * 1000.0
        if noise.kind == "multiplicative-lognormal":
            factors = np.exp(noise.sigma * rng.standard_normal(samples))
            values = tuple(float(base_ms * f) for f in factors)
        else:
            values = (base_ms,) * samples
        records.append(MeasurementRecord(ts_unix_ms, sc.client_id, sc.server_id,
                                         sc.size.bytes, values, "ok"))
    return records


def load_scenarios(source) -> list[Scenario]:
    """Read a scenarios CSV (paths header plus a ``bytes`` column)."""
    scenarios = []
    with open(source, newline="", encoding="utf-8") as fh:
        reader = csv.reader(fh)
        if next(reader, None) != SCENARIO_HEADER:
            raise FormatError(f"expected header {','.join(SCENARIO_HEADER)}", source, 1)
        for lineno, row in enumerate(reader, start=2):
            if not row:
                continue
            try:
                client, server, i_lan, i_sub, n, size = row
                i_lan, i_sub = float(i_lan), float(i_sub)
                if not (math.isfinite(i_lan) and math.isfinite(i_sub)):
                    raise ValueError("non-finite distance")
                scenarios.append(Scenario(client, server, PathSpec(i_lan, i_sub, int(n)),
                                          DataSize(int(size))))
            except ValueError as exc:
                raise FormatError(f"bad scenario row: {exc}", source, lineno) from exc
    return scenarios


def write_scenarios(scenarios: Iterable[Scenario], destination):
    with open(destination, "w", newline="", encoding="utf-8") as fh:
        writer = csv.writer(fh, lineterminator="\n")
        writer.writerow(SCENARIO_HEADER)
        for sc in scenarios:
            writer.writerow([sc.client_id, sc.server_id, repr(float(sc.path.i_lan)),
                             repr(float(sc.path.i_sub)), sc.path.n_relays, sc.size.bytes])
