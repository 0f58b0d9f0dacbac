"""Estimate latency-model coefficients from measurements.

The metro/edge delay is linear in its unknowns once written per record as::

    target = (1/s_lan) * D*i_lan + (1/s_sub) * D*i_sub + rho * N + c0 [+ k * D]

where the optional last column carries the combined core coefficient
``k = 2/b_ds + 2/b_c``. Coefficients are found by non-negative least squares
on max-normalized columns.
"""

from __future__ import annotations

import logging
import math
from dataclasses import dataclass, field
from typing import Iterable, Mapping

import numpy as np

from cloudlat.model import DEFAULT_B_DS, ModelParams, PathSpec
from cloudlat.nnls import nnls
from cloudlat.records import MeasurementRecord

log = logging.getLogger(__name__)

COLUMNS = ("d_i_lan", "d_i_sub", "n_relays", "const", "d")
CONST = 3
COLLINEAR_RTOL = 1e-12


class FitError(ValueError):
    """The data cannot support any fit (e.g. no usable rows)."""


@dataclass(frozen=True)
class FitOptions:
    fit_core: bool = False
    nonneg: bool = True
    tol: float = 1e-10

    def __post_init__(self):
        if not self.tol > 0:
            raise ValueError("tol must be > 0")


@dataclass(frozen=True)
class DesignRow:
    features: tuple[float, ...]
    target: float
    pair: tuple[str, str] | None = None

    def __post_init__(self):
        if len(self.features) not in (4, 5):
            raise ValueError("a design row has 4 features, or 5 with the core column")
        if any(not (math.isfinite(f) and f >= 0) for f in self.features):
            raise ValueError(f"features must be finite and >= 0: {self.features}")


class DesignRows(list):
    """List of :class:`DesignRow` that also remembers how many records were rejected."""

    def __init__(self, rows=(), rejected=0):
        super().__init__(rows)
        self.rejected = rejected


@dataclass
class FitResult:
    params: ModelParams
    rmse: float
    r2: float | None
    n_records: int
    rank_deficient: bool = False
    notes: list[str] = field(default_factory=list)
    coefficients: dict[str, float] = field(default_factory=dict)


@dataclass(frozen=True)
class ResidualReport:
    rmse: float
    max_abs_residual: float
    r2: float | None


def representative_latency_s(record: MeasurementRecord) -> float:
    """Median of a record's samples, in seconds."""
    return float(np.median(record.samples_ms)) / 1000.0


def build_design_matrix(
    records: Iterable[MeasurementRecord],
    paths: Mapping[tuple[str, str], PathSpec],
    options: FitOptions = FitOptions(),
    known: ModelParams | None = None,
) -> DesignRows:
    if not options.fit_core and known is None:
        raise ValueError("known b_ds and b_c are required when the core term is not fitted")
    rows = DesignRows()
    for rec in records:
        pair = (rec.client_id, rec.server_id)
        if pair not in paths:
            raise KeyError(f"no path spec for pair {pair[0]} -> {pair[1]}")
        if rec.status == "failed" or not rec.samples_ms:
            rows.rejected += 1
            continue
        latency = representative_latency_s(rec)
        if not latency > 0:
            rows.rejected += 1
            continue
        path = paths[pair]
        d = float(rec.bytes)
        features = [d * path.i_lan, d * path.i_sub, float(path.n_relays), 1.0]
        target = latency
        if options.fit_core:
            features.append(d)
        else:
            target -= 2 * d / known.b_ds + 2 * d / known.b_c
        rows.append(DesignRow(tuple(features), target, pair))
    if rows.rejected:
        log.warning("rejected %d records without a positive latency", rows.rejected)
    return rows


def _r2(y, residual):
    centered = y - y.mean()
    ss_tot = float(centered @ centered)
    if ss_tot == 0.0:
        return None
    return 1.0 - float(residual @ residual) / ss_tot


def _coefficients(params: ModelParams, n_features: int):
    coef = [1.0 / params.s_lan, 1.0 / params.s_sub, params.rho, params.c0]
    if n_features == 5:
        coef.append(2.0 / params.b_ds + 2.0 / params.b_c)
    return np.array(coef)


def residual_stats(rows: Iterable[DesignRow], params: ModelParams) -> ResidualReport:
    rows = list(rows)
    if not rows:
        raise ValueError("residual_stats needs at least one row")
    X = np.array([r.features for r in rows], dtype=float)
    y = np.array([r.target for r in rows], dtype=float)
    residual = y - X @ _coefficients(params, X.shape[1])
    return ResidualReport(
        rmse=math.sqrt(float(np.mean(residual**2))),
        max_abs_residual=float(np.max(np.abs(residual))),
        r2=_r2(y, residual),
    )


def _inverse(coef):
    return 1.0 / coef if coef > 0 else math.inf


def fit(rows: Iterable[DesignRow], options: FitOptions = FitOptions(),
        known: ModelParams | None = None) -> FitResult:
    """Fit model coefficients to design rows.

    Columns that are identically zero are dropped and their coefficient left
    at zero (speed reported as infinite, i.e. unidentified). Columns that are
    constant across all rows cannot be told apart from ``c0`` and are merged
    into it. Either case sets ``rank_deficient``.
    """
    rows = list(rows)
    if not rows:
        raise FitError("no usable rows to fit")
    X = np.array([r.features for r in rows], dtype=float)
    y = np.array([r.target for r in rows], dtype=float)
    n_rows, n_cols = X.shape
    notes = []
    rank_deficient = False

    keep = np.ones(n_cols, dtype=bool)
    for j in range(n_cols):
        if j == CONST:
            continue
        col = X[:, j]
        top = np.abs(col).max()
        if top == 0.0:
            keep[j] = False
            rank_deficient = True
            notes.append(f"column {COLUMNS[j]} is zero in every record; coefficient unidentified")
        elif col.max() - col.min() <= COLLINEAR_RTOL * top:
            keep[j] = False
            rank_deficient = True
            notes.append(f"column {COLUMNS[j]} is constant across records; absorbed into c0")

    idx = np.flatnonzero(keep)
    scale = np.abs(X[:, idx]).max(axis=0)
    Xs = X[:, idx] / scale
    if n_rows < n_cols:
        rank_deficient = True
        notes.append(f"{n_rows} records for {n_cols} coefficients")
    if np.linalg.matrix_rank(Xs) < idx.size:
        rank_deficient = True
        notes.append("remaining columns are linearly dependent; solution is not unique")

    if options.nonneg:
        sol, _ = nnls(Xs, y, tol=options.tol)
    else:
        sol = np.linalg.lstsq(Xs, y, rcond=None)[0]
    coef = np.zeros(n_cols)
    coef[idx] = sol / scale

    if (coef < 0).any():
        neg = [COLUMNS[j] for j in np.flatnonzero(coef < 0)]
        notes.append(f"negative coefficients clipped to zero: {', '.join(neg)}")
    clipped = np.clip(coef, 0.0, None)

    for j, name in ((0, "s_lan"), (1, "s_sub")):
        if keep[j] and clipped[j] == 0.0:
            notes.append(f"{name} fitted coefficient is zero; speed unidentified")

    if options.fit_core:
        k = clipped[4]
        if not keep[4]:
            b_ds = b_c = math.inf
            notes.append("core terms reported inside c0 (b_ds and b_c set to infinity)")
        else:
            b_ds = known.b_ds if known is not None else DEFAULT_B_DS
            inv_bc = k / 2 - 1 / b_ds
            if inv_bc > 0:
                b_c = 1 / inv_bc
            else:
                b_ds, b_c = _inverse(k / 2), math.inf
                notes.append("core coefficient not above the data-center prior; b_ds back-solved, b_c infinite")
    else:
        b_ds, b_c = known.b_ds, known.b_c

    params = ModelParams(
        b_ds=b_ds,
        b_c=b_c,
        s_lan=_inverse(clipped[0]),
        s_sub=_inverse(clipped[1]),
        rho=float(clipped[2]),
        c0=float(clipped[3]),
    )
    residual = y - X @ coef
    rmse = math.sqrt(float(np.mean(residual**2)))
    return FitResult(
        params=params,
        rmse=rmse,
        r2=_r2(y, residual),
        n_records=n_rows,
        rank_deficient=rank_deficient,
        notes=notes,
        coefficients={COLUMNS[j]: float(coef[j]) for j in range(n_cols)},
    )
