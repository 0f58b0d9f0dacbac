"""Distance-ordered latency matrices, heat-map output and summary reports."""

from __future__ import annotations

import csv
import html
import io
import math
import statistics
from dataclasses import dataclass
from typing import Iterable, Sequence

from cloudlat.geodesy import City, haversine_distance
from cloudlat.records import MeasurementRecord, Region

AGGREGATORS = {"median": statistics.median, "mean": statistics.fmean}
SCALES = ("log", "linear")

# heat-map palette endpoints (RGB); low values light, high values dark
LIGHT = (255, 247, 236)
DARK = (127, 0, 0)
ABSENT = "#d9d9d9"

CELL = 40
MARGIN_LEFT = 160
MARGIN_TOP = 160


class DegenerateInputError(ValueError):
    pass


@dataclass(frozen=True)
class LatencyMatrix:
    clients: tuple[str, ...]
    servers: tuple[str, ...]
    values_ms: tuple[tuple[float | None, ...], ...]
    reference: City

    def __post_init__(self):
        if len(self.values_ms) != len(self.clients):
            raise ValueError("row count does not match client count")
        if any(len(row) != len(self.servers) for row in self.values_ms):
            raise ValueError("column count does not match server count")

    def cell(self, client_id, server_id):
        return self.values_ms[self.clients.index(client_id)][self.servers.index(server_id)]

    def present(self):
        return [v for row in self.values_ms for v in row if v is not None]

    def transpose(self) -> "LatencyMatrix":
        cols = tuple(tuple(row[j] for row in self.values_ms) for j in range(len(self.servers)))
        return LatencyMatrix(self.servers, self.clients, cols, self.reference)


@dataclass(frozen=True)
class AsymmetryEntry:
    pair: tuple[str, str]
    forward_ms: float
    backward_ms: float
    delta_ms: float
    relative: float

    def to_dict(self):
        return {
            "a": self.pair[0],
            "b": self.pair[1],
            "forward_ms": self.forward_ms,
            "backward_ms": self.backward_ms,
            "delta_ms": self.delta_ms,
            "relative": self.relative,
        }


@dataclass(frozen=True)
class LinearFitReport:
    slope: float
    intercept: float
    pearson_r: float | None
    r2: float | None
    n_points: int

    def to_dict(self):
        return {
            "slope": self.slope,
            "intercept": self.intercept,
            "pearson_r": self.pearson_r,
            "r2": self.r2,
            "n_points": self.n_points,
        }


def order_regions(regions: Iterable[Region], reference: City) -> list[Region]:
    """Sort by distance of each region's city to ``reference``, then by id."""
    return sorted(regions, key=lambda r: (haversine_distance(r.city.location, reference.location), r.id))


def build_matrix(records: Iterable[MeasurementRecord], regions: Sequence[Region],
                 reference: City, aggregator: str = "median") -> LatencyMatrix:
    """Aggregate ok records into a client x server grid.

    Each record is first reduced to one value with ``aggregator`` over its
    samples; multiple records for a pair are combined with the same function.
    Rows and columns cover every region id seen as client or server.
    """
    if aggregator not in AGGREGATORS:
        raise ValueError(f"aggregator must be one of {sorted(AGGREGATORS)}")
    agg = AGGREGATORS[aggregator]
    by_id = {r.id: r for r in regions}
    cells = {}
    client_ids, server_ids = set(), set()
    for rec in records:
        for rid in (rec.client_id, rec.server_id):
            if rid not in by_id:
                raise KeyError(f"unknown region id {rid!r}")
        client_ids.add(rec.client_id)
        server_ids.add(rec.server_id)
        if rec.status == "ok":
            cells.setdefault((rec.client_id, rec.server_id), []).append(agg(rec.samples_ms))
    clients = [r.id for r in order_regions((by_id[i] for i in client_ids), reference)]
    servers = [r.id for r in order_regions((by_id[i] for i in server_ids), reference)]
    grid = tuple(
        tuple(agg(cells[(c, s)]) if (c, s) in cells else None for s in servers)
        for c in clients
    )
    return LatencyMatrix(tuple(clients), tuple(servers), grid, reference)


def heatmap_csv_text(matrix: LatencyMatrix) -> str:
    buf = io.StringIO()
    writer = csv.writer(buf, lineterminator="\n")
    writer.writerow(["client_id", *matrix.servers])
    for client, row in zip(matrix.clients, matrix.values_ms):
        writer.writerow([client, *("" if v is None else f"{v:.3f}" for v in row)])
    return buf.getvalue()


def emit_heatmap_csv(matrix: LatencyMatrix, destination):
    with open(destination, "w", encoding="utf-8", newline="") as fh:
        fh.write(heatmap_csv_text(matrix))


def parse_heatmap_csv(text: str) -> tuple[list[str], list[str], list[list[float | None]]]:
    """Inverse of :func:`heatmap_csv_text`: ``(clients, servers, values)``."""
    rows = list(csv.reader(io.StringIO(text)))
    servers = rows[0][1:]
    clients, values = [], []
    for row in rows[1:]:
        clients.append(row[0])
        values.append([float(v) if v else None for v in row[1:]])
    return clients, servers, values


def color_fraction(value, lo, hi, scale="log"):
    """Position of ``value`` between ``lo`` and ``hi`` on the palette, in [0, 1]."""
    if scale == "log":
        if lo <= 0:
            raise ValueError("log scale needs positive values")
        value, lo, hi = math.log10(value), math.log10(lo), math.log10(hi)
    elif scale != "linear":
        raise ValueError(f"scale must be one of {SCALES}")
    if hi == lo:
        return 0.0
    return min(1.0, max(0.0, (value - lo) / (hi - lo)))


def palette_color(t: float) -> str:
    rgb = (round(a + (b - a) * t) for a, b in zip(LIGHT, DARK))
    return "#{:02x}{:02x}{:02x}".format(*rgb)


def heatmap_svg_text(matrix: LatencyMatrix, scale: str = "log") -> str:
    present = matrix.present()
    if not present:
        raise DegenerateInputError("matrix has no values to draw")
    lo, hi = min(present), max(present)
    width = MARGIN_LEFT + CELL * len(matrix.servers) + 20
    height = MARGIN_TOP + CELL * len(matrix.clients) + 40
    esc = html.escape
    out = [
        f'<svg xmlns="http://www.w3.org/2000/svg" width="{width}" height="{height}" '
        f'viewBox="0 0 {width} {height}" font-family="sans-serif" font-size="12">',
        f"<!-- latency heat map (ms); scale={scale}; palette {palette_color(0)} (min {lo:.3f}) "
        f"to {palette_color(1)} (max {hi:.3f}), RGB linear; absent cells {ABSENT} hatched; "
        f"reference {esc(matrix.reference.name)} -->",
        "<defs>",
        '<pattern id="absent-hatch" width="6" height="6" patternUnits="userSpaceOnUse" '
        'patternTransform="rotate(45)">',
        f'<rect width="6" height="6" fill="{ABSENT}"/>',
        '<line x1="0" y1="0" x2="0" y2="6" stroke="#ffffff" stroke-width="2"/>',
        "</pattern>",
        "</defs>",
    ]
    for j, server in enumerate(matrix.servers):
        x = MARGIN_LEFT + CELL * j + CELL // 2
        out.append(f'<text class="col-label" x="{x}" y="{MARGIN_TOP - 6}" '
                   f'transform="rotate(-60 {x} {MARGIN_TOP - 6})">{esc(server)}</text>')
    for i, client in enumerate(matrix.clients):
        y = MARGIN_TOP + CELL * i
        out.append(f'<text class="row-label" x="{MARGIN_LEFT - 6}" y="{y + CELL // 2 + 4}" '
                   f'text-anchor="end">{esc(client)}</text>')
        for j, (server, v) in enumerate(zip(matrix.servers, matrix.values_ms[i])):
            x = MARGIN_LEFT + CELL * j
            if v is None:
                out.append(f'<rect class="absent" x="{x}" y="{y}" width="{CELL}" height="{CELL}" '
                           f'fill="url(#absent-hatch)"><title>{esc(client)} / {esc(server)}: no data'
                           f'</title></rect>')
                continue
            fill = palette_color(color_fraction(v, lo, hi, scale))
            out.append(f'<rect class="cell" x="{x}" y="{y}" width="{CELL}" height="{CELL}" '
                       f'fill="{fill}"><title>{esc(client)} / {esc(server)}: {v:.3f} ms'
                       f'</title></rect>')
    legend_y = MARGIN_TOP + CELL * len(matrix.clients) + 24
    out.append(f'<text class="legend" x="{MARGIN_LEFT}" y="{legend_y}">'
               f'{lo:.3f} ms to {hi:.3f} ms ({scale} scale)</text>')
    out.append("</svg>")
    return "\n".join(out) + "\n"


def emit_heatmap_svg(matrix: LatencyMatrix, destination, scale: str = "log"):
    text = heatmap_svg_text(matrix, scale)
    with open(destination, "w", encoding="utf-8", newline="") as fh:
        fh.write(text)


def asymmetry_report(matrix: LatencyMatrix) -> list[AsymmetryEntry]:
    """Compare both download directions for every region pair that has them.

    ``forward_ms`` is the latency with ``a`` as client and ``b`` as server.
    """
    both = sorted(set(matrix.clients) & set(matrix.servers))
    entries = []
    for i, a in enumerate(both):
        for b in both[i + 1:]:
            fwd, bwd = matrix.cell(a, b), matrix.cell(b, a)
            if fwd is None or bwd is None:
                continue
            delta = fwd - bwd
            mean = (fwd + bwd) / 2
            relative = abs(delta) / mean if mean else 0.0
            entries.append(AsymmetryEntry((a, b), fwd, bwd, delta, relative))
    entries.sort(key=lambda e: (-e.relative, e.pair))
    return entries


def linearity_report(points: Iterable[tuple[float, float]]) -> LinearFitReport:
    """Least-squares line of latency (ms) against distance (m).

    Sums are exactly rounded, so the result does not depend on point order.
    ``pearson_r`` and ``r2`` are None when every latency is the same.
    """
    pts = [(float(x), float(y)) for x, y in points]
    n = len(pts)
    if n < 2:
        raise DegenerateInputError("linear fit needs at least two points")
    xbar = math.fsum(x for x, _ in pts) / n
    ybar = math.fsum(y for _, y in pts) / n
    sxx = math.fsum((x - xbar) ** 2 for x, _ in pts)
    syy = math.fsum((y - ybar) ** 2 for _, y in pts)
    sxy = math.fsum((x - xbar) * (y - ybar) for x, y in pts)
    if sxx == 0:
        raise DegenerateInputError("all distances are equal")
    slope = sxy / sxx
    intercept = ybar - slope * xbar
    if syy == 0:
        r = r2 = None
    else:
        r = max(-1.0, min(1.0, sxy / math.sqrt(sxx * syy)))
        r2 = r * r
    return LinearFitReport(slope, intercept, r, r2, n)


def continent_points(matrix: LatencyMatrix, regions: Sequence[Region],
                     continent: str) -> list[tuple[float, float]]:
    """``(distance_m, latency_ms)`` for present cells whose two regions share ``continent``."""
    by_id = {r.id: r for r in regions}
    points = []
    for c, row in zip(matrix.clients, matrix.values_ms):
        for s, v in zip(matrix.servers, row):
            rc, rs = by_id[c], by_id[s]
            if v is None or rc.continent != continent or rs.continent != continent:
                continue
            points.append((haversine_distance(rc.city.location, rs.city.location), v))
    return points
