"""Raster figures rendered with matplotlib's Agg canvas.

Figures are built on :class:`matplotlib.figure.Figure` directly (no pyplot
state), and PNG metadata is pinned so identical inputs give identical bytes.
"""

from __future__ import annotations

import numpy as np
from matplotlib.backends.backend_agg import FigureCanvasAgg
from matplotlib.colors import LinearSegmentedColormap, LogNorm, Normalize
from matplotlib.figure import Figure

from cloudlat.analysis import DARK, LIGHT, LatencyMatrix, LinearFitReport

PNG_METADATA = {"Software": None}

_cmap = LinearSegmentedColormap.from_list(
    "latency", [tuple(c / 255 for c in LIGHT), tuple(c / 255 for c in DARK)]
)
_cmap.set_bad("#d9d9d9")


def _save(fig, destination, dpi):
    FigureCanvasAgg(fig)
    fig.savefig(destination, format="png", dpi=dpi, metadata=PNG_METADATA)


def heatmap_figure(matrix: LatencyMatrix, scale="log"):
    values = np.array([[np.nan if v is None else v for v in row] for row in matrix.values_ms],
                      dtype=float)
    data = np.ma.masked_invalid(values)
    if data.count() == 0:
        raise ValueError("matrix has no values to draw")
    lo, hi = float(data.min()), float(data.max())
    norm = LogNorm(lo, hi) if scale == "log" and lo < hi else Normalize(lo, hi)

    n_s, n_c = len(matrix.servers), len(matrix.clients)
    fig = Figure(figsize=(1.2 + 0.45 * n_s, 1.4 + 0.4 * n_c), layout="constrained")
    ax = fig.add_subplot()
    im = ax.imshow(data, cmap=_cmap, norm=norm, aspect="auto")
    ax.set_xticks(range(n_s), matrix.servers, rotation=60, ha="right", fontsize=8)
    ax.set_yticks(range(n_c), matrix.clients, fontsize=8)
    ax.set_xlabel("server region")
    ax.set_ylabel("client region")
    ax.set_title(f"download latency (ms), sorted by distance to {matrix.reference.name}",
                 fontsize=9)
    fig.colorbar(im, ax=ax, label="ms")
    return fig


def save_heatmap_png(matrix: LatencyMatrix, destination, scale="log", dpi=100):
    _save(heatmap_figure(matrix, scale), destination, dpi)


def save_linearity_png(points, report: LinearFitReport, destination, title="", dpi=100):
    """Scatter of latency against distance with the fitted line."""
    pts = np.asarray(points, dtype=float)
    fig = Figure(figsize=(5, 3.5), layout="constrained")
    ax = fig.add_subplot()
    km = pts[:, 0] / 1000.0
    ax.plot(km, pts[:, 1], "o", color="0.25", ms=4)
    xs = np.linspace(0.0, km.max(), 50)
    ax.plot(xs, report.intercept + report.slope * xs * 1000.0, "-", color=tuple(c / 255 for c in DARK))
    label = "r undefined" if report.pearson_r is None else f"r = {report.pearson_r:.3f}"
    ax.set_title(f"{title} ({label}, n = {report.n_points})".strip(), fontsize=9)
    ax.set_xlabel("air distance (km)")
    ax.set_ylabel("latency (ms)")
    _save(fig, destination, dpi)
