"""Region and measurement data types plus their on-disk formats.

* Regions file: JSON array of objects with ``id, provider, continent,
  city_name, lat_deg, lon_deg`` and optional ``endpoint_url``.
* Measurements file: JSON Lines, one record per line with ``ts_unix_ms,
  client_id, server_id, bytes, samples_ms, status``.
* Paths file: CSV with header ``client_id,server_id,i_lan_m,i_sub_m,n_relays``.
"""

from __future__ import annotations

import csv
import json
import math
import os
import statistics
from dataclasses import dataclass, field
from typing import Iterable
from urllib.parse import urlparse

from cloudlat.geodesy import City, GeoPoint
from cloudlat.model import PathSpec

STATUSES = ("ok", "partial", "failed")
RECORD_FIELDS = ("ts_unix_ms", "client_id", "server_id", "bytes", "samples_ms", "status")
REGION_FIELDS = ("id", "provider", "continent", "city_name", "lat_deg", "lon_deg")
PATHS_HEADER = ["client_id", "server_id", "i_lan_m", "i_sub_m", "n_relays"]


class FormatError(ValueError):
    """Malformed input file; ``line`` is 1-based when known."""

    def __init__(self, message, source=None, line=None):
        where = ""
        if source is not None:
            where = f"{source}:"
            if line is not None:
                where += f"{line}:"
            where += " "
        super().__init__(where + message)
        self.source = source
        self.line = line


def _is_absolute_url(url: str) -> bool:
    parsed = urlparse(url)
    return bool(parsed.scheme and parsed.netloc)


@dataclass(frozen=True)
class Region:
    id: str
    provider: str
    continent: str
    city: City
    endpoint_url: str | None = None

    def __post_init__(self):
        if not self.id:
            raise ValueError("region id must be non-empty")
        if self.endpoint_url is not None and not _is_absolute_url(self.endpoint_url):
            raise ValueError(f"region {self.id!r}: endpoint_url is not absolute: {self.endpoint_url!r}")

    def to_dict(self):
        d = {
            "id": self.id,
            "provider": self.provider,
            "continent": self.continent,
            "city_name": self.city.name,
            "lat_deg": self.city.location.lat_deg,
            "lon_deg": self.city.location.lon_deg,
        }
        if self.endpoint_url is not None:
            d["endpoint_url"] = self.endpoint_url
        return d

    @classmethod
    def from_dict(cls, d):
        missing = [k for k in REGION_FIELDS if k not in d]
        if missing:
            raise ValueError(f"missing fields {missing}")
        city = City(d["city_name"], GeoPoint(d["lat_deg"], d["lon_deg"]))
        return cls(d["id"], d["provider"], d["continent"], city, d.get("endpoint_url"))


@dataclass(frozen=True)
class MeasurementRecord:
    ts_unix_ms: int
    client_id: str
    server_id: str
    bytes: int
    samples_ms: tuple[float, ...] = field(default_factory=tuple)
    status: str = "ok"

    def __post_init__(self):
        object.__setattr__(self, "samples_ms", tuple(float(s) for s in self.samples_ms))
        if self.status not in STATUSES:
            raise ValueError(f"status must be one of {STATUSES}, got {self.status!r}")
        if self.bytes < 0:
            raise ValueError("bytes must be >= 0")
        if self.status == "ok":
            if self.bytes <= 0:
                raise ValueError("ok record must have bytes > 0")
            if not self.samples_ms or any(not s > 0 for s in self.samples_ms):
                raise ValueError("ok record needs positive samples")

    def to_dict(self):
        return {
            "ts_unix_ms": self.ts_unix_ms,
            "client_id": self.client_id,
            "server_id": self.server_id,
            "bytes": self.bytes,
            "samples_ms": list(self.samples_ms),
            "status": self.status,
        }

    @classmethod
    def from_dict(cls, d):
        missing = [k for k in RECORD_FIELDS if k not in d]
        if missing:
            raise ValueError(f"missing fields {missing}")
        if not isinstance(d["ts_unix_ms"], int) or not isinstance(d["bytes"], int):
            raise ValueError("ts_unix_ms and bytes must be integers")
        if not isinstance(d["samples_ms"], list):
            raise ValueError("samples_ms must be an array")
        return cls(d["ts_unix_ms"], d["client_id"], d["server_id"], d["bytes"],
                   tuple(d["samples_ms"]), d["status"])


@dataclass(frozen=True)
class LatencyStat:
    median_ms: float
    mean_ms: float
    stddev_ms: float
    min_ms: float
    max_ms: float


def summarize(samples_ms: Iterable[float]) -> LatencyStat:
    samples = [float(s) for s in samples_ms]
    if not samples:
        raise ValueError("cannot summarize an empty sample list")
    return LatencyStat(
        median_ms=statistics.median(samples),
        mean_ms=statistics.fmean(samples),
        stddev_ms=statistics.pstdev(samples),
        min_ms=min(samples),
        max_ms=max(samples),
    )


def persist_records(records: Iterable[MeasurementRecord], destination, append=True):
    """Write records as JSON Lines; appends by default."""
    mode = "a" if append else "w"
    with open(destination, mode, encoding="utf-8") as fh:
        for rec in records:
            fh.write(json.dumps(rec.to_dict(), allow_nan=False) + "\n")


def load_records(source) -> list[MeasurementRecord]:
    records = []
    with open(source, encoding="utf-8") as fh:
        for lineno, line in enumerate(fh, start=1):
            if not line.strip():
                continue
            try:
                records.append(MeasurementRecord.from_dict(json.loads(line)))
            except (ValueError, TypeError, AttributeError) as exc:
                raise FormatError(f"malformed record: {exc}", source, lineno) from exc
    return records


def load_regions(source) -> list[Region]:
    with open(source, encoding="utf-8") as fh:
        try:
            doc = json.load(fh)
        except ValueError as exc:
            raise FormatError(f"invalid JSON: {exc}", source) from exc
    if not isinstance(doc, list):
        raise FormatError("regions document must be an array", source)
    regions = []
    for i, item in enumerate(doc):
        try:
            regions.append(Region.from_dict(item))
        except (ValueError, TypeError, AttributeError) as exc:
            raise FormatError(f"region #{i}: {exc}", source) from exc
    ids = [r.id for r in regions]
    if len(set(ids)) != len(ids):
        raise FormatError("duplicate region ids", source)
    return regions


def save_regions(regions: Iterable[Region], destination):
    with open(destination, "w", encoding="utf-8") as fh:
        json.dump([r.to_dict() for r in regions], fh, indent=2)
        fh.write("\n")


def _parse_number(text, integer=False):
    value = int(text) if integer else float(text)
    if not math.isfinite(value):
        raise ValueError(f"non-finite value {text!r}")
    return value


def load_paths(source) -> dict[tuple[str, str], PathSpec]:
    paths = {}
    with open(source, newline="", encoding="utf-8") as fh:
        reader = csv.reader(fh)
        header = next(reader, None)
        if header != PATHS_HEADER:
            raise FormatError(f"expected header {','.join(PATHS_HEADER)}", source, 1)
        for lineno, row in enumerate(reader, start=2):
            if not row:
                continue
            try:
                client, server, i_lan, i_sub, n = row
                spec = PathSpec(_parse_number(i_lan), _parse_number(i_sub), _parse_number(n, True))
            except ValueError as exc:
                raise FormatError(f"bad path row: {exc}", source, lineno) from exc
            paths[(client, server)] = spec
    return paths


def write_paths(paths: dict[tuple[str, str], PathSpec], destination):
    with open(destination, "w", newline="", encoding="utf-8") as fh:
        writer = csv.writer(fh, lineterminator="\n")
        writer.writerow(PATHS_HEADER)
        for (client, server), p in paths.items():
            writer.writerow([client, server, repr(float(p.i_lan)), repr(float(p.i_sub)), p.n_relays])


def ensure_parent(path):
    parent = os.path.dirname(os.fspath(path))
    if parent:
        os.makedirs(parent, exist_ok=True)
