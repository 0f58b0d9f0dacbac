"""Great-circle distances on a spherical Earth and distance-based ordering."""

from __future__ import annotations

import math
from dataclasses import dataclass
from typing import Iterable

EARTH_RADIUS_M = 6_371_000.0


@dataclass(frozen=True)
class GeoPoint:
    lat_deg: float
    lon_deg: float

    def __post_init__(self):
        lat, lon = float(self.lat_deg), float(self.lon_deg)
        if not -90.0 <= lat <= 90.0:
            raise ValueError(f"latitude out of range [-90, 90]: {self.lat_deg!r}")
        if not -180.0 <= lon <= 180.0:
            raise ValueError(f"longitude out of range [-180, 180]: {self.lon_deg!r}")
        object.__setattr__(self, "lat_deg", lat)
        object.__setattr__(self, "lon_deg", lon)


@dataclass(frozen=True)
class City:
    name: str
    location: GeoPoint

    def __post_init__(self):
        if not self.name:
            raise ValueError("city name must be non-empty")


# Coordinates for reference cities that need not appear in a regions file.
KNOWN_CITIES = {
    "Ashburn": City("Ashburn", GeoPoint(39.0438, -77.4874)),
}


def haversine_distance(a: GeoPoint, b: GeoPoint) -> float:
    """Great-circle distance in meters between two points."""
    phi1, phi2 = math.radians(a.lat_deg), math.radians(b.lat_deg)
    dphi = phi2 - phi1
    dlam = math.radians(b.lon_deg - a.lon_deg)
    h = math.sin(dphi / 2) ** 2 + math.cos(phi1) * math.cos(phi2) * math.sin(dlam / 2) ** 2
    # rounding can push h marginally outside [0, 1] for antipodes
    h = min(1.0, max(0.0, h))
    return 2 * EARTH_RADIUS_M * math.asin(math.sqrt(h))


def sort_by_reference(cities: Iterable[City], ref: GeoPoint) -> list[City]:
    """Order cities by distance to ``ref``, breaking ties by name.

    Raises ValueError when two cities share a name.
    """
    cities = list(cities)
    seen = set()
    for city in cities:
        if city.name in seen:
            raise ValueError(f"duplicate city name: {city.name!r}")
        seen.add(city.name)
    return sorted(cities, key=lambda c: (haversine_distance(c.location, ref), c.name))
