"""Toolkit for measuring and modeling cloud outbound download latency."""

from cloudlat.geodesy import City, GeoPoint, haversine_distance, sort_by_reference
from cloudlat.model import (
    DataSize,
    ModelParams,
    PathSpec,
    metro_edge_latency,
    predict,
    total_latency,
    transmission_speed,
)

__version__ = "0.1.0"

__all__ = [
    "City",
    "DataSize",
    "GeoPoint",
    "ModelParams",
    "PathSpec",
    "haversine_distance",
    "metro_edge_latency",
    "predict",
    "sort_by_reference",
    "total_latency",
    "transmission_speed",
]
