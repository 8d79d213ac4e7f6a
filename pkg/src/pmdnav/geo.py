"""Geodesic primitives shared by the street graph, the router and the samplers."""

from __future__ import annotations

import math
from dataclasses import dataclass

from .errors import ValidationError

EARTH_RADIUS_M = 6_371_000.0
METERS_PER_DEG_LAT = EARTH_RADIUS_M * math.pi / 180.0  # ~111,194.93 m


@dataclass(frozen=True)
class GeoPoint:
    lat: float
    lon: float

    def __post_init__(self):
        if not -90.0 <= self.lat <= 90.0:
            raise ValidationError(f"latitude {self.lat} outside [-90, 90]")
        if not -180.0 <= self.lon <= 180.0:
            raise ValidationError(f"longitude {self.lon} outside [-180, 180]")


def haversine_m(p: GeoPoint, q: GeoPoint) -> float:
    """Great-circle distance in meters on a sphere of radius 6,371 km."""
    phi1 = math.radians(p.lat)
    phi2 = math.radians(q.lat)
    dphi = math.radians(q.lat - p.lat)
    dlam = math.radians(q.lon - p.lon)
    a = math.sin(dphi / 2.0) ** 2 + math.cos(phi1) * math.cos(phi2) * math.sin(dlam / 2.0) ** 2
    return 2.0 * EARTH_RADIUS_M * math.asin(min(1.0, math.sqrt(a)))


def midpoint(p: GeoPoint, q: GeoPoint) -> GeoPoint:
    """Arithmetic lat/lon midpoint; adequate at street scale, no antimeridian handling."""
    return GeoPoint((p.lat + q.lat) / 2.0, (p.lon + q.lon) / 2.0)


def meters_per_deg_lon(lat: float) -> float:
    c = math.cos(math.radians(lat))
    if c < 1e-6:
        raise ValidationError(f"degenerate longitude scale at latitude {lat}")
    return METERS_PER_DEG_LAT * c
