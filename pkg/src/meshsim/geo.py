"""Flat-earth coordinate helpers for campus-scale distances.

An equirectangular projection is plenty below a few tens of km; the
error against a proper geodesic at 2.5 km is far under the shadowing
noise the link model adds anyway.
"""

from __future__ import annotations

import math
from typing import NamedTuple

EARTH_RADIUS_M = 6_371_000.0


class LatLonAlt(NamedTuple):
    latitude: float
    longitude: float
    altitude_m: float = 0.0


def geo_to_local(point: LatLonAlt, origin: LatLonAlt) -> tuple[float, float]:
    """Project a point to meters east (x) and north (y) of origin."""
    lat0 = math.radians(origin.latitude)
    x = EARTH_RADIUS_M * math.radians(point.longitude - origin.longitude) * math.cos(lat0)
    y = EARTH_RADIUS_M * math.radians(point.latitude - origin.latitude)
    return x, y


def offset_position(
    origin: LatLonAlt, east_m: float, north_m: float, altitude_m: float | None = None
) -> LatLonAlt:
    """Inverse of geo_to_local: place a point by metric offsets from origin."""
    lat0 = math.radians(origin.latitude)
    lat = origin.latitude + math.degrees(north_m / EARTH_RADIUS_M)
    lon = origin.longitude + math.degrees(east_m / (EARTH_RADIUS_M * math.cos(lat0)))
    alt = origin.altitude_m if altitude_m is None else altitude_m
    return LatLonAlt(lat, lon, alt)


def node_distance_m(a: LatLonAlt, b: LatLonAlt) -> float:
    """Slant range between two placements, elevation difference included."""
    x, y = geo_to_local(a, b)
    return math.sqrt(x * x + y * y + (a.altitude_m - b.altitude_m) ** 2)
