"""Zone geometry loading and point-to-zone assignment.

Zones arrive as a GeoJSON-style FeatureCollection of polygons carrying
a ``zone_id`` property, or point-in-polygon can be bypassed entirely
with a precomputed trip-to-zone assignment file.  Containment uses the
even-odd (crossing number) rule over all rings of a zone, vectorized
over points; zones are tested in sorted id order and the first
containing zone wins, which makes boundary points deterministic.
"""
from __future__ import annotations

import csv
import json
from typing import Mapping, Sequence

import numpy as np

from .errors import ConfigError, ZoneFileError


def _ring_contains(ring: np.ndarray, px: np.ndarray, py: np.ndarray) -> np.ndarray:
    """Even-odd crossing parity of points against one ring (vectorized)."""
    x1 = ring[:, 0]
    y1 = ring[:, 1]
    x2 = np.roll(x1, -1)
    y2 = np.roll(y1, -1)
    inside = np.zeros(px.shape, dtype=bool)
    for k in range(len(ring)):
        crosses = (y1[k] > py) != (y2[k] > py)
        if not crosses.any():
            continue
        xint = (x2[k] - x1[k]) * (py - y1[k]) / (y2[k] - y1[k]) + x1[k]
        inside ^= crosses & (px < xint)
    return inside


class ZoneRegistry:
    """Zone polygons indexed by id, with batch point assignment."""

    def __init__(self, rings_by_zone: Mapping[str, Sequence[np.ndarray]]):
        self._rings: dict[str, list[np.ndarray]] = {}
        self._bbox: dict[str, tuple[float, float, float, float]] = {}
        for zone in sorted(rings_by_zone):
            rings = []
            for ring in rings_by_zone[zone]:
                arr = np.asarray(ring, dtype=float)
                if arr.ndim != 2 or arr.shape[1] != 2:
                    raise ZoneFileError(f"zone {zone!r}: ring must be Nx2")
                # Drop an explicit closing vertex; the tests below are cyclic.
                if len(arr) > 1 and np.array_equal(arr[0], arr[-1]):
                    arr = arr[:-1]
                if len(np.unique(arr, axis=0)) < 3:
                    raise ZoneFileError(
                        f"zone {zone!r}: degenerate polygon "
                        f"(< 3 distinct vertices)")
                rings.append(arr)
            if not rings:
                raise ZoneFileError(f"zone {zone!r} has no rings")
            self._rings[zone] = rings
            allv = np.vstack(rings)
            self._bbox[zone] = (allv[:, 0].min(), allv[:, 1].min(),
                                allv[:, 0].max(), allv[:, 1].max())

    def zone_ids(self) -> list[str]:
        return list(self._rings)

    def has_zone(self, zone: str) -> bool:
        return zone in self._rings

    def vertex_centroid(self, zone: str) -> tuple[float, float]:
        """Average of the polygon's distinct ring vertices."""
        allv = np.vstack(self._rings[zone])
        return float(allv[:, 0].mean()), float(allv[:, 1].mean())

    def rings(self, zone: str) -> list[np.ndarray]:
        """The zone's rings (closing vertex stripped)."""
        return list(self._rings[zone])

    def assign_points(self, points: np.ndarray) -> list[str | None]:
        """Zone id per (lon, lat) row, or None if no polygon contains it."""
        pts = np.asarray(points, dtype=float).reshape(-1, 2)
        px = pts[:, 0]
        py = pts[:, 1]
        result: list[str | None] = [None] * len(pts)
        open_idx = np.arange(len(pts))
        for zone in self._rings:
            if open_idx.size == 0:
                break
            x0, y0, x1, y1 = self._bbox[zone]
            cx = px[open_idx]
            cy = py[open_idx]
            box = (cx >= x0) & (cx <= x1) & (cy >= y0) & (cy <= y1)
            if not box.any():
                continue
            cand = open_idx[box]
            inside = np.zeros(cand.shape, dtype=bool)
            for ring in self._rings[zone]:
                inside ^= _ring_contains(ring, px[cand], py[cand])
            hit = cand[inside]
            for i in hit:
                result[int(i)] = zone
            if hit.size:
                open_idx = np.setdiff1d(open_idx, hit, assume_unique=True)
        return result

    def assign(self, point: tuple[float, float]) -> str | None:
        """Zone id for one (lon, lat) point, or None."""
        return self.assign_points(np.asarray(point).reshape(1, 2))[0]


def assign_zone(point: tuple[float, float], registry: ZoneRegistry) -> str | None:
    """Zone containing the point, or None if outside all polygons."""
    return registry.assign(point)


def load_zone_geojson(source) -> ZoneRegistry:
    """Load a FeatureCollection of (Multi)Polygons with zone_id properties."""
    if isinstance(source, str) or hasattr(source, "__fspath__"):
        with open(source, "r", encoding="utf-8") as fh:
            doc = json.load(fh)
    else:
        doc = json.load(source)
    feats = doc.get("features")
    if doc.get("type") != "FeatureCollection" or feats is None:
        raise ZoneFileError("zone file is not a FeatureCollection")
    rings_by_zone: dict[str, list] = {}
    for feat in feats:
        props = feat.get("properties") or {}
        zone = props.get("zone_id")
        if zone is None:
            raise ZoneFileError("feature without a zone_id property")
        geom = feat.get("geometry") or {}
        gtype = geom.get("type")
        coords = geom.get("coordinates")
        if gtype == "Polygon":
            polys = [coords]
        elif gtype == "MultiPolygon":
            polys = coords
        else:
            raise ZoneFileError(
                f"zone {zone!r}: unsupported geometry type {gtype!r}")
        bucket = rings_by_zone.setdefault(str(zone), [])
        for poly in polys:
            bucket.extend(poly)
    return ZoneRegistry(rings_by_zone)


def load_assignments(source) -> dict[str, tuple[str, str]]:
    """Load a trip_id -> (origin_zone, dest_zone) assignment file."""
    if isinstance(source, str) or hasattr(source, "__fspath__"):
        fh = open(source, "r", encoding="utf-8", newline="")
        close = True
    else:
        fh, close = source, False
    try:
        reader = csv.DictReader(fh)
        required = {"trip_id", "origin_zone", "dest_zone"}
        if not required.issubset(reader.fieldnames or ()):
            raise ConfigError(
                "assignment file needs columns trip_id, origin_zone, dest_zone")
        return {row["trip_id"]: (row["origin_zone"], row["dest_zone"])
                for row in reader}
    finally:
        if close:
            fh.close()
