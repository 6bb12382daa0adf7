"""Shared fixtures: synthetic trips, zone grids, and config helpers."""
from __future__ import annotations

import json
import sys
from datetime import datetime, timedelta
from pathlib import Path

import pytest

sys.path.insert(0, str(Path(__file__).parent))

from zonefuse.ingest import TripRecord, ZonedTrip, bin_period


def make_trip(trip_id="t1", driver_id="d1",
              dispatch="2016-10-05 10:00", pickup=None, dropoff=None,
              pickup_point=(0.5, 0.5), dropoff_point=(1.5, 0.5),
              distance=3.0, duration=None, surge=1.0,
              vehicle_class="standard") -> TripRecord:
    """A valid trip with minimal boilerplate.

    pickup defaults to dispatch + 5 min and dropoff to pickup +
    duration (default 13 min); duration is kept consistent with the
    timestamps unless given explicitly.
    """
    d0 = datetime.fromisoformat(dispatch)
    p0 = datetime.fromisoformat(pickup) if pickup else d0 + timedelta(minutes=5)
    if duration is None:
        duration = 13.0
    d1 = (datetime.fromisoformat(dropoff) if dropoff
          else p0 + timedelta(minutes=duration))
    return TripRecord(
        trip_id=trip_id, driver_id=driver_id, dispatch_ts=d0, pickup_ts=p0,
        dropoff_ts=d1, pickup_point=pickup_point,
        dropoff_point=dropoff_point, distance=distance, duration=duration,
        surge_factor=surge, vehicle_class=vehicle_class)


def make_zoned(trip: TripRecord, origin_zone="A", dest_zone="B") -> ZonedTrip:
    return ZonedTrip(trip=trip, origin_zone=origin_zone, dest_zone=dest_zone,
                     period=bin_period(trip.pickup_ts),
                     dropoff_period=bin_period(trip.dropoff_ts))


def grid_zone_geojson(nx: int, ny: int, cell: float = 1.0) -> dict:
    """nx-by-ny grid of unit-square zones named g00, g01, ..."""
    feats = []
    for ix in range(nx):
        for iy in range(ny):
            x0, y0 = ix * cell, iy * cell
            ring = [[x0, y0], [x0 + cell, y0], [x0 + cell, y0 + cell],
                    [x0, y0 + cell], [x0, y0]]
            feats.append({
                "type": "Feature",
                "properties": {"zone_id": f"g{ix:02d}{iy:02d}"},
                "geometry": {"type": "Polygon", "coordinates": [ring]},
            })
    return {"type": "FeatureCollection", "features": feats}


def write_trips_csv(path: Path, trips: list[TripRecord]) -> None:
    lines = ["trip_id,driver_id,dispatch_ts,pickup_ts,dropoff_ts,"
             "pickup_lon,pickup_lat,dropoff_lon,dropoff_lat,"
             "distance,duration,surge_factor,vehicle_class"]
    for t in trips:
        lines.append(
            f"{t.trip_id},{t.driver_id},{t.dispatch_ts.isoformat(sep=' ')},"
            f"{t.pickup_ts.isoformat(sep=' ')},"
            f"{t.dropoff_ts.isoformat(sep=' ')},"
            f"{t.pickup_point[0]},{t.pickup_point[1]},"
            f"{t.dropoff_point[0]},{t.dropoff_point[1]},"
            f"{t.distance},{t.duration},{t.surge_factor},{t.vehicle_class}")
    path.write_text("\n".join(lines) + "\n", encoding="utf-8")


@pytest.fixture
def tmp_config(tmp_path):
    """Factory writing a config JSON plus its referenced files."""

    def _make(trips, geojson, **overrides):
        trips_path = tmp_path / "trips.csv"
        write_trips_csv(trips_path, trips)
        zones_path = tmp_path / "zones.geojson"
        zones_path.write_text(json.dumps(geojson), encoding="utf-8")
        cfg = {
            "trips": "trips.csv",
            "zones": "zones.geojson",
            "output_dir": "out",
            "timezone": "UTC",
            "knn_k": 2,
            "lambda_grid": [0.001, 0.1, 1.0, 10.0, 100.0],
            "seed": 7,
        }
        cfg.update(overrides)
        cfg_path = tmp_path / "config.json"
        cfg_path.write_text(json.dumps(cfg), encoding="utf-8")
        return cfg_path

    return _make
