"""Trip record parsing, period binning, and driver transition chaining.

Raw trips arrive as delimited text with a header row; a schema maps the
logical field names used here to the file's column names.  Rows that
violate the record invariants are rejected and counted per reason,
never silently dropped.  Accepted trips are zoned, binned into analysis
periods on the local clock, and chained per driver into consecutive
trip pairs carrying idle and reach times.
"""
from __future__ import annotations

import csv
import io
from collections import Counter
from dataclasses import dataclass, field
from datetime import datetime
from enum import Enum
from typing import Iterable, Mapping, Sequence
from zoneinfo import ZoneInfo

from .errors import ConfigError

VEHICLE_CLASSES = frozenset({"standard", "premium", "luxury", "suv"})

REQUIRED_FIELDS = (
    "trip_id", "driver_id", "dispatch_ts", "pickup_ts", "dropoff_ts",
    "pickup_lon", "pickup_lat", "dropoff_lon", "dropoff_lat",
    "distance", "duration", "surge_factor", "vehicle_class",
)

DEFAULT_SCHEMA = {name: name for name in REQUIRED_FIELDS}


class PeriodBin(Enum):
    WEEKDAY_PEAK = "weekday_peak"
    WEEKDAY_MIDDAY = "weekday_midday"
    WEEKDAY_OVERNIGHT = "weekday_overnight"
    WEEKEND = "weekend"
    OTHER_WEEKDAY = "other_weekday"


ANALYSIS_PERIODS = (PeriodBin.WEEKDAY_PEAK, PeriodBin.WEEKDAY_MIDDAY,
                    PeriodBin.WEEKDAY_OVERNIGHT, PeriodBin.WEEKEND)


@dataclass(frozen=True)
class PeriodCalendar:
    """Local-clock rule mapping timestamps to analysis periods.

    Saturday and Sunday map to the weekend bin.  Weekday hours map by
    membership in the three hour sets below; the defaults cover peak
    (6-9 AM and 4-7 PM, whole clock hours inclusive), mid-day (10 AM to
    3 PM) and overnight (8 PM to 5 AM), which tile the weekday.  A
    weekday hour outside all three sets falls into the other_weekday
    bin, which is excluded from the analyses.
    """

    timezone: str = "America/Chicago"
    peak_hours: frozenset = frozenset({6, 7, 8, 9, 16, 17, 18, 19})
    midday_hours: frozenset = frozenset({10, 11, 12, 13, 14, 15})
    overnight_hours: frozenset = frozenset({20, 21, 22, 23, 0, 1, 2, 3, 4, 5})

    def __post_init__(self):
        sets = (self.peak_hours, self.midday_hours, self.overnight_hours)
        if sum(len(s) for s in sets) != len(frozenset().union(*sets)):
            raise ValueError("period hour sets must be disjoint")
        for s in sets:
            if any(h < 0 or h > 23 for h in s):
                raise ValueError("hours must be in 0..23")

    @property
    def tzinfo(self) -> ZoneInfo:
        return ZoneInfo(self.timezone)


def bin_period(ts: datetime, calendar: PeriodCalendar = PeriodCalendar()) -> PeriodBin:
    """Map a timestamp to its analysis period on the local clock."""
    local = as_local(ts, calendar)
    if local.weekday() >= 5:
        return PeriodBin.WEEKEND
    h = local.hour
    if h in calendar.peak_hours:
        return PeriodBin.WEEKDAY_PEAK
    if h in calendar.midday_hours:
        return PeriodBin.WEEKDAY_MIDDAY
    if h in calendar.overnight_hours:
        return PeriodBin.WEEKDAY_OVERNIGHT
    return PeriodBin.OTHER_WEEKDAY


def as_local(ts: datetime, calendar: PeriodCalendar) -> datetime:
    """Interpret naive timestamps in the calendar's timezone."""
    if ts.tzinfo is None:
        return ts.replace(tzinfo=calendar.tzinfo)
    return ts.astimezone(calendar.tzinfo)


@dataclass(frozen=True, slots=True)
class TripRecord:
    trip_id: str
    driver_id: str
    dispatch_ts: datetime
    pickup_ts: datetime
    dropoff_ts: datetime
    pickup_point: tuple[float, float]    # (lon, lat) decimal degrees
    dropoff_point: tuple[float, float]
    distance: float                      # miles
    duration: float                      # minutes
    surge_factor: float
    vehicle_class: str


@dataclass(frozen=True, slots=True)
class ZonedTrip:
    trip: TripRecord
    origin_zone: str
    dest_zone: str
    period: PeriodBin           # pickup-time period
    dropoff_period: PeriodBin

    @property
    def reach_time(self) -> float:
        """Minutes from dispatch to rider pickup."""
        return (self.trip.pickup_ts - self.trip.dispatch_ts).total_seconds() / 60.0


@dataclass(frozen=True, slots=True)
class DriverTransition:
    """Two consecutive trips of one driver."""

    first: ZonedTrip
    second: ZonedTrip
    idle_time: float    # minutes from first drop-off to second dispatch
    reach_time: float   # minutes from second dispatch to second pickup


@dataclass
class IngestReport:
    total_rows: int = 0
    accepted: int = 0
    rejections: Counter = field(default_factory=Counter)

    @property
    def rejected(self) -> int:
        return sum(self.rejections.values())


def _parse_ts(raw: str) -> datetime:
    return datetime.fromisoformat(raw.strip())


def parse_trips(source, schema: Mapping[str, str] | None = None, *,
                delimiter: str = ",",
                duration_tolerance: float = 2.0,
                ) -> tuple[list[TripRecord], IngestReport]:
    """Parse delimited trip records, validating every row.

    ``source`` is a path or an open text stream with a header row.
    ``schema`` maps the logical field names in ``REQUIRED_FIELDS`` to
    the file's column names (default: identical names).  A missing
    column is a fatal :class:`ConfigError`; a bad row is counted in the
    report under its rejection reason.
    """
    schema = dict(DEFAULT_SCHEMA if schema is None else schema)
    missing_logical = [f for f in REQUIRED_FIELDS if f not in schema]
    if missing_logical:
        raise ConfigError(f"schema is missing logical fields: {missing_logical}")

    close = False
    if isinstance(source, str) or hasattr(source, "__fspath__"):
        stream = open(source, "r", encoding="utf-8", newline="")
        close = True
    elif isinstance(source, (bytes, bytearray)):
        stream = io.StringIO(source.decode("utf-8"))
    else:
        stream = source
    try:
        reader = csv.DictReader(stream, delimiter=delimiter)
        header = reader.fieldnames or []
        missing_cols = [schema[f] for f in REQUIRED_FIELDS
                        if schema[f] not in header]
        if missing_cols:
            raise ConfigError(f"input file is missing columns: {missing_cols}")

        records: list[TripRecord] = []
        report = IngestReport()
        file_aware: bool | None = None   # tz-awareness must be uniform
        for row in reader:
            report.total_rows += 1
            reason = None
            try:
                dispatch = _parse_ts(row[schema["dispatch_ts"]])
                pickup = _parse_ts(row[schema["pickup_ts"]])
                dropoff = _parse_ts(row[schema["dropoff_ts"]])
            except (ValueError, TypeError):
                report.rejections["unparseable-timestamp"] += 1
                continue
            awareness = {ts.tzinfo is not None
                         for ts in (dispatch, pickup, dropoff)}
            if len(awareness) != 1 or (file_aware is not None
                                       and awareness != {file_aware}):
                report.rejections["timestamp-mixed-awareness"] += 1
                continue
            try:
                plon = float(row[schema["pickup_lon"]])
                plat = float(row[schema["pickup_lat"]])
                dlon = float(row[schema["dropoff_lon"]])
                dlat = float(row[schema["dropoff_lat"]])
                distance = float(row[schema["distance"]])
                duration = float(row[schema["duration"]])
                surge = float(row[schema["surge_factor"]])
            except (ValueError, TypeError):
                report.rejections["unparseable-number"] += 1
                continue
            vclass = (row[schema["vehicle_class"]] or "").strip().lower()

            if not (dispatch <= pickup <= dropoff):
                reason = "timestamp-order"
            elif distance < 0:
                reason = "negative-distance"
            elif duration < 0:
                reason = "negative-duration"
            elif surge <= 0:
                reason = "nonpositive-surge"
            elif vclass not in VEHICLE_CLASSES:
                reason = "unknown-vehicle-class"
            else:
                elapsed = (dropoff - pickup).total_seconds() / 60.0
                if abs(elapsed - duration) > duration_tolerance:
                    reason = "duration-mismatch"
            if reason is not None:
                report.rejections[reason] += 1
                continue

            file_aware = dispatch.tzinfo is not None
            records.append(TripRecord(
                trip_id=row[schema["trip_id"]].strip(),
                driver_id=row[schema["driver_id"]].strip(),
                dispatch_ts=dispatch, pickup_ts=pickup, dropoff_ts=dropoff,
                pickup_point=(plon, plat), dropoff_point=(dlon, dlat),
                distance=distance, duration=duration, surge_factor=surge,
                vehicle_class=vclass))
            report.accepted += 1
        return records, report
    finally:
        if close:
            stream.close()


def zone_trips(trips: Iterable[TripRecord],
               origin_of, dest_of,
               calendar: PeriodCalendar = PeriodCalendar()
               ) -> tuple[list[ZonedTrip], Counter]:
    """Attach zones and periods to trips.

    ``origin_of(trip)`` / ``dest_of(trip)`` return a zone id or None;
    trips with an unresolvable endpoint are excluded and counted.
    """
    zoned: list[ZonedTrip] = []
    report: Counter = Counter()
    for trip in trips:
        origin = origin_of(trip)
        if origin is None:
            report["origin-unzoned"] += 1
            continue
        dest = dest_of(trip)
        if dest is None:
            report["destination-unzoned"] += 1
            continue
        zoned.append(ZonedTrip(
            trip=trip, origin_zone=str(origin), dest_zone=str(dest),
            period=bin_period(trip.pickup_ts, calendar),
            dropoff_period=bin_period(trip.dropoff_ts, calendar)))
    return zoned, report


def chain_driver_transitions(trips: Sequence[ZonedTrip],
                             idle_cap: float = 60.0
                             ) -> tuple[list[DriverTransition], Counter]:
    """Pair each driver's consecutive trips into transitions.

    Trips are grouped by driver and ordered by (dropoff time, trip id).
    For each adjacent pair, idle time is the gap from the first
    drop-off to the second dispatch and reach time is the second trip's
    dispatch-to-pickup gap.  Pairs with negative idle time (queued
    dispatch) or idle time at or above ``idle_cap`` minutes are
    excluded and counted, as are duplicate trip ids within a driver's
    sequence.
    """
    if idle_cap <= 0:
        raise ValueError("idle_cap must be > 0")
    by_driver: dict[str, list[ZonedTrip]] = {}
    for zt in trips:
        by_driver.setdefault(zt.trip.driver_id, []).append(zt)

    transitions: list[DriverTransition] = []
    report: Counter = Counter()
    for driver in sorted(by_driver):
        seq = sorted(by_driver[driver],
                     key=lambda zt: (zt.trip.dropoff_ts, zt.trip.trip_id))
        deduped: list[ZonedTrip] = []
        seen: set[str] = set()
        for zt in seq:
            if zt.trip.trip_id in seen:
                report["duplicate-trip-id"] += 1
                continue
            seen.add(zt.trip.trip_id)
            deduped.append(zt)
        for first, second in zip(deduped, deduped[1:]):
            idle = (second.trip.dispatch_ts
                    - first.trip.dropoff_ts).total_seconds() / 60.0
            if idle < 0:
                report["negative-idle"] += 1
                continue
            if idle >= idle_cap:
                report["idle-cap"] += 1
                continue
            reach = (second.trip.pickup_ts
                     - second.trip.dispatch_ts).total_seconds() / 60.0
            transitions.append(DriverTransition(
                first=first, second=second, idle_time=idle, reach_time=reach))
    return transitions, report
