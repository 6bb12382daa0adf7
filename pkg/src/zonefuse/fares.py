"""Trip fares and driver productivity metrics.

Fares follow the standard-class tariff: base charge plus per-minute and
per-mile components, floored at the minimum fare.  The surge fare is
the flat fare times the trip's surge multiplier.  Productivity metrics
are dollars per hour over one or two consecutive trips:

* continuation payoff: the next trip's fare over the unproductive time
  plus that trip's duration, anchored to the first trip's drop-off
  zone;
* driver productivity: both trips' fares over the total elapsed working
  time, also anchored to the first trip's drop-off zone, evaluated on
  common-origin transitions (the natural-experiment filter).

The two-trip metric decomposes exactly into a duration-weighted average
of the first trip's hourly revenue and the continuation payoff.
"""
from __future__ import annotations

from collections import Counter
from dataclasses import dataclass, field
from typing import Iterable, Mapping, Sequence

from .errors import SampleRejection
from .ingest import DriverTransition, PeriodBin, TripRecord, VEHICLE_CLASSES

FARE_MODES = ("flat", "surge")


@dataclass(frozen=True)
class Tariff:
    """Per-trip rate card, standard vehicle class."""

    base: float = 1.50
    per_minute: float = 0.25
    per_mile: float = 0.99
    minimum: float = 4.00
    # Optional per-class rate sets; metrics always recompute with the
    # standard rates above, so these never influence results.
    class_rates: Mapping[str, Mapping[str, float]] = field(default_factory=dict)

    def __post_init__(self):
        for name in ("base", "per_minute", "per_mile", "minimum"):
            if getattr(self, name) < 0:
                raise ValueError(f"tariff component {name} must be >= 0")
        if self.minimum < self.base:
            raise ValueError("minimum fare must be >= base fare")


@dataclass(frozen=True)
class ProductivitySample:
    """One evaluated metric observation, keyed by zone and period."""

    kind: str                       # "continuation_payoff" | "driver_productivity"
    value: float                    # $/hour
    anchor_zone: str
    period: PeriodBin
    fare_mode: str                  # "flat" | "surge"
    components: Mapping[str, float]

    def __post_init__(self):
        if not (self.value >= 0 and self.value == self.value):
            raise ValueError("sample value must be finite and >= 0")


def flat_fare(duration: float, distance: float, tariff: Tariff) -> float:
    """Fare in dollars for a trip of `duration` minutes and `distance` miles."""
    if duration < 0 or distance < 0:
        raise ValueError("duration and distance must be >= 0")
    return max(tariff.base + tariff.per_minute * duration
               + tariff.per_mile * distance, tariff.minimum)


def surge_fare(flat: float, alpha: float) -> float:
    """Apply the surge multiplier to a flat fare.  alpha = 1 is the identity."""
    if alpha <= 0:
        raise ValueError("surge factor must be > 0")
    return alpha * flat


def normalize_to_standard(trip: TripRecord, tariff: Tariff) -> float:
    """Standard-class flat fare for the trip, regardless of vehicle class.

    The fare is recomputed from the trip's own duration and distance
    with the standard rates, so class never influences the metrics.
    """
    if trip.vehicle_class not in VEHICLE_CLASSES:
        raise SampleRejection("unknown-vehicle-class")
    return flat_fare(trip.duration, trip.distance, tariff)


def unproductive_time(idle: float, reach: float) -> float:
    """Idle plus reach minutes between two consecutive trips."""
    if idle < 0 or reach < 0:
        raise ValueError("idle and reach must be >= 0")
    return idle + reach


def _trip_fare(trip: TripRecord, fare_mode: str, tariff: Tariff) -> float:
    fare = normalize_to_standard(trip, tariff)
    if fare_mode == "surge":
        fare = surge_fare(fare, trip.surge_factor)
    elif fare_mode != "flat":
        raise ValueError(f"unknown fare mode {fare_mode!r}")
    return fare


def continuation_payoff(tr: DriverTransition, fare_mode: str,
                        tariff: Tariff = Tariff()) -> ProductivitySample:
    """$/hour expected from the follow-on trip, given the first drop-off zone.

    value = 60 * F2 / (u + t2) with u the unproductive time and t2 the
    second trip's duration.  Anchored to the first trip's destination
    zone and drop-off period.
    """
    u = unproductive_time(tr.idle_time, tr.reach_time)
    t2 = tr.second.trip.duration
    if u + t2 <= 0:
        raise SampleRejection("zero-denominator")
    f2 = _trip_fare(tr.second.trip, fare_mode, tariff)
    value = 60.0 * f2 / (u + t2)
    return ProductivitySample(
        kind="continuation_payoff", value=value,
        anchor_zone=tr.first.dest_zone, period=tr.first.dropoff_period,
        fare_mode=fare_mode,
        components={"fare2": f2, "duration2": t2, "unproductive": u})


def driver_productivity(tr: DriverTransition, fare_mode: str,
                        tariff: Tariff = Tariff()) -> ProductivitySample:
    """$/hour over two consecutive trips.

    value = 60 * (F1 + F2) / (t1 + u + t2), anchored to the first
    trip's destination zone and its pickup period (the dispatch-time
    market conditions under the common-origin experiment).
    """
    u = unproductive_time(tr.idle_time, tr.reach_time)
    t1 = tr.first.trip.duration
    t2 = tr.second.trip.duration
    total = t1 + u + t2
    if total <= 0:
        raise SampleRejection("zero-denominator")
    f1 = _trip_fare(tr.first.trip, fare_mode, tariff)
    f2 = _trip_fare(tr.second.trip, fare_mode, tariff)
    value = 60.0 * (f1 + f2) / total
    return ProductivitySample(
        kind="driver_productivity", value=value,
        anchor_zone=tr.first.dest_zone, period=tr.first.period,
        fare_mode=fare_mode,
        components={"fare1": f1, "duration1": t1, "fare2": f2,
                    "duration2": t2, "unproductive": u})


def productivity_decomposition(tr: DriverTransition, fare_mode: str,
                               tariff: Tariff = Tariff()
                               ) -> tuple[float, float, float, float]:
    """Split the two-trip metric into (w1, hourly1, w2, payoff).

    w1 * hourly1 + w2 * payoff reproduces the two-trip value exactly:
    w1 = t1/T, hourly1 = 60*F1/t1, w2 = (u+t2)/T, payoff as in
    :func:`continuation_payoff`, with T the total elapsed time.
    """
    u = unproductive_time(tr.idle_time, tr.reach_time)
    t1 = tr.first.trip.duration
    t2 = tr.second.trip.duration
    if t1 <= 0:
        raise SampleRejection("zero-first-duration")
    if u + t2 <= 0:
        raise SampleRejection("zero-denominator")
    total = t1 + u + t2
    f1 = _trip_fare(tr.first.trip, fare_mode, tariff)
    f2 = _trip_fare(tr.second.trip, fare_mode, tariff)
    w1 = t1 / total
    hourly1 = 60.0 * f1 / t1
    w2 = (u + t2) / total
    payoff = 60.0 * f2 / (u + t2)
    return w1, hourly1, w2, payoff


def evaluate_samples(transitions: Iterable[DriverTransition], kind: str,
                     fare_mode: str, tariff: Tariff = Tariff()
                     ) -> tuple[list[ProductivitySample], Counter]:
    """Evaluate a metric over transitions, counting rejections.

    Also counts (without rejecting) trips whose surge factor is below
    one, since those records usually indicate data problems.
    """
    fn = {"continuation_payoff": continuation_payoff,
          "driver_productivity": driver_productivity}[kind]
    samples: list[ProductivitySample] = []
    report: Counter = Counter()
    for tr in transitions:
        if fare_mode == "surge":
            if tr.second.trip.surge_factor < 1:
                report["sub-unit-surge"] += 1
            if kind == "driver_productivity" and tr.first.trip.surge_factor < 1:
                report["sub-unit-surge"] += 1
        try:
            samples.append(fn(tr, fare_mode, tariff))
        except SampleRejection as rej:
            report[rej.reason] += 1
    return samples, report


def samples_audit_text(samples: Sequence[ProductivitySample]) -> str:
    """Sample-level audit table with the constituent fare/time columns."""
    keys = sorted({k for s in samples for k in s.components})
    header = ["kind", "anchor_zone", "period", "fare_mode", "value"] + keys
    lines = [",".join(header)]
    for s in samples:
        row = [s.kind, s.anchor_zone, s.period.value, s.fare_mode,
               f"{s.value:.6f}"]
        row += [f"{s.components[k]:.6f}" if k in s.components else ""
                for k in keys]
        lines.append(",".join(row))
    return "\n".join(lines) + "\n"


@dataclass(frozen=True)
class FilterReport:
    total: int
    kept: int


def experiment_filter(transitions: Sequence[DriverTransition],
                      origin_zones: Iterable[str]
                      ) -> tuple[list[DriverTransition], FilterReport]:
    """Keep transitions whose first trip started in the given zone set.

    This is the common-origin natural experiment: with the origin held
    fixed, destination effects on productivity are exogenous.
    """
    zones = {str(z) for z in origin_zones}
    if not zones:
        raise ValueError("origin zone set must be nonempty")
    kept = [tr for tr in transitions if tr.first.origin_zone in zones]
    return kept, FilterReport(total=len(transitions), kept=len(kept))
