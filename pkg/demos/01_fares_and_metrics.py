"""Fares and two-trip productivity metrics on a worked example.

A driver finishes Trip 1 (10 min, 5 mi), waits 12 min for the next
dispatch, drives 6 min to the rider, and serves Trip 2 (12 min).  The
demo prints the fare arithmetic, the destination continuation payoff,
the two-trip driver productivity, and its exact decomposition into
first-trip hourly revenue plus continuation payoff.
"""
from datetime import datetime, timedelta

from zonefuse import (DriverTransition, Tariff, TripRecord, ZonedTrip,
                      bin_period, continuation_payoff, driver_productivity,
                      flat_fare, productivity_decomposition, surge_fare)

tariff = Tariff()
print("tariff:", tariff)
print()
print("flat fare, 10 min / 5 mi :", flat_fare(10, 5, tariff))
print("flat fare, 0 min / 0 mi  :", flat_fare(0, 0, tariff), "(minimum binds)")
print("surge x1.5 on $4.00      :", surge_fare(4.00, 1.5))
print()


def zoned(trip, origin, dest):
    return ZonedTrip(trip=trip, origin_zone=origin, dest_zone=dest,
                     period=bin_period(trip.pickup_ts),
                     dropoff_period=bin_period(trip.dropoff_ts))


t0 = datetime(2016, 10, 5, 10, 0)
first = TripRecord(
    trip_id="t1", driver_id="d1", dispatch_ts=t0,
    pickup_ts=t0 + timedelta(minutes=4),
    dropoff_ts=t0 + timedelta(minutes=14),
    pickup_point=(-97.74, 30.27), dropoff_point=(-97.70, 30.25),
    distance=5.0, duration=10.0, surge_factor=1.0,
    vehicle_class="standard")
second_dispatch = first.dropoff_ts + timedelta(minutes=12)
# distance chosen so Trip 2's flat fare is exactly $10.00
d2 = (10.0 - 1.5 - 0.25 * 12) / 0.99
second = TripRecord(
    trip_id="t2", driver_id="d1", dispatch_ts=second_dispatch,
    pickup_ts=second_dispatch + timedelta(minutes=6),
    dropoff_ts=second_dispatch + timedelta(minutes=18),
    pickup_point=(-97.70, 30.25), dropoff_point=(-97.68, 30.30),
    distance=d2, duration=12.0, surge_factor=2.0,
    vehicle_class="standard")

tr = DriverTransition(first=zoned(first, "cbd", "east"),
                      second=zoned(second, "east", "north"),
                      idle_time=12.0, reach_time=6.0)

print("idle 12 min + reach 6 min -> unproductive time 18 min")
for mode in ("flat", "surge"):
    pi = continuation_payoff(tr, mode, tariff)
    prod = driver_productivity(tr, mode, tariff)
    w1, hourly1, w2, payoff = productivity_decomposition(tr, mode, tariff)
    print(f"\n[{mode} fares]")
    print(f"  continuation payoff at {pi.anchor_zone!r}: "
          f"${pi.value:.3f}/hr  (period {pi.period.value})")
    print(f"  driver productivity at {prod.anchor_zone!r}: "
          f"${prod.value:.3f}/hr")
    print(f"  decomposition: {w1:.3f} x {hourly1:.2f} + {w2:.3f} x "
          f"{payoff:.2f} = {w1 * hourly1 + w2 * payoff:.3f}")
