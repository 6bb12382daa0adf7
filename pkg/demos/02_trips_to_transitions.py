"""From raw trip rows to zoned trips and driver transitions.

Builds a small in-memory CSV, parses it with row-level validation,
assigns zones by point-in-polygon, bins local-clock periods, and chains
one driver's day into consecutive-trip transitions with idle and reach
times.
"""
import io

from zonefuse import (PeriodCalendar, ZoneRegistry, chain_driver_transitions,
                      parse_trips, zone_trips)

CSV = """\
trip_id,driver_id,dispatch_ts,pickup_ts,dropoff_ts,pickup_lon,pickup_lat,dropoff_lon,dropoff_lat,distance,duration,surge_factor,vehicle_class
a1,drv9,2016-10-05 10:00,2016-10-05 10:05,2016-10-05 10:20,0.2,0.5,1.6,0.5,3.0,15,1.0,standard
a2,drv9,2016-10-05 10:32,2016-10-05 10:38,2016-10-05 10:50,1.5,0.4,0.4,0.6,2.5,12,1.2,premium
a3,drv9,2016-10-05 12:10,2016-10-05 12:16,2016-10-05 12:30,0.5,0.5,1.7,0.3,3.2,14,1.0,standard
bad,drv9,2016-10-05 13:00,2016-10-05 12:55,2016-10-05 13:10,0.5,0.5,1.5,0.5,2.0,15,1.0,standard
a4,drv9,2016-10-05 14:00,2016-10-05 14:04,2016-10-05 14:16,1.4,0.5,0.3,0.5,2.2,12,1.0,suv
"""

trips, report = parse_trips(io.StringIO(CSV))
print(f"parsed {report.accepted} of {report.total_rows} rows; "
      f"rejections: {dict(report.rejections)}")

registry = ZoneRegistry({
    "west": [[(0, 0), (1, 0), (1, 1), (0, 1)]],
    "east": [[(1, 0), (2, 0), (2, 1), (1, 1)]],
})
calendar = PeriodCalendar(timezone="UTC")
zoned, zr = zone_trips(
    trips,
    origin_of=lambda t: registry.assign(t.pickup_point),
    dest_of=lambda t: registry.assign(t.dropoff_point),
    calendar=calendar)
print(f"zoned {len(zoned)} trips; exclusions: {dict(zr)}")
for zt in zoned:
    print(f"  {zt.trip.trip_id}: {zt.origin_zone} -> {zt.dest_zone}  "
          f"period={zt.period.value}")

transitions, chain_report = chain_driver_transitions(zoned, idle_cap=60)
print(f"\n{len(transitions)} transitions "
      f"(exclusions: {dict(chain_report)})")
for tr in transitions:
    print(f"  {tr.first.trip.trip_id} -> {tr.second.trip.trip_id}: "
          f"idle {tr.idle_time:.0f} min, reach {tr.reach_time:.0f} min, "
          f"anchored at {tr.first.dest_zone!r}")
