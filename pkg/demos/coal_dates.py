"""
Calendar dates to event times
=============================

The library never parses calendars.  Records of dated events are converted to
fractional years since the start of the observation window first, here with
a small helper.  The dates below are synthetic stand-ins for a record of
disasters; swap in a real list of ``datetime.date`` values.

The converted file can be fed straight to the command line::

    python3 -m pointintensity fit --data events.csv --method gmc --bins rule --seed 1
"""

import datetime as dt
import os
import tempfile

import numpy as np

from pointintensity import EventSeries, rule_of_thumb_bins, write_events


def fractional_year(day):
    """Year plus the elapsed fraction of that year (leap years handled)."""
    start = dt.date(day.year, 1, 1)
    length = (dt.date(day.year + 1, 1, 1) - start).days
    return day.year + (day - start).days / length


def to_event_times(days, start, end):
    t0 = fractional_year(start)
    times = np.array([fractional_year(d) - t0 for d in days])
    return EventSeries(fractional_year(end) - t0, [np.sort(times)])


start, end = dt.date(1851, 3, 15), dt.date(1962, 3, 22)
rng = np.random.default_rng(1)
span = (end - start).days
# more events early in the record than late
offsets = np.sort(span * rng.beta(1.0, 2.0, size=191)).astype(int)
days = [start + dt.timedelta(days=int(o)) for o in offsets]

data = to_event_times(days, start, end)
print(f"{data.total_events()} events over {data.horizon:.2f} years")
print(f"rule of thumb: N = {rule_of_thumb_bins(data)} bins")
print("first three times:", np.round(data.replicates[0][:3], 4))

path = os.path.join(tempfile.mkdtemp(), "events.csv")
write_events(data, path)
print(f"wrote {path}")
