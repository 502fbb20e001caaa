"""Arrival and cancellation tallies over calendar buckets.

Continuous trading runs 10:00-13:00 and 14:00-18:00; timestamps are
nanoseconds since midnight of the session's date.  Events are tallied
into buckets at four granularities:

* daily    - one bucket per session date
* weekly   - ISO week of the session date
* monthly  - calendar month
* hourly   - ISO week crossed with the hour slot 1..7 (10-11, 11-12,
             12-13, 14-15, 15-16, 16-17, 17-18)

Arrivals accumulate quantity per tick over a 1..15 window, cancels
accumulate the ratio quantity/level_quantity_before per tick over 1..10.
Events beyond the windows are dropped and counted, never binned.
"""

from __future__ import annotations

import csv
import datetime as dt
from dataclasses import dataclass, field
from enum import Enum
from typing import Iterable, Sequence

from lobfit.book import BookEvent, EventKind
from lobfit.errors import EmptyBucket, OutsideTradingHours
from lobfit.feed import Side

__all__ = [
    "ARRIVAL_TICKS",
    "CANCEL_TICKS",
    "HOUR_SLOTS",
    "Granularity",
    "BucketKey",
    "ArrivalTally",
    "CancelTally",
    "TallyStore",
    "in_trading_hours",
    "hour_slot",
    "assign_bucket",
    "accumulate",
    "accumulate_event",
    "arrival_density",
    "cancellation_ratio",
    "merge",
    "parse_bucket_label",
    "write_rates_csv",
    "write_cancels_csv",
    "read_rates_csv",
    "read_cancels_csv",
]

ARRIVAL_TICKS = 15
CANCEL_TICKS = 10
HOUR_SLOTS = 7

_NS_PER_HOUR = 3_600_000_000_000
# trading hours, as half-open hour-of-day ranges
_MORNING = (10, 13)
_AFTERNOON = (14, 18)


class Granularity(Enum):
    DAILY = "daily"
    WEEKLY = "weekly"
    MONTHLY = "monthly"
    HOURLY = "hourly"


_GRANULARITY_RANK = {g: i for i, g in enumerate(Granularity)}


def in_trading_hours(timestamp_ns: int) -> bool:
    return (_MORNING[0] * _NS_PER_HOUR <= timestamp_ns
            < _MORNING[1] * _NS_PER_HOUR
            or _AFTERNOON[0] * _NS_PER_HOUR <= timestamp_ns
            < _AFTERNOON[1] * _NS_PER_HOUR)


def hour_slot(timestamp_ns: int) -> int:
    """Map a within-session timestamp to its hour slot 1..7."""
    hour = timestamp_ns // _NS_PER_HOUR
    if _MORNING[0] <= hour < _MORNING[1]:
        return hour - _MORNING[0] + 1
    if _AFTERNOON[0] <= hour < _AFTERNOON[1]:
        return hour - _AFTERNOON[0] + 1 + (_MORNING[1] - _MORNING[0])
    raise OutsideTradingHours(f"timestamp {timestamp_ns} ns is not in a slot")


@dataclass(frozen=True, slots=True)
class BucketKey:
    """One tally bucket: granularity, calendar index, book side."""

    granularity: Granularity
    index: tuple
    side: Side

    @property
    def label(self) -> str:
        """Stable text form, e.g. daily:2017-08-01 or hourly:2017-W31:h3."""
        g = self.granularity
        if g is Granularity.DAILY:
            body = dt.date(*self.index).isoformat()
        elif g is Granularity.WEEKLY:
            body = f"{self.index[0]:04d}-W{self.index[1]:02d}"
        elif g is Granularity.MONTHLY:
            body = f"{self.index[0]:04d}-{self.index[1]:02d}"
        else:
            body = f"{self.index[0]:04d}-W{self.index[1]:02d}:h{self.index[2]}"
        return f"{g.value}:{body}"

    def sort_key(self) -> tuple:
        return (_GRANULARITY_RANK[self.granularity], self.index,
                int(self.side))


def parse_bucket_label(label: str) -> tuple[Granularity, tuple]:
    """Inverse of BucketKey.label, without the side."""
    try:
        head, body = label.split(":", 1)
        g = Granularity(head)
        if g is Granularity.DAILY:
            d = dt.date.fromisoformat(body)
            return g, (d.year, d.month, d.day)
        if g is Granularity.WEEKLY:
            year, week = body.split("-W")
            return g, (int(year), int(week))
        if g is Granularity.MONTHLY:
            year, month = body.split("-")
            return g, (int(year), int(month))
        rest, slot = body.split(":h")
        year, week = rest.split("-W")
        return g, (int(year), int(week), int(slot))
    except (ValueError, KeyError) as exc:
        raise ValueError(f"bad bucket label {label!r}") from exc


def assign_bucket(timestamp_ns: int, session_date: dt.date,
                  granularity: Granularity, side: Side) -> BucketKey:
    """Bucket for an in-hours event; OutsideTradingHours otherwise."""
    if not in_trading_hours(timestamp_ns):
        raise OutsideTradingHours(
            f"timestamp {timestamp_ns} ns on {session_date}")
    g = Granularity(granularity)
    if g is Granularity.DAILY:
        index = (session_date.year, session_date.month, session_date.day)
    elif g is Granularity.WEEKLY:
        iso = session_date.isocalendar()
        index = (iso[0], iso[1])
    elif g is Granularity.MONTHLY:
        index = (session_date.year, session_date.month)
    else:
        iso = session_date.isocalendar()
        index = (iso[0], iso[1], hour_slot(timestamp_ns))
    return BucketKey(g, index, Side(side))


@dataclass(slots=True)
class ArrivalTally:
    """Arriving quantity per tick, 1-based ticks stored at index tick-1."""

    quantity: list[int] = field(
        default_factory=lambda: [0] * ARRIVAL_TICKS)


@dataclass(slots=True)
class CancelTally:
    """Per-tick sum of cancellation ratios and the contributing count."""

    ratio_sum: list[float] = field(
        default_factory=lambda: [0.0] * CANCEL_TICKS)
    count: list[int] = field(default_factory=lambda: [0] * CANCEL_TICKS)


@dataclass(slots=True)
class TallyStore:
    arrivals: dict[BucketKey, ArrivalTally] = field(default_factory=dict)
    cancels: dict[BucketKey, CancelTally] = field(default_factory=dict)
    dropped_arrivals: int = 0
    dropped_cancels: int = 0
    out_of_hours: int = 0


def accumulate(store: TallyStore, key: BucketKey, event: BookEvent) -> None:
    """Fold one event into one bucket.

    Arrivals beyond tick 15 and cancels beyond tick 10 leave the
    tallies unchanged and bump the matching dropped counter (once per
    key they would have landed in).  Executions are not tallied.
    """
    if event.kind is EventKind.LIMIT_ARRIVAL:
        if event.tick > ARRIVAL_TICKS:
            store.dropped_arrivals += 1
            return
        tally = store.arrivals.get(key)
        if tally is None:
            tally = store.arrivals[key] = ArrivalTally()
        tally.quantity[event.tick - 1] += event.quantity
    elif event.kind is EventKind.CANCEL:
        if event.tick > CANCEL_TICKS:
            store.dropped_cancels += 1
            return
        tally = store.cancels.get(key)
        if tally is None:
            tally = store.cancels[key] = CancelTally()
        tally.ratio_sum[event.tick - 1] += (
            event.quantity / event.level_quantity_before)
        tally.count[event.tick - 1] += 1


def accumulate_event(store: TallyStore, event: BookEvent,
                     session_date: dt.date,
                     granularities: Sequence[Granularity] = tuple(Granularity),
                     include_replaces: bool = True) -> bool:
    """Tally one event under every requested granularity.

    Events outside trading hours are skipped and counted (the stream
    may open with book seeding before 10:00); replace-origin events are
    skipped when include_replaces is False.  Returns True if tallied.
    """
    if event.kind is EventKind.EXECUTION:
        return False
    if not include_replaces and event.from_replace:
        return False
    if not in_trading_hours(event.timestamp_ns):
        store.out_of_hours += 1
        return False
    for g in granularities:
        key = assign_bucket(event.timestamp_ns, session_date, g, event.side)
        accumulate(store, key, event)
    return True


def arrival_density(tally: ArrivalTally) -> list[float]:
    """Normalized per-tick arrival fractions, summing to 1."""
    total = sum(tally.quantity)
    if total == 0:
        raise EmptyBucket("no arrivals tallied")
    return [q / total for q in tally.quantity]


def cancellation_ratio(tally: CancelTally) -> list[float | None]:
    """Mean cancellation ratio per tick; None where nothing was observed."""
    return [s / c if c else None
            for s, c in zip(tally.ratio_sum, tally.count)]


def merge(a: TallyStore, b: TallyStore) -> TallyStore:
    """Entry-wise sum of two stores."""
    out = TallyStore()
    out.dropped_arrivals = a.dropped_arrivals + b.dropped_arrivals
    out.dropped_cancels = a.dropped_cancels + b.dropped_cancels
    out.out_of_hours = a.out_of_hours + b.out_of_hours
    for src in (a, b):
        for key, tally in src.arrivals.items():
            dst = out.arrivals.setdefault(key, ArrivalTally())
            for i, q in enumerate(tally.quantity):
                dst.quantity[i] += q
        for key, tally in src.cancels.items():
            dst = out.cancels.setdefault(key, CancelTally())
            for i in range(CANCEL_TICKS):
                dst.ratio_sum[i] += tally.ratio_sum[i]
                dst.count[i] += tally.count[i]
    return out


# --- CSV staging ---

def write_rates_csv(store: TallyStore, path) -> None:
    """One row per (bucket, side, tick) with quantity and density."""
    with open(path, "w", newline="") as fh:
        writer = csv.writer(fh)
        writer.writerow(["bucket_key", "side", "tick", "quantity", "density"])
        for key in sorted(store.arrivals, key=BucketKey.sort_key):
            density = arrival_density(store.arrivals[key])
            label = key.label
            side = key.side.name.lower()
            for tick in range(1, ARRIVAL_TICKS + 1):
                writer.writerow([label, side, tick,
                                 store.arrivals[key].quantity[tick - 1],
                                 repr(density[tick - 1])])


def write_cancels_csv(store: TallyStore, path) -> None:
    """One row per observed (bucket, side, tick); unseen ticks are absent."""
    with open(path, "w", newline="") as fh:
        writer = csv.writer(fh)
        writer.writerow(["bucket_key", "side", "tick", "count", "mean_ratio"])
        for key in sorted(store.cancels, key=BucketKey.sort_key):
            ratios = cancellation_ratio(store.cancels[key])
            label = key.label
            side = key.side.name.lower()
            for tick in range(1, CANCEL_TICKS + 1):
                count = store.cancels[key].count[tick - 1]
                if count == 0:
                    continue
                writer.writerow([label, side, tick, count,
                                 repr(ratios[tick - 1])])


def read_rates_csv(path) -> list[dict]:
    """Rows grouped per instance, in file order.

    Each entry: {"bucket_key", "granularity", "side", "quantity": [15],
    "density": [15]}.
    """
    instances: dict[tuple[str, str], dict] = {}
    with open(path, newline="") as fh:
        for row in csv.DictReader(fh):
            label = row["bucket_key"]
            side = row["side"]
            inst = instances.get((label, side))
            if inst is None:
                granularity, _ = parse_bucket_label(label)
                inst = instances[(label, side)] = {
                    "bucket_key": label,
                    "granularity": granularity,
                    "side": Side[side.upper()],
                    "quantity": [0] * ARRIVAL_TICKS,
                    "density": [0.0] * ARRIVAL_TICKS,
                }
            tick = int(row["tick"])
            if not 1 <= tick <= ARRIVAL_TICKS:
                raise ValueError(f"tick {tick} outside 1..{ARRIVAL_TICKS}")
            inst["quantity"][tick - 1] = int(row["quantity"])
            inst["density"][tick - 1] = float(row["density"])
    return list(instances.values())


def read_cancels_csv(path) -> list[dict]:
    """Rows grouped per (bucket, side): count and mean_ratio per tick.

    Ticks absent from the file stay at count 0 / ratio None.
    """
    instances: dict[tuple[str, str], dict] = {}
    with open(path, newline="") as fh:
        for row in csv.DictReader(fh):
            label = row["bucket_key"]
            side = row["side"]
            inst = instances.get((label, side))
            if inst is None:
                granularity, _ = parse_bucket_label(label)
                inst = instances[(label, side)] = {
                    "bucket_key": label,
                    "granularity": granularity,
                    "side": Side[side.upper()],
                    "count": [0] * CANCEL_TICKS,
                    "mean_ratio": [None] * CANCEL_TICKS,
                }
            tick = int(row["tick"])
            if not 1 <= tick <= CANCEL_TICKS:
                raise ValueError(f"tick {tick} outside 1..{CANCEL_TICKS}")
            inst["count"][tick - 1] = int(row["count"])
            inst["mean_ratio"][tick - 1] = float(row["mean_ratio"])
    return list(instances.values())
