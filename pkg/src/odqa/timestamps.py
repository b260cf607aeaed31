"""Local timestamps with explicit DST semantics.

Parsed timestamps keep their wall-clock reading plus the set of UTC
instants the reading could denote under the configured zone rules: one
for unambiguous times, two (an hour apart) for times repeated by the
fall-back fold, and none for times skipped by the spring-forward gap.
Downstream arithmetic picks candidates deliberately instead of letting a
library silently choose one.

The zone table is self-contained: transitions are generated from the US
federal rules (post-2006: second Sunday in March to first Sunday in
November; 1987-2006: first Sunday in April to last Sunday in October)
rather than read from a system tzdata, so results cannot drift with the
host environment. Config can substitute an explicit transition list.
"""

from __future__ import annotations

import datetime as dt
import enum
from bisect import bisect_right
from dataclasses import dataclass
from functools import lru_cache
from typing import Sequence

_EPOCH_ORD = dt.date(1970, 1, 1).toordinal()

DEFAULT_TIMESTAMP_FORMATS = (
    "%m/%d/%Y %I:%M:%S %p",
    "%Y-%m-%d %H:%M:%S",
)

# date-only fallbacks used where placeholder values like 1900-01-01 appear
DATE_ONLY_FORMATS = ("%Y-%m-%d", "%m/%d/%Y")


class ZoneStatus(enum.Enum):
    UNAMBIGUOUS = "unambiguous"
    DST_GAP_INVALID = "dst_gap_invalid"
    DST_FOLD_AMBIGUOUS = "dst_fold_ambiguous"


@dataclass(frozen=True, slots=True)
class LocalTimestamp:
    """A wall-clock reading resolved against zone rules.

    utc_candidates holds epoch seconds in ascending order; empty for gap
    times, two entries 3600 s apart for fold times.
    """

    date: dt.date
    seconds_of_day: int
    zone_status: ZoneStatus
    utc_candidates: tuple[int, ...]

    @property
    def earliest_utc(self) -> int | None:
        return self.utc_candidates[0] if self.utc_candidates else None

    @property
    def latest_utc(self) -> int | None:
        return self.utc_candidates[-1] if self.utc_candidates else None

    @property
    def hour(self) -> int:
        return self.seconds_of_day // 3600

    @property
    def is_midnight_exact(self) -> bool:
        return self.seconds_of_day == 0

    @property
    def on_the_hour(self) -> bool:
        return self.seconds_of_day % 3600 == 0

    def naive_epoch(self) -> int:
        """Seconds since epoch if the wall reading were UTC."""
        return (self.date.toordinal() - _EPOCH_ORD) * 86400 + self.seconds_of_day

    def isoformat(self) -> str:
        s = self.seconds_of_day
        return f"{self.date.isoformat()} {s // 3600:02d}:{s % 3600 // 60:02d}:{s % 60:02d}"


class ZoneRules:
    """UTC offset rules as an ordered transition table.

    transitions is a sequence of (utc_epoch_seconds, offset_after_seconds);
    initial_offset applies before the first transition. resolve() inverts
    the table for a naive wall reading.
    """

    def __init__(self, transitions: Sequence[tuple[int, int]], initial_offset: int, name: str = "custom"):
        self._times = [t for t, _ in transitions]
        if self._times != sorted(self._times):
            raise ValueError("transitions must be sorted by time")
        self._after = [off for _, off in transitions]
        self.initial_offset = initial_offset
        self.name = name
        self._distinct = tuple(sorted({initial_offset, *self._after}))

    def offset_at(self, utc_epoch: int) -> int:
        i = bisect_right(self._times, utc_epoch)
        return self.initial_offset if i == 0 else self._after[i - 1]

    def resolve(self, naive_epoch: int) -> tuple[ZoneStatus, tuple[int, ...]]:
        candidates = []
        for off in self._distinct:
            utc = naive_epoch - off
            if self.offset_at(utc) == off:
                candidates.append(utc)
        if len(candidates) == 1:
            return ZoneStatus.UNAMBIGUOUS, (candidates[0],)
        if not candidates:
            return ZoneStatus.DST_GAP_INVALID, ()
        candidates.sort()
        return ZoneStatus.DST_FOLD_AMBIGUOUS, tuple(candidates)


def _nth_sunday(year: int, month: int, n: int) -> dt.date:
    first = dt.date(year, month, 1)
    day = 1 + (6 - first.weekday()) % 7 + 7 * (n - 1)
    return dt.date(year, month, day)


def _last_sunday(year: int, month: int, last_day: int) -> dt.date:
    end = dt.date(year, month, last_day)
    return end - dt.timedelta(days=(end.weekday() - 6) % 7)


def _utc_epoch(d: dt.date, seconds: int) -> int:
    return (d.toordinal() - _EPOCH_ORD) * 86400 + seconds


@lru_cache(maxsize=8)
def us_eastern_rules(first_year: int = 1987, last_year: int = 2040) -> ZoneRules:
    """America/New_York offsets generated from the US statutory rules.

    Covers first_year..last_year; times before the first generated
    transition resolve as standard time. Spring transitions happen at
    02:00 standard (07:00 UTC), fall transitions at 02:00 daylight
    (06:00 UTC).
    """
    std, dst = -5 * 3600, -4 * 3600
    transitions: list[tuple[int, int]] = []
    for year in range(first_year, last_year + 1):
        if year >= 2007:
            spring = _nth_sunday(year, 3, 2)
            fall = _nth_sunday(year, 11, 1)
        else:
            spring = _nth_sunday(year, 4, 1)
            fall = _last_sunday(year, 10, 31)
        transitions.append((_utc_epoch(spring, 7 * 3600), dst))
        transitions.append((_utc_epoch(fall, 6 * 3600), std))
    return ZoneRules(transitions, std, name="us_eastern")


def _wall_from_fast(raw: str, fmt: str) -> tuple[dt.date, int] | None:
    """Structural parse for the common formats; None on mismatch."""
    try:
        if fmt == "%m/%d/%Y %I:%M:%S %p":
            if len(raw) != 22 or raw[2] != "/" or raw[5] != "/" or raw[10] != " " \
                    or raw[13] != ":" or raw[16] != ":" or raw[19] != " ":
                return None
            mo, da, yr = raw[0:2], raw[3:5], raw[6:10]
            hh, mi, ss, ap = raw[11:13], raw[14:16], raw[17:19], raw[20:22]
            if not (mo.isdigit() and da.isdigit() and yr.isdigit()
                    and hh.isdigit() and mi.isdigit() and ss.isdigit()):
                return None
            if ap == "AM":
                h = int(hh) % 12
            elif ap == "PM":
                h = int(hh) % 12 + 12
            else:
                return None
            if not 1 <= int(hh) <= 12:
                return None
            m, s = int(mi), int(ss)
            if m > 59 or s > 59:
                return None
            return dt.date(int(yr), int(mo), int(da)), h * 3600 + m * 60 + s
        if fmt == "%Y-%m-%d %H:%M:%S":
            if len(raw) != 19 or raw[4] != "-" or raw[7] != "-" or raw[10] != " " \
                    or raw[13] != ":" or raw[16] != ":":
                return None
            yr, mo, da = raw[0:4], raw[5:7], raw[8:10]
            hh, mi, ss = raw[11:13], raw[14:16], raw[17:19]
            if not (yr.isdigit() and mo.isdigit() and da.isdigit()
                    and hh.isdigit() and mi.isdigit() and ss.isdigit()):
                return None
            h, m, s = int(hh), int(mi), int(ss)
            if h > 23 or m > 59 or s > 59:
                return None
            return dt.date(int(yr), int(mo), int(da)), h * 3600 + m * 60 + s
        if fmt == "%Y-%m-%d":
            if len(raw) != 10 or raw[4] != "-" or raw[7] != "-":
                return None
            yr, mo, da = raw[0:4], raw[5:7], raw[8:10]
            if not (yr.isdigit() and mo.isdigit() and da.isdigit()):
                return None
            return dt.date(int(yr), int(mo), int(da)), 0
        if fmt == "%m/%d/%Y":
            if len(raw) != 10 or raw[2] != "/" or raw[5] != "/":
                return None
            mo, da, yr = raw[0:2], raw[3:5], raw[6:10]
            if not (mo.isdigit() and da.isdigit() and yr.isdigit()):
                return None
            return dt.date(int(yr), int(mo), int(da)), 0
    except ValueError:
        return None
    # uncommon format: defer to strptime
    try:
        parsed = dt.datetime.strptime(raw, fmt)
    except ValueError:
        return None
    return parsed.date(), parsed.hour * 3600 + parsed.minute * 60 + parsed.second


class TimestampParser:
    """Parses raw strings against an ordered format list and zone rules."""

    def __init__(self, formats: Sequence[str] = DEFAULT_TIMESTAMP_FORMATS, rules: ZoneRules | None = None):
        if not formats:
            raise ValueError("at least one timestamp format is required")
        self.formats = tuple(formats)
        self.rules = rules if rules is not None else us_eastern_rules()

    def __call__(self, raw: str) -> LocalTimestamp | None:
        for fmt in self.formats:
            wall = _wall_from_fast(raw, fmt)
            if wall is not None:
                d, seconds = wall
                naive = (d.toordinal() - _EPOCH_ORD) * 86400 + seconds
                status, candidates = self.rules.resolve(naive)
                return LocalTimestamp(d, seconds, status, candidates)
        return None


def parse_timestamp(
    raw: str,
    formats: Sequence[str] = DEFAULT_TIMESTAMP_FORMATS,
    rules: ZoneRules | None = None,
) -> LocalTimestamp | None:
    """One-shot convenience wrapper around TimestampParser."""
    return TimestampParser(formats, rules)(raw)
