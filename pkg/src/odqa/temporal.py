"""Temporal plausibility checks.

Durations are computed between the earliest UTC candidates of the
created and closed readings, so a fold-ambiguous pair can legitimately
come out negative; such findings carry a dst_explainable flag when some
candidate pairing would have been non-negative. Placeholder dates,
zero-second durations, implausibly long spans, on-the-hour volume
spikes, and post-close update lags are each separate rules so their
counts stay independently auditable; overlaps (a sentinel row that is
also negative) are counted explicitly rather than folded together.
"""

from __future__ import annotations

import datetime as dt
import logging
import math
from dataclasses import dataclass, field as dc_field
from typing import Iterable, Sequence

from .findings import Measurement, make_finding
from .ingest import DEFAULT_CLASSIFIER, MissingClassifier, RawTable, RowConsumer
from .timestamps import LocalTimestamp, TimestampParser, ZoneStatus

log = logging.getLogger(__name__)

DEFAULT_SENTINEL_DATES = (dt.date(1900, 1, 1),)
DEFAULT_EXTREME_CUTOFF_DAYS = 730
DEFAULT_POST_CLOSE_WINDOW_DAYS = 30
DEFAULT_SIGMA_MULTIPLIER = 3.0
MIN_SPIKE_SAMPLE = 24


@dataclass(frozen=True)
class TemporalRules:
    sentinel_dates: tuple[dt.date, ...] = DEFAULT_SENTINEL_DATES
    extreme_cutoff_days: int = DEFAULT_EXTREME_CUTOFF_DAYS
    post_close_window_days: int = DEFAULT_POST_CLOSE_WINDOW_DAYS
    sigma_multiplier: float = DEFAULT_SIGMA_MULTIPLIER

    @property
    def extreme_cutoff_seconds(self) -> int:
        return self.extreme_cutoff_days * 86400

    @property
    def post_close_window_seconds(self) -> int:
        return self.post_close_window_days * 86400


def pair_duration(created: LocalTimestamp, closed: LocalTimestamp) -> tuple[int | None, bool]:
    """(seconds, dst_explainable) between earliest UTC candidates.

    None when either side has no UTC reading (spring-forward gap).
    dst_explainable is True for a negative duration where some candidate
    pairing is non-negative, i.e. the sign could be a fold artifact.
    """
    a = created.earliest_utc
    b = closed.earliest_utc
    if a is None or b is None:
        return None, False
    d = b - a
    explainable = d < 0 and (closed.latest_utc - a) >= 0
    return d, explainable


@dataclass(frozen=True)
class SpikeStats:
    histogram: tuple[int, ...]
    mean: float
    sigma: float
    threshold: float
    flagged: tuple[int, ...]


def evaluate_hour_histogram(counts: Sequence[int], sigma_multiplier: float = DEFAULT_SIGMA_MULTIPLIER) -> SpikeStats:
    """Flag hour buckets strictly above mean + multiplier * population sigma.

    A flat histogram has sigma 0 and flags nothing, since no bucket
    exceeds the mean.
    """
    if len(counts) != 24:
        raise ValueError("expected a 24-bucket histogram")
    mean = sum(counts) / 24.0
    variance = sum((c - mean) ** 2 for c in counts) / 24.0
    sigma = math.sqrt(variance)
    threshold = mean + sigma_multiplier * sigma
    flagged = tuple(h for h, c in enumerate(counts) if c > threshold)
    return SpikeStats(tuple(counts), mean, sigma, threshold, flagged)


@dataclass
class SpikeResult:
    field: str
    stats: SpikeStats | None
    parsed_count: int
    findings: list = dc_field(default_factory=list)


def detect_hour_spikes(
    timestamps: Iterable[LocalTimestamp],
    rules: TemporalRules = TemporalRules(),
    field: str = "timestamp",
) -> SpikeResult:
    """Spike detection over already-parsed timestamps.

    Only readings exactly on the hour (minute and second zero) enter the
    histogram; the sample-size precondition counts every parsed reading.
    Hour zero reports as midnight_batch_suspect, other hours as
    hour_spike.
    """
    hist = [0] * 24
    parsed = 0
    for ts in timestamps:
        parsed += 1
        if ts.seconds_of_day % 3600 == 0:
            hist[ts.hour] += 1
    if parsed < MIN_SPIKE_SAMPLE:
        finding = make_finding(
            "insufficient_data",
            f"{field!r}: {parsed} parsed timestamp(s); spike statistics need at least {MIN_SPIKE_SAMPLE}",
            fields=(field,),
            measured=Measurement(parsed, "timestamps"),
        )
        return SpikeResult(field, None, parsed, [finding])
    stats = evaluate_hour_histogram(hist, rules.sigma_multiplier)
    findings = [_spike_finding(field, stats, hour) for hour in stats.flagged]
    return SpikeResult(field, stats, parsed, findings)


def _spike_finding(field: str, stats: SpikeStats, hour: int):
    rule = "midnight_batch_suspect" if hour == 0 else "hour_spike"
    return make_finding(
        rule,
        f"{field!r}: {stats.histogram[hour]} on-the-hour records at {hour:02d}:00 "
        f"exceed threshold {stats.threshold:.1f} (mean {stats.mean:.1f}, sigma {stats.sigma:.1f})",
        fields=(field,),
        measured=Measurement(stats.histogram[hour], "records"),
    )


@dataclass(frozen=True)
class DurationRecord:
    ordinal: int
    seconds: int | None
    negative: bool
    zero: bool
    extreme: bool
    dst_explainable: bool
    sentinel: bool


def compute_durations(
    created_values: Iterable[str],
    closed_values: Iterable[str],
    parser: TimestampParser,
    rules: TemporalRules = TemporalRules(),
    classifier: MissingClassifier = DEFAULT_CLASSIFIER,
) -> tuple[list[DurationRecord], list]:
    """Materialized-pair variant of the streaming duration audit.

    Returns one record per row where both sides were present and
    syntactically parseable, plus the findings the pair produced. Used by
    unit-scale analysis; the full pipeline uses DurationAuditor.
    """
    findings: list = []
    records: list[DurationRecord] = []
    state = _PairState(parser, rules, classifier)
    for ordinal, (raw_c, raw_z) in enumerate(zip(created_values, closed_values), start=1):
        rec = state.evaluate(ordinal, raw_c, raw_z, findings.append)
        if rec is not None:
            records.append(rec)
    return records, findings


class _PairState:
    """Shared created/closed evaluation used by both duration entry points."""

    __slots__ = ("parser", "rules", "classifier")

    def __init__(self, parser, rules, classifier):
        self.parser = parser
        self.rules = rules
        self.classifier = classifier

    def evaluate(self, locator, raw_created, raw_closed, emit, agency=None) -> DurationRecord | None:
        parse = self.parser
        rules = self.rules
        ts_c = ts_z = None
        sentinel = False
        for field, raw in (("created", raw_created), ("closed", raw_closed)):
            if self.classifier.kind_of(raw) is not None:
                continue
            ts = parse(raw)
            if ts is None:
                emit(make_finding(
                    "unparseable_timestamp",
                    f"{field} value {raw!r} matched no configured format",
                    fields=(field,),
                    row_locator=locator,
                    agency=agency,
                ))
                continue
            if ts.zone_status is ZoneStatus.DST_GAP_INVALID:
                emit(make_finding(
                    "dst_gap_invalid",
                    f"{field} reading {ts.isoformat()} falls in a spring-forward gap",
                    fields=(field,),
                    row_locator=locator,
                    agency=agency,
                ))
            if ts.date in rules.sentinel_dates:
                sentinel = True
                emit(make_finding(
                    "sentinel_date",
                    f"{field} carries placeholder date {ts.date.isoformat()}",
                    fields=(field,),
                    row_locator=locator,
                    agency=agency,
                ))
            if field == "created":
                ts_c = ts
            else:
                ts_z = ts
        if ts_c is None or ts_z is None:
            return None
        seconds, explainable = pair_duration(ts_c, ts_z)
        if seconds is None:
            return DurationRecord(locator, None, False, False, False, False, sentinel)
        days = seconds / 86400.0
        negative = seconds < 0
        zero = seconds == 0
        extreme = abs(seconds) > rules.extreme_cutoff_seconds
        if negative:
            note = " (sign explainable by a DST fold)" if explainable else ""
            emit(make_finding(
                "negative_duration",
                f"closed precedes created by {-days:.2f} day(s){note}",
                fields=("created", "closed"),
                row_locator=locator,
                measured=Measurement(round(days, 6), "days"),
                agency=agency,
            ))
        elif zero:
            emit(make_finding(
                "zero_duration",
                "created and closed are equal to the second",
                fields=("created", "closed"),
                row_locator=locator,
                measured=Measurement(0.0, "days"),
                agency=agency,
            ))
        if extreme:
            emit(make_finding(
                "extreme_duration",
                f"absolute duration {abs(days):.1f} day(s) exceeds the "
                f"{rules.extreme_cutoff_days}-day plausibility cutoff",
                fields=("created", "closed"),
                row_locator=locator,
                measured=Measurement(round(days, 6), "days"),
                agency=agency,
            ))
        return DurationRecord(locator, seconds, negative, zero, extreme, explainable, sentinel)


@dataclass
class MidnightSummary:
    count: int = 0
    by_agency: dict[str, int] = dc_field(default_factory=dict)


def midnight_exact_count(
    timestamps: Iterable[LocalTimestamp],
    agencies: Iterable[str] | None = None,
) -> MidnightSummary:
    """Count readings at exactly 00:00:00, optionally attributed by agency."""
    out = MidnightSummary()
    if agencies is None:
        for ts in timestamps:
            if ts.seconds_of_day == 0:
                out.count += 1
        return out
    for ts, agency in zip(timestamps, agencies):
        if ts.seconds_of_day == 0:
            out.count += 1
            if agency:
                out.by_agency[agency] = out.by_agency.get(agency, 0) + 1
    return out


@dataclass
class PostCloseResult:
    lag_histogram_days: dict[int, int] = dc_field(default_factory=dict)
    late_count: int = 0
    infeasible_count: int = 0
    pairs_checked: int = 0
    findings: list = dc_field(default_factory=list)


def detect_post_close_updates(
    closed_values: Iterable[str],
    updated_values: Iterable[str],
    parser: TimestampParser,
    rules: TemporalRules = TemporalRules(),
    classifier: MissingClassifier = DEFAULT_CLASSIFIER,
) -> PostCloseResult:
    """Audit update-after-close lags for materialized value pairs.

    Lags beyond the post-close window produce findings; lags whose
    magnitude exceeds the extreme cutoff are counted infeasible and kept
    out of the histogram so one wild pair cannot distort the
    distribution.
    """
    out = PostCloseResult()
    state = _PostCloseState(parser, rules, classifier)
    for ordinal, (raw_z, raw_u) in enumerate(zip(closed_values, updated_values), start=1):
        state.evaluate(ordinal, raw_z, raw_u, out, None)
    return out


class _PostCloseState:
    __slots__ = ("parser", "rules", "classifier")

    def __init__(self, parser, rules, classifier):
        self.parser = parser
        self.rules = rules
        self.classifier = classifier

    def evaluate(self, locator, raw_closed, raw_updated, out: PostCloseResult, agency) -> None:
        kind_of = self.classifier.kind_of
        if kind_of(raw_closed) is not None or kind_of(raw_updated) is not None:
            return
        ts_z = self.parser(raw_closed)
        ts_u = self.parser(raw_updated)
        if ts_z is None or ts_u is None:
            return
        a = ts_z.earliest_utc
        b = ts_u.earliest_utc
        if a is None or b is None:
            return
        lag = b - a
        out.pairs_checked += 1
        rules = self.rules
        if abs(lag) > rules.extreme_cutoff_seconds:
            out.infeasible_count += 1
            out.findings.append(make_finding(
                "post_close_infeasible",
                f"update lag {lag / 86400.0:.1f} day(s) exceeds the "
                f"{rules.extreme_cutoff_days}-day cutoff; excluded from the distribution",
                fields=("closed", "updated"),
                row_locator=locator,
                measured=Measurement(round(lag / 86400.0, 6), "days"),
                agency=agency,
            ))
            return
        out.lag_histogram_days[lag // 86400] = out.lag_histogram_days.get(lag // 86400, 0) + 1
        if lag > rules.post_close_window_seconds:
            out.late_count += 1
            out.findings.append(make_finding(
                "post_close_update",
                f"record updated {lag / 86400.0:.1f} day(s) after close "
                f"(window {rules.post_close_window_days} days)",
                fields=("closed", "updated"),
                row_locator=locator,
                measured=Measurement(round(lag / 86400.0, 6), "days"),
                agency=agency,
            ))


@dataclass
class TemporalSummary:
    duration_count: int = 0
    negative: int = 0
    zero: int = 0
    extreme: int = 0
    gap_pairs: int = 0
    sentinel_rows: int = 0
    sentinel_and_negative: int = 0
    dst_explainable_negatives: int = 0
    min_seconds: int | None = None
    max_seconds: int | None = None
    duration_histogram_days: dict[int, int] = dc_field(default_factory=dict)
    parse_failures: dict[str, int] = dc_field(default_factory=dict)
    spikes: dict[str, SpikeStats | None] = dc_field(default_factory=dict)
    spike_parsed: dict[str, int] = dc_field(default_factory=dict)
    midnight: MidnightSummary = dc_field(default_factory=MidnightSummary)
    post_close: PostCloseResult = dc_field(default_factory=PostCloseResult)

    def as_dict(self) -> dict:
        def spike_dict(name):
            stats = self.spikes.get(name)
            if stats is None:
                return {"parsed": self.spike_parsed.get(name, 0), "evaluated": False}
            return {
                "parsed": self.spike_parsed.get(name, 0),
                "evaluated": True,
                "histogram": list(stats.histogram),
                "mean": round(stats.mean, 4),
                "sigma": round(stats.sigma, 4),
                "threshold": round(stats.threshold, 4),
                "flagged_hours": list(stats.flagged),
            }
        return {
            "durations": {
                "count": self.duration_count,
                "negative": self.negative,
                "zero": self.zero,
                "extreme": self.extreme,
                "gap_pairs": self.gap_pairs,
                "sentinel_rows": self.sentinel_rows,
                "sentinel_and_negative": self.sentinel_and_negative,
                "dst_explainable_negatives": self.dst_explainable_negatives,
                "min_days": None if self.min_seconds is None else round(self.min_seconds / 86400.0, 6),
                "max_days": None if self.max_seconds is None else round(self.max_seconds / 86400.0, 6),
                "histogram_days": {str(k): v for k, v in sorted(self.duration_histogram_days.items())},
            },
            "parse_failures": dict(sorted(self.parse_failures.items())),
            "spikes": {name: spike_dict(name) for name in sorted(self.spikes)},
            "midnight": {
                "count": self.midnight.count,
                "by_agency": dict(sorted(self.midnight.by_agency.items())),
            },
            "post_close": {
                "pairs_checked": self.post_close.pairs_checked,
                "late": self.post_close.late_count,
                "infeasible": self.post_close.infeasible_count,
                "lag_histogram_days": {str(k): v for k, v in sorted(self.post_close.lag_histogram_days.items())},
            },
        }


class DurationAuditor(RowConsumer):
    """Streaming temporal audit over created/closed/updated columns.

    Emits findings as rows arrive; spike findings for the created and
    closed hour histograms arrive at finish, created field first, hours
    ascending, so report ordering is reproducible.
    """

    def __init__(
        self,
        *,
        created_field: str,
        closed_field: str,
        updated_field: str | None = None,
        key_field: str | None = None,
        agency_field: str | None = None,
        parser: TimestampParser,
        rules: TemporalRules = TemporalRules(),
        classifier: MissingClassifier = DEFAULT_CLASSIFIER,
        emit=None,
    ):
        self.created_field = created_field
        self.closed_field = closed_field
        self.updated_field = updated_field
        self.key_field = key_field
        self.agency_field = agency_field
        self.parser = parser
        self.rules = rules
        self.classifier = classifier
        self._emit = emit if emit is not None else (lambda f: None)
        self.summary = TemporalSummary()

    def start(self, table: RawTable) -> None:
        def need(name):
            idx = table.column_index(name) if name else None
            return idx

        self._ic = need(self.created_field)
        self._iz = need(self.closed_field)
        if self._ic is None or self._iz is None:
            raise ValueError(
                f"temporal audit needs {self.created_field!r} and {self.closed_field!r} in the header"
            )
        self._iu = need(self.updated_field)
        self._ik = need(self.key_field)
        self._ia = need(self.agency_field)
        self._hist_c = [0] * 24
        self._hist_z = [0] * 24
        s = self.summary
        s.parse_failures = {self.created_field: 0, self.closed_field: 0}
        if self.updated_field:
            s.parse_failures[self.updated_field] = 0
        self._parsed_c = 0
        self._parsed_z = 0

    def consume(self, ordinal: int, row: list[str]) -> None:
        s = self.summary
        rules = self.rules
        kind_of = self.classifier.kind_of
        parse = self.parser

        locator = ordinal
        if self._ik is not None:
            key = row[self._ik]
            if key and kind_of(key) is None:
                locator = key
        agency = None
        if self._ia is not None:
            a = row[self._ia]
            if a and kind_of(a) is None:
                agency = a

        ts_c = self._read(row[self._ic], self.created_field, locator, agency)
        ts_z = self._read(row[self._iz], self.closed_field, locator, agency)

        sentinel = False
        if ts_c is not None:
            self._parsed_c += 1
            sod = ts_c.seconds_of_day
            if sod % 3600 == 0:
                self._hist_c[sod // 3600] += 1
            if sod == 0:
                s.midnight.count += 1
                if agency:
                    s.midnight.by_agency[agency] = s.midnight.by_agency.get(agency, 0) + 1
            if ts_c.date in rules.sentinel_dates:
                sentinel = True
        if ts_z is not None:
            self._parsed_z += 1
            sod = ts_z.seconds_of_day
            if sod % 3600 == 0:
                self._hist_z[sod // 3600] += 1
            if sod == 0:
                s.midnight.count += 1
                if agency:
                    s.midnight.by_agency[agency] = s.midnight.by_agency.get(agency, 0) + 1
            if ts_z.date in rules.sentinel_dates:
                sentinel = True
        if sentinel:
            s.sentinel_rows += 1

        if ts_c is not None and ts_z is not None:
            seconds, explainable = pair_duration(ts_c, ts_z)
            if seconds is None:
                s.gap_pairs += 1
            else:
                days = seconds / 86400.0
                if seconds < 0:
                    s.negative += 1
                    if sentinel:
                        s.sentinel_and_negative += 1
                    if explainable:
                        s.dst_explainable_negatives += 1
                    note = " (sign explainable by a DST fold)" if explainable else ""
                    self._emit(make_finding(
                        "negative_duration",
                        f"closed precedes created by {-days:.2f} day(s){note}",
                        fields=(self.created_field, self.closed_field),
                        row_locator=locator,
                        measured=Measurement(round(days, 6), "days"),
                        agency=agency,
                    ))
                elif seconds == 0:
                    s.zero += 1
                    self._emit(make_finding(
                        "zero_duration",
                        "created and closed are equal to the second",
                        fields=(self.created_field, self.closed_field),
                        row_locator=locator,
                        measured=Measurement(0.0, "days"),
                        agency=agency,
                    ))
                if abs(seconds) > rules.extreme_cutoff_seconds:
                    s.extreme += 1
                    self._emit(make_finding(
                        "extreme_duration",
                        f"absolute duration {abs(days):.1f} day(s) exceeds the "
                        f"{rules.extreme_cutoff_days}-day plausibility cutoff",
                        fields=(self.created_field, self.closed_field),
                        row_locator=locator,
                        measured=Measurement(round(days, 6), "days"),
                        agency=agency,
                    ))
                if not sentinel and abs(seconds) <= rules.extreme_cutoff_seconds:
                    s.duration_count += 1
                    day_bucket = seconds // 86400
                    hist = s.duration_histogram_days
                    hist[day_bucket] = hist.get(day_bucket, 0) + 1
                    if s.min_seconds is None or seconds < s.min_seconds:
                        s.min_seconds = seconds
                    if s.max_seconds is None or seconds > s.max_seconds:
                        s.max_seconds = seconds

        if self._iu is not None:
            self._post_close(row[self._iu], ts_z, locator, agency)

    def _read(self, raw: str, field: str, locator, agency) -> LocalTimestamp | None:
        if self.classifier.kind_of(raw) is not None:
            return None
        ts = self.parser(raw)
        s = self.summary
        if ts is None:
            s.parse_failures[field] += 1
            self._emit(make_finding(
                "unparseable_timestamp",
                f"{field!r} value {raw!r} matched no configured format",
                fields=(field,),
                row_locator=locator,
                agency=agency,
            ))
            return None
        if ts.zone_status is ZoneStatus.DST_GAP_INVALID:
            self._emit(make_finding(
                "dst_gap_invalid",
                f"{field!r} reading {ts.isoformat()} falls in a spring-forward gap",
                fields=(field,),
                row_locator=locator,
                agency=agency,
            ))
        if ts.date in self.rules.sentinel_dates:
            self._emit(make_finding(
                "sentinel_date",
                f"{field!r} carries placeholder date {ts.date.isoformat()}",
                fields=(field,),
                row_locator=locator,
                agency=agency,
            ))
        return ts

    def _post_close(self, raw_updated: str, ts_z: LocalTimestamp | None, locator, agency) -> None:
        s = self.summary
        if self.classifier.kind_of(raw_updated) is not None:
            return
        ts_u = self.parser(raw_updated)
        if ts_u is None:
            s.parse_failures[self.updated_field] += 1
            self._emit(make_finding(
                "unparseable_timestamp",
                f"{self.updated_field!r} value {raw_updated!r} matched no configured format",
                fields=(self.updated_field,),
                row_locator=locator,
                agency=agency,
            ))
            return
        if ts_z is None:
            return
        a = ts_z.earliest_utc
        b = ts_u.earliest_utc
        if a is None or b is None:
            return
        lag = b - a
        out = s.post_close
        out.pairs_checked += 1
        rules = self.rules
        if abs(lag) > rules.extreme_cutoff_seconds:
            out.infeasible_count += 1
            self._emit(make_finding(
                "post_close_infeasible",
                f"update lag {lag / 86400.0:.1f} day(s) exceeds the "
                f"{rules.extreme_cutoff_days}-day cutoff; excluded from the distribution",
                fields=(self.closed_field, self.updated_field),
                row_locator=locator,
                measured=Measurement(round(lag / 86400.0, 6), "days"),
                agency=agency,
            ))
            return
        out.lag_histogram_days[lag // 86400] = out.lag_histogram_days.get(lag // 86400, 0) + 1
        if lag > rules.post_close_window_seconds:
            out.late_count += 1
            self._emit(make_finding(
                "post_close_update",
                f"record updated {lag / 86400.0:.1f} day(s) after close "
                f"(window {rules.post_close_window_days} days)",
                fields=(self.closed_field, self.updated_field),
                row_locator=locator,
                measured=Measurement(round(lag / 86400.0, 6), "days"),
                agency=agency,
            ))

    def finish(self) -> TemporalSummary:
        s = self.summary
        for field, hist, parsed in (
            (self.created_field, self._hist_c, self._parsed_c),
            (self.closed_field, self._hist_z, self._parsed_z),
        ):
            s.spike_parsed[field] = parsed
            if parsed < MIN_SPIKE_SAMPLE:
                s.spikes[field] = None
                self._emit(make_finding(
                    "insufficient_data",
                    f"{field!r}: {parsed} parsed timestamp(s); spike statistics need at least {MIN_SPIKE_SAMPLE}",
                    fields=(field,),
                    measured=Measurement(parsed, "timestamps"),
                ))
                continue
            stats = evaluate_hour_histogram(hist, self.rules.sigma_multiplier)
            s.spikes[field] = stats
            for hour in stats.flagged:
                self._emit(_spike_finding(field, stats, hour))
        return s
