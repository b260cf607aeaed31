"""Duration, spike, midnight, and post-close audits.

Expected numbers in here are recomputed by hand (or by closed form) from
the input values, not read back from the implementation.
"""

import math

import pytest
from hypothesis import given, settings
from hypothesis import strategies as st
import datetime as dt

from odqa.ingest import open_table, stream_rows
from odqa.temporal import (
    DurationAuditor,
    MIN_SPIKE_SAMPLE,
    TemporalRules,
    compute_durations,
    detect_hour_spikes,
    detect_post_close_updates,
    evaluate_hour_histogram,
    midnight_exact_count,
    pair_duration,
)
from odqa.timestamps import TimestampParser, parse_timestamp

P = TimestampParser()


class MiniTable:
    def __init__(self, headers):
        self.headers = list(headers)
        self.raw_headers = list(headers)
        self.width = len(headers)

    def column_index(self, name):
        try:
            return self.headers.index(name)
        except ValueError:
            return None


# ------------------------------------------------------------ pair duration

def test_pair_duration_plain_positive():
    c = parse_timestamp("06/01/2023 10:00:00 AM")
    z = parse_timestamp("06/02/2023 10:00:00 AM")
    assert pair_duration(c, z) == (86400, False)


def test_pair_duration_the_378_day_reversal():
    # the classic swapped pair: created in 2023, closed in 2022
    c = parse_timestamp("01/27/2023 10:15:00 AM")
    z = parse_timestamp("01/14/2022 10:15:00 AM")
    seconds, explainable = pair_duration(c, z)
    assert seconds == -378 * 86400
    assert seconds / 86400.0 == -378.0
    assert not explainable


def test_pair_duration_fold_negative_is_explainable():
    # both readings sit inside the repeated 01:00-02:00 hour; earliest
    # candidates order them backwards but the late/early pairing does not
    c = parse_timestamp("11/05/2023 01:45:00 AM")
    z = parse_timestamp("11/05/2023 01:15:00 AM")
    seconds, explainable = pair_duration(c, z)
    assert seconds == -1800
    assert explainable


def test_pair_duration_gap_is_none():
    c = parse_timestamp("03/12/2023 02:30:00 AM")
    z = parse_timestamp("03/12/2023 10:00:00 AM")
    assert pair_duration(c, z) == (None, False)


def test_pair_duration_across_spring_forward():
    # 01:30 EST to 03:30 EDT is one wall hour shorter in UTC
    c = parse_timestamp("03/12/2023 01:30:00 AM")
    z = parse_timestamp("03/12/2023 03:30:00 AM")
    seconds, _ = pair_duration(c, z)
    assert seconds == 3600


# -------------------------------------------------------- compute_durations

def test_compute_durations_catalogue():
    created = [
        "06/01/2023 10:00:00 AM",          # one day
        "06/01/2023 10:00:00 AM",          # zero
        "11/05/2023 01:45:00 AM",          # fold negative
        "01/01/1900 03:47:12 AM",          # sentinel, extreme span
        "03/12/2023 02:30:00 AM",          # gap
        "not a date",                      # unparseable
        "NA",                              # missing
    ]
    closed = [
        "06/02/2023 10:00:00 AM",
        "06/01/2023 10:00:00 AM",
        "11/05/2023 01:15:00 AM",
        "06/01/2023 10:00:00 AM",
        "06/01/2023 10:00:00 AM",
        "06/01/2023 10:00:00 AM",
        "06/01/2023 10:00:00 AM",
    ]
    records, findings = compute_durations(created, closed, P)
    # the unparseable and missing rows never produce a record; the gap row
    # does, with no duration
    assert [r.ordinal for r in records] == [1, 2, 3, 4, 5]
    by_ordinal = {r.ordinal: r for r in records}
    assert by_ordinal[1].seconds == 86400 and not by_ordinal[1].negative
    assert by_ordinal[2].zero
    r3 = by_ordinal[3]
    assert r3.negative and r3.dst_explainable and r3.seconds == -1800
    r4 = by_ordinal[4]
    assert r4.sentinel and r4.extreme and r4.seconds > 0
    assert by_ordinal[5].seconds is None

    by_rule = {}
    for f in findings:
        by_rule.setdefault(f.rule_id, []).append(f)
    assert sorted(by_rule) == [
        "dst_gap_invalid", "extreme_duration", "negative_duration",
        "sentinel_date", "unparseable_timestamp", "zero_duration",
    ]
    assert len(by_rule["negative_duration"]) == 1
    assert "explainable by a DST fold" in by_rule["negative_duration"][0].message
    assert by_rule["unparseable_timestamp"][0].row_locator == 6
    assert by_rule["sentinel_date"][0].message.count("1900-01-01") == 1


@settings(max_examples=150)
@given(
    a=st.integers(min_value=0, max_value=30 * 86400),
    b=st.integers(min_value=0, max_value=30 * 86400),
)
def test_compute_durations_matches_naive_delta_in_quiet_window(a, b):
    # June 2023 has no transition, so UTC delta equals wall delta
    base = dt.datetime(2023, 6, 1, 0, 0, 0)
    raw_c = (base + dt.timedelta(seconds=a)).strftime("%m/%d/%Y %I:%M:%S %p")
    raw_z = (base + dt.timedelta(seconds=b)).strftime("%m/%d/%Y %I:%M:%S %p")
    records, findings = compute_durations([raw_c], [raw_z], P)
    assert len(records) == 1
    r = records[0]
    assert r.seconds == b - a
    assert r.negative == (b < a)
    assert r.zero == (b == a)
    assert not r.extreme and not r.sentinel
    expected_findings = 1 if b <= a else 0
    assert len(findings) == expected_findings


# ------------------------------------------------------------------- spikes

def test_histogram_single_heavy_bucket():
    counts = [10] * 23 + [100]
    stats = evaluate_hour_histogram(counts)
    assert stats.mean == pytest.approx(13.75)
    # population variance: (23 * 3.75^2 + 86.25^2) / 24
    assert stats.sigma ** 2 == pytest.approx((23 * 3.75 ** 2 + 86.25 ** 2) / 24)
    assert stats.threshold == pytest.approx(13.75 + 3 * math.sqrt(7762.5 / 24))
    assert stats.flagged == (23,)


def test_histogram_uniform_flags_nothing():
    stats = evaluate_hour_histogram([10] * 24)
    assert stats.sigma == 0.0
    assert stats.flagged == ()
    assert evaluate_hour_histogram([0] * 24).flagged == ()


def test_histogram_multiplier_and_length():
    counts = [10] * 23 + [100]
    loose = evaluate_hour_histogram(counts, sigma_multiplier=1.0)
    assert loose.flagged == (23,)
    absurd = evaluate_hour_histogram(counts, sigma_multiplier=10.0)
    assert absurd.flagged == ()
    with pytest.raises(ValueError):
        evaluate_hour_histogram([1] * 23)


@given(st.lists(st.integers(min_value=0, max_value=500), min_size=24, max_size=24))
def test_histogram_flag_set_matches_definition(counts):
    stats = evaluate_hour_histogram(counts)
    mean = sum(counts) / 24
    sigma = math.sqrt(sum((c - mean) ** 2 for c in counts) / 24)
    expect = tuple(h for h, c in enumerate(counts) if c > mean + 3 * sigma)
    assert stats.flagged == expect


def ts_at(hour, minute=0, second=0, day=1):
    return parse_timestamp(f"2023-06-{day:02d} {hour:02d}:{minute:02d}:{second:02d}")


def test_detect_spikes_only_on_the_hour_enters_histogram():
    readings = [ts_at(0) for _ in range(26)] + [ts_at(0, 15) for _ in range(4)]
    result = detect_hour_spikes(readings, field="created")
    assert result.parsed_count == 30
    assert result.stats.histogram[0] == 26
    assert sum(result.stats.histogram) == 26
    assert result.stats.flagged == (0,)
    assert [f.rule_id for f in result.findings] == ["midnight_batch_suspect"]


def test_detect_spikes_nonzero_hour_is_hour_spike():
    readings = [ts_at(7) for _ in range(26)] + [ts_at(9, 30) for _ in range(4)]
    result = detect_hour_spikes(readings, field="created")
    assert [f.rule_id for f in result.findings] == ["hour_spike"]
    assert "07:00" in result.findings[0].message


def test_detect_spikes_needs_minimum_sample():
    readings = [ts_at(0) for _ in range(MIN_SPIKE_SAMPLE - 1)]
    result = detect_hour_spikes(readings, field="created")
    assert result.stats is None
    assert [f.rule_id for f in result.findings] == ["insufficient_data"]
    assert result.findings[0].measured.value == MIN_SPIKE_SAMPLE - 1


# ----------------------------------------------------------------- midnight

def test_midnight_exact_count():
    readings = [ts_at(0), ts_at(0), ts_at(1), ts_at(0, 0, 1)]
    assert midnight_exact_count(readings).count == 2
    with_ag = midnight_exact_count(readings, agencies=["NYPD", "", "DOT", "DOT"])
    assert with_ag.count == 2
    assert with_ag.by_agency == {"NYPD": 1}     # blank agency unattributed


# --------------------------------------------------------------- post-close

def test_post_close_lag_buckets():
    closed = ["06/01/2023 10:00:00 AM"] * 6
    base = dt.datetime(2023, 6, 1, 10, 0, 0)
    offsets_days = [0, 5, 31, 800, -5, 30]
    updated = [
        (base + dt.timedelta(days=d)).strftime("%m/%d/%Y %I:%M:%S %p")
        for d in offsets_days
    ]
    out = detect_post_close_updates(closed, updated, P)
    assert out.pairs_checked == 6
    assert out.late_count == 1                  # only the 31-day lag; 30 is inside
    assert out.infeasible_count == 1            # the 800-day lag, kept out of the histogram
    assert out.lag_histogram_days == {0: 1, 5: 1, 31: 1, -5: 1, 30: 1}
    rules = sorted(f.rule_id for f in out.findings)
    assert rules == ["post_close_infeasible", "post_close_update"]
    late = next(f for f in out.findings if f.rule_id == "post_close_update")
    assert late.measured.value == pytest.approx(31.0)


def test_post_close_skips_unusable_pairs():
    closed = ["NA", "06/01/2023 10:00:00 AM", "03/12/2023 02:30:00 AM", "junk"]
    updated = ["06/01/2023 10:00:00 AM", "", "06/01/2023 10:00:00 AM", "06/01/2023 10:00:00 AM"]
    out = detect_post_close_updates(closed, updated, P)
    # missing, missing, gap-closed, unparseable: nothing checkable
    assert out.pairs_checked == 0
    assert out.findings == []


def test_post_close_boundary_is_strict():
    closed = ["06/01/2023 10:00:00 AM"] * 2
    updated = ["07/01/2023 10:00:00 AM", "07/01/2023 10:00:01 AM"]
    out = detect_post_close_updates(closed, updated, P)
    assert out.late_count == 1                  # 30d exactly is inside the window


# ------------------------------------------------------- streaming auditor

AUDIT_HEADERS = ["unique_key", "created", "closed", "updated"]

AUDIT_ROWS = [
    ["K1", "06/01/2023 10:00:00 AM", "06/02/2023 10:00:00 AM", "06/02/2023 10:00:00 AM"],
    ["K2", "06/01/2023 10:00:00 AM", "06/01/2023 10:00:00 AM", "06/01/2023 10:00:00 AM"],
    ["K3", "11/05/2023 01:45:00 AM", "11/05/2023 01:15:00 AM", "11/05/2023 01:15:00 AM"],
    ["K4", "01/01/1900 03:47:12 AM", "06/01/2023 10:00:00 AM", "07/02/2023 10:00:00 AM"],
    ["K5", "03/12/2023 02:30:00 AM", "03/12/2023 10:00:00 AM", "03/12/2023 10:00:00 AM"],
    ["K6", "06/01/2023 10:00:00 AM", "", "NA"],
]


def run_auditor(rows, **kw):
    got = []
    auditor = DurationAuditor(
        created_field="created", closed_field="closed", updated_field="updated",
        key_field="unique_key", parser=P, emit=got.append, **kw,
    )
    auditor.start(MiniTable(AUDIT_HEADERS))
    for i, row in enumerate(rows, start=1):
        auditor.consume(i, row)
    return auditor.finish(), got


def test_auditor_summary_numbers():
    s, _ = run_auditor(AUDIT_ROWS)
    # K4 is sentinel (excluded from the distribution), K5 a gap pair,
    # K6 has no closed reading: three measurable durations remain
    assert s.duration_count == 3
    assert s.negative == 1 and s.zero == 1 and s.extreme == 1
    assert s.gap_pairs == 1
    assert s.sentinel_rows == 1 and s.sentinel_and_negative == 0
    assert s.dst_explainable_negatives == 1
    assert s.min_seconds == -1800 and s.max_seconds == 86400
    assert s.duration_histogram_days == {-1: 1, 0: 1, 1: 1}
    assert s.parse_failures == {"created": 0, "closed": 0, "updated": 0}


def test_auditor_post_close_and_midnight():
    s, _ = run_auditor(AUDIT_ROWS)
    # K5's gap is on created, which post-close never consults; only K6
    # lacks a usable closed/updated pair
    assert s.post_close.pairs_checked == 5
    assert s.post_close.late_count == 1         # K4: 31 days
    assert s.post_close.lag_histogram_days == {0: 4, 31: 1}
    assert s.midnight.count == 0


def test_auditor_findings_carry_key_locators():
    _, got = run_auditor(AUDIT_ROWS)
    by_rule = {}
    for f in got:
        by_rule.setdefault(f.rule_id, []).append(f)
    assert by_rule["negative_duration"][0].row_locator == "K3"
    assert by_rule["zero_duration"][0].row_locator == "K2"
    assert by_rule["sentinel_date"][0].row_locator == "K4"
    assert by_rule["dst_gap_invalid"][0].row_locator == "K5"
    assert by_rule["post_close_update"][0].row_locator == "K4"
    # small stream: both hour histograms decline to evaluate
    assert len(by_rule["insufficient_data"]) == 2


def test_auditor_spike_order_created_then_closed_hours_ascending():
    rows = []
    k = 0
    # created: heavy at 00 and 05, light elsewhere; closed: heavy at 07
    for hour, n in [(0, 100), (5, 100)] + [(h, 10) for h in range(24) if h not in (0, 5)]:
        for _ in range(n):
            k += 1
            rows.append([
                f"K{k}",
                f"2023-06-01 {hour:02d}:00:00",
                "2023-06-02 07:00:00",
                "",
            ])
    s, got = run_auditor(rows)
    spikes = [f for f in got if f.rule_id in ("midnight_batch_suspect", "hour_spike")]
    labels = [(f.fields[0], f.rule_id) for f in spikes]
    assert labels == [
        ("created", "midnight_batch_suspect"),
        ("created", "hour_spike"),
        ("closed", "hour_spike"),
    ]
    assert "05:00" in spikes[1].message
    assert s.spikes["created"].flagged == (0, 5)
    assert s.spikes["closed"].flagged == (7,)
    assert s.spike_parsed["created"] == len(rows)


def test_auditor_midnight_counts_both_sides():
    rows = [
        ["K1", "2023-06-01 00:00:00", "2023-06-01 00:00:00", ""],
        ["K2", "2023-06-01 00:00:00", "2023-06-02 09:00:00", ""],
    ]
    s, _ = run_auditor(rows)
    assert s.midnight.count == 3


def test_auditor_requires_mapped_columns():
    auditor = DurationAuditor(created_field="created", closed_field="nope", parser=P)
    with pytest.raises(ValueError):
        auditor.start(MiniTable(AUDIT_HEADERS))


def test_auditor_through_file(write_csv):
    p = write_csv("t.csv", """\
        Unique Key,Created,Closed
        K1,06/01/2023 10:00:00 AM,06/02/2023 10:00:00 AM
        K2,06/03/2023 10:00:00 AM,06/03/2023 10:00:00 AM
        """)
    table = open_table(p)
    auditor = DurationAuditor(created_field="created", closed_field="closed", parser=P)
    stream_rows(table, [auditor])
    assert auditor.summary.duration_count == 2
    assert auditor.summary.zero == 1


def test_summary_as_dict_shape():
    s, _ = run_auditor(AUDIT_ROWS)
    d = s.as_dict()
    assert d["durations"]["count"] == 3
    assert d["durations"]["min_days"] == pytest.approx(-1800 / 86400, abs=1e-6)
    assert d["durations"]["histogram_days"] == {"-1": 1, "0": 1, "1": 1}
    assert d["post_close"]["lag_histogram_days"]["31"] == 1
    assert d["spikes"]["created"]["evaluated"] is False
    assert d["spikes"]["created"]["parsed"] == 6


def test_rules_unit_conversions():
    r = TemporalRules(extreme_cutoff_days=2, post_close_window_days=1)
    assert r.extreme_cutoff_seconds == 172800
    assert r.post_close_window_seconds == 86400
