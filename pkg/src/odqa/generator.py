"""Deterministic 311-style fixture generator.

Produces a service-request CSV with a seeded anomaly census: every
defect class lands at fixed row indices in known quantities, so a test
can assert exact engine counts against the construction. The same
generator scales to multi-gigabyte inputs by padding the free-text
column and generating until a byte target is reached; the anomaly rows
sit in the first 1100 rows either way.

Layout of the injected rows (absolute 1-based data row indices via
idx = ordinal - 1):

    10..41    forced coverage of every declared domain value
    100..     negative durations (closed precedes created)
    200..     zero durations (closed equals created)
    300..     sentinel created dates (1900-01-01, also extreme)
    400..     created at exact midnight
    500..     closed at exact midnight
    600..     invalid incident zips
    700..     created inside a spring-forward gap
    800..     updates later than the post-close window
    900..     byte copies of rows 1..5 (duplicate keys)
    1000..    sparse taxi borough present (everywhere else blank)

Everything else is a plain row: timestamps inside DST-quiet windows,
seconds never zero, values drawn from the declared domains.
"""

from __future__ import annotations

import argparse
import datetime as dt
import logging
import random
from dataclasses import dataclass
from pathlib import Path

from .dictionary import DataDictionary, FieldDescriptor, save_dictionary

log = logging.getLogger(__name__)

RAW_HEADERS = [
    "Unique Key", "Created Date", "Closed Date", "Resolution Action Updated Date",
    "Agency", "Agency Name", "Complaint Type", "Descriptor", "Status",
    "Incident Zip", "Borough", "Park Borough", "Latitude", "Longitude", "Location",
    "Cross Street 1", "Intersection Street 1", "Taxi Company Borough",
    "Resolution Description",
]

AGENCIES = ["NYPD", "HPD", "DOT", "DSNY", "DEP", "DOB", "DPR", "DOHMH", "TLC", "EDC"]
AGENCY_NAMES = {
    "NYPD": "New York City Police Department",
    "HPD": "Department of Housing Preservation and Development",
    "DOT": "Department of Transportation",
    "DSNY": "Department of Sanitation",
    "DEP": "Department of Environmental Protection",
    "DOB": "Department of Buildings",
    "DPR": "Department of Parks and Recreation",
    "DOHMH": "Department of Health and Mental Hygiene",
    "TLC": "Taxi and Limousine Commission",
    "EDC": "Economic Development Corporation",
}
AGENCY_WEIGHTS = [30, 16, 12, 10, 9, 8, 6, 5, 2, 2]

COMPLAINTS = [
    "Noise - Residential", "Illegal Parking", "HEAT/HOT WATER", "Blocked Driveway",
    "Street Condition", "Noise - Street/Sidewalk", "Water System",
    "UNSANITARY CONDITION", "Noise - Commercial", "PLUMBING", "Rodent",
    "Derelict Vehicles",
]
COMPLAINT_WEIGHTS = [28, 20, 18, 14, 12, 10, 8, 7, 6, 5, 4, 3]

DESCRIPTORS = [
    "Loud Music/Party", "Banging/Pounding", "Loud Talking", "No Access",
    "Posted Parking Sign Violation", "Blocked Hydrant", "ENTIRE BUILDING",
    "APARTMENT ONLY", "Pothole", "Rough, Pitted or Cracked Roads",
    "Engine Idling", "Leak (Use Comments) (WA2)", "PESTS", "MOLD",
    "Rat Sighting", "With License Plate", "Commercial Overnight Parking",
    "Partial Access",
]

STATUSES = ["Closed", "Open", "Assigned", "Pending", "In Progress"]
STATUS_WEIGHTS = [70, 10, 8, 7, 5]

BOROUGHS = ["BROOKLYN", "QUEENS", "MANHATTAN", "BRONX", "STATEN ISLAND"]
BOROUGH_WEIGHTS = [31, 25, 20, 18, 6]

VALID_ZIPS = [
    "10001", "10002", "10003", "10009", "10011", "10016", "10019", "10025",
    "10128", "10301", "10304", "10306", "10451", "10452", "10456", "10458",
    "10467", "11201", "11203", "11207", "11211", "11215", "11221", "11226",
    "11354", "11368", "11372", "11385", "11432", "11691",
]
INVALID_ZIPS = ["00000", "99999", "12345", "1001", "ABCDE", "99998", "00001"]

# (canonical, variant) pairs; the variant is equal after street normalization
STREETS = [
    ("E 5TH ST", "E 5 STREET"),
    ("W 42ND ST", "W 42 STREET"),
    ("FLATBUSH AVE", "FLATBUSH AVENUE"),
    ("BEDFORD AVE", "BEDFORD AVENUE"),
    ("OCEAN PKWY", "OCEAN PARKWAY"),
    ("GRAND CONCOURSE", "GRAND CONCOURSE"),
    ("VICTORY BLVD", "VICTORY BOULEVARD"),
    ("FIRST AVE", "1 AVENUE"),
    ("THIRD AVE", "3 AVENUE"),
    ("QUEENS BLVD", "QUEENS BOULEVARD"),
    ("ATLANTIC AVE", "ATLANTIC AVENUE"),
    ("NORTHERN BLVD", "NORTHERN BOULEVARD"),
    ("MYRTLE AVE", "MYRTLE AVENUE"),
    ("E 14TH ST", "E 14 STREET"),
    ("AMSTERDAM AVE", "AMSTERDAM AVENUE"),
]

RESOLUTIONS = [
    "The Police Department responded to the complaint and determined that police action was not necessary.",
    "The Department of Housing Preservation and Development inspected the following conditions. No violations were issued. The complaint has been closed.",
    "The Department of Transportation inspected the condition, and a work order was issued.",
    "The Department of Sanitation investigated this complaint and found no condition at the location.",
    "The Department of Environmental Protection determined that this complaint is a duplicate of a previously filed complaint.",
    "Your request was submitted. The agency will review it on a \"best effort\" basis and update this record.",
    "The Police Department responded to the complaint and took action to fix the condition.",
    "The agency attempted to contact the complainant, but the contact information was incomplete.",
]

FILLER = (
    "Follow-up details were recorded by the responding unit, including site access notes, "
    "observed conditions, and the disposition communicated to the complainant. "
)

# fixed row indices for each anomaly class (0-based)
COVER_AT = 10
NEG_AT = 100
ZERO_AT = 200
SENTINEL_AT = 300
MID_CREATED_AT = 400
MID_CLOSED_AT = 500
INVALID_ZIP_AT = 600
GAP_AT = 700
POST_CLOSE_AT = 800
DUP_AT = 900
TAXI_AT = 1000
MIN_ROWS = 1100

SENTINEL_CREATED = "01/01/1900 03:47:12 AM"
GAP_CREATED = ["03/13/2022 02:17:23 AM", "03/13/2022 02:44:51 AM"]

# DST-quiet generation windows: no transition inside any of them
WINDOWS = [
    (dt.datetime(2022, 4, 20), dt.datetime(2022, 10, 1)),
    (dt.datetime(2022, 12, 1), dt.datetime(2023, 1, 20)),
    (dt.datetime(2023, 4, 20), dt.datetime(2023, 9, 30)),
]


@dataclass(frozen=True)
class AnomalyCounts:
    negative: int = 25
    zero: int = 40
    sentinel: int = 3
    midnight_created: int = 60
    midnight_closed: int = 60
    invalid_zip: int = 7
    duplicate_keys: int = 5
    dst_gap: int = 2
    post_close: int = 11
    sparse_present: int = 30

    def validate(self) -> None:
        limits = [
            (self.negative, ZERO_AT - NEG_AT, "negative"),
            (self.zero, SENTINEL_AT - ZERO_AT, "zero"),
            (self.sentinel, MID_CREATED_AT - SENTINEL_AT, "sentinel"),
            (self.midnight_created, MID_CLOSED_AT - MID_CREATED_AT, "midnight_created"),
            (self.midnight_closed, INVALID_ZIP_AT - MID_CLOSED_AT, "midnight_closed"),
            (self.invalid_zip, min(GAP_AT - INVALID_ZIP_AT, len(INVALID_ZIPS)), "invalid_zip"),
            (self.dst_gap, min(POST_CLOSE_AT - GAP_AT, len(GAP_CREATED)), "dst_gap"),
            (self.post_close, DUP_AT - POST_CLOSE_AT, "post_close"),
            (self.duplicate_keys, min(TAXI_AT - DUP_AT, COVER_AT), "duplicate_keys"),
            (self.sparse_present, MIN_ROWS - TAXI_AT, "sparse_present"),
        ]
        for value, cap, name in limits:
            if not 0 <= value <= cap:
                raise ValueError(f"anomaly count {name}={value} exceeds its slot (max {cap})")


@dataclass
class FixtureSummary:
    csv_path: Path
    dictionary_path: Path
    zip_reference_path: Path
    rows: int
    byte_size: int
    counts: dict[str, int]


def _fmt(ts: dt.datetime) -> str:
    """mm/dd/yyyy hh:mm:ss AM/PM without locale involvement."""
    h = ts.hour % 12 or 12
    half = "AM" if ts.hour < 12 else "PM"
    return (f"{ts.month:02d}/{ts.day:02d}/{ts.year:04d} "
            f"{h:02d}:{ts.minute:02d}:{ts.second:02d} {half}")


def _second_sunday_march(year: int) -> dt.date:
    d = dt.date(year, 3, 1)
    first_sunday = 1 + (6 - d.weekday()) % 7
    return dt.date(year, 3, first_sunday + 7)


def _avoid_gap(ts: dt.datetime) -> dt.datetime:
    # keep derived stamps out of the 02:00-03:00 spring-forward hour
    if ts.month == 3 and 2 <= ts.hour < 3 and ts.date() == _second_sunday_march(ts.year):
        return ts + dt.timedelta(hours=1)
    return ts


def _rand_created(rng: random.Random) -> dt.datetime:
    spans = [(b - a).days for a, b in WINDOWS]
    pick = rng.randrange(sum(spans))
    for (a, _), span in zip(WINDOWS, spans):
        if pick < span:
            base = a + dt.timedelta(days=pick)
            break
        pick -= span
    return base.replace(
        hour=rng.randrange(24), minute=rng.randrange(60), second=rng.randrange(1, 60),
    )


def _offset_keeping_seconds(ts: dt.datetime, lag_seconds: int) -> dt.datetime:
    """Shift by roughly lag_seconds, keeping the result off :00 seconds."""
    out = ts + dt.timedelta(seconds=lag_seconds)
    if out.second == 0:
        out += dt.timedelta(seconds=7)
    return _avoid_gap(out)


def _cell(v: str) -> str:
    # minimal quoting, byte compatible with csv.QUOTE_MINIMAL output
    if '"' in v:
        return '"' + v.replace('"', '""') + '"'
    if "," in v or "\n" in v or "\r" in v:
        return '"' + v + '"'
    return v


def _pad_description(base: str, width: int) -> str:
    if width <= 0 or len(base) >= width:
        return base
    need = width - len(base)
    filler = (FILLER * (need // len(FILLER) + 1))[: need - 1]
    return base + " " + filler


def fixture_dictionary() -> DataDictionary:
    borough_domain = tuple(BOROUGHS)
    fields = [
        FieldDescriptor("unique_key", "integer", required=True,
                        notes="one row per service request"),
        FieldDescriptor("created_date", "timestamp", required=True),
        FieldDescriptor("closed_date", "timestamp"),
        FieldDescriptor("resolution_action_updated_date", "timestamp"),
        FieldDescriptor("agency", "categorical", domain=tuple(AGENCIES), required=True),
        FieldDescriptor("agency_name", "text"),
        FieldDescriptor("complaint_type", "categorical", domain=tuple(COMPLAINTS), required=True),
        FieldDescriptor("descriptor", "text"),
        FieldDescriptor("status", "categorical", domain=tuple(STATUSES), required=True),
        FieldDescriptor("incident_zip", "text", notes="USPS zip code of the incident"),
        FieldDescriptor("borough", "categorical", domain=borough_domain),
        FieldDescriptor("park_borough", "categorical", domain=borough_domain,
                        notes="borough copy carried by the parks intake form"),
        FieldDescriptor("latitude", "decimal"),
        FieldDescriptor("longitude", "decimal"),
        FieldDescriptor("location", "geo_point",
                        notes="rendering of (latitude, longitude)"),
        FieldDescriptor("cross_street_1", "text"),
        FieldDescriptor("intersection_street_1", "text"),
        FieldDescriptor("taxi_company_borough", "categorical", domain=borough_domain,
                        notes="populated for taxi complaints only"),
        FieldDescriptor("resolution_description", "text"),
    ]
    return DataDictionary(fields)


def generate_fixture(
    out_dir: str | Path,
    *,
    rows: int = 10_000,
    seed: int = 1234,
    description_pad: int = 0,
    target_bytes: int | None = None,
    anomalies: AnomalyCounts = AnomalyCounts(),
    csv_name: str = "requests.csv",
) -> FixtureSummary:
    """Write the fixture CSV plus its dictionary and zip reference list.

    With target_bytes set, rows are generated until the file reaches that
    size (rows is then ignored); otherwise exactly `rows` data rows are
    written. Same arguments, same bytes.
    """
    anomalies.validate()
    if target_bytes is None and rows < MIN_ROWS:
        raise ValueError(f"need at least {MIN_ROWS} rows to place every anomaly")

    out = Path(out_dir)
    out.mkdir(parents=True, exist_ok=True)
    csv_path = out / csv_name
    dict_path = out / "dictionary.csv"
    zip_path = out / "zips.ref"

    save_dictionary(fixture_dictionary(), dict_path)
    zip_path.write_text(
        "# USPS zip codes observed in the service area\n" + "\n".join(VALID_ZIPS) + "\n",
        encoding="utf-8",
    )

    rng = random.Random(seed)
    dup_sources: list[str] = []
    bytes_written = 0
    idx = 0

    a = anomalies
    neg_rows = range(NEG_AT, NEG_AT + a.negative)
    zero_rows = range(ZERO_AT, ZERO_AT + a.zero)
    sentinel_rows = range(SENTINEL_AT, SENTINEL_AT + a.sentinel)
    midc_rows = range(MID_CREATED_AT, MID_CREATED_AT + a.midnight_created)
    midz_rows = range(MID_CLOSED_AT, MID_CLOSED_AT + a.midnight_closed)
    zip_rows = range(INVALID_ZIP_AT, INVALID_ZIP_AT + a.invalid_zip)
    gap_rows = range(GAP_AT, GAP_AT + a.dst_gap)
    late_rows = range(POST_CLOSE_AT, POST_CLOSE_AT + a.post_close)
    dup_rows = range(DUP_AT, DUP_AT + a.duplicate_keys)
    taxi_rows = range(TAXI_AT, TAXI_AT + a.sparse_present)

    def build_row(i: int) -> str:
        key = str(10_000_000 + i)

        created_s = ""
        closed_s = ""
        updated_s = ""

        if i in sentinel_rows:
            created_s = SENTINEL_CREATED
            closed = _rand_created(rng)
            closed_s = _fmt(closed)
            updated_s = closed_s
        elif i in gap_rows:
            created_s = GAP_CREATED[i - GAP_AT]
            closed = _offset_keeping_seconds(
                dt.datetime(2022, 3, 13, 2, 17, 23),
                rng.randrange(2 * 3600, 40 * 86400),
            )
            closed_s = _fmt(closed)
            updated_s = closed_s
        elif i in midc_rows:
            created = _rand_created(rng).replace(hour=0, minute=0, second=0)
            closed = _offset_keeping_seconds(created, rng.randrange(2 * 3600, 45 * 86400))
            created_s = _fmt(created)
            closed_s = _fmt(closed)
            updated_s = closed_s
        elif i in midz_rows:
            created = _rand_created(rng)
            closed = (created + dt.timedelta(days=rng.randrange(1, 45))).replace(
                hour=0, minute=0, second=0,
            )
            created_s = _fmt(created)
            closed_s = _fmt(closed)
            updated_s = closed_s
        else:
            created = _rand_created(rng)
            created_s = _fmt(created)
            if i in neg_rows:
                closed = _offset_keeping_seconds(created, -rng.randrange(86400, 300 * 86400))
                closed_s = _fmt(closed)
                updated_s = closed_s
            elif i in zero_rows:
                closed_s = created_s
                updated_s = created_s
            elif i in late_rows:
                closed = _offset_keeping_seconds(created, rng.randrange(2 * 3600, 30 * 86400))
                updated = _offset_keeping_seconds(
                    closed, rng.randrange(31 * 86400 + 3600, 200 * 86400),
                )
                closed_s = _fmt(closed)
                updated_s = _fmt(updated)
            elif i >= MIN_ROWS and i % 29 == 21:
                # open case: never closed, last touched at intake
                closed_s = ""
                updated_s = created_s
            else:
                closed = _offset_keeping_seconds(created, rng.randrange(2 * 3600, 60 * 86400))
                closed_s = _fmt(closed)
                updated_s = closed_s

        agency = rng.choices(AGENCIES, AGENCY_WEIGHTS)[0]
        complaint = rng.choices(COMPLAINTS, COMPLAINT_WEIGHTS)[0]
        status = rng.choices(STATUSES, STATUS_WEIGHTS)[0]
        borough = rng.choices(BOROUGHS, BOROUGH_WEIGHTS)[0]
        if COVER_AT <= i < COVER_AT + len(AGENCIES):
            agency = AGENCIES[i - COVER_AT]
        base = COVER_AT + len(AGENCIES)
        if base <= i < base + len(COMPLAINTS):
            complaint = COMPLAINTS[i - base]
        base += len(COMPLAINTS)
        if base <= i < base + len(STATUSES):
            status = STATUSES[i - base]
        base += len(STATUSES)
        if base <= i < base + len(BOROUGHS):
            borough = BOROUGHS[i - base]

        if i in zip_rows:
            zipc = INVALID_ZIPS[i - INVALID_ZIP_AT]
        elif i >= MIN_ROWS and i % 41 == 3:
            zipc = ""
        else:
            zipc = rng.choice(VALID_ZIPS)

        if i % 83 == 13:
            lat_s = lon_s = loc_s = ""
        else:
            lat_s = f"{rng.uniform(40.50, 40.91):.6f}"
            lon_s = f"{rng.uniform(-74.25, -73.70):.6f}"
            loc_s = f"({lat_s}, {lon_s})"

        if i % 10 < 7:
            canonical, variant = STREETS[rng.randrange(len(STREETS))]
            cross = canonical
            intersection = variant if i % 8 == 0 else canonical
        else:
            cross = intersection = ""

        taxi = BOROUGHS[(i - TAXI_AT) % len(BOROUGHS)] if i in taxi_rows else ""
        descriptor = "" if i % 19 == 7 else DESCRIPTORS[rng.randrange(len(DESCRIPTORS))]
        resolution = _pad_description(
            RESOLUTIONS[rng.randrange(len(RESOLUTIONS))], description_pad,
        )

        cells = [
            key, created_s, closed_s, updated_s,
            agency, AGENCY_NAMES[agency], complaint, descriptor, status,
            zipc, borough, borough, lat_s, lon_s, loc_s,
            cross, intersection, taxi, resolution,
        ]
        return ",".join(_cell(c) for c in cells) + "\n"

    with open(csv_path, "wb") as fh:
        header_line = ",".join(_cell(h) for h in RAW_HEADERS) + "\n"
        data = header_line.encode("utf-8")
        fh.write(data)
        bytes_written += len(data)
        while True:
            if target_bytes is None:
                if idx >= rows:
                    break
            elif bytes_written >= target_bytes and idx >= MIN_ROWS:
                break
            if idx in dup_rows:
                line = dup_sources[idx - DUP_AT]
            else:
                line = build_row(idx)
                if idx < a.duplicate_keys:
                    dup_sources.append(line)
            data = line.encode("utf-8")
            fh.write(data)
            bytes_written += len(data)
            idx += 1

    counts = {
        "rows": idx,
        "negative_duration": a.negative,
        "zero_duration": a.zero,
        "sentinel_rows": a.sentinel,
        "sentinel_date_findings": a.sentinel,
        "extreme_duration": a.sentinel,
        "midnight_readings": a.midnight_created + a.midnight_closed,
        "invalid_zip": a.invalid_zip,
        "duplicate_key_values": a.duplicate_keys,
        "dst_gap_invalid": a.dst_gap,
        "post_close_update": a.post_close,
        "sparse_present": a.sparse_present,
    }
    return FixtureSummary(csv_path, dict_path, zip_path, idx, bytes_written, counts)


def main(argv: list[str] | None = None) -> int:
    parser = argparse.ArgumentParser(description="generate a seeded 311-style fixture")
    parser.add_argument("out_dir")
    parser.add_argument("--rows", type=int, default=10_000)
    parser.add_argument("--seed", type=int, default=1234)
    parser.add_argument("--description-pad", type=int, default=0)
    parser.add_argument("--target-bytes", type=int, default=None)
    args = parser.parse_args(argv)
    summary = generate_fixture(
        args.out_dir,
        rows=args.rows,
        seed=args.seed,
        description_pad=args.description_pad,
        target_bytes=args.target_bytes,
    )
    print(f"wrote {summary.csv_path} ({summary.rows} rows, {summary.byte_size} bytes)")
    return 0


if __name__ == "__main__":
    raise SystemExit(main())
