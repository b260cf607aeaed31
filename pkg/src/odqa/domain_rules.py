"""Reference sets, geographic bounds, key uniqueness, and precision.

These checks catch values that are syntactically fine but semantically
impossible: a zip code no post office issues, a coordinate out in the
harbor, a supposedly unique key that repeats, a coordinate printed to
nanometer precision. Reference sets are plain newline-delimited token
files so domain owners can maintain them without tooling.
"""

from __future__ import annotations

import logging
import re
from dataclasses import dataclass, field as dc_field
from pathlib import Path
from typing import Iterable

from .errors import ConfigError
from .findings import Measurement, make_finding
from .ingest import DEFAULT_CLASSIFIER, MissingClassifier, RawTable, RowConsumer

log = logging.getLogger(__name__)

# NYC bounding box, inclusive on both ends
DEFAULT_LAT_MIN, DEFAULT_LAT_MAX = 40.49, 40.92
DEFAULT_LON_MIN, DEFAULT_LON_MAX = -74.27, -73.68

DEFAULT_MAX_DECIMALS = 6


def load_reference(path: str | Path) -> frozenset[str]:
    """Load a newline-delimited reference list.

    Lines are trimmed; blanks and lines starting with "#" are skipped.
    An empty result is a configuration error, not an empty domain.
    """
    p = Path(path)
    tokens: set[str] = set()
    try:
        with open(p, encoding="utf-8") as fh:
            for line in fh:
                token = line.strip()
                if not token or token.startswith("#"):
                    continue
                tokens.add(token)
    except OSError as exc:
        raise ConfigError(f"cannot read reference list {p}: {exc}") from exc
    if not tokens:
        raise ConfigError(f"reference list {p} contains no tokens")
    return frozenset(tokens)


@dataclass
class MembershipResult:
    field: str
    checked: int = 0
    invalid: int = 0
    invalid_values: dict[str, int] = dc_field(default_factory=dict)
    by_agency_invalid: dict[str, int] = dc_field(default_factory=dict)

    @property
    def invalid_rate(self) -> float | None:
        return None if self.checked == 0 else self.invalid / self.checked

    def top_invalid(self, k: int = 10) -> list[tuple[str, int]]:
        return sorted(self.invalid_values.items(), key=lambda kv: (-kv[1], kv[0]))[:k]


class ReferenceChecker(RowConsumer):
    """Flags present values outside a reference set, one finding each."""

    def __init__(
        self,
        field: str,
        reference: frozenset[str],
        *,
        classifier: MissingClassifier = DEFAULT_CLASSIFIER,
        key_field: str | None = None,
        agency_field: str | None = None,
        emit=None,
    ):
        self.field = field
        self.reference = reference
        self.classifier = classifier
        self.key_field = key_field
        self.agency_field = agency_field
        self._emit = emit if emit is not None else (lambda f: None)
        self.result = MembershipResult(field)

    def start(self, table: RawTable) -> None:
        idx = table.column_index(self.field)
        if idx is None:
            raise ValueError(f"reference check: field {self.field!r} not in header")
        self._idx = idx
        self._ik = table.column_index(self.key_field) if self.key_field else None
        self._ia = table.column_index(self.agency_field) if self.agency_field else None

    def consume(self, ordinal: int, row: list[str]) -> None:
        v = row[self._idx]
        if not v or self.classifier.kind_of(v) is not None:
            return
        res = self.result
        res.checked += 1
        if v in self.reference:
            return
        res.invalid += 1
        res.invalid_values[v] = res.invalid_values.get(v, 0) + 1
        agency = None
        if self._ia is not None:
            a = row[self._ia]
            if a and self.classifier.kind_of(a) is None:
                agency = a
                res.by_agency_invalid[a] = res.by_agency_invalid.get(a, 0) + 1
        locator = ordinal
        if self._ik is not None:
            key = row[self._ik]
            if key and self.classifier.kind_of(key) is None:
                locator = key
        self._emit(make_finding(
            "invalid_value",
            f"{self.field!r} value {v!r} is not in the reference set",
            fields=(self.field,),
            row_locator=locator,
            agency=agency,
        ))

    def finish(self) -> MembershipResult:
        return self.result


def check_reference_membership(
    values: Iterable[str],
    reference: frozenset[str],
    *,
    field: str = "value",
    classifier: MissingClassifier = DEFAULT_CLASSIFIER,
) -> tuple[MembershipResult, list]:
    """Materialized-sequence variant of ReferenceChecker."""
    findings: list = []
    res = MembershipResult(field)
    kind_of = classifier.kind_of
    for ordinal, v in enumerate(values, start=1):
        if not v or kind_of(v) is not None:
            continue
        res.checked += 1
        if v in reference:
            continue
        res.invalid += 1
        res.invalid_values[v] = res.invalid_values.get(v, 0) + 1
        findings.append(make_finding(
            "invalid_value",
            f"{field!r} value {v!r} is not in the reference set",
            fields=(field,),
            row_locator=ordinal,
        ))
    return res, findings


@dataclass(frozen=True)
class GeoBounds:
    lat_min: float = DEFAULT_LAT_MIN
    lat_max: float = DEFAULT_LAT_MAX
    lon_min: float = DEFAULT_LON_MIN
    lon_max: float = DEFAULT_LON_MAX

    def __post_init__(self):
        if self.lat_min > self.lat_max or self.lon_min > self.lon_max:
            raise ConfigError("geo bounds: min exceeds max")

    def contains(self, lat: float, lon: float) -> bool:
        return self.lat_min <= lat <= self.lat_max and self.lon_min <= lon <= self.lon_max


@dataclass
class GeoResult:
    pairs_checked: int = 0
    out_of_bounds: int = 0
    unparsed: int = 0


class GeoBoundsChecker(RowConsumer):
    """Checks coordinate pairs against a closed bounding box.

    Values that do not parse as decimals are counted and skipped here;
    they surface as type violations through the dictionary check, not as
    bounds findings.
    """

    def __init__(
        self,
        lat_field: str,
        lon_field: str,
        bounds: GeoBounds = GeoBounds(),
        *,
        classifier: MissingClassifier = DEFAULT_CLASSIFIER,
        key_field: str | None = None,
        agency_field: str | None = None,
        emit=None,
    ):
        self.lat_field = lat_field
        self.lon_field = lon_field
        self.bounds = bounds
        self.classifier = classifier
        self.key_field = key_field
        self.agency_field = agency_field
        self._emit = emit if emit is not None else (lambda f: None)
        self.result = GeoResult()

    def start(self, table: RawTable) -> None:
        ilat = table.column_index(self.lat_field)
        ilon = table.column_index(self.lon_field)
        if ilat is None or ilon is None:
            raise ValueError(f"geo check: {self.lat_field!r}/{self.lon_field!r} not in header")
        self._ilat, self._ilon = ilat, ilon
        self._ik = table.column_index(self.key_field) if self.key_field else None
        self._ia = table.column_index(self.agency_field) if self.agency_field else None

    def consume(self, ordinal: int, row: list[str]) -> None:
        raw_lat = row[self._ilat]
        raw_lon = row[self._ilon]
        kind_of = self.classifier.kind_of
        if not raw_lat or not raw_lon or kind_of(raw_lat) is not None or kind_of(raw_lon) is not None:
            return
        try:
            lat = float(raw_lat)
            lon = float(raw_lon)
        except ValueError:
            self.result.unparsed += 1
            return
        if lat != lat or lon != lon or lat in (float("inf"), float("-inf")):
            self.result.unparsed += 1
            return
        res = self.result
        res.pairs_checked += 1
        if self.bounds.contains(lat, lon):
            return
        res.out_of_bounds += 1
        agency = None
        if self._ia is not None:
            a = row[self._ia]
            if a and kind_of(a) is None:
                agency = a
        locator = ordinal
        if self._ik is not None:
            key = row[self._ik]
            if key and kind_of(key) is None:
                locator = key
        self._emit(make_finding(
            "geo_out_of_bounds",
            f"({raw_lat}, {raw_lon}) falls outside "
            f"[{self.bounds.lat_min}, {self.bounds.lat_max}] x "
            f"[{self.bounds.lon_min}, {self.bounds.lon_max}]",
            fields=(self.lat_field, self.lon_field),
            row_locator=locator,
            agency=agency,
        ))

    def finish(self) -> GeoResult:
        return self.result


def check_geo_bounds(
    lat_values: Iterable[str],
    lon_values: Iterable[str],
    bounds: GeoBounds = GeoBounds(),
    *,
    classifier: MissingClassifier = DEFAULT_CLASSIFIER,
) -> tuple[GeoResult, list]:
    """Materialized-pair variant of GeoBoundsChecker."""
    findings: list = []
    res = GeoResult()
    kind_of = classifier.kind_of
    for ordinal, (raw_lat, raw_lon) in enumerate(zip(lat_values, lon_values), start=1):
        if not raw_lat or not raw_lon or kind_of(raw_lat) is not None or kind_of(raw_lon) is not None:
            continue
        try:
            lat, lon = float(raw_lat), float(raw_lon)
        except ValueError:
            res.unparsed += 1
            continue
        if lat != lat or lon != lon:
            res.unparsed += 1
            continue
        res.pairs_checked += 1
        if not bounds.contains(lat, lon):
            res.out_of_bounds += 1
            findings.append(make_finding(
                "geo_out_of_bounds",
                f"({raw_lat}, {raw_lon}) falls outside the configured box",
                fields=("latitude", "longitude"),
                row_locator=ordinal,
            ))
    return res, findings


@dataclass
class UniqueResult:
    field: str
    total_present: int = 0
    missing: int = 0
    duplicate_values: int = 0
    duplicate_rows: int = 0


class UniqueChecker(RowConsumer):
    """Detects repeated values in a declared-unique column.

    One Finding per duplicated value, listing every locator it appears
    at. When the field is required, blank cells are violations too.
    """

    LOCATOR_CAP = 20

    def __init__(
        self,
        field: str,
        *,
        required: bool = False,
        classifier: MissingClassifier = DEFAULT_CLASSIFIER,
        emit=None,
    ):
        self.field = field
        self.required = required
        self.classifier = classifier
        self._emit = emit if emit is not None else (lambda f: None)
        self.result = UniqueResult(field)
        self._first_seen: dict[str, int] = {}
        self._dups: dict[str, list[int]] = {}

    def start(self, table: RawTable) -> None:
        idx = table.column_index(self.field)
        if idx is None:
            raise ValueError(f"uniqueness check: field {self.field!r} not in header")
        self._idx = idx

    def consume(self, ordinal: int, row: list[str]) -> None:
        v = row[self._idx]
        if not v or self.classifier.kind_of(v) is not None:
            self.result.missing += 1
            if self.required:
                self._emit(make_finding(
                    "missing_key",
                    f"required unique field {self.field!r} is blank",
                    fields=(self.field,),
                    row_locator=ordinal,
                ))
            return
        self.result.total_present += 1
        first = self._first_seen.get(v)
        if first is None:
            self._first_seen[v] = ordinal
            return
        bucket = self._dups.get(v)
        if bucket is None:
            self._dups[v] = [first, ordinal]
        elif len(bucket) < self.LOCATOR_CAP:
            bucket.append(ordinal)
        else:
            bucket.append(-1)  # sentinel: more beyond the cap

    def finish(self) -> UniqueResult:
        res = self.result
        res.duplicate_values = len(self._dups)
        for value, ordinals in self._dups.items():
            overflow = ordinals.count(-1)
            shown = [o for o in ordinals if o != -1]
            occurrences = len(ordinals)
            res.duplicate_rows += occurrences
            where = ", ".join(str(o) for o in shown)
            if overflow:
                where += f", and {overflow} more"
            self._emit(make_finding(
                "duplicate_key",
                f"{self.field!r} value {value!r} appears {occurrences} times (rows {where})",
                fields=(self.field,),
                row_locator=shown[0],
                measured=Measurement(occurrences, "occurrences"),
            ))
        return res


def check_unique(
    values: Iterable[str],
    *,
    field: str = "key",
    required: bool = False,
    classifier: MissingClassifier = DEFAULT_CLASSIFIER,
) -> tuple[UniqueResult, list]:
    """Materialized-sequence variant of UniqueChecker."""
    findings: list = []
    checker = UniqueChecker(field, required=required, classifier=classifier, emit=findings.append)
    checker._idx = 0
    for ordinal, v in enumerate(values, start=1):
        checker.consume(ordinal, [v])
    return checker.finish(), findings


_DECIMAL_TEXT_RE = re.compile(r"[+-]?[0-9]+(?:\.([0-9]+))?")


def decimal_digits(raw: str) -> int | None:
    """Fractional digit count of a plain decimal literal, else None.

    Exponent forms and anything non-numeric return None; an integer
    literal returns 0. The count reflects the text itself, not any float
    the text might round to.
    """
    m = _DECIMAL_TEXT_RE.fullmatch(raw.strip())
    if m is None:
        return None
    frac = m.group(1)
    return len(frac) if frac else 0


@dataclass
class PrecisionAudit:
    field: str
    histogram: dict[int, int] = dc_field(default_factory=dict)
    flagged: int = 0
    non_decimal: int = 0
    max_decimals_seen: int = 0


class PrecisionAuditor(RowConsumer):
    """Histograms textual decimal precision for configured fields.

    Emits one aggregated Finding per field whose values exceed the
    plausible digit bound; per-row findings would just repeat the same
    systemic fact millions of times.
    """

    def __init__(
        self,
        fields: list[str],
        max_decimals: int = DEFAULT_MAX_DECIMALS,
        *,
        classifier: MissingClassifier = DEFAULT_CLASSIFIER,
        emit=None,
    ):
        self.fields = list(fields)
        self.max_decimals = max_decimals
        self.classifier = classifier
        self._emit = emit if emit is not None else (lambda f: None)
        self.results: dict[str, PrecisionAudit] = {f: PrecisionAudit(f) for f in self.fields}

    def start(self, table: RawTable) -> None:
        self._cols = []
        for f in self.fields:
            idx = table.column_index(f)
            if idx is None:
                raise ValueError(f"precision audit: field {f!r} not in header")
            self._cols.append((idx, self.results[f]))

    def consume(self, ordinal: int, row: list[str]) -> None:
        kind_of = self.classifier.kind_of
        for idx, audit in self._cols:
            v = row[idx]
            if not v or kind_of(v) is not None:
                continue
            d = decimal_digits(v)
            if d is None:
                audit.non_decimal += 1
                continue
            audit.histogram[d] = audit.histogram.get(d, 0) + 1
            if d > audit.max_decimals_seen:
                audit.max_decimals_seen = d
            if d > self.max_decimals:
                audit.flagged += 1

    def finish(self) -> dict[str, PrecisionAudit]:
        for f in self.fields:
            audit = self.results[f]
            if audit.flagged:
                self._emit(make_finding(
                    "precision_flag",
                    f"{f!r}: {audit.flagged} value(s) carry more than {self.max_decimals} "
                    f"decimal digits (max seen {audit.max_decimals_seen})",
                    fields=(f,),
                    measured=Measurement(audit.flagged, "values"),
                ))
        return self.results


def audit_precision(
    values: Iterable[str],
    max_decimals: int = DEFAULT_MAX_DECIMALS,
    *,
    field: str = "value",
    classifier: MissingClassifier = DEFAULT_CLASSIFIER,
) -> tuple[PrecisionAudit, list]:
    """Materialized-sequence variant of PrecisionAuditor."""
    findings: list = []
    auditor = PrecisionAuditor([field], max_decimals, classifier=classifier, emit=findings.append)
    auditor._cols = [(0, auditor.results[field])]
    for ordinal, v in enumerate(values, start=1):
        auditor.consume(ordinal, [v])
    out = auditor.finish()
    return out[field], findings
