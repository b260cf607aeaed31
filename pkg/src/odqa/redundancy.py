"""Cross-column redundancy measurement.

Quantifies how much of one column is recoverable from another: blank
mask alignment, exact and normalized match rates, concatenation
templates, and functional dependencies. Rates with an empty denominator
are reported as not-applicable rather than zero, since "never comparable"
and "compared and never equal" are different facts.
"""

from __future__ import annotations

import logging
import re
from dataclasses import dataclass, field as dc_field
from typing import Callable, Iterable, Mapping

from .errors import ConfigError
from .findings import Measurement, make_finding
from .ingest import DEFAULT_CLASSIFIER, MissingClassifier, RawTable, RowConsumer

log = logging.getLogger(__name__)

DUPLICATE_RATE = 1.0
NEAR_DUPLICATE_RATE = 0.85

VERDICT_DUPLICATE = "duplicate"
VERDICT_NEAR = "near_duplicate"
VERDICT_DISTINCT = "distinct"
VERDICT_NA = "not_applicable"


@dataclass(frozen=True)
class PairMatchStats:
    field_a: str
    field_b: str
    rows: int
    both_blank: int
    one_blank: int
    both_present: int
    exact_match: int
    normalized_match: int

    @property
    def rate_both_present(self) -> float | None:
        return None if self.both_present == 0 else self.exact_match / self.both_present

    @property
    def rate_nonblank(self) -> float | None:
        denom = self.rows - self.both_blank
        return None if denom == 0 else self.exact_match / denom

    @property
    def normalized_rate(self) -> float | None:
        return None if self.both_present == 0 else self.normalized_match / self.both_present

    @property
    def blank_masks_equal(self) -> bool:
        return self.one_blank == 0

    def verdict(self, near_threshold: float = NEAR_DUPLICATE_RATE) -> str:
        rate = self.rate_both_present
        if rate is None:
            return VERDICT_NA
        if rate >= DUPLICATE_RATE:
            return VERDICT_DUPLICATE
        if rate >= near_threshold:
            return VERDICT_NEAR
        return VERDICT_DISTINCT

    def as_dict(self) -> dict:
        return {
            "field_a": self.field_a,
            "field_b": self.field_b,
            "rows": self.rows,
            "both_blank": self.both_blank,
            "one_blank": self.one_blank,
            "both_present": self.both_present,
            "exact_match": self.exact_match,
            "normalized_match": self.normalized_match,
            "rate_both_present": self.rate_both_present,
            "rate_nonblank": self.rate_nonblank,
            "normalized_rate": self.normalized_rate,
            "verdict": self.verdict(),
        }


class PairCollector(RowConsumer):
    """Streams any number of column pairs through match counting.

    An optional normalizer per pair feeds the normalized match count;
    exact matches count as normalized matches without calling it, which
    both saves time and guarantees exact <= normalized.
    """

    def __init__(
        self,
        pairs: list[tuple[str, str, Callable[[str], str] | None]],
        *,
        classifier: MissingClassifier = DEFAULT_CLASSIFIER,
        emit=None,
    ):
        self._specs = pairs
        self._classifier = classifier
        self._emit = emit
        self.stats: list[PairMatchStats] = []

    def start(self, table: RawTable) -> None:
        self._cols = []
        for a, b, norm in self._specs:
            ia = table.column_index(a)
            ib = table.column_index(b)
            if ia is None or ib is None:
                raise ValueError(f"pair check: {a!r}/{b!r} not in header")
            # counters: rows, both_blank, one_blank, both_present, exact, normalized
            self._cols.append([a, b, ia, ib, norm, [0, 0, 0, 0, 0, 0]])

    def consume(self, ordinal: int, row: list[str]) -> None:
        suspect = self._classifier.suspect_first
        kind_of = self._classifier.kind_of
        for spec in self._cols:
            va = row[spec[2]]
            vb = row[spec[3]]
            c = spec[5]
            c[0] += 1
            a_blank = not va or (va[0] in suspect and kind_of(va) is not None)
            b_blank = not vb or (vb[0] in suspect and kind_of(vb) is not None)
            if a_blank:
                if b_blank:
                    c[1] += 1
                else:
                    c[2] += 1
                continue
            if b_blank:
                c[2] += 1
                continue
            c[3] += 1
            if va == vb:
                c[4] += 1
                c[5] += 1
            else:
                norm = spec[4]
                if norm is not None and norm(va) == norm(vb):
                    c[5] += 1

    def finish(self) -> list[PairMatchStats]:
        out = []
        for a, b, _ia, _ib, _norm, c in self._cols:
            stats = PairMatchStats(a, b, c[0], c[1], c[2], c[3], c[4], c[5])
            out.append(stats)
            if self._emit is not None:
                verdict = stats.verdict()
                if verdict in (VERDICT_DUPLICATE, VERDICT_NEAR):
                    rate = stats.rate_both_present
                    self._emit(make_finding(
                        "redundant_pair",
                        f"{a!r} and {b!r} match on {100.0 * rate:.2f}% of co-present rows ({verdict})",
                        fields=(a, b),
                        measured=Measurement(round(rate, 6), "match_rate"),
                    ))
        self.stats = out
        return out


def pair_match(
    values_a: Iterable[str],
    values_b: Iterable[str],
    *,
    field_a: str = "a",
    field_b: str = "b",
    normalizer: Callable[[str], str] | None = None,
    classifier: MissingClassifier = DEFAULT_CLASSIFIER,
) -> PairMatchStats:
    """Match statistics for two materialized, aligned value sequences."""
    collector = PairCollector([(field_a, field_b, normalizer)], classifier=classifier)
    collector._cols = [[field_a, field_b, 0, 1, normalizer, [0, 0, 0, 0, 0, 0]]]
    for ordinal, (va, vb) in enumerate(zip(values_a, values_b), start=1):
        collector.consume(ordinal, [va, vb])
    return collector.finish()[0]


_PLACEHOLDER_RE = re.compile(r"\{[ab]\}")


@dataclass
class ConcatStats:
    target: str
    source_a: str
    source_b: str
    template: str
    rows_considered: int = 0
    matches: int = 0

    @property
    def rate(self) -> float | None:
        return None if self.rows_considered == 0 else self.matches / self.rows_considered

    def as_dict(self) -> dict:
        return {
            "target": self.target,
            "source_a": self.source_a,
            "source_b": self.source_b,
            "template": self.template,
            "rows_considered": self.rows_considered,
            "matches": self.matches,
            "rate": self.rate,
        }


def _validate_template(template: str) -> None:
    found = sorted(_PLACEHOLDER_RE.findall(template))
    if found != ["{a}", "{b}"]:
        raise ConfigError(
            f"concatenation template {template!r} must use each of {{a}} and {{b}} exactly once"
        )


class ConcatChecker(RowConsumer):
    """Tests whether a column is a template rendering of two others."""

    def __init__(
        self,
        target: str,
        source_a: str,
        source_b: str,
        template: str = "({a}, {b})",
        *,
        classifier: MissingClassifier = DEFAULT_CLASSIFIER,
    ):
        _validate_template(template)
        self.stats = ConcatStats(target, source_a, source_b, template)
        self._classifier = classifier
        self._prefix, rest = template.split("{a}", 1)
        self._middle, self._suffix = rest.split("{b}", 1)

    def start(self, table: RawTable) -> None:
        it = table.column_index(self.stats.target)
        ia = table.column_index(self.stats.source_a)
        ib = table.column_index(self.stats.source_b)
        if it is None or ia is None or ib is None:
            raise ValueError(
                f"concatenation check: {self.stats.target!r}, {self.stats.source_a!r}, "
                f"{self.stats.source_b!r} must all be in the header"
            )
        self._it, self._ia, self._ib = it, ia, ib

    def consume(self, ordinal: int, row: list[str]) -> None:
        vt = row[self._it]
        va = row[self._ia]
        vb = row[self._ib]
        kind_of = self._classifier.kind_of
        if kind_of(vt) is not None or kind_of(va) is not None or kind_of(vb) is not None:
            return
        s = self.stats
        s.rows_considered += 1
        if vt == f"{self._prefix}{va}{self._middle}{vb}{self._suffix}":
            s.matches += 1

    def finish(self) -> ConcatStats:
        return self.stats


def detect_concatenation(
    target_values: Iterable[str],
    values_a: Iterable[str],
    values_b: Iterable[str],
    template: str = "({a}, {b})",
    *,
    classifier: MissingClassifier = DEFAULT_CLASSIFIER,
) -> ConcatStats:
    """Materialized-sequence variant of ConcatChecker."""
    checker = ConcatChecker("target", "a", "b", template, classifier=classifier)
    checker._it, checker._ia, checker._ib = 0, 1, 2
    for ordinal, (vt, va, vb) in enumerate(zip(target_values, values_a, values_b), start=1):
        checker.consume(ordinal, [vt, va, vb])
    return checker.finish()


# street suffix abbreviations seen in the wild, expanded to full words
DEFAULT_SUFFIXES: dict[str, str] = {
    "PL": "PLACE",
    "AVE": "AVENUE",
    "ST": "STREET",
    "RD": "ROAD",
    "BLVD": "BOULEVARD",
    "DR": "DRIVE",
    "CT": "COURT",
    "LN": "LANE",
    "PKWY": "PARKWAY",
}

DEFAULT_ORDINAL_WORDS: dict[str, str] = {
    "FIRST": "1", "SECOND": "2", "THIRD": "3", "FOURTH": "4", "FIFTH": "5",
    "SIXTH": "6", "SEVENTH": "7", "EIGHTH": "8", "NINTH": "9", "TENTH": "10",
    "ELEVENTH": "11", "TWELFTH": "12", "THIRTEENTH": "13", "FOURTEENTH": "14",
    "FIFTEENTH": "15", "SIXTEENTH": "16", "SEVENTEENTH": "17",
    "EIGHTEENTH": "18", "NINETEENTH": "19", "TWENTIETH": "20",
}

_NUMERIC_ORDINAL_RE = re.compile(r"([0-9]+)(?:ST|ND|RD|TH)")


class StreetNormalizer:
    """Canonicalizes street spellings: case, spacing, suffixes, ordinals.

    The transform is a fixed point: expansions are never abbreviations,
    ordinal words become digits, digits stay digits, so applying it twice
    equals applying it once.
    """

    def __init__(
        self,
        suffixes: Mapping[str, str] | None = None,
        ordinal_words: Mapping[str, str] | None = None,
    ):
        self._suffixes = dict(DEFAULT_SUFFIXES if suffixes is None else suffixes)
        self._ordinals = dict(DEFAULT_ORDINAL_WORDS if ordinal_words is None else ordinal_words)
        for table in (self._suffixes, self._ordinals):
            for key, value in table.items():
                up = value.upper()
                if up in self._suffixes or up in self._ordinals or _NUMERIC_ORDINAL_RE.fullmatch(up):
                    raise ConfigError(f"normalization {key!r} -> {value!r} is not idempotent")

    def __call__(self, raw: str) -> str:
        out = []
        for token in raw.upper().split():
            m = _NUMERIC_ORDINAL_RE.fullmatch(token)
            if m is not None:
                out.append(m.group(1))
                continue
            replaced = self._suffixes.get(token)
            if replaced is not None:
                out.append(replaced)
                continue
            replaced = self._ordinals.get(token)
            out.append(replaced if replaced is not None else token)
        return " ".join(out)


normalize_street = StreetNormalizer()


@dataclass(frozen=True)
class NormalizationGain:
    field_a: str
    field_b: str
    both_present: int
    raw_rate: float | None
    normalized_rate: float | None

    @property
    def gain(self) -> float | None:
        if self.raw_rate is None or self.normalized_rate is None:
            return None
        return self.normalized_rate - self.raw_rate


def measure_normalization_gain(
    values_a: Iterable[str],
    values_b: Iterable[str],
    normalizer: Callable[[str], str] = normalize_street,
    *,
    field_a: str = "a",
    field_b: str = "b",
    classifier: MissingClassifier = DEFAULT_CLASSIFIER,
) -> NormalizationGain:
    """How much closer normalization brings two street columns."""
    stats = pair_match(
        values_a, values_b,
        field_a=field_a, field_b=field_b,
        normalizer=normalizer, classifier=classifier,
    )
    return NormalizationGain(
        field_a, field_b, stats.both_present, stats.rate_both_present, stats.normalized_rate,
    )


@dataclass
class FDResult:
    determinant: str
    dependent: str
    holds: bool = True
    mapping_size: int = 0
    rows_checked: int = 0
    violations: int = 0
    examples: list[tuple[str, str, str]] = dc_field(default_factory=list)

    EXAMPLE_CAP = 10

    def as_dict(self) -> dict:
        return {
            "determinant": self.determinant,
            "dependent": self.dependent,
            "holds": self.holds,
            "mapping_size": self.mapping_size,
            "rows_checked": self.rows_checked,
            "violations": self.violations,
            "examples": [list(e) for e in self.examples],
        }


class FDChecker(RowConsumer):
    """Checks determinant -> dependent over co-present rows."""

    def __init__(
        self,
        determinant: str,
        dependent: str,
        *,
        classifier: MissingClassifier = DEFAULT_CLASSIFIER,
    ):
        self.result = FDResult(determinant, dependent)
        self._classifier = classifier
        self._mapping: dict[str, str] = {}

    def start(self, table: RawTable) -> None:
        ia = table.column_index(self.result.determinant)
        ib = table.column_index(self.result.dependent)
        if ia is None or ib is None:
            raise ValueError(
                f"dependency check: {self.result.determinant!r}/{self.result.dependent!r} not in header"
            )
        self._ia, self._ib = ia, ib

    def consume(self, ordinal: int, row: list[str]) -> None:
        va = row[self._ia]
        vb = row[self._ib]
        kind_of = self._classifier.kind_of
        if kind_of(va) is not None or kind_of(vb) is not None:
            return
        res = self.result
        res.rows_checked += 1
        expected = self._mapping.get(va)
        if expected is None:
            self._mapping[va] = vb
        elif expected != vb:
            res.violations += 1
            res.holds = False
            if len(res.examples) < FDResult.EXAMPLE_CAP:
                res.examples.append((va, expected, vb))

    def finish(self) -> FDResult:
        self.result.mapping_size = len(self._mapping)
        return self.result


def functional_dependency(
    values_a: Iterable[str],
    values_b: Iterable[str],
    *,
    determinant: str = "a",
    dependent: str = "b",
    classifier: MissingClassifier = DEFAULT_CLASSIFIER,
) -> FDResult:
    """Materialized-sequence variant of FDChecker."""
    checker = FDChecker(determinant, dependent, classifier=classifier)
    checker._ia, checker._ib = 0, 1
    for ordinal, (va, vb) in enumerate(zip(values_a, values_b), start=1):
        checker.consume(ordinal, [va, vb])
    return checker.finish()
