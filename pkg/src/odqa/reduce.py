"""Storage reduction: plan, apply, reconstruct.

A plan is an ordered list of drop / segregate / encode actions built
from profiles and pair statistics, with per-action byte estimates and a
lossless/lossy label; lossy drops must be acknowledged in config by
field name or planning fails. Applying a plan is one streaming pass that
writes the reduced main file plus sidecars (sparse columns keyed by the
unique key) and dictionary files (encoded columns), all with
deterministic bytes. Reconstruction inverts a lossless plan for
verification.
"""

from __future__ import annotations

import csv
import json
import logging
from dataclasses import dataclass, field as dc_field
from pathlib import Path
from typing import Iterable, Sequence

from .errors import PlanError
from .findings import Measurement, make_finding
from .ingest import DEFAULT_CLASSIFIER, MissingClassifier, RawTable, _LineFeed, open_table
from .profiling import ColumnProfile
from .redundancy import ConcatStats, PairMatchStats

log = logging.getLogger(__name__)

DEFAULT_SPARSE_THRESHOLD = 99.0
DEFAULT_ENCODE_CAP = 100_000

PLAN_SCHEMA_VERSION = 1


class EncodeCapExceeded(PlanError):
    pass


def code_width_for(entry_count: int) -> int:
    """Digits needed for zero-based codes; at least 1 even for 0 or 1 entries."""
    if entry_count <= 1:
        return 1
    return len(str(entry_count - 1))


@dataclass(frozen=True)
class ValueDictionary:
    """Code table for one encoded column, codes in first-appearance order."""

    field: str
    entries: tuple[str, ...]

    @property
    def code_width(self) -> int:
        return code_width_for(len(self.entries))

    def codes(self) -> dict[str, str]:
        width = self.code_width
        return {v: str(i).zfill(width) for i, v in enumerate(self.entries)}

    def write_csv(self, path: str | Path) -> None:
        with open(path, "w", newline="", encoding="utf-8") as fh:
            w = csv.writer(fh, lineterminator="\n")
            w.writerow(["code", "value"])
            width = self.code_width
            for i, v in enumerate(self.entries):
                w.writerow([str(i).zfill(width), v])

    @classmethod
    def read_csv(cls, field: str, path: str | Path) -> "ValueDictionary":
        with open(path, newline="", encoding="utf-8") as fh:
            reader = csv.reader(fh)
            header = next(reader, None)
            if header != ["code", "value"]:
                raise PlanError(f"{path}: expected header code,value")
            entries = []
            for i, row in enumerate(reader):
                if len(row) != 2 or int(row[0]) != i:
                    raise PlanError(f"{path}: malformed entry at position {i}")
                entries.append(row[1])
        return cls(field, tuple(entries))


def encode_column(
    values: Iterable[str],
    *,
    field: str = "value",
    cap: int = DEFAULT_ENCODE_CAP,
    classifier: MissingClassifier = DEFAULT_CLASSIFIER,
) -> tuple[ValueDictionary, list[str]]:
    """Dictionary-encode a materialized column.

    Present values map to zero-padded decimal codes in first-appearance
    order; missing values encode as empty cells. Exceeding the cap raises
    EncodeCapExceeded so callers can leave the column as text.
    """
    mapping: dict[str, int] = {}
    out: list[str] = []
    kind_of = classifier.kind_of
    raw_codes: list[int | None] = []
    for v in values:
        if not v or kind_of(v) is not None:
            raw_codes.append(None)
            continue
        code = mapping.get(v)
        if code is None:
            code = len(mapping)
            if code >= cap:
                raise EncodeCapExceeded(f"{field!r}: more than {cap} distinct values")
            mapping[v] = code
        raw_codes.append(code)
    vd = ValueDictionary(field, tuple(mapping))
    width = vd.code_width
    for code in raw_codes:
        out.append("" if code is None else str(code).zfill(width))
    return vd, out


ACTION_KINDS = ("drop", "segregate", "encode")


@dataclass
class PlanAction:
    kind: str
    field: str
    reason: str
    lossless: bool
    estimated_bytes_saved: int
    details: dict = dc_field(default_factory=dict)
    measured_bytes_saved: int | None = None

    def as_dict(self) -> dict:
        out = {
            "kind": self.kind,
            "field": self.field,
            "reason": self.reason,
            "lossless": self.lossless,
            "estimated_bytes_saved": self.estimated_bytes_saved,
            "details": self.details,
        }
        if self.measured_bytes_saved is not None:
            out["measured_bytes_saved"] = self.measured_bytes_saved
        return out


@dataclass
class ReductionPlan:
    baseline_bytes: int
    row_count: int
    headers: list[str]               # original column order, normalized names
    actions: list[PlanAction]
    notes: list[str] = dc_field(default_factory=list)
    raw_headers: list[str] | None = None   # as they appeared in the source file

    @property
    def estimated_total_saved(self) -> int:
        return sum(a.estimated_bytes_saved for a in self.actions)

    @property
    def estimated_pct(self) -> float:
        if self.baseline_bytes == 0:
            return 0.0
        return 100.0 * self.estimated_total_saved / self.baseline_bytes

    def actions_of(self, kind: str) -> list[PlanAction]:
        return [a for a in self.actions if a.kind == kind]

    def as_dict(self) -> dict:
        return {
            "schema_version": PLAN_SCHEMA_VERSION,
            "baseline_bytes": self.baseline_bytes,
            "row_count": self.row_count,
            "headers": list(self.headers),
            "raw_headers": None if self.raw_headers is None else list(self.raw_headers),
            "actions": [a.as_dict() for a in self.actions],
            "estimated_total_saved": self.estimated_total_saved,
            "estimated_pct": round(self.estimated_pct, 4),
            "notes": list(self.notes),
        }

    def write_json(self, path: str | Path) -> None:
        with open(path, "w", encoding="utf-8") as fh:
            json.dump(self.as_dict(), fh, indent=2, sort_keys=True, ensure_ascii=False)
            fh.write("\n")

    @classmethod
    def read_json(cls, path: str | Path) -> "ReductionPlan":
        with open(path, encoding="utf-8") as fh:
            data = json.load(fh)
        try:
            actions = [
                PlanAction(
                    kind=a["kind"],
                    field=a["field"],
                    reason=a["reason"],
                    lossless=a["lossless"],
                    estimated_bytes_saved=a["estimated_bytes_saved"],
                    details=a.get("details", {}),
                    measured_bytes_saved=a.get("measured_bytes_saved"),
                )
                for a in data["actions"]
            ]
            plan = cls(
                baseline_bytes=data["baseline_bytes"],
                row_count=data["row_count"],
                headers=list(data["headers"]),
                actions=actions,
                notes=list(data.get("notes", [])),
                raw_headers=(
                    None if data.get("raw_headers") is None else list(data["raw_headers"])
                ),
            )
        except (KeyError, TypeError) as exc:
            raise PlanError(f"{path}: malformed plan ({exc})") from exc
        _validate_plan(plan)
        return plan


@dataclass
class PlanPolicy:
    sparse_threshold: float = DEFAULT_SPARSE_THRESHOLD
    encode_cap: int = DEFAULT_ENCODE_CAP
    encode_fields: Sequence[str] = ()
    drop_fields: Sequence[str] = ()           # explicit extra drops
    segregate_fields: Sequence[str] | None = None  # None = auto by sparsity
    allow_lossy: Sequence[str] = ()
    auto_drop_duplicates: bool = True
    drop_concat_targets: bool = True
    protected_fields: Sequence[str] = ()


def _column_footprint(profile: ColumnProfile, row_count: int) -> int:
    # cell text plus one separator per row plus the header cell and its separator
    return profile.raw_chars + row_count + len(profile.field) + 1


def _validate_plan(plan: ReductionPlan) -> None:
    header_set = set(plan.headers)
    removed: set[str] = set()
    encoded: set[str] = set()
    for action in plan.actions:
        if action.kind not in ACTION_KINDS:
            raise PlanError(f"unknown action kind {action.kind!r}")
        f = action.field
        if f not in header_set:
            raise PlanError(f"plan references unknown field {f!r}")
        if action.kind in ("drop", "segregate"):
            if f in removed:
                raise PlanError(f"field {f!r} targeted by more than one drop/segregate")
            if f in encoded:
                raise PlanError(f"field {f!r} is both encoded and removed")
            removed.add(f)
        else:
            if f in removed:
                raise PlanError(f"field {f!r} is both encoded and removed")
            if f in encoded:
                raise PlanError(f"field {f!r} encoded twice")
            encoded.add(f)


def build_plan(
    profiles: Sequence[ColumnProfile],
    pair_stats: Sequence[PairMatchStats],
    policy: PlanPolicy = PlanPolicy(),
    *,
    baseline_bytes: int,
    row_count: int,
    key_field: str | None = None,
    concat_stats: Sequence[ConcatStats] = (),
    raw_headers: Sequence[str] | None = None,
    emit=None,
) -> ReductionPlan:
    """Assemble a reduction plan from completed pass statistics.

    Drop candidates come from pair statistics (perfect co-present match
    with equal blank masks reads as lossless; config may force others as
    acknowledged lossy drops), plus concatenation targets that match
    their template on every considered row. Segregation targets are the
    mostly-blank columns at or past the sparse threshold. Encode actions
    cover the requested fields when their distinct count fits the cap and
    the value text is wider than the code; refusals are findings, not
    errors. Conflicting instructions and unacknowledged lossy drops
    raise PlanError.
    """
    sink = emit if emit is not None else (lambda f: None)
    by_field = {p.field: p for p in profiles}
    headers = [p.field for p in profiles]
    protected = set(policy.protected_fields)
    if key_field:
        protected.add(key_field)

    def profile_of(name: str, why: str) -> ColumnProfile:
        prof = by_field.get(name)
        if prof is None:
            raise PlanError(f"{why}: unknown field {name!r}")
        return prof

    actions: list[PlanAction] = []
    notes: list[str] = []
    planned_remove: set[str] = set()

    def add_drop(field: str, reason: str, lossless: bool, details: dict) -> None:
        if field in protected:
            raise PlanError(f"refusing to drop protected field {field!r}")
        if field in planned_remove:
            return
        if not lossless and field not in policy.allow_lossy:
            raise PlanError(
                f"drop of {field!r} is lossy; add it to allow_lossy to acknowledge"
            )
        prof = profile_of(field, "drop")
        actions.append(PlanAction(
            kind="drop",
            field=field,
            reason=reason,
            lossless=lossless,
            estimated_bytes_saved=_column_footprint(prof, row_count),
            details=details,
        ))
        planned_remove.add(field)

    if policy.auto_drop_duplicates:
        for stats in pair_stats:
            if stats.rate_both_present == 1.0 and stats.blank_masks_equal:
                add_drop(
                    stats.field_b,
                    f"byte-identical to {stats.field_a!r} on every row",
                    True,
                    {"duplicate_of": stats.field_a},
                )

    if policy.drop_concat_targets:
        for stats in concat_stats:
            if stats.rate == 1.0:
                add_drop(
                    stats.target,
                    f"rebuildable from {stats.source_a!r} and {stats.source_b!r}",
                    True,
                    {
                        "concat_of": [stats.source_a, stats.source_b],
                        "template": stats.template,
                    },
                )

    for field in policy.drop_fields:
        if field in planned_remove:
            continue
        lossless = False
        details: dict = {}
        for stats in pair_stats:
            if stats.field_b == field and stats.rate_both_present == 1.0 and stats.blank_masks_equal:
                lossless = True
                details = {"duplicate_of": stats.field_a}
                break
        add_drop(field, "requested in config", lossless, details)

    if policy.segregate_fields is None:
        segregate = [
            p.field for p in profiles
            if p.blank_pct >= policy.sparse_threshold and p.field not in planned_remove
            and p.field not in protected and p.total > 0
        ]
    else:
        segregate = [f for f in policy.segregate_fields if f not in planned_remove]
    for field in segregate:
        if field in protected:
            raise PlanError(f"refusing to segregate protected field {field!r}")
        prof = profile_of(field, "segregate")
        key_chars = 0
        if key_field:
            key_prof = by_field.get(key_field)
            if key_prof is not None and key_prof.present:
                # sidecar key bytes scale with this column's present share
                key_chars = round(key_prof.raw_chars * prof.present / max(key_prof.present, 1))
        sidecar_est = prof.raw_chars + key_chars + prof.present + len(prof.field) + 12
        actions.append(PlanAction(
            kind="segregate",
            field=field,
            reason=f"{prof.blank_pct:.1f}% blank; present rows move to a sidecar",
            lossless=True,
            estimated_bytes_saved=_column_footprint(prof, row_count),
            details={"blank_pct": round(prof.blank_pct, 4), "estimated_sidecar_bytes": sidecar_est},
        ))
        planned_remove.add(field)

    for field in policy.encode_fields:
        if field in protected:
            raise PlanError(f"refusing to encode protected field {field!r}")
        if field in planned_remove:
            raise PlanError(f"field {field!r} is both encoded and removed")
        prof = profile_of(field, "encode")
        if prof.approximate or prof.distinct > policy.encode_cap:
            sink(make_finding(
                "encode_refused",
                f"{field!r} has {'at least ' if prof.approximate else ''}{prof.distinct} "
                f"distinct values (cap {policy.encode_cap}); left as text",
                fields=(field,),
                measured=Measurement(prof.distinct, "distinct"),
            ))
            continue
        width = code_width_for(prof.distinct)
        if prof.present == 0 or prof.raw_chars <= prof.present * width:
            sink(make_finding(
                "encode_refused",
                f"{field!r} values are not wider than a {width}-digit code; encoding would not save bytes",
                fields=(field,),
                measured=Measurement(width, "code_width"),
            ))
            continue
        dict_est = prof.raw_chars // max(prof.present, 1) * prof.distinct + prof.distinct * (width + 2) + 11
        actions.append(PlanAction(
            kind="encode",
            field=field,
            reason=f"{prof.distinct} distinct values fit {width}-digit codes",
            lossless=True,
            estimated_bytes_saved=prof.raw_chars - prof.present * width,
            details={
                "distinct": prof.distinct,
                "code_width": width,
                "estimated_dictionary_bytes": dict_est,
            },
        ))

    order = {"drop": 0, "segregate": 1, "encode": 2}
    actions.sort(key=lambda a: (order[a.kind], a.field))
    if raw_headers is not None and len(raw_headers) != len(headers):
        raise PlanError("raw_headers length does not match the profiled columns")
    plan = ReductionPlan(
        baseline_bytes=baseline_bytes,
        row_count=row_count,
        headers=headers,
        actions=actions,
        notes=notes,
        raw_headers=None if raw_headers is None else list(raw_headers),
    )
    _validate_plan(plan)
    return plan


@dataclass
class ApplyResult:
    main_path: Path
    sidecar_paths: dict[str, Path]
    dictionary_paths: dict[str, Path]
    bytes_before: int
    bytes_after_main: int
    sidecar_bytes: int
    dictionary_bytes: int
    rows_written: int

    @property
    def measured_saved(self) -> int:
        return self.bytes_before - self.bytes_after_main

    @property
    def measured_pct(self) -> float:
        if self.bytes_before == 0:
            return 0.0
        return 100.0 * self.measured_saved / self.bytes_before

    def as_dict(self) -> dict:
        return {
            "main_path": str(self.main_path),
            "sidecar_paths": {f: str(p) for f, p in sorted(self.sidecar_paths.items())},
            "dictionary_paths": {f: str(p) for f, p in sorted(self.dictionary_paths.items())},
            "bytes_before": self.bytes_before,
            "bytes_after_main": self.bytes_after_main,
            "sidecar_bytes": self.sidecar_bytes,
            "dictionary_bytes": self.dictionary_bytes,
            "rows_written": self.rows_written,
            "measured_saved": self.measured_saved,
            "measured_pct": round(self.measured_pct, 4),
        }


def apply_plan(
    table: RawTable,
    plan: ReductionPlan,
    out_dir: str | Path,
    *,
    key_field: str | None = None,
    classifier: MissingClassifier = DEFAULT_CLASSIFIER,
    main_name: str = "reduced.csv",
) -> ApplyResult:
    """Execute a plan in one streaming pass.

    Output bytes depend only on input bytes and the plan: fixed LF line
    ends, minimal quoting, dictionary codes assigned in first-appearance
    order and padded to the width the plan recorded at profiling time.
    Per-action measured savings are filled into the plan actions as a
    side effect. Structural mismatches (plan fields missing from the
    table, segregation without a key, a code width the observed values
    no longer fit) abort, removing any partial outputs.
    """
    _validate_plan(plan)
    out = Path(out_dir)
    out.mkdir(parents=True, exist_ok=True)
    headers = table.headers
    index_of = {name: i for i, name in enumerate(headers)}
    for action in plan.actions:
        if action.field not in index_of:
            raise PlanError(f"plan references field {action.field!r} not present in the table")
    if plan.headers != headers:
        raise PlanError("plan header order does not match the table; rebuild the plan")

    drops = {a.field: a for a in plan.actions_of("drop")}
    segregates = {a.field: a for a in plan.actions_of("segregate")}
    encodes = {a.field: a for a in plan.actions_of("encode")}

    key_idx: int | None = None
    if segregates:
        if not key_field:
            raise PlanError("segregation requires a configured unique key field")
        key_idx = index_of.get(key_field)
        if key_idx is None:
            raise PlanError(f"unique key field {key_field!r} not present in the table")

    removed = set(drops) | set(segregates)
    kept = [name for name in headers if name not in removed]
    kept_idx = [index_of[name] for name in kept]
    kept_pos = {name: pos for pos, name in enumerate(kept)}

    # per-encode state: (position in output row, name, mapping, code cache, width)
    encoders = []
    for name, action in encodes.items():
        width = action.details.get("code_width") or 1
        encoders.append((kept_pos[name], name, {}, width, 10 ** width))

    removed_chars = {name: 0 for name in removed}
    encode_in_chars = {name: 0 for name in encodes}
    encode_out_chars = {name: 0 for name in encodes}
    drop_cols = [(index_of[name], name) for name in drops]

    main_path = out / main_name
    sidecar_paths = {name: out / f"{name}.sidecar.csv" for name in segregates}
    dict_paths = {name: out / f"{name}.dict.csv" for name in encodes}

    kind_of = classifier.kind_of
    rows_written = 0
    opened: list = []
    try:
        main_fh = open(main_path, "w", newline="", encoding="utf-8")
        opened.append(main_fh)
        main_writer = csv.writer(main_fh, lineterminator="\n")
        main_writer.writerow(kept)
        side_cols = []
        for name, p in sidecar_paths.items():
            fh = open(p, "w", newline="", encoding="utf-8")
            opened.append(fh)
            w = csv.writer(fh, lineterminator="\n")
            w.writerow(["unique_key", name])
            side_cols.append((index_of[name], name, w))

        with open(table.path, "rb") as fh:
            feed = _LineFeed(fh)
            reader = csv.reader(feed, strict=True)
            next(reader)  # header
            width = len(headers)
            for row in reader:
                if not row:
                    continue
                if len(row) != width:
                    raise PlanError(
                        f"row {rows_written + 1}: {len(row)} cells, expected {width}; "
                        f"audit and repair before reducing"
                    )
                for col_idx, name, writer in side_cols:
                    v = row[col_idx]
                    removed_chars[name] += len(v)
                    if v and kind_of(v) is None:
                        key = row[key_idx]
                        if not key or kind_of(key) is not None:
                            raise PlanError(
                                f"row {rows_written + 1}: blank {key_field!r} under segregation"
                            )
                        writer.writerow([key, v])
                for col_idx, name in drop_cols:
                    removed_chars[name] += len(row[col_idx])
                out_row = [row[i] for i in kept_idx]
                for pos, name, mapping, code_width, limit in encoders:
                    v = out_row[pos]
                    encode_in_chars[name] += len(v)
                    if not v or kind_of(v) is not None:
                        out_row[pos] = ""
                        continue
                    code = mapping.get(v)
                    if code is None:
                        n = len(mapping)
                        if n >= limit:
                            raise EncodeCapExceeded(
                                f"{name!r}: value {v!r} does not fit the planned "
                                f"{code_width}-digit code space; the file changed since planning"
                            )
                        code = str(n).zfill(code_width)
                        mapping[v] = code
                    out_row[pos] = code
                    encode_out_chars[name] += code_width
                main_writer.writerow(out_row)
                rows_written += 1

        for fh in opened:
            fh.close()
        opened.clear()

        for _pos, name, mapping, code_width, _limit in encoders:
            vd = ValueDictionary(name, tuple(mapping))
            if vd.code_width != code_width:
                raise PlanError(
                    f"{name!r}: observed {len(mapping)} distinct values need "
                    f"{vd.code_width}-digit codes but the plan assumed {code_width}; "
                    f"rebuild the plan"
                )
            vd.write_csv(dict_paths[name])
    except BaseException:
        for fh in opened:
            fh.close()
        for p in [main_path, *sidecar_paths.values(), *dict_paths.values()]:
            if p.exists():
                p.unlink()
        raise

    sidecar_bytes = sum(p.stat().st_size for p in sidecar_paths.values())
    dict_bytes = sum(p.stat().st_size for p in dict_paths.values())
    bytes_after = main_path.stat().st_size

    for action in plan.actions:
        name = action.field
        if action.kind in ("drop", "segregate"):
            action.measured_bytes_saved = (
                removed_chars[name] + rows_written + len(name) + 1
            )
        else:
            action.measured_bytes_saved = encode_in_chars[name] - encode_out_chars[name]

    return ApplyResult(
        main_path=main_path,
        sidecar_paths=sidecar_paths,
        dictionary_paths=dict_paths,
        bytes_before=table.byte_size,
        bytes_after_main=bytes_after,
        sidecar_bytes=sidecar_bytes,
        dictionary_bytes=dict_bytes,
        rows_written=rows_written,
    )


def reconstruct_table(
    plan: ReductionPlan,
    main_path: str | Path,
    out_path: str | Path,
    *,
    sidecar_paths: dict[str, str | Path],
    dictionary_paths: dict[str, str | Path],
    key_field: str,
) -> None:
    """Invert a lossless reduction for verification.

    Dropped duplicate columns are rebuilt from their source, concat
    targets from their template, segregated columns from sidecars,
    encoded columns from dictionaries. A plan containing a lossy drop
    cannot be reconstructed and raises PlanError.
    """
    plan_headers = plan.headers
    drops = plan.actions_of("drop")
    for action in drops:
        if "duplicate_of" not in action.details and "concat_of" not in action.details:
            raise PlanError(f"drop of {action.field!r} is not reconstructible")

    side_maps: dict[str, dict[str, str]] = {}
    for action in plan.actions_of("segregate"):
        name = action.field
        side_maps[name] = {}
        with open(sidecar_paths[name], newline="", encoding="utf-8") as fh:
            reader = csv.reader(fh)
            header = next(reader, None)
            if header != ["unique_key", name]:
                raise PlanError(f"sidecar for {name!r} has header {header}")
            for key, value in reader:
                side_maps[name][key] = value

    decoders: dict[str, tuple[str, ...]] = {}
    for action in plan.actions_of("encode"):
        vd = ValueDictionary.read_csv(action.field, dictionary_paths[action.field])
        decoders[action.field] = vd.entries

    with open(main_path, newline="", encoding="utf-8") as fh:
        reader = csv.reader(fh)
        kept = next(reader)
        kept_pos = {name: i for i, name in enumerate(kept)}
        if key_field not in kept_pos:
            raise PlanError(f"key field {key_field!r} missing from reduced file")
        drop_builders = []
        for action in drops:
            if "duplicate_of" in action.details:
                src = action.details["duplicate_of"]
                if src not in kept_pos:
                    raise PlanError(f"cannot rebuild {action.field!r}: source {src!r} was removed too")
                drop_builders.append((action.field, ("copy", kept_pos[src])))
            else:
                a, b = action.details["concat_of"]
                template = action.details["template"]
                prefix, rest = template.split("{a}", 1)
                middle, suffix = rest.split("{b}", 1)
                if a not in kept_pos or b not in kept_pos:
                    raise PlanError(f"cannot rebuild {action.field!r}: sources were removed")
                drop_builders.append(
                    (action.field, ("concat", kept_pos[a], kept_pos[b], prefix, middle, suffix))
                )
        builders = dict(drop_builders)

        with open(out_path, "w", newline="", encoding="utf-8") as out_fh:
            writer = csv.writer(out_fh, lineterminator="\n")
            writer.writerow(plan.raw_headers if plan.raw_headers is not None else plan_headers)
            for row in reader:
                key = row[kept_pos[key_field]]
                out_row = []
                for name in plan_headers:
                    pos = kept_pos.get(name)
                    if pos is not None:
                        v = row[pos]
                        entries = decoders.get(name)
                        if entries is not None and v:
                            out_row.append(entries[int(v)])
                        else:
                            out_row.append(v)
                        continue
                    side = side_maps.get(name)
                    if side is not None:
                        out_row.append(side.get(key, ""))
                        continue
                    builder = builders[name]
                    if builder[0] == "copy":
                        out_row.append(row[builder[1]])
                    else:
                        _, ia, ib, prefix, middle, suffix = builder
                        va, vb = row[ia], row[ib]
                        if va and vb:
                            out_row.append(f"{prefix}{va}{middle}{vb}{suffix}")
                        else:
                            out_row.append("")
                writer.writerow(out_row)
