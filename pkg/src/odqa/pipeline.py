"""End-to-end runs: wire consumers from config, stream once, report.

Each run_* function is one CLI subcommand. They all follow the same
shape: open the table, attach the consumers the config asks for, stream
the file exactly once, then fold consumer results and findings into an
AuditReport and write the requested renderings into out_dir.

Output filenames are fixed (report.json, report.md, profiles.csv,
pairs.csv, plan.json, apply_result.json) so downstream tooling can diff
runs without guessing.
"""

from __future__ import annotations

import json
import logging
from dataclasses import dataclass, field as dc_field
from pathlib import Path

from .config import AuditConfig
from .dictionary import (
    DataDictionary,
    TypeChecker,
    check_domains,
    detect_undocumented,
    drift_findings,
    load_dictionary,
)
from .domain_rules import (
    GeoBoundsChecker,
    PrecisionAuditor,
    ReferenceChecker,
    UniqueChecker,
    load_reference,
)
from .errors import ConfigError, PlanError
from .findings import Finding, FindingSink, apply_severity_overrides, make_finding
from .ingest import RawTable, RowConsumer, open_table, stream_rows
from .profiling import ProfileCollector, concentration, tier_table
from .redundancy import ConcatChecker, FDChecker, PairCollector
from .reduce import ApplyResult, ReductionPlan, apply_plan, build_plan
from .report import (
    EXIT_CLEAN,
    EXIT_FINDINGS,
    AuditReport,
    file_sha256,
    render_json,
    render_markdown_file,
    render_pairs_csv,
    render_profiles_csv,
)
from .temporal import DurationAuditor

log = logging.getLogger(__name__)

REPORT_JSON = "report.json"
REPORT_MD = "report.md"
PROFILES_CSV = "profiles.csv"
PAIRS_CSV = "pairs.csv"
PLAN_JSON = "plan.json"
APPLY_JSON = "apply_result.json"


@dataclass
class RunResult:
    report: AuditReport
    sink: FindingSink
    exit_status: int
    profiles: list = dc_field(default_factory=list)
    pair_stats: list = dc_field(default_factory=list)
    plan: ReductionPlan | None = None
    apply_result: ApplyResult | None = None
    output_paths: dict[str, Path] = dc_field(default_factory=dict)


def _require_input(cfg: AuditConfig) -> Path:
    if cfg.input_path is None:
        raise ConfigError("no input file configured (set `input` in the config)")
    if not cfg.input_path.is_file():
        raise ConfigError(f"input file not found: {cfg.input_path}")
    return cfg.input_path


def _require_columns(table: RawTable, wanted: dict[str, str]) -> None:
    """wanted maps field name -> the config knob that asked for it."""
    missing = {name: why for name, why in wanted.items() if table.column_index(name) is None}
    if missing:
        parts = ", ".join(f"{name!r} (from {why})" for name, why in sorted(missing.items()))
        raise ConfigError(f"configured column(s) not in the header: {parts}")


def _load_domain_references(
    dictionary: DataDictionary | None, emit
) -> dict[str, frozenset[str]]:
    """Load domain_ref files named by the dictionary, relative to it.

    An unreadable reference file degrades to a finding and skips that
    one field's domain check; the rest of the audit proceeds.
    """
    refs: dict[str, frozenset[str]] = {}
    if dictionary is None or dictionary.source_path is None:
        return refs
    base = Path(dictionary.source_path).parent
    for desc in dictionary.fields:
        if desc.domain_ref is None:
            continue
        path = Path(desc.domain_ref)
        if not path.is_absolute():
            path = base / path
        try:
            refs[desc.name] = load_reference(path)
        except ConfigError as exc:
            emit(make_finding(
                "reference_unreadable",
                f"domain reference for {desc.name!r} could not be loaded: {exc}",
                fields=(desc.name,),
            ))
    return refs


def _make_emit(sink: FindingSink, cfg: AuditConfig):
    overrides = cfg.severity_overrides
    if not overrides:
        return sink.emit

    def emit(finding: Finding) -> None:
        sink.emit(apply_severity_overrides(finding, overrides))

    return emit


@dataclass
class _Wiring:
    consumers: list[RowConsumer] = dc_field(default_factory=list)
    profiler: ProfileCollector | None = None
    durations: DurationAuditor | None = None
    type_checker: TypeChecker | None = None
    references: dict[str, ReferenceChecker] = dc_field(default_factory=dict)
    geo: GeoBoundsChecker | None = None
    uniques: list[UniqueChecker] = dc_field(default_factory=list)
    precision: PrecisionAuditor | None = None
    pairs: PairCollector | None = None
    concats: list[ConcatChecker] = dc_field(default_factory=list)
    fds: list[FDChecker] = dc_field(default_factory=list)


def _wire(
    cfg: AuditConfig,
    table: RawTable,
    dictionary: DataDictionary | None,
    emit,
    *,
    temporal: bool = True,
    domain: bool = True,
    redundancy: bool = True,
    types: bool = True,
) -> _Wiring:
    w = _Wiring()
    classifier = cfg.classifier()
    fm = cfg.field_map
    wanted: dict[str, str] = {}

    w.profiler = ProfileCollector(
        classifier=classifier,
        distinct_cap=cfg.distinct_cap,
        sketch_capacity=cfg.sketch_capacity,
        top_k=cfg.top_k,
        agency_field=fm.agency,
        emit=emit,
    )
    w.consumers.append(w.profiler)

    if types and dictionary is not None:
        w.type_checker = TypeChecker(
            dictionary,
            parser=cfg.timestamp_parser(),
            classifier=classifier,
            emit=emit,
            key_index=table.column_index(fm.key) if fm.key else None,
        )
        w.consumers.append(w.type_checker)

    if temporal and fm.created and fm.closed:
        wanted[fm.created] = "fields.created"
        wanted[fm.closed] = "fields.closed"
        if fm.updated:
            wanted[fm.updated] = "fields.updated"
        w.durations = DurationAuditor(
            created_field=fm.created,
            closed_field=fm.closed,
            updated_field=fm.updated,
            key_field=fm.key,
            agency_field=fm.agency,
            parser=cfg.timestamp_parser(),
            rules=cfg.temporal,
            classifier=classifier,
            emit=emit,
        )
        w.consumers.append(w.durations)

    if domain:
        for field_name, ref_path in sorted(cfg.references.items()):
            wanted[field_name] = "references"
            checker = ReferenceChecker(
                field_name,
                load_reference(ref_path),
                classifier=classifier,
                key_field=fm.key,
                agency_field=fm.agency,
                emit=emit,
            )
            w.references[field_name] = checker
            w.consumers.append(checker)

        if cfg.geo_bounds is not None:
            if not (fm.latitude and fm.longitude):
                raise ConfigError(
                    "geo bounds configured but fields.latitude/longitude are not mapped"
                )
            wanted[fm.latitude] = "fields.latitude"
            wanted[fm.longitude] = "fields.longitude"
            w.geo = GeoBoundsChecker(
                fm.latitude,
                fm.longitude,
                cfg.geo_bounds,
                classifier=classifier,
                key_field=fm.key,
                agency_field=fm.agency,
                emit=emit,
            )
            w.consumers.append(w.geo)

        for spec in cfg.unique:
            wanted[spec.field] = "unique"
            checker = UniqueChecker(
                spec.field, required=spec.required, classifier=classifier, emit=emit,
            )
            w.uniques.append(checker)
            w.consumers.append(checker)

        if cfg.precision_fields:
            for f in cfg.precision_fields:
                wanted[f] = "precision.fields"
            w.precision = PrecisionAuditor(
                list(cfg.precision_fields), cfg.max_decimals,
                classifier=classifier, emit=emit,
            )
            w.consumers.append(w.precision)

    if redundancy:
        if cfg.pairs:
            street = cfg.street_normalizer()
            specs = []
            for p in cfg.pairs:
                wanted[p.field_a] = "pairs"
                wanted[p.field_b] = "pairs"
                specs.append((p.field_a, p.field_b, street if p.normalizer == "street" else None))
            w.pairs = PairCollector(specs, classifier=classifier, emit=emit)
            w.consumers.append(w.pairs)
        for c in cfg.concat:
            wanted[c.target] = "concat"
            wanted[c.source_a] = "concat"
            wanted[c.source_b] = "concat"
            checker = ConcatChecker(
                c.target, c.source_a, c.source_b, c.template, classifier=classifier,
            )
            w.concats.append(checker)
            w.consumers.append(checker)
        for det, dep in cfg.fd:
            wanted[det] = "fd"
            wanted[dep] = "fd"
            checker = FDChecker(det, dep, classifier=classifier)
            w.fds.append(checker)
            w.consumers.append(checker)

    if fm.key:
        wanted[fm.key] = "fields.key"
    if fm.agency:
        wanted[fm.agency] = "fields.agency"
    _require_columns(table, wanted)
    return w


def _concentration_section(cfg: AuditConfig, profiles) -> list[dict]:
    out = []
    by_field = {p.field: p for p in profiles}
    for field_name in sorted(cfg.concentration):
        k = cfg.concentration[field_name]
        prof = by_field.get(field_name)
        if prof is None:
            raise ConfigError(f"concentration: field {field_name!r} not in the header")
        if prof.exact_counts is None:
            out.append({
                "field": field_name, "k": k, "top_k_share": None,
                "cumulative": [], "approximate": True,
            })
            continue
        res = concentration(field_name, list(prof.exact_counts.items()), k)
        out.append({
            "field": field_name,
            "k": res.k,
            "top_k_share": round(res.top_k_share, 6),
            "cumulative": [round(c, 6) for c in res.cumulative],
            "approximate": False,
        })
    return out


def _domain_section(w: _Wiring) -> dict:
    section: dict = {}
    refs = []
    for field_name in sorted(w.references):
        res = w.references[field_name].result
        refs.append({
            "field": res.field,
            "checked": res.checked,
            "invalid": res.invalid,
            "invalid_rate": res.invalid_rate,
            "top_invalid": [[v, n] for v, n in res.top_invalid()],
            "by_agency_invalid": dict(sorted(res.by_agency_invalid.items())),
        })
    if refs:
        section["references"] = refs
    if w.geo is not None:
        g = w.geo.result
        section["geo"] = {
            "pairs_checked": g.pairs_checked,
            "out_of_bounds": g.out_of_bounds,
            "unparsed": g.unparsed,
        }
    uniques = []
    for checker in w.uniques:
        res = checker.result
        uniques.append({
            "field": res.field,
            "total_present": res.total_present,
            "missing": res.missing,
            "duplicate_values": res.duplicate_values,
            "duplicate_rows": res.duplicate_rows,
        })
    if uniques:
        section["unique"] = uniques
    if w.precision is not None:
        section["precision"] = [
            {
                "field": res.field,
                "max_decimals": w.precision.max_decimals,
                "flagged": res.flagged,
                "non_decimal": res.non_decimal,
                "max_decimals_seen": res.max_decimals_seen,
                "histogram": {str(k): v for k, v in sorted(res.histogram.items())},
            }
            for res in (w.precision.results[f] for f in w.precision.fields)
        ]
    return section


def _redundancy_section(w: _Wiring, cfg: AuditConfig) -> dict:
    section: dict = {}
    if w.pairs is not None:
        pairs = []
        for stats in w.pairs.stats:
            d = stats.as_dict()
            d["verdict"] = stats.verdict(cfg.near_duplicate_threshold)
            pairs.append(d)
        section["pairs"] = pairs
    if w.concats:
        section["concat"] = [c.stats.as_dict() for c in w.concats]
    if w.fds:
        section["fd"] = [c.result.as_dict() for c in w.fds]
    return section


def _dictionary_section(field_drift, domain_drift, type_checker: TypeChecker | None) -> dict:
    section = {
        "undocumented_fields": sorted(field_drift.undocumented),
        "experimental_fields": sorted(field_drift.experimental),
        "unobserved_fields": sorted(field_drift.unobserved),
        "undeclared_values": {
            f: dict(sorted(v.items())) for f, v in sorted(domain_drift.undeclared.items())
        },
        "unobserved_declared": {
            f: list(v) for f, v in sorted(domain_drift.unobserved_declared.items())
        },
        "skipped_approximate": sorted(domain_drift.skipped_approximate),
    }
    if type_checker is not None:
        section["type_checked"] = dict(sorted(type_checker.report.checked.items()))
        section["type_violations"] = dict(sorted(type_checker.report.violations.items()))
    return section


def _assemble(
    cfg: AuditConfig,
    table: RawTable,
    sink: FindingSink,
    sections: dict,
    command: str,
    delivered: int,
) -> AuditReport:
    return AuditReport.build(
        dataset_path=str(table.path),
        dataset_sha256=file_sha256(table.path),
        byte_size=table.byte_size,
        row_count=table.row_count or 0,
        delivered_rows=delivered,
        headers=list(table.headers),
        config_digest=cfg.digest(),
        command=command,
        severity_threshold=cfg.severity_threshold,
        sink=sink,
        sections=sections,
    )


def _write_outputs(cfg: AuditConfig, result: RunResult, pair_dicts: list[dict]) -> None:
    out = Path(cfg.out_dir)
    out.mkdir(parents=True, exist_ok=True)
    if "json" in cfg.formats:
        path = out / REPORT_JSON
        render_json(result.report, path)
        result.output_paths["report_json"] = path
    if "markdown" in cfg.formats:
        path = out / REPORT_MD
        render_markdown_file(result.report, path)
        result.output_paths["report_md"] = path
    if "csv" in cfg.formats:
        path = out / PROFILES_CSV
        render_profiles_csv(result.profiles, path)
        result.output_paths["profiles_csv"] = path
        if pair_dicts:
            path = out / PAIRS_CSV
            render_pairs_csv(pair_dicts, path)
            result.output_paths["pairs_csv"] = path


def run_audit(cfg: AuditConfig, *, command: str = "audit", write: bool = True) -> RunResult:
    """Full audit: profile, dictionary, temporal, domain, redundancy."""
    _require_input(cfg)
    sink = FindingSink(cfg.sample_cap)
    emit = _make_emit(sink, cfg)

    dictionary = load_dictionary(cfg.dictionary_path) if cfg.dictionary_path else None

    table = open_table(cfg.input_path)
    for f in table.header_findings:
        emit(f)

    w = _wire(cfg, table, dictionary, emit)
    stream = stream_rows(table, w.consumers, emit=emit)
    profiles = w.profiler.profiles

    sections: dict = {
        "stream": {
            "rows": stream.row_count,
            "delivered": stream.delivered,
            "skipped_malformed": stream.skipped_malformed,
            "skipped_ragged": stream.skipped_ragged,
        },
        "profiles": [p.as_dict() for p in profiles],
        "tiers": [
            {"field": r.field, "blank_pct": r.blank_pct, "tier": r.tier}
            for r in tier_table(profiles)
        ],
    }
    if cfg.concentration:
        sections["concentration"] = _concentration_section(cfg, profiles)

    if dictionary is not None:
        field_drift = detect_undocumented(table, dictionary)
        domain_refs = _load_domain_references(dictionary, emit)
        domain_drift = check_domains(
            profiles, dictionary, references=domain_refs, case_fold=cfg.case_fold_domains,
        )
        for f in drift_findings(field_drift, domain_drift):
            emit(f)
        sections["dictionary"] = _dictionary_section(field_drift, domain_drift, w.type_checker)

    if w.durations is not None:
        sections["temporal"] = w.durations.summary.as_dict()

    domain_sec = _domain_section(w)
    if domain_sec:
        sections["domain"] = domain_sec
    redundancy_sec = _redundancy_section(w, cfg)
    if redundancy_sec:
        sections["redundancy"] = redundancy_sec

    report = _assemble(cfg, table, sink, sections, command, stream.delivered)
    status = EXIT_FINDINGS if sink.count_at_or_above(cfg.severity_threshold) else EXIT_CLEAN
    result = RunResult(
        report=report, sink=sink, exit_status=status,
        profiles=profiles, pair_stats=list(w.pairs.stats) if w.pairs else [],
    )
    if write:
        pair_dicts = redundancy_sec.get("pairs", []) if redundancy_sec else []
        _write_outputs(cfg, result, pair_dicts)
    return result


def run_profile(cfg: AuditConfig, *, command: str = "profile", write: bool = True) -> RunResult:
    """Profile-only pass: missingness, distincts, tiers, concentration."""
    _require_input(cfg)
    sink = FindingSink(cfg.sample_cap)
    emit = _make_emit(sink, cfg)
    table = open_table(cfg.input_path)
    for f in table.header_findings:
        emit(f)
    w = _wire(cfg, table, None, emit, temporal=False, domain=False, redundancy=False, types=False)
    stream = stream_rows(table, w.consumers, emit=emit)
    profiles = w.profiler.profiles
    sections = {
        "stream": {
            "rows": stream.row_count,
            "delivered": stream.delivered,
            "skipped_malformed": stream.skipped_malformed,
            "skipped_ragged": stream.skipped_ragged,
        },
        "profiles": [p.as_dict() for p in profiles],
        "tiers": [
            {"field": r.field, "blank_pct": r.blank_pct, "tier": r.tier}
            for r in tier_table(profiles)
        ],
    }
    if cfg.concentration:
        sections["concentration"] = _concentration_section(cfg, profiles)
    report = _assemble(cfg, table, sink, sections, command, stream.delivered)
    status = EXIT_FINDINGS if sink.count_at_or_above(cfg.severity_threshold) else EXIT_CLEAN
    result = RunResult(report=report, sink=sink, exit_status=status, profiles=profiles)
    if write:
        _write_outputs(cfg, result, [])
    return result


def run_dict_check(cfg: AuditConfig, *, command: str = "dict-check", write: bool = True) -> RunResult:
    """Dictionary conformance: types, field drift, domain drift."""
    _require_input(cfg)
    if cfg.dictionary_path is None:
        raise ConfigError("dict-check needs a `dictionary` path in the config")
    dictionary = load_dictionary(cfg.dictionary_path)
    sink = FindingSink(cfg.sample_cap)
    emit = _make_emit(sink, cfg)
    table = open_table(cfg.input_path)
    for f in table.header_findings:
        emit(f)
    w = _wire(cfg, table, dictionary, emit, temporal=False, domain=False, redundancy=False)
    stream = stream_rows(table, w.consumers, emit=emit)
    profiles = w.profiler.profiles

    field_drift = detect_undocumented(table, dictionary)
    domain_refs = _load_domain_references(dictionary, emit)
    domain_drift = check_domains(
        profiles, dictionary, references=domain_refs, case_fold=cfg.case_fold_domains,
    )
    for f in drift_findings(field_drift, domain_drift):
        emit(f)
    sections = {
        "stream": {
            "rows": stream.row_count,
            "delivered": stream.delivered,
            "skipped_malformed": stream.skipped_malformed,
            "skipped_ragged": stream.skipped_ragged,
        },
        "dictionary": _dictionary_section(field_drift, domain_drift, w.type_checker),
    }
    report = _assemble(cfg, table, sink, sections, command, stream.delivered)
    status = EXIT_FINDINGS if sink.count_at_or_above(cfg.severity_threshold) else EXIT_CLEAN
    result = RunResult(report=report, sink=sink, exit_status=status, profiles=profiles)
    if write:
        _write_outputs(cfg, result, [])
    return result


def run_reduce_plan(cfg: AuditConfig, *, command: str = "reduce-plan", write: bool = True) -> RunResult:
    """Profile plus redundancy evidence, folded into a reduction plan."""
    _require_input(cfg)
    sink = FindingSink(cfg.sample_cap)
    emit = _make_emit(sink, cfg)
    table = open_table(cfg.input_path)
    for f in table.header_findings:
        emit(f)
    w = _wire(cfg, table, None, emit, temporal=False, domain=False, types=False)
    stream = stream_rows(table, w.consumers, emit=emit)
    profiles = w.profiler.profiles

    pair_stats = list(w.pairs.stats) if w.pairs else []
    concat_stats = [c.stats for c in w.concats]
    plan = build_plan(
        profiles,
        pair_stats,
        cfg.plan,
        baseline_bytes=table.byte_size,
        row_count=stream.delivered,
        key_field=cfg.field_map.key,
        concat_stats=concat_stats,
        raw_headers=table.raw_headers,
        emit=emit,
    )

    sections: dict = {
        "stream": {
            "rows": stream.row_count,
            "delivered": stream.delivered,
            "skipped_malformed": stream.skipped_malformed,
            "skipped_ragged": stream.skipped_ragged,
        },
        "profiles": [p.as_dict() for p in profiles],
        "tiers": [
            {"field": r.field, "blank_pct": r.blank_pct, "tier": r.tier}
            for r in tier_table(profiles)
        ],
        "plan": plan.as_dict(),
    }
    redundancy_sec = _redundancy_section(w, cfg)
    if redundancy_sec:
        sections["redundancy"] = redundancy_sec

    report = _assemble(cfg, table, sink, sections, command, stream.delivered)
    status = EXIT_FINDINGS if sink.count_at_or_above(cfg.severity_threshold) else EXIT_CLEAN
    result = RunResult(
        report=report, sink=sink, exit_status=status,
        profiles=profiles, pair_stats=pair_stats, plan=plan,
    )
    if write:
        out = Path(cfg.out_dir)
        out.mkdir(parents=True, exist_ok=True)
        plan_path = out / PLAN_JSON
        plan.write_json(plan_path)
        result.output_paths["plan_json"] = plan_path
        pair_dicts = redundancy_sec.get("pairs", []) if redundancy_sec else []
        _write_outputs(cfg, result, pair_dicts)
    return result


def run_reduce_apply(
    cfg: AuditConfig,
    plan_path: str | Path | None = None,
    *,
    command: str = "reduce-apply",
    write: bool = True,
) -> RunResult:
    """Execute a previously written plan against the input file."""
    _require_input(cfg)
    if plan_path is None:
        plan_path = Path(cfg.out_dir) / PLAN_JSON
    plan_path = Path(plan_path)
    if not plan_path.is_file():
        raise PlanError(f"plan file not found: {plan_path} (run reduce-plan first)")
    plan = ReductionPlan.read_json(plan_path)

    sink = FindingSink(cfg.sample_cap)
    emit = _make_emit(sink, cfg)
    table = open_table(cfg.input_path)
    for f in table.header_findings:
        emit(f)

    out = Path(cfg.out_dir)
    applied = apply_plan(
        table, plan, out,
        key_field=cfg.field_map.key,
        classifier=cfg.classifier(),
    )

    sections = {
        "plan": plan.as_dict(),
        "apply": applied.as_dict(),
    }
    report = _assemble(cfg, table, sink, sections, command, applied.rows_written)
    status = EXIT_FINDINGS if sink.count_at_or_above(cfg.severity_threshold) else EXIT_CLEAN
    result = RunResult(
        report=report, sink=sink, exit_status=status, plan=plan, apply_result=applied,
    )
    if write:
        out.mkdir(parents=True, exist_ok=True)
        apply_path = out / APPLY_JSON
        apply_path.write_text(
            json.dumps(applied.as_dict(), indent=2, sort_keys=True) + "\n", encoding="utf-8",
        )
        result.output_paths["apply_json"] = apply_path
        if "json" in cfg.formats:
            path = out / REPORT_JSON
            render_json(result.report, path)
            result.output_paths["report_json"] = path
    return result
