"""File formats: the single place where bytes become domain objects.

Formats (all UTF-8, LF line endings):

* ``*.laisc.json``    -- landscape definition
* ``*.evidence.json`` -- evidence bundle
* ``*.grid``          -- plain-text integer grid: an ``H W`` header line,
  then H rows of W space-separated integers
* ``*.probs.csv``     -- per-instance class probabilities, header
  ``instance_id,label,p_0..p_{K-1}``
* ``*.acts.csv``      -- per-sample neuron activations, header
  ``sample_id,a_0..a_{N-1}``

Serialization is canonical (sorted keys, collections sorted by id), so
``serialize(parse(serialize(x)))`` equals ``serialize(x)`` byte for byte.
"""

from __future__ import annotations

import csv
import io as _stdio
import json
import math
from dataclasses import dataclass
from datetime import datetime, timezone
from enum import Enum

from laisc.errors import (
    DimensionMismatch,
    InputSyntaxError,
    InvalidTimestamp,
    NotNormalized,
    SchemaError,
    UnsupportedFormat,
    ValueOutOfRange,
)
from laisc.model import (
    Comparator,
    Condition,
    DatasetDescriptor,
    FlagResolution,
    Goal,
    Landscape,
    LifecycleStage,
    MetricGap,
    MetricThreshold,
    MitigationMeasure,
    PerCondition,
    QualitativeApproval,
    Resolution,
    ReviewFraction,
    SafetyConcern,
    SystemComponent,
    VerifiableRequirement,
    VrKind,
    VrPayload,
    build_landscape,
)

# --- evidence domain types ---------------------------------------------------


@dataclass(frozen=True, slots=True)
class MetricResult:
    """A computed metric value bound to the dataset(s) it was measured on.

    ``config_note`` is free text for reproducibility details; the value
    ``"gap"`` marks a record that already carries a two-dataset difference
    or distance rather than a single-dataset measurement.
    """

    metric_id: str
    dataset_ids: tuple[str, ...]
    value: float
    config_note: str = ""

    def __post_init__(self) -> None:
        object.__setattr__(self, "dataset_ids", tuple(self.dataset_ids))


class ApprovalVerdict(str, Enum):
    APPROVED = "Approved"
    REJECTED = "Rejected"


@dataclass(frozen=True, slots=True)
class ApprovalRecord:
    approver_id: str
    approver_role: str
    verdict: ApprovalVerdict
    document_ref: str = ""


@dataclass(frozen=True, slots=True)
class ReviewLog:
    dataset_id: str
    total_items: int
    reviewed_items: int


@dataclass(frozen=True, slots=True)
class FlagResolutionLog:
    """Pairs the ids flagged by a metric run with their human resolutions."""

    dataset_id: str
    flagged_ids: tuple[str, ...]
    entries: tuple[tuple[str, Resolution], ...]

    def __post_init__(self) -> None:
        object.__setattr__(self, "flagged_ids", tuple(self.flagged_ids))
        object.__setattr__(self, "entries", tuple((i, r) for i, r in self.entries))


@dataclass(frozen=True, slots=True)
class DocumentRecord:
    document_kind: str
    document_ref: str = ""


EvidencePayload = MetricResult | ApprovalRecord | ReviewLog | FlagResolutionLog | DocumentRecord

_EVIDENCE_KINDS: dict[type, str] = {
    MetricResult: "MetricResult",
    ApprovalRecord: "ApprovalRecord",
    ReviewLog: "ReviewLog",
    FlagResolutionLog: "FlagResolutionLog",
    DocumentRecord: "DocumentRecord",
}


@dataclass(frozen=True, slots=True)
class EvidenceRecord:
    """One timestamped piece of evidence addressed to a VR.

    ``landscape_fingerprint`` is the fingerprint of the landscape at the
    time the evidence was produced; evaluation treats records whose
    fingerprint no longer matches as stale.
    """

    id: str
    vr_id: str
    landscape_fingerprint: str
    timestamp: datetime
    payload: EvidencePayload

    @property
    def kind(self) -> str:
        return _EVIDENCE_KINDS[type(self.payload)]


@dataclass(frozen=True, slots=True)
class EvidenceBundle:
    records: tuple[EvidenceRecord, ...]
    source: str = ""

    def __post_init__(self) -> None:
        object.__setattr__(self, "records", tuple(self.records))


# --- numeric carriers --------------------------------------------------------


@dataclass(frozen=True, slots=True)
class LabeledGrid:
    """A small integer raster: a camera image (0..255) or a binary mask."""

    height: int
    width: int
    values: tuple[tuple[int, ...], ...]

    def __post_init__(self) -> None:
        object.__setattr__(self, "values", tuple(tuple(row) for row in self.values))
        if self.height < 1 or self.width < 1:
            raise DimensionMismatch(f"grid must be at least 1x1, got {self.height}x{self.width}")
        if len(self.values) != self.height:
            raise DimensionMismatch(f"expected {self.height} rows, got {len(self.values)}")
        for r, row in enumerate(self.values):
            if len(row) != self.width:
                raise DimensionMismatch(f"row {r}: expected {self.width} values, got {len(row)}")
            for value in row:
                if not isinstance(value, int) or isinstance(value, bool):
                    raise ValueOutOfRange(f"row {r}: non-integer cell {value!r}")
                if not 0 <= value <= 255:
                    raise ValueOutOfRange(f"row {r}: cell value {value} outside [0, 255]")

    @property
    def is_binary(self) -> bool:
        return all(value in (0, 1) for row in self.values for value in row)


@dataclass(frozen=True, slots=True)
class ProbabilityTable:
    """Per-instance predicted class probabilities with the observed label."""

    num_classes: int
    rows: tuple[tuple[str, int, tuple[float, ...]], ...]

    def __post_init__(self) -> None:
        object.__setattr__(
            self, "rows", tuple((i, lbl, tuple(ps)) for i, lbl, ps in self.rows)
        )
        if self.num_classes < 2:
            raise ValueOutOfRange(f"need at least 2 classes, got {self.num_classes}")
        for index, (instance_id, label, probs) in enumerate(self.rows):
            if len(probs) != self.num_classes:
                raise DimensionMismatch(
                    f"row {index} ({instance_id}): expected {self.num_classes} probabilities, got {len(probs)}"
                )
            if not 0 <= label < self.num_classes:
                raise ValueOutOfRange(f"row {index} ({instance_id}): label {label} outside [0, {self.num_classes})")
            for p in probs:
                if not (isinstance(p, float) or isinstance(p, int)) or not 0.0 <= p <= 1.0:
                    raise ValueOutOfRange(f"row {index} ({instance_id}): probability {p!r} outside [0, 1]")
            total = math.fsum(probs)
            if abs(total - 1.0) > 1e-6:
                raise NotNormalized(index, total)


@dataclass(frozen=True, slots=True)
class ActivationTable:
    """Per-sample activation values for a fixed set of neurons."""

    num_neurons: int
    rows: tuple[tuple[str, tuple[float, ...]], ...]

    def __post_init__(self) -> None:
        object.__setattr__(self, "rows", tuple((s, tuple(a)) for s, a in self.rows))
        if self.num_neurons < 1:
            raise ValueOutOfRange(f"need at least 1 neuron, got {self.num_neurons}")
        for index, (sample_id, acts) in enumerate(self.rows):
            if len(acts) != self.num_neurons:
                raise DimensionMismatch(
                    f"row {index} ({sample_id}): expected {self.num_neurons} activations, got {len(acts)}"
                )
            for a in acts:
                if not isinstance(a, (int, float)) or isinstance(a, bool) or not math.isfinite(a):
                    raise ValueOutOfRange(f"row {index} ({sample_id}): non-finite activation {a!r}")


# --- timestamp helpers -------------------------------------------------------


def parse_timestamp(value: str) -> datetime:
    """Parse an ISO-8601 timestamp; must be timezone-aware, normalized to UTC."""
    if not isinstance(value, str):
        raise InvalidTimestamp(repr(value), "not a string")
    try:
        parsed = datetime.fromisoformat(value.replace("Z", "+00:00"))
    except ValueError as exc:
        raise InvalidTimestamp(value, str(exc)) from None
    if parsed.tzinfo is None:
        raise InvalidTimestamp(value, "missing UTC offset")
    return parsed.astimezone(timezone.utc)


def format_timestamp(value: datetime) -> str:
    return value.astimezone(timezone.utc).isoformat()


# --- JSON schema helpers -----------------------------------------------------


def _load_json(data: bytes | str) -> object:
    text = data.decode("utf-8") if isinstance(data, bytes) else data

    def _reject_constant(token: str) -> float:
        raise ValueError(f"non-finite constant {token}")

    try:
        return json.loads(text, parse_constant=_reject_constant)
    except json.JSONDecodeError as exc:
        raise InputSyntaxError(exc.msg, offset=exc.pos) from None
    except ValueError as exc:
        raise InputSyntaxError(str(exc)) from None


def _obj(node: object, path: str, keys: set[str]) -> dict:
    if not isinstance(node, dict):
        raise SchemaError(path, "object", type(node).__name__)
    unknown = set(node) - keys
    if unknown:
        raise SchemaError(path, f"keys from {sorted(keys)}", f"unknown keys {sorted(unknown)}")
    missing = keys - set(node)
    if missing:
        raise SchemaError(path, f"required keys {sorted(missing)}", "absent")
    return node


def _str(node: dict, key: str, path: str) -> str:
    value = node[key]
    if not isinstance(value, str):
        raise SchemaError(f"{path}.{key}", "string", value)
    return value


def _bool(node: dict, key: str, path: str) -> bool:
    value = node[key]
    if not isinstance(value, bool):
        raise SchemaError(f"{path}.{key}", "boolean", value)
    return value


def _int(node: dict, key: str, path: str) -> int:
    value = node[key]
    if not isinstance(value, int) or isinstance(value, bool):
        raise SchemaError(f"{path}.{key}", "integer", value)
    return value


def _num(node: dict, key: str, path: str) -> float:
    value = node[key]
    if isinstance(value, bool) or not isinstance(value, (int, float)):
        raise SchemaError(f"{path}.{key}", "number", value)
    return float(value)


def _str_list(node: dict, key: str, path: str) -> list[str]:
    value = node[key]
    if not isinstance(value, list) or any(not isinstance(v, str) for v in value):
        raise SchemaError(f"{path}.{key}", "list of strings", value)
    return value


def _list(node: dict, key: str, path: str) -> list:
    value = node[key]
    if not isinstance(value, list):
        raise SchemaError(f"{path}.{key}", "list", value)
    return value


def _enum(node: dict, key: str, path: str, enum_type):
    value = _str(node, key, path)
    try:
        return enum_type(value)
    except ValueError:
        allowed = ", ".join(member.value for member in enum_type)
        raise SchemaError(f"{path}.{key}", f"one of {{{allowed}}}", value) from None


# --- landscape parsing -------------------------------------------------------


def _payload_schema(kind: VrKind, node: dict, path: str) -> VrPayload:
    if kind is VrKind.METRIC_THRESHOLD:
        _obj(node, path, {"metric_id", "dataset_id", "comparator", "threshold"})
        return MetricThreshold(
            metric_id=_str(node, "metric_id", path),
            dataset_id=_str(node, "dataset_id", path),
            comparator=_enum(node, "comparator", path, Comparator),
            threshold=_num(node, "threshold", path),
        )
    if kind is VrKind.METRIC_GAP:
        _obj(node, path, {"metric_id", "dataset_id_a", "dataset_id_b", "epsilon"})
        return MetricGap(
            metric_id=_str(node, "metric_id", path),
            dataset_id_a=_str(node, "dataset_id_a", path),
            dataset_id_b=_str(node, "dataset_id_b", path),
            epsilon=_num(node, "epsilon", path),
        )
    if kind is VrKind.PER_CONDITION:
        _obj(node, path, {"metric_id", "conditions"})
        conditions = []
        for index, raw in enumerate(_list(node, "conditions", path)):
            cpath = f"{path}.conditions[{index}]"
            _obj(raw, cpath, {"condition_id", "dataset_id", "threshold"})
            conditions.append(
                Condition(
                    condition_id=_str(raw, "condition_id", cpath),
                    dataset_id=_str(raw, "dataset_id", cpath),
                    threshold=_num(raw, "threshold", cpath),
                )
            )
        return PerCondition(metric_id=_str(node, "metric_id", path), conditions=tuple(conditions))
    if kind is VrKind.REVIEW_FRACTION:
        _obj(node, path, {"dataset_id", "min_fraction"})
        return ReviewFraction(
            dataset_id=_str(node, "dataset_id", path),
            min_fraction=_num(node, "min_fraction", path),
        )
    if kind is VrKind.FLAG_RESOLUTION:
        _obj(node, path, {"metric_id", "dataset_id", "flag_threshold"})
        return FlagResolution(
            metric_id=_str(node, "metric_id", path),
            dataset_id=_str(node, "dataset_id", path),
            flag_threshold=_num(node, "flag_threshold", path),
        )
    if kind is VrKind.QUALITATIVE_APPROVAL:
        _obj(node, path, {"required_approvals", "required_documents"})
        return QualitativeApproval(
            required_approvals=_int(node, "required_approvals", path),
            required_documents=tuple(_str_list(node, "required_documents", path)),
        )
    raise SchemaError(path, "known VR kind", kind)  # pragma: no cover


def parse_landscape(data: bytes | str) -> Landscape:
    """Parse a ``*.laisc.json`` document into a validated landscape."""
    root = _obj(
        _load_json(data),
        "$",
        {
            "name",
            "version",
            "stages",
            "components",
            "concerns",
            "goals",
            "vrs",
            "mitigation_measures",
            "datasets",
        },
    )

    stages = []
    for index, raw in enumerate(_list(root, "stages", "$")):
        path = f"$.stages[{index}]"
        _obj(raw, path, {"id", "name", "order"})
        stages.append(
            LifecycleStage(id=_str(raw, "id", path), name=_str(raw, "name", path), order=_int(raw, "order", path))
        )

    components = []
    for index, raw in enumerate(_list(root, "components", "$")):
        path = f"$.components[{index}]"
        _obj(raw, path, {"id", "name", "description"})
        components.append(
            SystemComponent(
                id=_str(raw, "id", path),
                name=_str(raw, "name", path),
                description=_str(raw, "description", path),
            )
        )

    concerns = []
    for index, raw in enumerate(_list(root, "concerns", "$")):
        path = f"$.concerns[{index}]"
        _obj(
            raw,
            path,
            {"id", "name", "description", "relevant", "relevance_rationale", "component_ids", "goal_ids"},
        )
        concerns.append(
            SafetyConcern(
                id=_str(raw, "id", path),
                name=_str(raw, "name", path),
                description=_str(raw, "description", path),
                relevant=_bool(raw, "relevant", path),
                relevance_rationale=_str(raw, "relevance_rationale", path),
                component_ids=tuple(_str_list(raw, "component_ids", path)),
                goal_ids=tuple(_str_list(raw, "goal_ids", path)),
            )
        )

    goals = []
    for index, raw in enumerate(_list(root, "goals", "$")):
        path = f"$.goals[{index}]"
        _obj(raw, path, {"id", "concern_id", "statement", "vr_ids"})
        goals.append(
            Goal(
                id=_str(raw, "id", path),
                concern_id=_str(raw, "concern_id", path),
                statement=_str(raw, "statement", path),
                vr_ids=tuple(_str_list(raw, "vr_ids", path)),
            )
        )

    vrs = []
    for index, raw in enumerate(_list(root, "vrs", "$")):
        path = f"$.vrs[{index}]"
        _obj(raw, path, {"id", "goal_id", "kind", "stage_id", "mm_ids", "payload"})
        kind = _enum(raw, "kind", path, VrKind)
        payload_node = raw["payload"]
        vrs.append(
            VerifiableRequirement(
                id=_str(raw, "id", path),
                goal_id=_str(raw, "goal_id", path),
                payload=_payload_schema(kind, payload_node, f"{path}.payload"),
                stage_id=_str(raw, "stage_id", path),
                mm_ids=tuple(_str_list(raw, "mm_ids", path)),
            )
        )

    measures = []
    for index, raw in enumerate(_list(root, "mitigation_measures", "$")):
        path = f"$.mitigation_measures[{index}]"
        _obj(raw, path, {"id", "name", "description", "stage_id"})
        stage_id = raw["stage_id"]
        if stage_id is not None and not isinstance(stage_id, str):
            raise SchemaError(f"{path}.stage_id", "string or null", stage_id)
        measures.append(
            MitigationMeasure(
                id=_str(raw, "id", path),
                name=_str(raw, "name", path),
                description=_str(raw, "description", path),
                stage_id=stage_id,
            )
        )

    datasets_node = root["datasets"]
    if not isinstance(datasets_node, dict):
        raise SchemaError("$.datasets", "object", type(datasets_node).__name__)
    datasets = {}
    for dataset_id, raw in datasets_node.items():
        path = f"$.datasets.{dataset_id}"
        _obj(raw, path, {"path", "format", "role"})
        datasets[dataset_id] = DatasetDescriptor(
            path=_str(raw, "path", path),
            format=_str(raw, "format", path),
            role=_str(raw, "role", path),
        )

    return build_landscape(
        name=_str(root, "name", "$"),
        version=_str(root, "version", "$"),
        stages=tuple(stages),
        components=tuple(components),
        concerns=tuple(concerns),
        goals=tuple(goals),
        vrs=tuple(vrs),
        mitigation_measures=tuple(measures),
        datasets=datasets,
    )


# --- landscape serialization -------------------------------------------------


def _payload_node(payload: VrPayload) -> dict:
    if isinstance(payload, MetricThreshold):
        return {
            "metric_id": payload.metric_id,
            "dataset_id": payload.dataset_id,
            "comparator": payload.comparator.value,
            "threshold": payload.threshold,
        }
    if isinstance(payload, MetricGap):
        return {
            "metric_id": payload.metric_id,
            "dataset_id_a": payload.dataset_id_a,
            "dataset_id_b": payload.dataset_id_b,
            "epsilon": payload.epsilon,
        }
    if isinstance(payload, PerCondition):
        return {
            "metric_id": payload.metric_id,
            "conditions": [
                {"condition_id": c.condition_id, "dataset_id": c.dataset_id, "threshold": c.threshold}
                for c in payload.conditions
            ],
        }
    if isinstance(payload, ReviewFraction):
        return {"dataset_id": payload.dataset_id, "min_fraction": payload.min_fraction}
    if isinstance(payload, FlagResolution):
        return {
            "metric_id": payload.metric_id,
            "dataset_id": payload.dataset_id,
            "flag_threshold": payload.flag_threshold,
        }
    if isinstance(payload, QualitativeApproval):
        return {
            "required_approvals": payload.required_approvals,
            "required_documents": list(payload.required_documents),
        }
    raise TypeError(type(payload).__name__)  # pragma: no cover


def _dump_canonical(node: object) -> bytes:
    return (json.dumps(node, sort_keys=True, indent=2, ensure_ascii=False) + "\n").encode("utf-8")


def serialize_landscape(landscape: Landscape) -> bytes:
    node = {
        "name": landscape.name,
        "version": landscape.version,
        "stages": [
            {"id": s.id, "name": s.name, "order": s.order}
            for s in sorted(landscape.stages, key=lambda s: s.order)
        ],
        "components": [
            {"id": c.id, "name": c.name, "description": c.description}
            for c in sorted(landscape.components, key=lambda c: c.id)
        ],
        "concerns": [
            {
                "id": c.id,
                "name": c.name,
                "description": c.description,
                "relevant": c.relevant,
                "relevance_rationale": c.relevance_rationale,
                "component_ids": sorted(c.component_ids),
                "goal_ids": sorted(c.goal_ids),
            }
            for c in sorted(landscape.concerns, key=lambda c: c.id)
        ],
        "goals": [
            {"id": g.id, "concern_id": g.concern_id, "statement": g.statement, "vr_ids": sorted(g.vr_ids)}
            for g in sorted(landscape.goals, key=lambda g: g.id)
        ],
        "vrs": [
            {
                "id": v.id,
                "goal_id": v.goal_id,
                "kind": v.kind.value,
                "stage_id": v.stage_id,
                "mm_ids": sorted(v.mm_ids),
                "payload": _payload_node(v.payload),
            }
            for v in sorted(landscape.vrs, key=lambda v: v.id)
        ],
        "mitigation_measures": [
            {"id": m.id, "name": m.name, "description": m.description, "stage_id": m.stage_id}
            for m in sorted(landscape.mitigation_measures, key=lambda m: m.id)
        ],
        "datasets": {
            dataset_id: {"path": d.path, "format": d.format, "role": d.role}
            for dataset_id, d in landscape.datasets
        },
    }
    return _dump_canonical(node)


# --- evidence parsing and serialization ---------------------------------------


def _evidence_payload_schema(kind: str, node: dict, path: str) -> EvidencePayload:
    if kind == "MetricResult":
        _obj(node, path, {"metric_id", "dataset_ids", "value", "config_note"})
        value = _num(node, "value", path)
        if not math.isfinite(value):
            raise SchemaError(f"{path}.value", "finite number", value)
        return MetricResult(
            metric_id=_str(node, "metric_id", path),
            dataset_ids=tuple(_str_list(node, "dataset_ids", path)),
            value=value,
            config_note=_str(node, "config_note", path),
        )
    if kind == "ApprovalRecord":
        _obj(node, path, {"approver_id", "approver_role", "verdict", "document_ref"})
        return ApprovalRecord(
            approver_id=_str(node, "approver_id", path),
            approver_role=_str(node, "approver_role", path),
            verdict=_enum(node, "verdict", path, ApprovalVerdict),
            document_ref=_str(node, "document_ref", path),
        )
    if kind == "ReviewLog":
        _obj(node, path, {"dataset_id", "total_items", "reviewed_items"})
        total = _int(node, "total_items", path)
        reviewed = _int(node, "reviewed_items", path)
        if total < 0 or reviewed < 0:
            raise SchemaError(f"{path}.total_items", "non-negative counts", (total, reviewed))
        if reviewed > total:
            raise SchemaError(f"{path}.reviewed_items", f"at most total_items={total}", reviewed)
        return ReviewLog(dataset_id=_str(node, "dataset_id", path), total_items=total, reviewed_items=reviewed)
    if kind == "FlagResolutionLog":
        _obj(node, path, {"dataset_id", "flagged_ids", "entries"})
        entries = []
        for index, raw in enumerate(_list(node, "entries", path)):
            epath = f"{path}.entries[{index}]"
            _obj(raw, epath, {"instance_id", "resolution"})
            entries.append((_str(raw, "instance_id", epath), _enum(raw, "resolution", epath, Resolution)))
        return FlagResolutionLog(
            dataset_id=_str(node, "dataset_id", path),
            flagged_ids=tuple(_str_list(node, "flagged_ids", path)),
            entries=tuple(entries),
        )
    if kind == "DocumentRecord":
        _obj(node, path, {"document_kind", "document_ref"})
        return DocumentRecord(
            document_kind=_str(node, "document_kind", path),
            document_ref=_str(node, "document_ref", path),
        )
    raise SchemaError(f"{path}", "one of {MetricResult, ApprovalRecord, ReviewLog, FlagResolutionLog, DocumentRecord}", kind)


def parse_evidence(data: bytes | str) -> EvidenceBundle:
    """Parse a ``*.evidence.json`` bundle.

    Records addressed to VR ids unknown to any particular landscape are
    accepted here; the evaluation engine reports them as orphaned.
    """
    root = _obj(_load_json(data), "$", {"source", "records"})
    records = []
    seen: set[str] = set()
    for index, raw in enumerate(_list(root, "records", "$")):
        path = f"$.records[{index}]"
        _obj(raw, path, {"id", "vr_id", "kind", "landscape_fingerprint", "timestamp", "payload"})
        record_id = _str(raw, "id", path)
        if record_id in seen:
            raise SchemaError(f"{path}.id", "unique record id", record_id)
        seen.add(record_id)
        vr_id = _str(raw, "vr_id", path)
        if not vr_id:
            raise SchemaError(f"{path}.vr_id", "non-empty string", vr_id)
        kind = _str(raw, "kind", path)
        records.append(
            EvidenceRecord(
                id=record_id,
                vr_id=vr_id,
                landscape_fingerprint=_str(raw, "landscape_fingerprint", path),
                timestamp=parse_timestamp(_str(raw, "timestamp", path)),
                payload=_evidence_payload_schema(kind, raw["payload"], f"{path}.payload"),
            )
        )
    return EvidenceBundle(records=tuple(records), source=_str(root, "source", "$"))


def _evidence_payload_node(payload: EvidencePayload) -> dict:
    if isinstance(payload, MetricResult):
        return {
            "metric_id": payload.metric_id,
            "dataset_ids": list(payload.dataset_ids),
            "value": payload.value,
            "config_note": payload.config_note,
        }
    if isinstance(payload, ApprovalRecord):
        return {
            "approver_id": payload.approver_id,
            "approver_role": payload.approver_role,
            "verdict": payload.verdict.value,
            "document_ref": payload.document_ref,
        }
    if isinstance(payload, ReviewLog):
        return {
            "dataset_id": payload.dataset_id,
            "total_items": payload.total_items,
            "reviewed_items": payload.reviewed_items,
        }
    if isinstance(payload, FlagResolutionLog):
        return {
            "dataset_id": payload.dataset_id,
            "flagged_ids": list(payload.flagged_ids),
            "entries": [
                {"instance_id": instance_id, "resolution": resolution.value}
                for instance_id, resolution in payload.entries
            ],
        }
    if isinstance(payload, DocumentRecord):
        return {"document_kind": payload.document_kind, "document_ref": payload.document_ref}
    raise TypeError(type(payload).__name__)  # pragma: no cover


def serialize_evidence(bundle: EvidenceBundle) -> bytes:
    node = {
        "source": bundle.source,
        "records": [
            {
                "id": r.id,
                "vr_id": r.vr_id,
                "kind": r.kind,
                "landscape_fingerprint": r.landscape_fingerprint,
                "timestamp": format_timestamp(r.timestamp),
                "payload": _evidence_payload_node(r.payload),
            }
            for r in bundle.records
        ],
    }
    return _dump_canonical(node)


# --- grid and CSV readers ------------------------------------------------------


def read_grid(data: bytes | str) -> LabeledGrid:
    text = data.decode("utf-8") if isinstance(data, bytes) else data
    lines = [line for line in text.splitlines() if line.strip()]
    if not lines:
        raise InputSyntaxError("empty grid file")
    header = lines[0].split()
    if len(header) != 2:
        raise InputSyntaxError(f"grid header must be 'H W', got {lines[0]!r}")
    try:
        height, width = int(header[0]), int(header[1])
    except ValueError:
        raise InputSyntaxError(f"grid header must be two integers, got {lines[0]!r}") from None
    if len(lines) - 1 != height:
        raise DimensionMismatch(f"expected {height} data rows, got {len(lines) - 1}")
    rows = []
    for r, line in enumerate(lines[1:]):
        cells = line.split()
        try:
            row = tuple(int(cell) for cell in cells)
        except ValueError:
            raise ValueOutOfRange(f"row {r}: non-integer cell in {line!r}") from None
        rows.append(row)
    return LabeledGrid(height=height, width=width, values=tuple(rows))


def write_grid(grid: LabeledGrid) -> bytes:
    lines = [f"{grid.height} {grid.width}"]
    lines.extend(" ".join(str(value) for value in row) for row in grid.values)
    return ("\n".join(lines) + "\n").encode("utf-8")


def _csv_rows(data: bytes | str) -> list[list[str]]:
    text = data.decode("utf-8") if isinstance(data, bytes) else data
    return list(csv.reader(_stdio.StringIO(text)))


def _parse_float(token: str, where: str) -> float:
    try:
        value = float(token)
    except ValueError:
        raise ValueOutOfRange(f"{where}: not a number: {token!r}") from None
    if not math.isfinite(value):
        raise ValueOutOfRange(f"{where}: non-finite value {token!r}")
    return value


def read_prob_table(data: bytes | str) -> ProbabilityTable:
    rows = _csv_rows(data)
    if not rows:
        raise InputSyntaxError("empty probability table")
    header = rows[0]
    if len(header) < 4 or header[:2] != ["instance_id", "label"]:
        raise SchemaError("header", "instance_id,label,p_0..p_{K-1} with K >= 2", ",".join(header))
    num_classes = len(header) - 2
    expected = [f"p_{k}" for k in range(num_classes)]
    if header[2:] != expected:
        raise SchemaError("header", ",".join(["instance_id", "label"] + expected), ",".join(header))
    parsed = []
    for index, row in enumerate(rows[1:]):
        where = f"data row {index}"
        if len(row) != len(header):
            raise DimensionMismatch(f"{where}: expected {len(header)} fields, got {len(row)}")
        try:
            label = int(row[1])
        except ValueError:
            raise ValueOutOfRange(f"{where}: label must be an integer, got {row[1]!r}") from None
        probs = tuple(_parse_float(token, where) for token in row[2:])
        parsed.append((row[0], label, probs))
    return ProbabilityTable(num_classes=num_classes, rows=tuple(parsed))


def write_prob_table(table: ProbabilityTable) -> bytes:
    out = _stdio.StringIO()
    writer = csv.writer(out, lineterminator="\n")
    writer.writerow(["instance_id", "label"] + [f"p_{k}" for k in range(table.num_classes)])
    for instance_id, label, probs in table.rows:
        writer.writerow([instance_id, label] + [repr(p) for p in probs])
    return out.getvalue().encode("utf-8")


def read_activations(data: bytes | str) -> ActivationTable:
    rows = _csv_rows(data)
    if not rows:
        raise InputSyntaxError("empty activation table")
    header = rows[0]
    if len(header) < 2 or header[0] != "sample_id":
        raise SchemaError("header", "sample_id,a_0..a_{N-1} with N >= 1", ",".join(header))
    num_neurons = len(header) - 1
    expected = [f"a_{n}" for n in range(num_neurons)]
    if header[1:] != expected:
        raise SchemaError("header", ",".join(["sample_id"] + expected), ",".join(header))
    parsed = []
    for index, row in enumerate(rows[1:]):
        where = f"data row {index}"
        if len(row) != len(header):
            raise DimensionMismatch(f"{where}: expected {len(header)} fields, got {len(row)}")
        acts = tuple(_parse_float(token, where) for token in row[1:])
        parsed.append((row[0], acts))
    return ActivationTable(num_neurons=num_neurons, rows=tuple(parsed))


def write_activations(table: ActivationTable) -> bytes:
    out = _stdio.StringIO()
    writer = csv.writer(out, lineterminator="\n")
    writer.writerow(["sample_id"] + [f"a_{n}" for n in range(table.num_neurons)])
    for sample_id, acts in table.rows:
        writer.writerow([sample_id] + [repr(a) for a in acts])
    return out.getvalue().encode("utf-8")


# --- report serialization -------------------------------------------------------

REPORT_FORMATS = ("table", "json", "dot")


def serialize_report(report, fmt: str) -> bytes:
    """Render an evaluation report in one of ``table``, ``json``, ``dot``."""
    from laisc import report as report_module  # deferred: report depends on evaluation

    if fmt == "table":
        return report_module.render_table(report)
    if fmt == "json":
        return report_module.render_json(report)
    if fmt == "dot":
        return report_module.render_argument_tree(report)
    raise UnsupportedFormat(fmt, REPORT_FORMATS)
