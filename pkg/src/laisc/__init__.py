"""laisc: model, evaluate, and report landscapes of AI safety concerns.

The package turns a landscape definition (concerns decomposed into goals
and verifiable requirements) plus collected evidence into binary verdicts,
roll-ups, coverage blind spots, and audit-ready reports, and ships the
quantitative measures the requirements rely on.
"""

from laisc.errors import LaiscError
from laisc.evaluation import (
    CoverageGap,
    EvaluationReport,
    Filter,
    GapKind,
    Rollup,
    Status,
    Verdict,
    apply_filter,
    coverage,
    evaluate,
    evaluate_vr,
    rollup,
)
from laisc.io import (
    ActivationTable,
    ApprovalRecord,
    ApprovalVerdict,
    DocumentRecord,
    EvidenceBundle,
    EvidenceRecord,
    FlagResolutionLog,
    LabeledGrid,
    MetricResult,
    ProbabilityTable,
    ReviewLog,
    parse_evidence,
    parse_landscape,
    read_activations,
    read_grid,
    read_prob_table,
    serialize_evidence,
    serialize_landscape,
    serialize_report,
)
from laisc.model import (
    Comparator,
    Condition,
    DatasetDescriptor,
    FlagResolution,
    Goal,
    Landscape,
    LandscapeRow,
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
    build_landscape,
    fingerprint,
    rows,
)

__version__ = "0.1.0"

__all__ = [
    "ActivationTable",
    "ApprovalRecord",
    "ApprovalVerdict",
    "Comparator",
    "Condition",
    "CoverageGap",
    "DatasetDescriptor",
    "DocumentRecord",
    "EvaluationReport",
    "EvidenceBundle",
    "EvidenceRecord",
    "Filter",
    "FlagResolution",
    "FlagResolutionLog",
    "GapKind",
    "Goal",
    "LabeledGrid",
    "LaiscError",
    "Landscape",
    "LandscapeRow",
    "LifecycleStage",
    "MetricGap",
    "MetricResult",
    "MetricThreshold",
    "MitigationMeasure",
    "PerCondition",
    "ProbabilityTable",
    "QualitativeApproval",
    "Resolution",
    "ReviewFraction",
    "ReviewLog",
    "Rollup",
    "SafetyConcern",
    "Status",
    "SystemComponent",
    "Verdict",
    "VerifiableRequirement",
    "VrKind",
    "apply_filter",
    "build_landscape",
    "coverage",
    "evaluate",
    "evaluate_vr",
    "fingerprint",
    "parse_evidence",
    "parse_landscape",
    "read_activations",
    "read_grid",
    "read_prob_table",
    "rollup",
    "rows",
    "serialize_evidence",
    "serialize_landscape",
    "serialize_report",
]
