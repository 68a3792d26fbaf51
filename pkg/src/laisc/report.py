"""Renderers for evaluation reports: fixed-width table, DOT tree, JSON.

Renderers never recompute anything; every status string they emit comes
straight from the evaluation report, and equal reports render to equal
bytes.
"""

from __future__ import annotations

import json

from laisc.evaluation import EvaluationReport, Status
from laisc.io import format_timestamp

_TABLE_COLUMNS = ("AI-SC", "Stage in AI Life Cycle", "Decomposition", "VR", "M&M", "Status")


def render_table(report: EvaluationReport) -> bytes:
    """Fixed-width text table, one line per visible landscape row, plus a
    roll-up footer."""
    body = [
        (
            row.concern_name,
            row.stage_name,
            row.decomposition,
            row.vr_id,
            row.mm_name,
            report.effective_status(row.vr_id).value,
        )
        for row in report.rows
    ]
    widths = [
        max(len(_TABLE_COLUMNS[i]), *(len(line[i]) for line in body)) if body else len(_TABLE_COLUMNS[i])
        for i in range(len(_TABLE_COLUMNS))
    ]

    def fmt(cells) -> str:
        return " | ".join(cell.ljust(width) for cell, width in zip(cells, widths)).rstrip()

    lines = [fmt(_TABLE_COLUMNS), "-+-".join("-" * width for width in widths)]
    lines.extend(fmt(line) for line in body)
    counts = report.status_counts()
    summary = (
        f"{counts[Status.SATISFIED]} satisfied / {counts[Status.VIOLATED]} violated / "
        f"{counts[Status.PENDING]} pending / {counts[Status.ERROR]} error"
    )
    if counts[Status.NOT_APPLICABLE]:
        summary += f" / {counts[Status.NOT_APPLICABLE]} not applicable"
    footer = f"{summary} | coverage gaps: {len(report.coverage_gaps)}"
    if report.orphaned_evidence_ids:
        footer += f" | orphaned evidence records: {len(report.orphaned_evidence_ids)}"
    lines.append("")
    lines.append(f"landscape: {report.landscape_name}  filter: {report.filter_description}")
    lines.append(footer)
    return ("\n".join(lines) + "\n").encode("utf-8")


_STATUS_COLORS = {
    Status.SATISFIED: "palegreen",
    Status.VIOLATED: "lightcoral",
    Status.PENDING: "lightyellow",
    Status.ERROR: "orange",
    Status.NOT_APPLICABLE: "lightgray",
}


def _dot_escape(text: str) -> str:
    return text.replace("\\", "\\\\").replace('"', '\\"')


def render_argument_tree(report: EvaluationReport) -> bytes:
    """DOT digraph of the concern -> goal -> VR decomposition with each
    node labeled by its status."""
    landscape = report.landscape
    lines = [
        "digraph landscape {",
        "  rankdir=LR;",
        '  node [shape=box, style=filled, fontname="Helvetica"];',
    ]
    edges: list[str] = []
    for concern in sorted(landscape.concerns, key=lambda c: c.id):
        rollup = report.concern_rollups[concern.id]
        lines.append(
            f'  "{_dot_escape(concern.id)}" [label="{_dot_escape(concern.name)}'
            f'\\n[{rollup.status.value}]", fillcolor={_STATUS_COLORS[rollup.status]}];'
        )
        for goal_id in sorted(concern.goal_ids):
            edges.append(f'  "{_dot_escape(concern.id)}" -> "{_dot_escape(goal_id)}";')
    for goal in sorted(landscape.goals, key=lambda g: g.id):
        rollup = report.goal_rollups[goal.id]
        lines.append(
            f'  "{_dot_escape(goal.id)}" [label="{_dot_escape(goal.statement)}'
            f'\\n({goal.id}) [{rollup.status.value}]", fillcolor={_STATUS_COLORS[rollup.status]}];'
        )
        for vr_id in sorted(goal.vr_ids):
            edges.append(f'  "{_dot_escape(goal.id)}" -> "{_dot_escape(vr_id)}";')
    for vr in sorted(landscape.vrs, key=lambda v: v.id):
        status = report.effective_status(vr.id)
        lines.append(
            f'  "{_dot_escape(vr.id)}" [label="{_dot_escape(vr.id)}'
            f'\\n[{status.value}]", fillcolor={_STATUS_COLORS[status]}];'
        )
    lines.extend(edges)
    lines.append("}")
    return ("\n".join(lines) + "\n").encode("utf-8")


def render_json(report: EvaluationReport) -> bytes:
    """Canonical machine-readable dump of the (possibly filtered) report."""
    visible = report.visible_vr_ids()
    visible_goals = sorted({report.landscape.vr(vr_id).goal_id for vr_id in visible})
    visible_concerns = sorted(
        {report.landscape.goal(goal_id).concern_id for goal_id in visible_goals}
    )
    counts = report.status_counts()
    node = {
        "landscape": report.landscape_name,
        "fingerprint": report.landscape_fingerprint,
        "generated_at": format_timestamp(report.generated_at),
        "filter": report.filter_description,
        "verdicts": {
            vr_id: {
                "status": report.vr_verdicts[vr_id].status.value,
                "effective_status": report.effective_status(vr_id).value,
                "explanation": report.vr_verdicts[vr_id].explanation,
                "evidence_ids": list(report.vr_verdicts[vr_id].evidence_ids),
                "measured": {key: value for key, value in report.vr_verdicts[vr_id].measured},
            }
            for vr_id in visible
        },
        "goals": {
            goal_id: {
                "status": report.goal_rollups[goal_id].status.value,
                "note": report.goal_rollups[goal_id].note,
            }
            for goal_id in visible_goals
        },
        "concerns": {
            concern_id: {
                "status": report.concern_rollups[concern_id].status.value,
                "note": report.concern_rollups[concern_id].note,
            }
            for concern_id in visible_concerns
        },
        "coverage_gaps": [
            {"kind": gap.kind.value, "subject_id": gap.subject_id} for gap in report.coverage_gaps
        ],
        "orphaned_evidence_ids": list(report.orphaned_evidence_ids),
        "summary": {
            "satisfied": counts[Status.SATISFIED],
            "violated": counts[Status.VIOLATED],
            "pending": counts[Status.PENDING],
            "error": counts[Status.ERROR],
            "not_applicable": counts[Status.NOT_APPLICABLE],
            "coverage_gaps": len(report.coverage_gaps),
        },
    }
    return (json.dumps(node, sort_keys=True, indent=2, ensure_ascii=False) + "\n").encode("utf-8")
