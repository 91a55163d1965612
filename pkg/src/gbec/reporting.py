"""Report tables built from archived trial records.

Each builder returns (headers, rows) with plain Python values; renderers
turn those into machine-readable CSV (full-precision floats) or an aligned
human-readable table (6 significant digits). Both forms carry the same
numbers, just formatted differently.
"""

from __future__ import annotations

import numpy as np

from . import metrics
from .pipelines import AXXB, GBEC
from .textformat import format_float

REPORT_KINDS = ("residuals", "fle", "repeatability", "workspace", "alignment")


def _by_method(reports) -> dict[str, list]:
    grouped: dict[str, list] = {}
    for rep in reports:
        grouped.setdefault(rep.method, []).append(rep)
    return grouped


def rows_residuals(reports):
    gbec = [r for r in reports if r.method == GBEC and r.per_feature_residuals]
    if not gbec:
        raise ValueError("no geometric trials with residuals in the archive")
    summary = metrics.residual_summary([r.to_trial() for r in gbec])
    headers = ["feature", "n", "mean_mm", "std_mm"]
    rows = [[fid, s.n, s.mean, s.std] for fid, s in summary.per_feature.items()]
    n_total = sum(s.n for s in summary.per_feature.values())
    rows.append(["OVERALL", n_total, summary.overall_mean, summary.overall_std])
    return headers, rows


def rows_fle(reports):
    gbec = [r for r in reports if r.method == GBEC and r.fle_pre_mean]
    if not gbec:
        raise ValueError("no geometric trials with localization-error data in the archive")
    headers = ["feature", "n_trials", "pre_mean_mm", "post_mean_mm", "reduction_percent"]
    rows = []
    for fid in gbec[0].fle_pre_mean:
        pre = float(np.mean([r.fle_pre_mean[fid] for r in gbec]))
        post = float(np.mean([r.fle_post_mean[fid] for r in gbec]))
        reduction = 100.0 * (pre - post) / pre if pre > 0 else 0.0
        rows.append([fid, len(gbec), pre, post, reduction])
    return headers, rows


def rows_repeatability(reports, outlier_k: int = 0):
    headers = [
        "method", "n_trials", "outliers_removed",
        "tx_std_mm", "ty_std_mm", "tz_std_mm",
        "rx_std_deg", "ry_std_deg", "rz_std_deg",
    ]
    rows = []
    for method in (GBEC, AXXB):
        group = [r for r in reports if r.method == method]
        if len(group) < 2:
            continue
        rep = metrics.repeatability([r.to_trial() for r in group], outlier_k)
        rows.append(
            [method, rep.n_trials, rep.outliers_removed]
            + [float(v) for v in rep.translation_std]
            + [float(v) for v in rep.rotation_std]
        )
    if not rows:
        raise ValueError("need at least 2 trials of one method for repeatability")
    return headers, rows


def _workspace_groups(reports):
    grouped: dict[str, dict[str, list]] = {}
    for rep in reports:
        grouped.setdefault(rep.method, {}).setdefault(rep.workspace, []).append(rep)
    return grouped


def rows_workspace(reports):
    headers = [
        "method", "workspace", "n_trials",
        "tx_range_mm", "ty_range_mm", "tz_range_mm",
        "rx_range_deg", "ry_range_deg", "rz_range_deg",
        "centroid_sep_min_mm", "centroid_sep_max_mm", "within_spread_max_mm",
    ]
    rows = []
    for method, groups in _workspace_groups(reports).items():
        if len(groups) < 2:
            continue
        summary = metrics.workspace_summary(
            {ws: [r.to_trial() for r in group] for ws, group in groups.items()}
        )
        for ws, rng in summary.per_workspace_range.items():
            rows.append(
                [method, ws, len(groups[ws])] + [float(v) for v in rng] + ["", "", ""]
            )
        rows.append(
            [method, "COMBINED", sum(len(g) for g in groups.values())]
            + [float(v) for v in summary.combined_range]
            + [
                summary.centroid_separation_min,
                summary.centroid_separation_max,
                summary.within_spread_max,
            ]
        )
    if not rows:
        raise ValueError("workspace report needs trials from at least 2 workspaces")
    return headers, rows


def rows_residuals_series(reports):
    """Per-trial per-feature mean residuals (plot data for distribution figures)."""
    headers = ["workspace", "trial", "feature", "mean_mm"]
    rows = []
    for rep in reports:
        if rep.method != GBEC or not rep.per_feature_residuals:
            continue
        for fid, vals in rep.per_feature_residuals.items():
            rows.append([rep.workspace, rep.index, fid, float(np.mean(vals))])
    if not rows:
        raise ValueError("no geometric trials with residuals in the archive")
    return headers, rows


def rows_fle_series(reports):
    """Per-trial localization-error means (plot data for correction figures)."""
    headers = ["workspace", "trial", "feature", "pre_mean_mm", "post_mean_mm", "reduction_percent"]
    rows = []
    for rep in reports:
        if rep.method != GBEC or not rep.fle_pre_mean:
            continue
        for fid in rep.fle_pre_mean:
            rows.append(
                [
                    rep.workspace,
                    rep.index,
                    fid,
                    float(rep.fle_pre_mean[fid]),
                    float(rep.fle_post_mean[fid]),
                    float(rep.fle_reduction_percent[fid]),
                ]
            )
    if not rows:
        raise ValueError("no geometric trials with localization-error data in the archive")
    return headers, rows


def rows_workspace_vectors(reports):
    """Per-trial 6-D vectors (plot data for cluster figures)."""
    headers = ["method", "workspace", "trial", "tx_mm", "ty_mm", "tz_mm", "rx_deg", "ry_deg", "rz_deg"]
    rows = []
    for method, groups in _workspace_groups(reports).items():
        if len(groups) < 2:
            continue
        summary = metrics.workspace_summary(
            {ws: [r.to_trial() for r in group] for ws, group in groups.items()}
        )
        for ws, vectors in summary.vectors.items():
            for i, vec in enumerate(vectors):
                rows.append([method, ws, i] + [float(v) for v in vec])
    if not rows:
        raise ValueError("workspace report needs trials from at least 2 workspaces")
    return headers, rows


def rows_alignment(alignment_errors):
    if not alignment_errors:
        raise ValueError("no alignment errors in the archive")
    table = metrics.alignment_table(alignment_errors)
    headers = ["axis", "mean", "std", "n"]
    rows = [
        [axis, float(table.mean[i]), float(table.std[i]), table.n]
        for i, axis in enumerate(metrics.AlignmentTable.AXES)
    ]
    return headers, rows


def _format_cell_csv(value) -> str:
    if isinstance(value, float):
        return format_float(value)
    return str(value)


def _format_cell_text(value) -> str:
    if isinstance(value, float):
        return f"{value:.6g}"
    return str(value)


def render_csv(headers, rows) -> str:
    lines = [",".join(headers)]
    for row in rows:
        lines.append(",".join(_format_cell_csv(v) for v in row))
    return "\n".join(lines) + "\n"


def parse_csv(text: str):
    lines = [ln for ln in text.splitlines() if ln.strip()]
    headers = lines[0].split(",")
    rows = [ln.split(",") for ln in lines[1:]]
    return headers, rows


def render_table(headers, rows, title: str = "") -> str:
    cells = [[_format_cell_text(v) for v in row] for row in rows]
    widths = [len(h) for h in headers]
    for row in cells:
        for i, cell in enumerate(row):
            widths[i] = max(widths[i], len(cell))
    lines = []
    if title:
        lines.append(title)
    lines.append("  ".join(h.ljust(widths[i]) for i, h in enumerate(headers)))
    lines.append("  ".join("-" * w for w in widths))
    for row in cells:
        lines.append("  ".join(cell.ljust(widths[i]) for i, cell in enumerate(row)))
    return "\n".join(lines) + "\n"
