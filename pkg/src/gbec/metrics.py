"""Quantitative evaluations of calibration experiments.

Covers line regression errors, localization-error reduction by line
fitting, registration residual statistics, repeatability of repeated
calibrations, workspace-independence summaries, and alignment-error tables.
Everything here is a pure aggregation over trial data and can be recomputed
from archived trial records alone.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .errors import GroovesRequired
from .geometry import (
    RigidTransform,
    invert,
    nearest_rotation,
    point_line_distances,
    rotation_to_rotvec_deg,
    transform_line,
)
from .models import AttachmentSpec, GrooveModel
from .pipelines import CalibrationTrial, DigitizationSet
from .registration import LineFitResult, project_points_onto_line


@dataclass(frozen=True, eq=False)
class FeatureStats:
    mean: float
    std: float
    n: int


@dataclass(frozen=True, eq=False)
class LineRegressionReport:
    """Per-groove point-to-fitted-line distance statistics for one trial."""

    per_feature: dict[str, FeatureStats]
    trial_mean: float


@dataclass(frozen=True, eq=False)
class FleReport:
    """Digitization error against reference lines, before and after
    projecting the digitized points onto their fitted lines."""

    pre_correction: dict[str, np.ndarray]
    post_correction: dict[str, np.ndarray]
    reduction_percent: dict[str, float]


@dataclass(frozen=True, eq=False)
class ResidualReport:
    per_feature: dict[str, FeatureStats]
    overall_mean: float
    overall_std: float


@dataclass(frozen=True, eq=False)
class RepeatabilityReport:
    """Scatter of repeated calibrations: per-axis std of the translation
    (mm) and of the rotation-vector about the mean rotation (deg)."""

    translation_std: np.ndarray
    rotation_std: np.ndarray
    n_trials: int
    outliers_removed: int


@dataclass(frozen=True, eq=False)
class WorkspaceReport:
    """Transform clusters per workspace as 6-D vectors (translation mm,
    rotation-vector deg) plus cross-workspace compactness measures."""

    vectors: dict[str, np.ndarray]
    per_workspace_range: dict[str, np.ndarray]
    combined_range: np.ndarray
    centroid_separation_min: float
    centroid_separation_max: float
    within_spread_max: float


@dataclass(frozen=True, eq=False)
class AlignmentTable:
    """Mean and std per axis (x, y, z in mm; rx, ry, rz in deg)."""

    mean: np.ndarray
    std: np.ndarray
    n: int

    AXES = ("x_mm", "y_mm", "z_mm", "rx_deg", "ry_deg", "rz_deg")


def _stats(values: np.ndarray) -> FeatureStats:
    values = np.asarray(values, dtype=float)
    std = float(values.std(ddof=1)) if values.size > 1 else 0.0
    return FeatureStats(float(values.mean()), std, int(values.size))


def line_regression_errors(
    dig: DigitizationSet, fits: dict[str, LineFitResult]
) -> LineRegressionReport:
    """Point-to-fitted-line distances per groove, recomputed from the raw
    clouds; the trial mean is the mean over the per-groove means."""
    per_feature: dict[str, FeatureStats] = {}
    for fid, fit in fits.items():
        if fid not in dig.clouds:
            raise GroovesRequired(f"no digitized cloud for fitted feature {fid!r}")
        dist = point_line_distances(dig.clouds[fid], fit.line)
        per_feature[fid] = _stats(dist)
    trial_mean = float(np.mean([s.mean for s in per_feature.values()]))
    return LineRegressionReport(per_feature, trial_mean)


def fle_report(
    trial: CalibrationTrial,
    spec: AttachmentSpec,
    dig: DigitizationSet,
    reference: RigidTransform | None = None,
) -> FleReport:
    """Localization error of each digitized point against reference groove
    lines, before and after projection onto the fitted line.

    The reference lines are the model grooves mapped into the marker frame.
    By default the trial's own calibration provides that mapping, which
    balances the errors among grooves; pass the true hand-eye transform of a
    simulated scene as ``reference`` for a non-circular variant.
    """
    if not isinstance(spec.model, GrooveModel):
        raise GroovesRequired("localization-error correction applies to groove models only")
    if not trial.line_fits:
        raise GroovesRequired("trial carries no line fits")
    handeye = reference if reference is not None else trial.result
    to_marker = invert(handeye)
    pre: dict[str, np.ndarray] = {}
    post: dict[str, np.ndarray] = {}
    reduction: dict[str, float] = {}
    for groove in spec.model.grooves:
        reference_line = transform_line(to_marker, groove.line)
        cloud = dig.clouds[groove.id]
        pre_d = point_line_distances(cloud, reference_line)
        projected = project_points_onto_line(cloud, trial.line_fits[groove.id].line)
        post_d = point_line_distances(projected, reference_line)
        pre[groove.id] = pre_d
        post[groove.id] = post_d
        mean_pre = float(pre_d.mean())
        reduction[groove.id] = (
            100.0 * (mean_pre - float(post_d.mean())) / mean_pre if mean_pre > 0 else 0.0
        )
    return FleReport(pre, post, reduction)


def landmark_residuals(trial: CalibrationTrial) -> ResidualReport:
    """Registration residual statistics of one trial.

    The per-feature residual is the mean over that feature's sampled points;
    overall mean and std are taken over the per-feature means.
    """
    if not trial.per_feature_residuals:
        raise ValueError("trial carries no per-feature residuals")
    per_feature = {fid: _stats(res) for fid, res in trial.per_feature_residuals.items()}
    means = np.array([s.mean for s in per_feature.values()])
    overall_std = float(means.std(ddof=1)) if means.size > 1 else 0.0
    return ResidualReport(per_feature, float(means.mean()), overall_std)


def residual_summary(trials) -> ResidualReport:
    """Residual statistics across trials: the population is every trial's
    per-feature mean residual."""
    per_feature_values: dict[str, list[float]] = {}
    all_means: list[float] = []
    for trial in trials:
        if not trial.per_feature_residuals:
            continue
        for fid, res in trial.per_feature_residuals.items():
            m = float(np.mean(res))
            per_feature_values.setdefault(fid, []).append(m)
            all_means.append(m)
    if not all_means:
        raise ValueError("no trials with residuals")
    per_feature = {fid: _stats(np.array(v)) for fid, v in per_feature_values.items()}
    arr = np.array(all_means)
    overall_std = float(arr.std(ddof=1)) if arr.size > 1 else 0.0
    return ResidualReport(per_feature, float(arr.mean()), overall_std)


def _trial_vectors(trials, mean_rotation: np.ndarray) -> np.ndarray:
    """6-D vectors (translation, rotation-vector about mean_rotation)."""
    rows = []
    for t in trials:
        rv = rotation_to_rotvec_deg(mean_rotation.T @ t.result.rotation)
        rows.append(np.concatenate([t.result.translation, rv]))
    return np.array(rows)


def _mean_rotation(trials) -> np.ndarray:
    return nearest_rotation(np.mean([t.result.rotation for t in trials], axis=0))


def repeatability(trials, outlier_k: int = 0) -> RepeatabilityReport:
    """Per-axis scatter of repeated calibrations of one method.

    ``outlier_k`` drops the k trials farthest (Euclidean, 6-D vector) from
    the component-wise median before computing statistics; the default keeps
    every trial.
    """
    trials = list(trials)
    if len(trials) - outlier_k < 2:
        raise ValueError("need at least 2 trials after outlier removal")
    vec = _trial_vectors(trials, _mean_rotation(trials))
    if outlier_k > 0:
        dist = np.linalg.norm(vec - np.median(vec, axis=0), axis=1)
        keep = np.argsort(dist)[: len(trials) - outlier_k]
        vec = vec[np.sort(keep)]
    return RepeatabilityReport(
        translation_std=vec[:, :3].std(axis=0, ddof=1),
        rotation_std=vec[:, 3:].std(axis=0, ddof=1),
        n_trials=vec.shape[0],
        outliers_removed=outlier_k,
    )


def workspace_summary(trials_by_workspace: dict[str, list]) -> WorkspaceReport:
    """Cluster the trial transforms per workspace and measure how far the
    clusters sit apart (translation centroids) versus how wide they are."""
    if len(trials_by_workspace) < 2:
        raise ValueError("need at least 2 workspaces")
    all_trials = [t for trials in trials_by_workspace.values() for t in trials]
    mean_rot = _mean_rotation(all_trials)
    vectors: dict[str, np.ndarray] = {}
    ranges: dict[str, np.ndarray] = {}
    centroids = []
    spreads = []
    for ws, trials in trials_by_workspace.items():
        vec = _trial_vectors(trials, mean_rot)
        vectors[ws] = vec
        ranges[ws] = vec.max(axis=0) - vec.min(axis=0)
        centroid = vec[:, :3].mean(axis=0)
        centroids.append(centroid)
        spreads.append(float(np.linalg.norm(vec[:, :3] - centroid, axis=1).mean()))
    combined = np.vstack(list(vectors.values()))
    combined_range = combined.max(axis=0) - combined.min(axis=0)
    seps = [
        float(np.linalg.norm(centroids[i] - centroids[j]))
        for i in range(len(centroids))
        for j in range(i + 1, len(centroids))
    ]
    return WorkspaceReport(
        vectors=vectors,
        per_workspace_range=ranges,
        combined_range=combined_range,
        centroid_separation_min=min(seps),
        centroid_separation_max=max(seps),
        within_spread_max=max(spreads),
    )


def alignment_table(errors) -> AlignmentTable:
    """Mean and std per axis of 6-component alignment errors."""
    arr = np.asarray(errors, dtype=float).reshape(-1, 6)
    if arr.shape[0] < 1:
        raise ValueError("need at least 1 alignment error")
    std = arr.std(axis=0, ddof=1) if arr.shape[0] > 1 else np.zeros(6)
    return AlignmentTable(arr.mean(axis=0), std, arr.shape[0])
