"""Synthetic ground-truth scenes and measurement generation.

Generates probe digitizations of grooves and landmarks with tracker noise
and hand-digitization effects, robot/marker pose streams with robot-error
injection, and full experiment campaigns that aggregate repeated trials
deterministically from one master seed.

Hand-digitization effects are modeled separately from sensor noise because
they behave differently: the digitized extent of a groove starts and ends a
random inset short of the physical groove ends, interior touch positions
jitter along the line, and each point landmark carries a per-trial
systematic touch offset that repeated touches do not average away.
``NoiseSpec.zeroed`` switches off every stochastic term and reproduces the
scene exactly.
"""

from __future__ import annotations

import json
from dataclasses import dataclass, field, replace

import numpy as np

from . import metrics
from .errors import ConfigInvalid, GbecError
from .geometry import (
    Point3,
    RigidTransform,
    compose,
    invert,
    random_rotation,
    rotation_from_axis_angle_deg,
    rotation_from_rpy_deg,
)
from .models import AttachmentSpec, GrooveModel, PointLandmarkModel
from .pipelines import (
    AXXB,
    GBEC,
    CalibrationTrial,
    DigitizationSet,
    PoseSample,
    alignment_error,
    build_motion_pairs,
    run_gbec,
    solve_axxb,
)

AUTO_OFFSET = "auto"


@dataclass(frozen=True, eq=False)
class NoiseSpec:
    """Stochastic terms of the measurement model. All sigmas are standard
    deviations; lengths in mm, angles in degrees.

    tracker_sigma / tracker_rotation_sigma: optical tracker noise per
    digitized point and per reported marker pose. robot_*: error of the
    reported robot pose. extent_inset: maximum random inset of the digitized
    groove extent from each groove end. along_jitter: interior touch jitter
    as a fraction of the point spacing. touch_offset: radius of the per-trial
    systematic touch error of a point landmark. feature_sigma_scale:
    per-feature multipliers on tracker_sigma (hard-to-reach features).
    """

    tracker_sigma: float = 0.25
    tracker_rotation_sigma: float = 0.05
    robot_translation_sigma: float = 2.0
    robot_rotation_sigma: float = 0.1
    extent_inset: float = 3.0
    along_jitter: float = 0.1
    touch_offset: float = 1.2
    feature_sigma_scale: dict[str, float] = field(default_factory=dict)
    seed: int = 0

    def __post_init__(self) -> None:
        for name in (
            "tracker_sigma",
            "tracker_rotation_sigma",
            "robot_translation_sigma",
            "robot_rotation_sigma",
            "extent_inset",
            "along_jitter",
            "touch_offset",
        ):
            if getattr(self, name) < 0:
                raise ValueError(f"{name} must be >= 0")
        for fid, scale in self.feature_sigma_scale.items():
            if scale < 0:
                raise ValueError(f"feature_sigma_scale[{fid!r}] must be >= 0")

    @classmethod
    def zeroed(cls, seed: int = 0) -> "NoiseSpec":
        """Every stochastic term off: measurements reproduce the scene."""
        return cls(
            tracker_sigma=0.0,
            tracker_rotation_sigma=0.0,
            robot_translation_sigma=0.0,
            robot_rotation_sigma=0.0,
            extent_inset=0.0,
            along_jitter=0.0,
            touch_offset=0.0,
            seed=seed,
        )


@dataclass(frozen=True, eq=False)
class WorkspaceSpec:
    """Spherical data-collection workspace for pose streams."""

    center: Point3
    diameter: float = 400.0
    orientation_range: float = 15.0
    n_poses: int = 50
    base_offset: RigidTransform | str | None = None

    def __post_init__(self) -> None:
        if self.diameter <= 0:
            raise ValueError("workspace diameter must be positive")
        if self.n_poses < 3:
            raise ValueError("workspace needs at least 3 poses")
        if self.orientation_range < 0:
            raise ValueError("orientation range must be >= 0")


@dataclass(frozen=True, eq=False)
class SceneTruth:
    """Ground truth of a simulated scene."""

    true_handeye: RigidTransform
    camera_to_base: RigidTransform
    attachment: AttachmentSpec


@dataclass(frozen=True, eq=False)
class DigitizationPlan:
    points_per_groove: int = 52
    touches_per_landmark: int = 5

    def __post_init__(self) -> None:
        if self.points_per_groove < 2:
            raise ValueError("points_per_groove must be at least 2")
        if self.touches_per_landmark < 1:
            raise ValueError("touches_per_landmark must be at least 1")


@dataclass(frozen=True, eq=False)
class MethodPlan:
    trials: int
    pairing: str = "consecutive"

    def __post_init__(self) -> None:
        if self.trials < 1:
            raise ValueError("trial count must be at least 1")
        if self.pairing not in ("consecutive", "all"):
            raise ValueError(f"unknown pairing scheme {self.pairing!r}")


@dataclass(eq=False)
class ExperimentConfig:
    campaign: str
    seed: int
    scene: SceneTruth
    noise: NoiseSpec
    workspaces: dict[str, WorkspaceSpec]
    methods: dict[str, MethodPlan]
    digitization: DigitizationPlan = field(default_factory=DigitizationPlan)
    n_alignments: int = 0
    output: str | None = None

    def __post_init__(self) -> None:
        if not self.workspaces:
            raise ConfigInvalid("config names no workspaces")
        if not self.methods:
            raise ConfigInvalid("config names no methods")
        for m in self.methods:
            if m not in (GBEC, AXXB):
                raise ConfigInvalid(f"unknown method {m!r}")
        if self.n_alignments < 0:
            raise ConfigInvalid("n_alignments must be >= 0")


def _uniform_in_ball(rng: np.random.Generator, radius: float) -> np.ndarray:
    direction = rng.normal(size=3)
    n = np.linalg.norm(direction)
    while n < 1e-12:
        direction = rng.normal(size=3)
        n = np.linalg.norm(direction)
    return (direction / n) * radius * rng.uniform() ** (1.0 / 3.0)


def simulate_digitization(
    scene: SceneTruth,
    noise: NoiseSpec,
    points_per_groove: int = 52,
    touches_per_landmark: int = 5,
    rng: np.random.Generator | None = None,
) -> DigitizationSet:
    """Simulated probe digitization of the attachment, in the marker frame.

    Groove clouds run from the first to the last touched point along the
    groove; the two ends are inset by up to ``noise.extent_inset`` each and
    interior points jitter along the line, mimicking hand motion. Point
    landmarks get repeated touches sharing one systematic offset. Tracker
    noise is isotropic Gaussian per point. Every random term is drawn from
    ``rng`` in a fixed order, so equal seeds give identical output.
    """
    if rng is None:
        rng = np.random.default_rng(noise.seed)
    if points_per_groove < 2:
        raise ValueError("points_per_groove must be at least 2")
    to_marker = invert(scene.true_handeye)
    clouds: dict[str, np.ndarray] = {}
    model = scene.attachment.model
    if isinstance(model, GrooveModel):
        for groove in model.grooves:
            sigma = noise.tracker_sigma * noise.feature_sigma_scale.get(groove.id, 1.0)
            length = groove.t_max - groove.t_min
            # inset never eats more than a quarter of the groove per end
            inset_lo = min(rng.uniform(0.0, 1.0) * noise.extent_inset, 0.25 * length)
            inset_hi = min(rng.uniform(0.0, 1.0) * noise.extent_inset, 0.25 * length)
            t0 = groove.t_min + inset_lo
            t1 = groove.t_max - inset_hi
            ts = np.linspace(t0, t1, points_per_groove)
            spacing = (t1 - t0) / (points_per_groove - 1)
            jitter = rng.uniform(-1.0, 1.0, points_per_groove - 2)
            ts[1:-1] += jitter * (noise.along_jitter * spacing)
            pts = to_marker.transform_points(groove.line.points_at(ts))
            pts = pts + rng.normal(size=pts.shape) * sigma
            clouds[groove.id] = pts
        return DigitizationSet(
            clouds, attachment=scene.attachment.name, points_per_groove=points_per_groove
        )

    assert isinstance(model, PointLandmarkModel)
    for lid, point in model.landmarks:
        sigma = noise.tracker_sigma * noise.feature_sigma_scale.get(lid, 1.0)
        offset = _uniform_in_ball(rng, noise.touch_offset)
        center = to_marker.transform_points(point.as_array()[None, :])[0] + offset
        touches = center + rng.normal(size=(touches_per_landmark, 3)) * sigma
        clouds[lid] = touches
    return DigitizationSet(clouds, attachment=scene.attachment.name)


def simulate_pose_stream(
    scene: SceneTruth,
    ws: WorkspaceSpec,
    noise: NoiseSpec,
    rng: np.random.Generator | None = None,
) -> list[PoseSample]:
    """Robot/marker pose samples across a workspace.

    End-effector positions are uniform in the workspace sphere; orientations
    are random roll/pitch/yaw within the orientation range. The reported
    robot pose carries robot noise; the marker pose follows the physical
    chain (camera_to_base * pose * hand-eye) with tracker-level pose noise.
    A concrete ``base_offset`` on the workspace shifts the physical pose
    relative to the reported one, emulating pose-dependent fixation error.
    """
    if rng is None:
        rng = np.random.default_rng(noise.seed)
    offset = ws.base_offset
    if isinstance(offset, str):
        raise ValueError(
            "workspace base_offset is symbolic; resolve it via run_experiment_campaign"
        )
    samples = []
    for _ in range(ws.n_poses):
        pos = ws.center.as_array() + _uniform_in_ball(rng, ws.diameter / 2.0)
        rpy = rng.uniform(-ws.orientation_range, ws.orientation_range, 3)
        true_pose = RigidTransform(rotation_from_rpy_deg(*rpy), pos)

        robot_rpy = rng.normal(size=3) * noise.robot_rotation_sigma
        robot_dt = rng.normal(size=3) * noise.robot_translation_sigma
        robot_pose = RigidTransform(
            true_pose.rotation @ rotation_from_rpy_deg(*robot_rpy),
            true_pose.translation + robot_dt,
        )

        physical = compose(true_pose, offset) if offset is not None else true_pose
        marker_exact = compose(scene.camera_to_base, compose(physical, scene.true_handeye))
        marker_rpy = rng.normal(size=3) * noise.tracker_rotation_sigma
        marker_dt = rng.normal(size=3) * noise.tracker_sigma
        marker_pose = RigidTransform(
            marker_exact.rotation @ rotation_from_rpy_deg(*marker_rpy),
            marker_exact.translation + marker_dt,
        )
        samples.append(PoseSample(robot_pose=robot_pose, marker_pose=marker_pose))
    return samples


@dataclass(eq=False)
class TrialReport:
    """Archived record of one calibration trial; carries everything the
    metrics module needs to recompute every table."""

    method: str
    workspace: str
    index: int
    rotation: list
    translation: list
    rms_residual: float | None = None
    per_feature_residuals: dict[str, list] = field(default_factory=dict)
    line_fit_mean: dict[str, float] = field(default_factory=dict)
    fle_pre_mean: dict[str, float] = field(default_factory=dict)
    fle_post_mean: dict[str, float] = field(default_factory=dict)
    fle_reduction_percent: dict[str, float] = field(default_factory=dict)

    def transform(self) -> RigidTransform:
        return RigidTransform(np.array(self.rotation), np.array(self.translation))

    def to_trial(self) -> CalibrationTrial:
        return CalibrationTrial(
            self.method,
            self.transform(),
            per_feature_residuals={
                fid: np.array(v) for fid, v in self.per_feature_residuals.items()
            } or None,
            metadata={"workspace": self.workspace, "index": self.index},
        )

    def to_dict(self) -> dict:
        return {
            "method": self.method,
            "workspace": self.workspace,
            "index": self.index,
            "rotation": [[float(v) for v in row] for row in self.rotation],
            "translation": [float(v) for v in self.translation],
            "rms_residual": None if self.rms_residual is None else float(self.rms_residual),
            "per_feature_residuals": {
                fid: [float(v) for v in vals] for fid, vals in self.per_feature_residuals.items()
            },
            "line_fit_mean": {k: float(v) for k, v in self.line_fit_mean.items()},
            "fle_pre_mean": {k: float(v) for k, v in self.fle_pre_mean.items()},
            "fle_post_mean": {k: float(v) for k, v in self.fle_post_mean.items()},
            "fle_reduction_percent": {
                k: float(v) for k, v in self.fle_reduction_percent.items()
            },
        }

    @classmethod
    def from_dict(cls, data: dict) -> "TrialReport":
        return cls(
            method=data["method"],
            workspace=data["workspace"],
            index=int(data["index"]),
            rotation=data["rotation"],
            translation=data["translation"],
            rms_residual=data.get("rms_residual"),
            per_feature_residuals=data.get("per_feature_residuals", {}),
            line_fit_mean=data.get("line_fit_mean", {}),
            fle_pre_mean=data.get("fle_pre_mean", {}),
            fle_post_mean=data.get("fle_post_mean", {}),
            fle_reduction_percent=data.get("fle_reduction_percent", {}),
        )


@dataclass(eq=False)
class CampaignReport:
    """Everything one campaign produced, serializable deterministically."""

    campaign: str
    seed: int
    attachment: str
    workspaces: list
    methods: dict[str, int]
    trials: list
    alignment_errors: list = field(default_factory=list)
    summary: dict = field(default_factory=dict)

    def reports_for(self, method: str) -> list:
        return [t for t in self.trials if t.method == method]

    def to_dict(self) -> dict:
        return {
            "campaign": self.campaign,
            "seed": self.seed,
            "attachment": self.attachment,
            "workspaces": list(self.workspaces),
            "methods": dict(self.methods),
            "alignment_errors": [[float(v) for v in row] for row in self.alignment_errors],
            "summary": self.summary,
            "trials": [t.to_dict() for t in self.trials],
        }

    def to_json(self) -> str:
        return json.dumps(self.to_dict(), indent=1)

    @classmethod
    def from_dict(cls, data: dict) -> "CampaignReport":
        return cls(
            campaign=data["campaign"],
            seed=int(data["seed"]),
            attachment=data["attachment"],
            workspaces=list(data["workspaces"]),
            methods={k: int(v) for k, v in data["methods"].items()},
            trials=[TrialReport.from_dict(t) for t in data["trials"]],
            alignment_errors=data.get("alignment_errors", []),
            summary=data.get("summary", {}),
        )

    @classmethod
    def from_json(cls, text: str) -> "CampaignReport":
        return cls.from_dict(json.loads(text))


def _auto_offset(rng: np.random.Generator, workspace_index: int) -> RigidTransform | None:
    """Deterministic per-workspace fixation offset: 8 mm and 0.15 deg per
    workspace step, in random directions. The first workspace gets none, so
    pairwise offsets differ by at least one step."""
    direction = rng.normal(size=3)
    direction /= np.linalg.norm(direction)
    axis = rng.normal(size=3)
    axis /= np.linalg.norm(axis)
    if workspace_index == 0:
        return None
    magnitude = 8.0 * workspace_index
    angle = 0.15 * workspace_index
    return RigidTransform(rotation_from_axis_angle_deg(axis, angle), direction * magnitude)


def _resolve_workspaces(config: ExperimentConfig, rng: np.random.Generator):
    resolved = {}
    for k, (name, ws) in enumerate(config.workspaces.items()):
        if isinstance(ws.base_offset, str):
            if ws.base_offset != AUTO_OFFSET:
                raise ConfigInvalid(f"workspace {name!r}: unknown base_offset {ws.base_offset!r}")
            resolved[name] = replace(ws, base_offset=_auto_offset(rng, k))
        else:
            resolved[name] = ws
    return resolved


def _gbec_trial_report(config, ws_name, index, rng) -> TrialReport:
    scene = config.scene
    dig = simulate_digitization(
        scene,
        config.noise,
        config.digitization.points_per_groove,
        config.digitization.touches_per_landmark,
        rng,
    )
    trial = run_gbec(scene.attachment, dig)
    report = TrialReport(
        method=GBEC,
        workspace=ws_name,
        index=index,
        rotation=[list(map(float, row)) for row in trial.result.rotation],
        translation=[float(v) for v in trial.result.translation],
        rms_residual=float(trial.registration.rms_residual),
        per_feature_residuals={
            fid: [float(v) for v in vals]
            for fid, vals in trial.per_feature_residuals.items()
        },
    )
    if trial.line_fits:
        report.line_fit_mean = {
            fid: float(fit.mean_distance) for fid, fit in trial.line_fits.items()
        }
        fle = metrics.fle_report(trial, scene.attachment, dig)
        report.fle_pre_mean = {k: float(v.mean()) for k, v in fle.pre_correction.items()}
        report.fle_post_mean = {k: float(v.mean()) for k, v in fle.post_correction.items()}
        report.fle_reduction_percent = {k: float(v) for k, v in fle.reduction_percent.items()}
    return report


def _axxb_trial_report(config, ws_name, ws: WorkspaceSpec, index, rng) -> TrialReport:
    poses = simulate_pose_stream(config.scene, ws, config.noise, rng)
    pairs = build_motion_pairs(poses, config.methods[AXXB].pairing)
    trial = solve_axxb(pairs)
    return TrialReport(
        method=AXXB,
        workspace=ws_name,
        index=index,
        rotation=[list(map(float, row)) for row in trial.result.rotation],
        translation=[float(v) for v in trial.result.translation],
        rms_residual=float(np.sqrt(np.mean(trial.axxb.translation_residual_mm**2))),
    )


def _summarize(config: ExperimentConfig, trials: list, alignment_errors: list) -> dict:
    summary: dict = {"repeatability": {}}
    by_method: dict[str, list] = {}
    for rep in trials:
        by_method.setdefault(rep.method, []).append(rep)
    for method, reports in by_method.items():
        if len(reports) >= 2:
            r = metrics.repeatability([rep.to_trial() for rep in reports])
            summary["repeatability"][method] = {
                "translation_std_mm": [float(v) for v in r.translation_std],
                "rotation_std_deg": [float(v) for v in r.rotation_std],
                "n_trials": r.n_trials,
                "outliers_removed": r.outliers_removed,
            }
    gbec_reports = by_method.get(GBEC, [])
    if gbec_reports:
        res = metrics.residual_summary([rep.to_trial() for rep in gbec_reports])
        summary["residuals"] = {
            "overall_mean_mm": res.overall_mean,
            "overall_std_mm": res.overall_std,
            "per_feature": {
                fid: {"mean_mm": s.mean, "std_mm": s.std, "n": s.n}
                for fid, s in res.per_feature.items()
            },
        }
        if any(rep.fle_pre_mean for rep in gbec_reports):
            fids = list(gbec_reports[0].fle_pre_mean.keys())
            fle: dict = {}
            for fid in fids:
                pre = float(np.mean([rep.fle_pre_mean[fid] for rep in gbec_reports]))
                post = float(np.mean([rep.fle_post_mean[fid] for rep in gbec_reports]))
                reduction = 100.0 * (pre - post) / pre if pre > 0 else 0.0
                fle[fid] = {
                    "pre_mean_mm": pre,
                    "post_mean_mm": post,
                    "reduction_percent": reduction,
                }
            summary["fle"] = fle
    if len(config.workspaces) >= 2:
        ws_summary: dict = {}
        for method, reports in by_method.items():
            grouped: dict[str, list] = {}
            for rep in reports:
                grouped.setdefault(rep.workspace, []).append(rep.to_trial())
            if len(grouped) >= 2 and all(len(v) >= 1 for v in grouped.values()):
                w = metrics.workspace_summary(grouped)
                ws_summary[method] = {
                    "combined_range": [float(v) for v in w.combined_range],
                    "centroid_separation_min_mm": w.centroid_separation_min,
                    "centroid_separation_max_mm": w.centroid_separation_max,
                    "within_spread_max_mm": w.within_spread_max,
                    "per_workspace_range": {
                        ws: [float(v) for v in r] for ws, r in w.per_workspace_range.items()
                    },
                }
        if ws_summary:
            summary["workspace"] = ws_summary
    if alignment_errors:
        table = metrics.alignment_table(alignment_errors)
        summary["alignment"] = {
            "axes": list(metrics.AlignmentTable.AXES),
            "mean": [float(v) for v in table.mean],
            "std": [float(v) for v in table.std],
            "n": table.n,
        }
    return summary


def run_experiment_campaign(config: ExperimentConfig) -> CampaignReport:
    """Execute every configured trial with per-trial derived seeds.

    Deterministic: the master seed fixes the workspace offsets, every
    trial's random stream and the alignment targets, so re-running an
    identical config reproduces the report byte for byte.
    """
    master = np.random.SeedSequence(config.seed)
    offsets_ss, targets_ss = master.spawn(2)
    workspaces = _resolve_workspaces(config, np.random.default_rng(offsets_ss))

    total = sum(plan.trials for plan in config.methods.values()) * len(workspaces)
    children = master.spawn(total)

    trials: list[TrialReport] = []
    child_idx = 0
    for method, plan in config.methods.items():
        for ws_name, ws in workspaces.items():
            for index in range(plan.trials):
                rng = np.random.default_rng(children[child_idx])
                child_idx += 1
                try:
                    if method == GBEC:
                        trials.append(_gbec_trial_report(config, ws_name, index, rng))
                    else:
                        trials.append(_axxb_trial_report(config, ws_name, ws, index, rng))
                except GbecError as exc:
                    raise type(exc)(
                        f"{method} trial {index} in workspace {ws_name!r}: {exc}"
                    ) from exc

    alignment_errors: list[list[float]] = []
    gbec_reports = [t for t in trials if t.method == GBEC]
    if config.n_alignments > 0 and gbec_reports:
        trng = np.random.default_rng(targets_ss)
        first_ws = next(iter(workspaces.values()))
        for j in range(config.n_alignments):
            target = RigidTransform(
                random_rotation(trng, 30.0),
                first_ws.center.as_array() + _uniform_in_ball(trng, first_ws.diameter / 2.0),
            )
            estimated = gbec_reports[j % len(gbec_reports)].transform()
            dt, dr = alignment_error(estimated, config.scene.true_handeye, target)
            alignment_errors.append([float(v) for v in np.concatenate([dt, dr])])

    return CampaignReport(
        campaign=config.campaign,
        seed=config.seed,
        attachment=config.scene.attachment.name,
        workspaces=list(workspaces.keys()),
        methods={m: plan.trials for m, plan in config.methods.items()},
        trials=trials,
        alignment_errors=alignment_errors,
        summary=_summarize(config, trials, alignment_errors),
    )
