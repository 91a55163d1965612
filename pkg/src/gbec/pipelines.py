"""End-to-end calibration procedures.

Two routes to the same hand-eye transform (end-effector frame from marker
frame):

* the geometric route: digitize grooves or landmarks in the marker frame,
  fit lines, resample them, and run paired-point registration against the
  model geometry; and
* the relative-motion baseline: collect (robot pose, marker pose) samples,
  form motion pairs and solve the AX=XB equations with the classical
  Tsai-Lenz two-stage method.

Frame conventions: robot_pose maps end-effector coordinates into the robot
base frame; marker_pose maps marker coordinates into the camera frame. With
A_k the marker relative motion and B_k the robot relative motion of pair k,
the hand-eye X satisfies B_k X = X A_k, which is the arrangement the solver
uses so that both routes return the same transform.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field

import numpy as np

from .errors import (
    DegenerateGeometry,
    InsufficientMotion,
    MissingFeature,
    SingularSystem,
)
from .geometry import (
    PointCloud,
    RigidTransform,
    compose,
    invert,
    nearest_rotation,
    rotation_angle_between,
    rotation_to_rpy_deg,
    rotation_to_rotvec_deg,
    skew,
)
from .models import AttachmentSpec, GrooveModel, PointLandmarkModel
from .registration import (
    LineFitResult,
    RegistrationResult,
    fit_line,
    line_parameters,
    sample_line_segment,
    solve_paired_point,
)

GBEC = "gbec"
AXXB = "axxb"

# Motion pairs whose relative rotation is below this angle carry no usable
# axis information; axes of the remaining pairs must not all be parallel.
MIN_PAIR_ROTATION_DEG = 0.5
PARALLEL_AXES_TOL_DEG = 1.0


@dataclass(frozen=True, eq=False)
class DigitizationSet:
    """Raw digitized point clouds per feature, in the marker frame."""

    clouds: dict[str, np.ndarray]
    attachment: str = ""
    frame: str = "coilRef"
    points_per_groove: int | None = None

    def __post_init__(self) -> None:
        frozen: dict[str, np.ndarray] = {}
        for fid, cloud in self.clouds.items():
            arr = np.asarray(cloud, dtype=float)
            if arr.ndim != 2 or arr.shape[1] != 3 or arr.shape[0] < 1:
                raise ValueError(f"feature {fid!r}: cloud must be (N>=1, 3), got {arr.shape}")
            if not np.isfinite(arr).all():
                raise ValueError(f"feature {fid!r}: cloud contains non-finite coordinates")
            arr = arr.copy()
            arr.flags.writeable = False
            frozen[fid] = arr
        object.__setattr__(self, "clouds", frozen)


@dataclass(frozen=True, eq=False)
class PoseSample:
    """One simultaneous observation: robot pose (base from end-effector
    coordinates) and marker pose (camera from marker coordinates)."""

    robot_pose: RigidTransform
    marker_pose: RigidTransform


@dataclass(frozen=True, eq=False)
class AxxbDiagnostics:
    """Per-pair consistency residuals of a solved AX=XB problem."""

    rotation_residual_deg: np.ndarray
    translation_residual_mm: np.ndarray
    n_pairs: int


@dataclass(eq=False)
class CalibrationTrial:
    """One calibration outcome: the hand-eye transform plus diagnostics."""

    method: str
    result: RigidTransform
    registration: RegistrationResult | None = None
    per_feature_residuals: dict[str, np.ndarray] | None = None
    line_fits: dict[str, LineFitResult] | None = None
    axxb: AxxbDiagnostics | None = None
    metadata: dict = field(default_factory=dict)


def _check_features(spec: AttachmentSpec, dig: DigitizationSet) -> None:
    spec_ids = set(spec.feature_ids())
    dig_ids = set(dig.clouds.keys())
    missing = sorted(spec_ids - dig_ids)
    if missing:
        raise MissingFeature(f"no digitization for feature(s): {', '.join(missing)}")
    unknown = sorted(dig_ids - spec_ids)
    if unknown:
        raise MissingFeature(
            f"digitization contains feature(s) not in attachment {spec.name!r}: {', '.join(unknown)}"
        )


def run_gbec(spec: AttachmentSpec, dig: DigitizationSet, metadata: dict | None = None) -> CalibrationTrial:
    """Geometric calibration: model features vs. their digitizations.

    Grooves: each digitized cloud is reduced to a total-least-squares line,
    resampled at the model's per-groove count over the digitized extent
    (projections of the first and last touched points), and paired index to
    index with the same count of evenly spaced points on the model groove.
    Point landmarks: repeated touches are averaged per landmark. Either way
    the paired clouds go through one rigid registration whose transform maps
    marker-frame coordinates into the end-effector frame.
    """
    _check_features(spec, dig)
    if isinstance(spec.model, GrooveModel):
        n = spec.model.samples_per_groove
        model_blocks: list[np.ndarray] = []
        measured_blocks: list[np.ndarray] = []
        fits: dict[str, LineFitResult] = {}
        order: list[str] = []
        for groove in spec.model.grooves:
            cloud = dig.clouds[groove.id]
            try:
                fit = fit_line(PointCloud(cloud, dig.frame))
            except DegenerateGeometry as exc:
                raise DegenerateGeometry(f"feature {groove.id!r}: {exc}") from None
            fits[groove.id] = fit
            t_first, t_last = line_parameters(cloud[[0, -1]], fit.line)
            if not t_last > t_first:
                raise DegenerateGeometry(
                    f"feature {groove.id!r}: digitized extent collapsed along the fitted line"
                )
            model_blocks.append(
                sample_line_segment(groove.line, groove.t_min, groove.t_max, n, "eff").points
            )
            measured_blocks.append(
                sample_line_segment(fit.line, t_first, t_last, n, dig.frame).points
            )
            order.append(groove.id)
        reg = solve_paired_point(
            PointCloud(np.vstack(model_blocks), "eff"),
            PointCloud(np.vstack(measured_blocks), dig.frame),
        )
        per_feature = {
            fid: reg.per_point_residuals[i * n:(i + 1) * n] for i, fid in enumerate(order)
        }
        return CalibrationTrial(
            GBEC,
            reg.transform,
            registration=reg,
            per_feature_residuals=per_feature,
            line_fits=fits,
            metadata=dict(metadata or {}),
        )

    model: PointLandmarkModel = spec.model
    measured = np.array([dig.clouds[lid].mean(axis=0) for lid, _ in model.landmarks])
    reg = solve_paired_point(
        PointCloud(model.as_array(), "eff"), PointCloud(measured, dig.frame)
    )
    per_feature = {
        lid: reg.per_point_residuals[i:i + 1] for i, (lid, _) in enumerate(model.landmarks)
    }
    return CalibrationTrial(
        GBEC,
        reg.transform,
        registration=reg,
        per_feature_residuals=per_feature,
        metadata=dict(metadata or {}),
    )


def _pair_indices(count: int, scheme: str) -> list[tuple[int, int]]:
    if scheme == "consecutive":
        return [(i, i + 1) for i in range(count - 1)]
    if scheme == "all":
        return [(i, j) for i in range(count) for j in range(i + 1, count)]
    raise ValueError(f"unknown pairing scheme {scheme!r}")


def _rotation_axes_deg(rotations) -> list[np.ndarray]:
    """Unit axes of rotations whose angle exceeds MIN_PAIR_ROTATION_DEG."""
    axes = []
    for r in rotations:
        v = rotation_to_rotvec_deg(r)
        angle = float(np.linalg.norm(v))
        if angle > MIN_PAIR_ROTATION_DEG:
            axes.append(v / angle)
    return axes


def _require_axis_diversity(rotations) -> None:
    axes = _rotation_axes_deg(rotations)
    if len(axes) < 2:
        raise InsufficientMotion(
            "fewer than 2 motion pairs with usable rotation; add poses with distinct orientations"
        )
    best = 0.0
    for i in range(len(axes)):
        for j in range(i + 1, len(axes)):
            c = min(1.0, abs(float(axes[i] @ axes[j])))
            best = max(best, math.degrees(math.acos(c)))
    if best < PARALLEL_AXES_TOL_DEG:
        raise InsufficientMotion(
            f"relative rotation axes are parallel within {PARALLEL_AXES_TOL_DEG} deg"
        )


def build_motion_pairs(
    samples, scheme: str = "consecutive"
) -> list[tuple[RigidTransform, RigidTransform]]:
    """Relative-motion pairs (A, B) from pose samples.

    A = marker_pose_i^-1 marker_pose_j (marker motion, camera data) and
    B = robot_pose_i^-1 robot_pose_j (end-effector motion). For exact data
    the hand-eye X satisfies B A-conjugacy: B X = X A for every pair.
    """
    samples = list(samples)
    if len(samples) < 3:
        raise InsufficientMotion(f"need at least 3 pose samples, got {len(samples)}")
    pairs = []
    for i, j in _pair_indices(len(samples), scheme):
        a = compose(invert(samples[i].marker_pose), samples[j].marker_pose)
        b = compose(invert(samples[i].robot_pose), samples[j].robot_pose)
        pairs.append((a, b))
    _require_axis_diversity([b.rotation for _, b in pairs])
    return pairs


def _tsai_vector(rotation: np.ndarray) -> np.ndarray:
    """2 sin(theta/2) * axis of a rotation matrix (zero for the identity)."""
    v = np.radians(rotation_to_rotvec_deg(rotation))
    angle = float(np.linalg.norm(v))
    if angle == 0.0:
        return np.zeros(3)
    return 2.0 * math.sin(angle / 2.0) * (v / angle)


def solve_axxb(pairs, metadata: dict | None = None) -> CalibrationTrial:
    """Tsai-Lenz two-stage solution of the motion-pair equations.

    Stage 1 solves the stacked linear system
    ``skew(p_B + p_A) p' = p_A - p_B`` for the modified axis vector of the
    hand-eye rotation, then recovers the rotation in closed form and
    re-projects it onto the nearest proper rotation. Stage 2 solves
    ``(R_B - I) t = R_X t_A - t_B`` by least squares for the translation.
    """
    pairs = list(pairs)
    if len(pairs) < 2:
        raise InsufficientMotion(f"need at least 2 motion pairs, got {len(pairs)}")
    _require_axis_diversity([b.rotation for _, b in pairs])

    rows = []
    rhs = []
    for a, b in pairs:
        pa = _tsai_vector(a.rotation)
        pb = _tsai_vector(b.rotation)
        rows.append(skew(pb + pa))
        rhs.append(pa - pb)
    m = np.vstack(rows)
    v = np.concatenate(rhs)
    p_prime, _, rank, _ = np.linalg.lstsq(m, v, rcond=None)
    if rank < 3:
        raise InsufficientMotion("rotation system is rank deficient; motion axes too similar")
    p = 2.0 * p_prime / math.sqrt(1.0 + float(p_prime @ p_prime))
    n2 = float(p @ p)
    r = (1.0 - n2 / 2.0) * np.eye(3) + 0.5 * (
        np.outer(p, p) + math.sqrt(max(0.0, 4.0 - n2)) * skew(p)
    )
    r = nearest_rotation(r)

    c_rows = []
    d_rhs = []
    for a, b in pairs:
        c_rows.append(b.rotation - np.eye(3))
        d_rhs.append(r @ a.translation - b.translation)
    c = np.vstack(c_rows)
    d = np.concatenate(d_rhs)
    t, _, rank, _ = np.linalg.lstsq(c, d, rcond=None)
    if rank < 3:
        raise SingularSystem("translation system is rank deficient")

    x = RigidTransform(r, t)
    rot_res = []
    trans_res = []
    for a, b in pairs:
        left = compose(b, x)
        right = compose(x, a)
        rot_res.append(rotation_angle_between(left, right))
        trans_res.append(float(np.linalg.norm(left.translation - right.translation)))
    diag = AxxbDiagnostics(np.array(rot_res), np.array(trans_res), len(pairs))
    return CalibrationTrial(AXXB, x, axxb=diag, metadata=dict(metadata or {}))


def alignment_error(
    estimated: RigidTransform, truth: RigidTransform, target_tool_pose: RigidTransform
) -> tuple[np.ndarray, np.ndarray]:
    """Per-axis pose error of an alignment done with a miscalibrated tool.

    When the controller believes ``estimated`` but physics obeys ``truth``,
    the achieved tool pose is target * estimated^-1 * truth. Returns the
    translation deltas (mm) and roll/pitch/yaw deltas (deg) of the achieved
    pose relative to the target, expressed in the target frame's axes.
    """
    achieved = compose(target_tool_pose, compose(invert(estimated), truth))
    delta = compose(invert(target_tool_pose), achieved)
    rx, ry, rz = rotation_to_rpy_deg(delta.rotation)
    return delta.translation.copy(), np.array([rx, ry, rz])
