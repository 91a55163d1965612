"""File formats: digitization records, pose streams, transform records,
experiment configs and trial archives.

Digitization and pose files are headered tab-separated records; configs,
attachment specs and transform records use the hierarchical key-value
format from :mod:`gbec.textformat`. Floats are written with ``repr`` so
every artifact round-trips to an exactly equal value. All writes go through
a write-then-rename so failures never leave partial output.
"""

from __future__ import annotations

import json
import os
from dataclasses import dataclass, field
from importlib import resources

import numpy as np

from . import textformat
from .errors import ConfigInvalid
from .geometry import Point3, RigidTransform
from .models import load_attachment
from .pipelines import DigitizationSet, PoseSample
from .simulator import (
    CampaignReport,
    DigitizationPlan,
    ExperimentConfig,
    MethodPlan,
    NoiseSpec,
    SceneTruth,
    TrialReport,
    WorkspaceSpec,
)
from .textformat import atomic_write_text, format_float, format_floats

BUILTIN_PREFIX = "builtin:"
BUILTIN_CONFIGS = ("tms57", "femoroplasty39", "ws3")

DIGITIZATION_MAGIC = "# gbec digitization v1"
POSES_MAGIC = "# gbec poses v1"


def digitization_to_text(dig: DigitizationSet) -> str:
    lines = [DIGITIZATION_MAGIC]
    lines.append(f"attachment: {dig.attachment}")
    lines.append(f"frame: {dig.frame}")
    if dig.points_per_groove is not None:
        lines.append(f"points_per_groove: {dig.points_per_groove}")
    lines.append("columns: feature\tpoint\tx_mm\ty_mm\tz_mm")
    for fid, cloud in dig.clouds.items():
        for i, p in enumerate(cloud):
            lines.append(f"{fid}\t{i}\t{format_float(p[0])}\t{format_float(p[1])}\t{format_float(p[2])}")
    return "\n".join(lines) + "\n"


def digitization_from_text(text: str, source: str = "<digitization>") -> DigitizationSet:
    attachment = ""
    frame = "coilRef"
    points_per_groove = None
    clouds: dict[str, list] = {}
    counts: dict[str, int] = {}
    in_records = False
    for lineno, raw in enumerate(text.splitlines(), start=1):
        line = raw.strip()
        if not line or line.startswith("#"):
            continue
        if not in_records:
            key, sep, value = line.partition(":")
            if not sep:
                raise ConfigInvalid(f"{source}:{lineno}: expected 'key: value' in header")
            key = key.strip()
            value = value.strip()
            if key == "attachment":
                attachment = value
            elif key == "frame":
                frame = value
            elif key == "points_per_groove":
                try:
                    points_per_groove = int(value)
                except ValueError:
                    raise ConfigInvalid(
                        f"{source}:{lineno}: points_per_groove must be an integer"
                    ) from None
            elif key == "columns":
                in_records = True
            else:
                raise ConfigInvalid(f"{source}:{lineno}: unknown header key {key!r}")
            continue
        parts = line.split("\t") if "\t" in line else line.split()
        if len(parts) != 5:
            raise ConfigInvalid(f"{source}:{lineno}: expected 5 fields, got {len(parts)}")
        fid, idx, x, y, z = parts
        try:
            idx = int(idx)
            point = [float(x), float(y), float(z)]
        except ValueError:
            raise ConfigInvalid(f"{source}:{lineno}: malformed record") from None
        expected = counts.get(fid, 0)
        if idx != expected:
            raise ConfigInvalid(
                f"{source}:{lineno}: point index {idx} out of order for feature {fid!r} (expected {expected})"
            )
        counts[fid] = expected + 1
        clouds.setdefault(fid, []).append(point)
    if not clouds:
        raise ConfigInvalid(f"{source}: no digitized points")
    try:
        return DigitizationSet(
            {fid: np.array(pts) for fid, pts in clouds.items()},
            attachment=attachment,
            frame=frame,
            points_per_groove=points_per_groove,
        )
    except ValueError as exc:  # e.g. nan/inf coordinates in the records
        raise ConfigInvalid(f"{source}: {exc}") from None


def write_digitization(path, dig: DigitizationSet) -> None:
    atomic_write_text(path, digitization_to_text(dig))


def read_digitization(path) -> DigitizationSet:
    with open(path, "r", encoding="utf-8") as fh:
        return digitization_from_text(fh.read(), source=str(path))


def _transform_fields(t: RigidTransform) -> str:
    vals = list(t.rotation.reshape(9)) + list(t.translation)
    return "\t".join(format_float(v) for v in vals)


def _transform_from_fields(vals) -> RigidTransform:
    vals = [float(v) for v in vals]
    return RigidTransform(np.array(vals[:9]).reshape(3, 3), np.array(vals[9:12]))


def poses_to_text(samples) -> str:
    lines = [POSES_MAGIC]
    lines.append("columns: robot rotation (9, row-major) + translation (3), then marker likewise")
    for s in samples:
        lines.append(_transform_fields(s.robot_pose) + "\t" + _transform_fields(s.marker_pose))
    return "\n".join(lines) + "\n"


def poses_from_text(text: str, source: str = "<poses>") -> list[PoseSample]:
    samples = []
    for lineno, raw in enumerate(text.splitlines(), start=1):
        line = raw.strip()
        if not line or line.startswith("#") or line.startswith("columns:"):
            continue
        parts = line.split()
        if len(parts) != 24:
            raise ConfigInvalid(f"{source}:{lineno}: expected 24 numbers, got {len(parts)}")
        try:
            robot = _transform_from_fields(parts[:12])
            marker = _transform_from_fields(parts[12:])
        except ValueError as exc:
            raise ConfigInvalid(f"{source}:{lineno}: bad pose record ({exc})") from None
        samples.append(PoseSample(robot_pose=robot, marker_pose=marker))
    if not samples:
        raise ConfigInvalid(f"{source}: no pose samples")
    return samples


def write_poses(path, samples) -> None:
    atomic_write_text(path, poses_to_text(samples))


def read_poses(path) -> list[PoseSample]:
    with open(path, "r", encoding="utf-8") as fh:
        return poses_from_text(fh.read(), source=str(path))


@dataclass(eq=False)
class TransformRecord:
    """Serializable calibration result: transform, fit quality, metadata."""

    transform: RigidTransform
    method: str = "gbec"
    rms_residual: float | None = None
    metadata: dict = field(default_factory=dict)


def transform_record_to_text(rec: TransformRecord) -> str:
    body: dict = {"method": rec.method}
    body["rotation"] = {
        f"row_{i + 1}": format_floats(rec.transform.rotation[i]) for i in range(3)
    }
    body["translation_mm"] = format_floats(rec.transform.translation)
    if rec.rms_residual is not None:
        body["rms_residual_mm"] = format_float(rec.rms_residual)
    if rec.metadata:
        body["metadata"] = {k: str(v) for k, v in rec.metadata.items()}
    return textformat.dump_text(body, header="calibration transform")


def transform_record_from_text(text: str, source: str = "<transform>") -> TransformRecord:
    root = textformat.parse_text(text, source)
    root.require_only({"method", "rotation", "translation_mm", "rms_residual_mm", "metadata"})
    rotation_section = root.section("rotation", required=True)
    rows = [rotation_section.get_floats(f"row_{i + 1}", 3, required=True) for i in range(3)]
    translation = root.get_floats("translation_mm", 3, required=True)
    try:
        transform = RigidTransform(np.array(rows), np.array(translation))
    except ValueError as exc:
        raise ConfigInvalid(f"{source}: invalid transform ({exc})") from None
    meta_section = root.section("metadata", required=False)
    metadata = (
        {k: meta_section.get_str(k) for k in meta_section.keys()} if meta_section else {}
    )
    return TransformRecord(
        transform,
        method=root.get_str("method", "gbec"),
        rms_residual=root.get_float("rms_residual_mm"),
        metadata=metadata,
    )


def write_transform_record(path, rec: TransformRecord) -> None:
    atomic_write_text(path, transform_record_to_text(rec))


def read_transform_record(path) -> TransformRecord:
    with open(path, "r", encoding="utf-8") as fh:
        return transform_record_from_text(fh.read(), source=str(path))


def archive_to_text(reports) -> str:
    return "".join(json.dumps(r.to_dict()) + "\n" for r in reports)


def write_archive(path, reports) -> None:
    atomic_write_text(path, archive_to_text(reports))


def read_archive(path) -> list[TrialReport]:
    reports = []
    with open(path, "r", encoding="utf-8") as fh:
        for lineno, line in enumerate(fh, start=1):
            line = line.strip()
            if not line:
                continue
            try:
                reports.append(TrialReport.from_dict(json.loads(line)))
            except (json.JSONDecodeError, KeyError) as exc:
                raise ConfigInvalid(f"{path}:{lineno}: bad archive record ({exc})") from None
    return reports


def write_campaign_report(path, report: CampaignReport) -> None:
    atomic_write_text(path, report.to_json() + "\n")


def read_campaign_report(path) -> CampaignReport:
    with open(path, "r", encoding="utf-8") as fh:
        return CampaignReport.from_json(fh.read())


def _parse_transform_section(node) -> RigidTransform:
    node.require_only({"translation_mm", "rotation_rpy_deg"})
    translation = node.get_floats("translation_mm", 3, required=True)
    rpy = node.get_floats("rotation_rpy_deg", 3)
    if rpy is None:
        rpy = [0.0, 0.0, 0.0]
    return RigidTransform.from_rpy_deg(rpy, translation)


def _parse_noise(node, default_seed: int) -> NoiseSpec:
    if node is None:
        return NoiseSpec(seed=default_seed)
    node.require_only(
        {
            "tracker_sigma_mm",
            "tracker_rotation_sigma_deg",
            "robot_translation_sigma_mm",
            "robot_rotation_sigma_deg",
            "extent_inset_mm",
            "along_jitter_frac",
            "touch_offset_mm",
            "feature_sigma_scale",
        }
    )
    defaults = NoiseSpec()
    scale_section = node.section("feature_sigma_scale", required=False)
    scales = (
        {fid: scale_section.get_float(fid, required=True) for fid in scale_section.keys()}
        if scale_section
        else {}
    )
    try:
        return NoiseSpec(
            tracker_sigma=node.get_float("tracker_sigma_mm", defaults.tracker_sigma),
            tracker_rotation_sigma=node.get_float(
                "tracker_rotation_sigma_deg", defaults.tracker_rotation_sigma
            ),
            robot_translation_sigma=node.get_float(
                "robot_translation_sigma_mm", defaults.robot_translation_sigma
            ),
            robot_rotation_sigma=node.get_float(
                "robot_rotation_sigma_deg", defaults.robot_rotation_sigma
            ),
            extent_inset=node.get_float("extent_inset_mm", defaults.extent_inset),
            along_jitter=node.get_float("along_jitter_frac", defaults.along_jitter),
            touch_offset=node.get_float("touch_offset_mm", defaults.touch_offset),
            feature_sigma_scale=scales,
            seed=default_seed,
        )
    except ValueError as exc:
        raise ConfigInvalid(f"{node.where()}: {exc}") from None


def _parse_workspace(name: str, node) -> WorkspaceSpec:
    node.require_only(
        {"center_mm", "diameter_mm", "orientation_range_deg", "n_poses", "base_offset"}
    )
    center = node.get_floats("center_mm", 3, required=True)
    offset_raw = node.get_str("base_offset", "none")
    if offset_raw == "none":
        offset = None
    elif offset_raw == "auto":
        offset = "auto"
    else:
        vals = offset_raw.split()
        if len(vals) != 6:
            raise ConfigInvalid(
                f"{node.children['base_offset'].where()}: base_offset must be 'none', 'auto' "
                f"or six numbers 'dx dy dz rx ry rz'"
            )
        try:
            nums = [float(v) for v in vals]
        except ValueError:
            raise ConfigInvalid(
                f"{node.children['base_offset'].where()}: base_offset numbers malformed"
            ) from None
        offset = RigidTransform.from_rpy_deg(nums[3:], nums[:3])
    try:
        return WorkspaceSpec(
            center=Point3.from_array(center),
            diameter=node.get_float("diameter_mm", 400.0),
            orientation_range=node.get_float("orientation_range_deg", 15.0),
            n_poses=node.get_int("n_poses", 50),
            base_offset=offset,
        )
    except ValueError as exc:
        raise ConfigInvalid(f"{node.where()}: workspace {name!r}: {exc}") from None


def load_experiment_config(ref) -> ExperimentConfig:
    """Load and schema-validate an experiment config from a path or a
    ``builtin:<name>`` reference. Raises ConfigInvalid with file:line
    diagnostics before any computation happens."""
    ref = str(ref)
    if ref.startswith(BUILTIN_PREFIX):
        name = ref[len(BUILTIN_PREFIX):]
        if name not in BUILTIN_CONFIGS:
            raise ConfigInvalid(f"unknown builtin config {name!r}; have {BUILTIN_CONFIGS}")
        text = (resources.files("gbec") / "data" / f"{name}.config").read_text(encoding="utf-8")
        root = textformat.parse_text(text, source=ref)
        base_dir = None
    else:
        root = textformat.parse_file(ref)
        base_dir = os.path.dirname(os.path.abspath(ref))

    root.require_only(
        {
            "campaign",
            "seed",
            "output",
            "scene",
            "noise",
            "digitization",
            "workspaces",
            "methods",
            "alignment",
        }
    )
    campaign = root.get_str("campaign", required=True)
    seed = root.get_int("seed", required=True)
    output = root.get_str("output")

    scene_node = root.section("scene", required=True)
    scene_node.require_only({"attachment", "handeye", "camera_from_base"})
    attachment_ref = scene_node.get_str("attachment", required=True)
    if not attachment_ref.startswith(BUILTIN_PREFIX) and base_dir is not None:
        if not os.path.isabs(attachment_ref):
            attachment_ref = os.path.join(base_dir, attachment_ref)
    attachment = load_attachment(attachment_ref)
    handeye = _parse_transform_section(scene_node.section("handeye", required=True))
    camera = _parse_transform_section(scene_node.section("camera_from_base", required=True))
    scene = SceneTruth(true_handeye=handeye, camera_to_base=camera, attachment=attachment)

    noise = _parse_noise(root.section("noise", required=False), seed)
    if noise.feature_sigma_scale:
        known = set(attachment.feature_ids())
        for fid in noise.feature_sigma_scale:
            if fid not in known:
                node = root.section("noise").section("feature_sigma_scale")
                raise ConfigInvalid(
                    f"{node.children[fid].where()}: feature_sigma_scale names unknown feature {fid!r}"
                )

    dig_node = root.section("digitization", required=False)
    if dig_node is None:
        digitization = DigitizationPlan()
    else:
        dig_node.require_only({"points_per_groove", "touches_per_landmark"})
        try:
            digitization = DigitizationPlan(
                points_per_groove=dig_node.get_int("points_per_groove", 52),
                touches_per_landmark=dig_node.get_int("touches_per_landmark", 5),
            )
        except ValueError as exc:
            raise ConfigInvalid(f"{dig_node.where()}: {exc}") from None

    ws_node = root.section("workspaces", required=True)
    workspaces = {name: _parse_workspace(name, ws_node.section(name)) for name in ws_node.keys()}

    methods_node = root.section("methods", required=True)
    methods: dict[str, MethodPlan] = {}
    for m in methods_node.keys():
        node = methods_node.section(m)
        node.require_only({"trials", "pairing"})
        try:
            methods[m] = MethodPlan(
                trials=node.get_int("trials", required=True),
                pairing=node.get_str("pairing", "consecutive"),
            )
        except ValueError as exc:
            raise ConfigInvalid(f"{node.where()}: {exc}") from None

    align_node = root.section("alignment", required=False)
    n_alignments = 0
    if align_node is not None:
        align_node.require_only({"n_alignments"})
        n_alignments = align_node.get_int("n_alignments", 0)

    try:
        return ExperimentConfig(
            campaign=campaign,
            seed=seed,
            scene=scene,
            noise=noise,
            workspaces=workspaces,
            methods=methods,
            digitization=digitization,
            n_alignments=n_alignments,
            output=output,
        )
    except ConfigInvalid:
        raise
    except ValueError as exc:
        raise ConfigInvalid(f"{ref}: {exc}") from None
