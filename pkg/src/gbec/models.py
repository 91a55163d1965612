"""Parametric landmark models of end-effector attachments.

Geometry is expressed in the end-effector frame, whose origin coincides
with the flange center by construction. Two families exist: groove models
(linear features digitized as point clouds and reduced to fitted lines)
and point-landmark models (individually touchable landmarks). Both
serialize to the package's hierarchical key-value text format.
"""

from __future__ import annotations

import math
from dataclasses import dataclass
from importlib import resources

import numpy as np

from .errors import (
    BadGeometry,
    ConfigInvalid,
    CountMismatch,
    DegenerateGeometry,
    NonPositiveRadius,
)
from . import textformat
from .geometry import Line3, Point3, rotation_about_z
from .registration import COINCIDENT_ATOL, COLLINEARITY_RTOL

TMS_GROOVE_COUNT = 8
DEFAULT_SAMPLES_PER_GROOVE = 10
DEFAULT_TMS_RADIUS_MM = 40.0
DEFAULT_TMS_GROOVE_HEIGHTS_MM = (0.0, 6.0, 0.0, 6.0, 0.0, 6.0, 0.0, 6.0)
DEFAULT_RDID_LANDMARKS_MM = (
    (25.0, 4.0, 6.0),
    (-12.0, 31.0, 14.0),
    (-24.0, -17.0, 2.0),
    (9.0, -33.0, 22.0),
)

BUILTIN_PREFIX = "builtin:"
BUILTIN_NAMES = ("tms_holder", "rdid")


@dataclass(frozen=True, eq=False)
class Groove:
    """One linear feature: a line in the end-effector frame plus the
    parameter extent of its physical segment."""

    id: str
    line: Line3
    t_min: float
    t_max: float

    def __post_init__(self) -> None:
        if not self.t_max > self.t_min:
            raise BadGeometry(f"groove {self.id!r} has degenerate extent [{self.t_min}, {self.t_max}]")


@dataclass(frozen=True, eq=False)
class GrooveModel:
    grooves: tuple[Groove, ...]
    samples_per_groove: int = DEFAULT_SAMPLES_PER_GROOVE

    def __post_init__(self) -> None:
        ids = [g.id for g in self.grooves]
        if len(set(ids)) != len(ids):
            raise BadGeometry("groove ids must be unique")
        if self.samples_per_groove < 2:
            raise BadGeometry("samples_per_groove must be at least 2")

    def feature_ids(self) -> list[str]:
        return [g.id for g in self.grooves]


def _collinear(points: np.ndarray) -> bool:
    s = np.linalg.svd(points - points.mean(axis=0), compute_uv=False)
    return s[0] <= COINCIDENT_ATOL or s[1] <= COLLINEARITY_RTOL * s[0]


@dataclass(frozen=True, eq=False)
class PointLandmarkModel:
    landmarks: tuple[tuple[str, Point3], ...]

    def __post_init__(self) -> None:
        ids = [lid for lid, _ in self.landmarks]
        if len(set(ids)) != len(ids):
            raise BadGeometry("landmark ids must be unique")
        if len(self.landmarks) < 3:
            raise CountMismatch("point-landmark model needs at least 3 landmarks")
        pts = np.array([p.as_array() for _, p in self.landmarks])
        if _collinear(pts):
            raise DegenerateGeometry("landmarks are collinear")

    def feature_ids(self) -> list[str]:
        return [lid for lid, _ in self.landmarks]

    def as_array(self) -> np.ndarray:
        return np.array([p.as_array() for _, p in self.landmarks])


@dataclass(frozen=True, eq=False)
class AttachmentSpec:
    """Named attachment geometry: either grooves or point landmarks."""

    name: str
    kind: str
    model: GrooveModel | PointLandmarkModel
    radius_mm: float | None = None

    def __post_init__(self) -> None:
        if self.kind not in ("grooves", "points"):
            raise BadGeometry(f"unknown attachment kind {self.kind!r}")
        wants = GrooveModel if self.kind == "grooves" else PointLandmarkModel
        if not isinstance(self.model, wants):
            raise BadGeometry(f"attachment kind {self.kind!r} does not match its model type")

    def feature_ids(self) -> list[str]:
        return self.model.feature_ids()


def circular_landmarks(radius: float, angles_deg, heights_mm) -> PointLandmarkModel:
    """Rim landmarks at (radius cos(theta), radius sin(theta), height)."""
    if radius <= 0:
        raise NonPositiveRadius(f"radius must be positive, got {radius}")
    angles = [float(a) for a in angles_deg]
    heights = [float(h) for h in heights_mm]
    if len(angles) != len(heights):
        raise CountMismatch(f"{len(angles)} angles but {len(heights)} heights")
    if len(angles) < 3:
        raise CountMismatch("need at least 3 landmarks")
    landmarks = []
    for i, (a, h) in enumerate(zip(angles, heights)):
        th = math.radians(a)
        landmarks.append((f"landmark_{i + 1}", Point3(radius * math.cos(th), radius * math.sin(th), h)))
    return PointLandmarkModel(tuple(landmarks))


def tms_holder_model(
    radius: float = DEFAULT_TMS_RADIUS_MM,
    groove_heights=DEFAULT_TMS_GROOVE_HEIGHTS_MM,
    samples_per_groove: int = DEFAULT_SAMPLES_PER_GROOVE,
) -> AttachmentSpec:
    """Circular coil-holder attachment with 8 diametral grooves.

    Groove k runs along the rim diameter at angle k * 22.5 deg and height
    groove_heights[k]; its endpoints are the 16 rim landmarks, so the groove
    lines pass through the landmark pairs at the shared angles.
    """
    if radius <= 0:
        raise NonPositiveRadius(f"radius must be positive, got {radius}")
    heights = [float(h) for h in groove_heights]
    if len(heights) != TMS_GROOVE_COUNT:
        raise BadGeometry(f"expected {TMS_GROOVE_COUNT} groove heights, got {len(heights)}")
    grooves = []
    for k, h in enumerate(heights):
        th = math.radians(22.5 * k)
        direction = np.array([math.cos(th), math.sin(th), 0.0])
        if 2.0 * radius <= COINCIDENT_ATOL:
            raise BadGeometry("groove endpoints coincide")
        grooves.append(Groove(f"groove_{k + 1}", Line3(Point3(0.0, 0.0, h), direction), -radius, radius))
    model = GrooveModel(tuple(grooves), samples_per_groove)
    return AttachmentSpec("tms_holder", "grooves", model, radius_mm=radius)


def tms_holder_landmarks(
    radius: float = DEFAULT_TMS_RADIUS_MM, groove_heights=DEFAULT_TMS_GROOVE_HEIGHTS_MM
) -> PointLandmarkModel:
    """The 16 rim landmarks equivalent to the holder's groove endpoints."""
    heights = [float(h) for h in groove_heights]
    angles = [22.5 * k for k in range(2 * TMS_GROOVE_COUNT)]
    return circular_landmarks(radius, angles, heights + heights)


def _z_rotation_symmetry_angles(pts: np.ndarray, tol: float = 1e-6) -> list[float]:
    """Candidate nontrivial rotation angles about z that could map the set
    onto itself, from pairs sharing cylindrical radius and height."""
    r = np.hypot(pts[:, 0], pts[:, 1])
    ang = np.degrees(np.arctan2(pts[:, 1], pts[:, 0]))
    candidates = set()
    n = len(pts)
    for i in range(n):
        if r[i] <= tol:
            continue
        for j in range(n):
            if i == j:
                continue
            if abs(r[i] - r[j]) <= tol and abs(pts[i, 2] - pts[j, 2]) <= tol:
                delta = (ang[j] - ang[i]) % 360.0
                if tol < delta < 360.0 - tol:
                    candidates.add(round(delta, 9))
    return sorted(candidates)


def _maps_onto_itself(pts: np.ndarray, angle_deg: float, tol: float = 1e-6) -> bool:
    rotated = pts @ rotation_about_z(angle_deg).T
    used = [False] * len(pts)
    for q in rotated:
        hit = False
        for idx, p in enumerate(pts):
            if not used[idx] and np.linalg.norm(q - p) <= tol:
                used[idx] = True
                hit = True
                break
        if not hit:
            return False
    return True


def rdid_model(landmark_coords=DEFAULT_RDID_LANDMARKS_MM) -> AttachmentSpec:
    """Asymmetric 4-landmark drill-guide attachment.

    The landmark set must admit no nontrivial rotation about the flange
    z-axis mapping it onto itself (within 1e-6 mm), so that the registration
    correspondence is unambiguous even without groove direction cues.
    """
    coords = [c.as_array() if isinstance(c, Point3) else np.asarray(c, dtype=float) for c in landmark_coords]
    if len(coords) != 4:
        raise CountMismatch(f"drill-guide model expects exactly 4 landmarks, got {len(coords)}")
    pts = np.array(coords)
    if _collinear(pts):
        raise DegenerateGeometry("landmarks are collinear")
    for angle in _z_rotation_symmetry_angles(pts):
        if _maps_onto_itself(pts, angle):
            raise DegenerateGeometry(
                f"landmark set is rotationally symmetric about z (by {angle} deg)"
            )
    landmarks = tuple((f"landmark_{i + 1}", Point3.from_array(p)) for i, p in enumerate(pts))
    return AttachmentSpec("rdid", "points", PointLandmarkModel(landmarks))


def attachment_to_text(spec: AttachmentSpec) -> str:
    body: dict = {"name": spec.name, "kind": spec.kind}
    if spec.radius_mm is not None:
        body["radius_mm"] = textformat.format_float(spec.radius_mm)
    if spec.kind == "grooves":
        body["samples_per_groove"] = str(spec.model.samples_per_groove)
        grooves: dict = {}
        for g in spec.model.grooves:
            grooves[g.id] = {
                "anchor_mm": textformat.format_floats(g.line.anchor.as_array()),
                "direction": textformat.format_floats(g.line.direction),
                "extent_mm": textformat.format_floats((g.t_min, g.t_max)),
            }
        body["grooves"] = grooves
    else:
        body["landmarks_mm"] = {
            lid: textformat.format_floats(p.as_array()) for lid, p in spec.model.landmarks
        }
    return textformat.dump_text(body, header="end-effector attachment")


def attachment_from_text(text: str, source: str = "<attachment>") -> AttachmentSpec:
    root = textformat.parse_text(text, source)
    root.require_only({"name", "kind", "radius_mm", "samples_per_groove", "grooves", "landmarks_mm"})
    name = root.get_str("name", required=True)
    kind = root.get_str("kind", required=True)
    radius = root.get_float("radius_mm")
    if kind == "grooves":
        section = root.section("grooves", required=True)
        samples = root.get_int("samples_per_groove", DEFAULT_SAMPLES_PER_GROOVE)
        grooves = []
        for gid in section.keys():
            g = section.section(gid)
            g.require_only({"anchor_mm", "direction", "extent_mm"})
            anchor = g.get_floats("anchor_mm", 3, required=True)
            direction = g.get_floats("direction", 3, required=True)
            extent = g.get_floats("extent_mm", 2, required=True)
            try:
                line = Line3.through(Point3.from_array(anchor), direction)
                grooves.append(Groove(gid, line, extent[0], extent[1]))
            except (ValueError, BadGeometry) as exc:
                raise ConfigInvalid(f"{g.where()}: bad groove geometry ({exc})") from None
        try:
            return AttachmentSpec(name, kind, GrooveModel(tuple(grooves), samples), radius_mm=radius)
        except BadGeometry as exc:
            raise ConfigInvalid(f"{source}: {exc}") from None
    if kind == "points":
        section = root.section("landmarks_mm", required=True)
        landmarks = []
        for lid in section.keys():
            coords = section.get_floats(lid, 3, required=True)
            landmarks.append((lid, Point3.from_array(coords)))
        try:
            return AttachmentSpec(name, kind, PointLandmarkModel(tuple(landmarks)), radius_mm=radius)
        except (BadGeometry, CountMismatch, DegenerateGeometry) as exc:
            raise ConfigInvalid(f"{source}: {exc}") from None
    raise ConfigInvalid(f"{source}: unknown attachment kind {kind!r}")


def load_attachment(ref) -> AttachmentSpec:
    """Load an attachment spec from a path or a ``builtin:<name>`` reference."""
    ref = str(ref)
    if ref.startswith(BUILTIN_PREFIX):
        name = ref[len(BUILTIN_PREFIX):]
        if name not in BUILTIN_NAMES:
            raise ConfigInvalid(f"unknown builtin attachment {name!r}; have {BUILTIN_NAMES}")
        text = (resources.files("gbec") / "data" / f"{name}.spec").read_text(encoding="utf-8")
        return attachment_from_text(text, source=ref)
    try:
        with open(ref, "r", encoding="utf-8") as fh:
            text = fh.read()
    except OSError as exc:
        raise ConfigInvalid(f"{ref}: cannot read attachment spec ({exc})") from None
    return attachment_from_text(text, source=ref)


def save_attachment(path, spec: AttachmentSpec) -> None:
    textformat.atomic_write_text(path, attachment_to_text(spec))
