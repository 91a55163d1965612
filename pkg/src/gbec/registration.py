"""Core solvers: least-squares paired-point rigid registration and
total-least-squares 3-D line fitting, plus the projection and sampling
helpers the groove pipeline is assembled from.

Registration minimizes ``sum_i ||model_i - (R @ measured_i + t)||^2`` over
proper rotations via the SVD of the cross-covariance, flipping the sign of
the smallest singular vector when the plain solution would be a reflection.
Line fitting takes the principal axis of the centered cloud, which globally
minimizes the sum of squared point-to-line distances.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .errors import CountMismatch, DegenerateGeometry, InvalidRange
from .geometry import (
    Line3,
    Point3,
    PointCloud,
    RigidTransform,
    point_line_distances,
)

# Second singular value below this fraction of the first flags a cloud as
# collinear (rotation about the line is unobservable); first singular value
# below the absolute floor flags coincident points.
COLLINEARITY_RTOL = 1e-9
COINCIDENT_ATOL = 1e-9


@dataclass(frozen=True, eq=False)
class RegistrationResult:
    """Solved transform plus its per-correspondence misfit (mm)."""

    transform: RigidTransform
    per_point_residuals: np.ndarray
    rms_residual: float


@dataclass(frozen=True, eq=False)
class LineFitResult:
    """Fitted line plus the distance of every input point to it (mm)."""

    line: Line3
    per_point_distances: np.ndarray
    mean_distance: float


def _require_full_spread(points: np.ndarray, label: str) -> None:
    s = np.linalg.svd(points - points.mean(axis=0), compute_uv=False)
    if s[0] <= COINCIDENT_ATOL:
        raise DegenerateGeometry(f"{label} points coincide")
    if s[1] <= COLLINEARITY_RTOL * s[0]:
        raise DegenerateGeometry(
            f"{label} points are collinear; rotation about that line is unobservable"
        )


def solve_paired_point(model: PointCloud, measured: PointCloud) -> RegistrationResult:
    """Rigid transform T minimizing the summed squared distances between
    model points and transformed measured points.

    The clouds correspond index to index and must contain at least 3
    non-collinear points each. The returned rotation is always proper.
    """
    a = model.points
    b = measured.points
    if len(a) != len(b):
        raise CountMismatch(f"model has {len(a)} points, measured has {len(b)}")
    if len(a) < 3:
        raise CountMismatch("paired-point registration needs at least 3 point pairs")
    _require_full_spread(a, "model")
    _require_full_spread(b, "measured")

    ca = a.mean(axis=0)
    cb = b.mean(axis=0)
    h = (b - cb).T @ (a - ca)
    u, _, vt = np.linalg.svd(h)
    sign = np.sign(np.linalg.det(vt.T @ u.T))
    r = vt.T @ np.diag([1.0, 1.0, sign]) @ u.T
    t = ca - r @ cb

    transform = RigidTransform(r, t)
    resid = np.linalg.norm(a - transform.transform_points(b), axis=1)
    return RegistrationResult(transform, resid, float(np.sqrt(np.mean(resid**2))))


def pairing_objective(model: PointCloud, measured: PointCloud, transform: RigidTransform) -> float:
    """Sum of squared paired-point distances for a candidate transform."""
    d = model.points - transform.transform_points(measured.points)
    return float(np.sum(d * d))


def fit_line(points: PointCloud) -> LineFitResult:
    """Total-least-squares 3-D line through a digitized cloud.

    The line passes through the centroid along the principal axis of the
    centered points. The direction sign follows digitization order: positive
    dot product with (last point - first point), which removes the +-direction
    ambiguity so downstream correspondence is stable.
    """
    p = points.points
    if len(p) < 2:
        raise DegenerateGeometry("line fitting needs at least 2 points")
    c = p.mean(axis=0)
    _, s, vt = np.linalg.svd(p - c)
    if s[0] <= COINCIDENT_ATOL:
        raise DegenerateGeometry("all points coincide; line direction is undefined")
    d = vt[0]
    if d @ (p[-1] - p[0]) < 0:
        d = -d
    line = Line3(Point3.from_array(c), d / np.linalg.norm(d))
    dist = point_line_distances(p, line)
    return LineFitResult(line, dist, float(dist.mean()))


def project_onto_line(p: Point3, line: Line3) -> Point3:
    """Orthogonal projection of a point onto an infinite line."""
    rel = p.as_array() - line.anchor.as_array()
    return Point3.from_array(line.anchor.as_array() + (rel @ line.direction) * line.direction)


def project_points_onto_line(points, line: Line3) -> np.ndarray:
    """Vectorized orthogonal projection of an (N, 3) array onto a line."""
    rel = np.asarray(points, dtype=float) - line.anchor.as_array()
    along = rel @ line.direction
    return line.anchor.as_array() + np.outer(along, line.direction)


def line_parameters(points, line: Line3) -> np.ndarray:
    """Signed parameter t of each point's projection, so that the projection
    is anchor + t * direction."""
    rel = np.asarray(points, dtype=float) - line.anchor.as_array()
    return rel @ line.direction


def sample_line_segment(
    line: Line3, t_min: float, t_max: float, n: int, frame_label: str = ""
) -> PointCloud:
    """n evenly spaced points from anchor + t_min*dir to anchor + t_max*dir,
    in increasing-t order."""
    if n < 2:
        raise InvalidRange(f"need at least 2 samples, got {n}")
    if not t_max > t_min:
        raise InvalidRange(f"empty sampling interval [{t_min}, {t_max}]")
    return PointCloud(line.points_at(np.linspace(t_min, t_max, n)), frame_label)
