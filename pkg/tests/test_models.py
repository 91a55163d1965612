import numpy as np
import pytest

from conftest import random_transform
from gbec.errors import BadGeometry, ConfigInvalid, CountMismatch, DegenerateGeometry, NonPositiveRadius
from gbec.geometry import PointCloud, invert, point_line_distances, rotation_angle_between, translation_distance, Line3, Point3
from gbec.models import (
    attachment_from_text,
    attachment_to_text,
    circular_landmarks,
    load_attachment,
    rdid_model,
    tms_holder_landmarks,
    tms_holder_model,
)
from gbec.registration import sample_line_segment, solve_paired_point


def test_unit_circle_landmarks():
    model = circular_landmarks(1.0, [0.0, 90.0, 180.0], [0.0, 0.0, 0.0])
    pts = model.as_array()
    assert np.abs(pts - [[1, 0, 0], [0, 1, 0], [-1, 0, 0]]).max() <= 1e-12


def test_sixteen_landmarks_on_radius():
    model = circular_landmarks(40.0, [22.5 * k for k in range(16)], [0.0, 6.0] * 8)
    pts = model.as_array()
    assert len(model.landmarks) == 16
    assert np.abs(pts[:, 0] ** 2 + pts[:, 1] ** 2 - 40.0**2).max() <= 1e-9


def test_landmark_permutation_invariance():
    angles = [10.0, 130.0, 250.0, 300.0]
    heights = [0.0, 2.0, 4.0, 6.0]
    base = circular_landmarks(25.0, angles, heights).as_array()
    perm = [2, 0, 3, 1]
    shuffled = circular_landmarks(25.0, [angles[i] for i in perm], [heights[i] for i in perm]).as_array()
    assert np.allclose(shuffled, base[perm])


def test_circular_landmark_errors():
    with pytest.raises(CountMismatch):
        circular_landmarks(10.0, [0.0, 90.0], [0.0])
    with pytest.raises(CountMismatch):
        circular_landmarks(10.0, [0.0, 90.0], [0.0, 0.0])
    with pytest.raises(NonPositiveRadius):
        circular_landmarks(0.0, [0.0, 90.0, 180.0], [0.0] * 3)


def test_tms_holder_has_eight_grooves_near_axis():
    spec = tms_holder_model()
    assert spec.kind == "grooves"
    assert len(spec.model.grooves) == 8
    assert spec.model.samples_per_groove == 10
    z_axis = Line3.through(Point3(0, 0, 0), [0.0, 0.0, 1.0])
    for groove in spec.model.grooves:
        # closest approach of the groove line to the flange axis
        anchor_pts = groove.line.points_at(np.linspace(groove.t_min, groove.t_max, 64))
        assert point_line_distances(anchor_pts, z_axis).min() <= spec.radius_mm


def test_tms_groove_endpoints_match_circular_landmarks():
    radius = 40.0
    heights = [0.0, 6.0, 0.0, 6.0, 0.0, 6.0, 0.0, 6.0]
    spec = tms_holder_model(radius, heights)
    rim = tms_holder_landmarks(radius, heights).as_array()
    for k, groove in enumerate(spec.model.grooves):
        end_hi = groove.line.points_at(np.array([groove.t_max]))[0]
        end_lo = groove.line.points_at(np.array([groove.t_min]))[0]
        assert np.abs(end_hi - rim[k]).max() <= 1e-9
        assert np.abs(end_lo - rim[k + 8]).max() <= 1e-9


def test_tms_holder_errors():
    with pytest.raises(BadGeometry):
        tms_holder_model(groove_heights=[0.0, 6.0])
    with pytest.raises(NonPositiveRadius):
        tms_holder_model(radius=-1.0)


def test_rdid_model_accepts_asymmetric_and_rejects_symmetric():
    spec = rdid_model()
    assert spec.kind == "points"
    assert len(spec.model.landmarks) == 4
    square = [(10.0, 0.0, 5.0), (0.0, 10.0, 5.0), (-10.0, 0.0, 5.0), (0.0, -10.0, 5.0)]
    with pytest.raises(DegenerateGeometry):
        rdid_model(square)
    with pytest.raises(CountMismatch):
        rdid_model([(1.0, 0.0, 0.0), (0.0, 1.0, 0.0), (0.0, 0.0, 1.0)])
    collinear = [(0.0, 0.0, 0.0), (1.0, 0.0, 0.0), (2.0, 0.0, 0.0), (3.0, 0.0, 0.0)]
    with pytest.raises(DegenerateGeometry):
        rdid_model(collinear)


def test_registering_model_against_rigid_copy_recovers_motion():
    rng = np.random.default_rng(20)
    for spec in (tms_holder_model(), rdid_model()):
        if spec.kind == "grooves":
            pts = np.vstack(
                [
                    sample_line_segment(g.line, g.t_min, g.t_max, 10).points
                    for g in spec.model.grooves
                ]
            )
        else:
            pts = spec.model.as_array()
        truth = random_transform(rng)
        measured = PointCloud(invert(truth).transform_points(pts), "")
        result = solve_paired_point(PointCloud(pts, ""), measured)
        assert rotation_angle_between(result.transform, truth) <= 1e-9
        assert translation_distance(result.transform, truth) <= 1e-9


def test_attachment_text_round_trip():
    for spec in (tms_holder_model(), rdid_model()):
        text = attachment_to_text(spec)
        back = attachment_from_text(text)
        assert back.name == spec.name
        assert back.kind == spec.kind
        assert attachment_to_text(back) == text


def test_builtin_specs_match_constructors():
    tms = load_attachment("builtin:tms_holder")
    assert attachment_to_text(tms) == attachment_to_text(tms_holder_model())
    rdid = load_attachment("builtin:rdid")
    assert attachment_to_text(rdid) == attachment_to_text(rdid_model())
    with pytest.raises(ConfigInvalid):
        load_attachment("builtin:nope")


def test_bundled_tms_geometry_is_centered_on_flange():
    # the model origin is the flange center: every groove line crosses the
    # z-axis and the rim landmarks average to a point on that axis
    spec = load_attachment("builtin:tms_holder")
    z_axis = Line3.through(Point3(0, 0, 0), [0.0, 0.0, 1.0])
    for groove in spec.model.grooves:
        assert point_line_distances(groove.line.anchor.as_array()[None, :], z_axis)[0] <= 1e-9
    rim = tms_holder_landmarks().as_array()
    assert np.abs(rim[:, :2].mean(axis=0)).max() <= 1e-9


def test_attachment_parse_errors_cite_location():
    with pytest.raises(ConfigInvalid) as exc:
        attachment_from_text("name: x\nkind: grooves\n", source="spec.txt")
    assert "spec.txt" in str(exc.value)
