import numpy as np
import pytest

from conftest import random_transform
from gbec.errors import CountMismatch, DegenerateGeometry, InvalidRange
from gbec.geometry import (
    Line3,
    Point3,
    PointCloud,
    RigidTransform,
    compose,
    invert,
    point_line_distances,
    rotation_angle_between,
    rotation_from_rotvec_deg,
    translation_distance,
)
from gbec.models import circular_landmarks
from gbec.registration import (
    fit_line,
    pairing_objective,
    project_onto_line,
    sample_line_segment,
    solve_paired_point,
)


def _rim_cloud():
    model = circular_landmarks(40.0, [22.5 * k for k in range(16)], [0, 6] * 8)
    return PointCloud(model.as_array(), "eff")


def test_self_registration_is_identity():
    cloud = _rim_cloud()
    result = solve_paired_point(cloud, cloud)
    assert np.abs(result.transform.as_matrix() - np.eye(4)).max() <= 1e-12
    assert result.rms_residual <= 1e-12


def test_recovers_known_transform_from_sixteen_landmarks():
    rng = np.random.default_rng(10)
    model = _rim_cloud()
    for _ in range(20):
        truth = random_transform(rng)
        measured = PointCloud(invert(truth).transform_points(model.points), "coilRef")
        result = solve_paired_point(model, measured)
        assert rotation_angle_between(result.transform, truth) <= 1e-9
        assert translation_distance(result.transform, truth) <= 1e-9


def test_count_and_degeneracy_errors():
    model = _rim_cloud()
    with pytest.raises(CountMismatch):
        solve_paired_point(model, PointCloud(model.points[:5], ""))
    with pytest.raises(CountMismatch):
        solve_paired_point(PointCloud(model.points[:2], ""), PointCloud(model.points[:2], ""))
    collinear = PointCloud(np.outer(np.arange(5.0), [1.0, 0.0, 0.0]), "")
    with pytest.raises(DegenerateGeometry):
        solve_paired_point(collinear, collinear)
    coincident = PointCloud(np.ones((4, 3)), "")
    with pytest.raises(DegenerateGeometry):
        solve_paired_point(coincident, coincident)


def test_planar_clouds_are_not_degenerate():
    pts = np.array([[0.0, 0.0, 0.0], [10.0, 0.0, 0.0], [0.0, 10.0, 0.0]])
    cloud = PointCloud(pts, "")
    result = solve_paired_point(cloud, cloud)
    assert result.rms_residual <= 1e-12


def test_solver_beats_random_perturbations():
    rng = np.random.default_rng(11)
    model = _rim_cloud()
    truth = random_transform(rng)
    measured = PointCloud(
        invert(truth).transform_points(model.points) + rng.normal(0, 0.25, (16, 3)), "coilRef"
    )
    result = solve_paired_point(model, measured)
    best = pairing_objective(model, measured, result.transform)
    for _ in range(1000):
        scale = 10.0 ** rng.uniform(-6, 1)
        d_rot = rotation_from_rotvec_deg(rng.normal(size=3) * scale)
        d_t = rng.normal(size=3) * scale
        perturbed = RigidTransform(
            result.transform.rotation @ d_rot, result.transform.translation + d_t
        )
        assert pairing_objective(model, measured, perturbed) + 1e-12 >= best


def test_common_rigid_motion_conjugates_solution():
    rng = np.random.default_rng(12)
    model = _rim_cloud()
    truth = random_transform(rng)
    measured = PointCloud(
        invert(truth).transform_points(model.points) + rng.normal(0, 0.3, (16, 3)), ""
    )
    base = solve_paired_point(model, measured)
    g = random_transform(rng)
    moved = solve_paired_point(
        PointCloud(g.transform_points(model.points), ""),
        PointCloud(g.transform_points(measured.points), ""),
    )
    expected = compose(g, compose(base.transform, invert(g)))
    assert rotation_angle_between(moved.transform, expected) <= 1e-9
    assert translation_distance(moved.transform, expected) <= 1e-9
    assert abs(moved.rms_residual - base.rms_residual) <= 1e-9


def test_rms_matches_per_point_residuals():
    rng = np.random.default_rng(13)
    model = _rim_cloud()
    measured = PointCloud(model.points + rng.normal(0, 0.5, (16, 3)), "")
    result = solve_paired_point(model, measured)
    assert result.rms_residual == pytest.approx(
        float(np.sqrt(np.mean(result.per_point_residuals**2))), abs=1e-12
    )
    assert (result.per_point_residuals >= 0).all()


def test_fit_line_exact_on_collinear_points():
    ts = np.linspace(-30, 30, 52)
    pts = np.array([1.0, 2.0, 3.0]) + np.outer(ts, [0.6, 0.8, 0.0])
    fit = fit_line(PointCloud(pts, ""))
    assert fit.mean_distance <= 1e-9
    assert point_line_distances(pts, fit.line).max() <= 1e-9
    # direction follows digitization order (first -> last)
    assert fit.line.direction @ [0.6, 0.8, 0.0] > 0.99


def test_fit_line_direction_flips_with_order():
    ts = np.linspace(0, 10, 20)
    pts = np.outer(ts, [0.0, 1.0, 0.0])
    forward = fit_line(PointCloud(pts, ""))
    backward = fit_line(PointCloud(pts[::-1], ""))
    assert forward.line.direction @ backward.line.direction < -0.99


def test_fit_line_mean_distance_matches_monte_carlo_oracle():
    rng = np.random.default_rng(14)
    sigma = 0.25
    # independent oracle: mean radial distance of a 2-D isotropic Gaussian
    radial = np.linalg.norm(rng.normal(0, sigma, (100_000, 2)), axis=1)
    oracle = radial.mean()
    means = []
    for _ in range(400):
        ts = np.linspace(-40, 40, 52)
        pts = np.outer(ts, [1.0, 0.0, 0.0]) + rng.normal(0, sigma, (52, 3))
        means.append(fit_line(PointCloud(pts, "")).mean_distance)
    assert abs(np.mean(means) - oracle) / oracle < 0.05


def test_fit_line_mean_error_scale_at_tracker_noise():
    rng = np.random.default_rng(15)
    means = []
    for _ in range(100):
        ts = np.linspace(-40, 40, 52)
        pts = np.outer(ts, [0.0, 0.0, 1.0]) + rng.normal(0, 0.25, (52, 3))
        means.append(fit_line(PointCloud(pts, "")).mean_distance)
    assert 0.1 <= np.mean(means) <= 0.5


def test_fit_line_residuals_invariant_under_rigid_motion():
    rng = np.random.default_rng(16)
    ts = np.linspace(-20, 20, 30)
    pts = np.outer(ts, [1.0, 0.0, 0.0]) + rng.normal(0, 0.3, (30, 3))
    base = fit_line(PointCloud(pts, ""))
    g = random_transform(rng)
    moved = fit_line(PointCloud(g.transform_points(pts), ""))
    assert np.abs(moved.per_point_distances - base.per_point_distances).max() <= 1e-9


def test_fit_line_degenerate_inputs():
    with pytest.raises(DegenerateGeometry):
        fit_line(PointCloud(np.array([[1.0, 2.0, 3.0]]), ""))
    with pytest.raises(DegenerateGeometry):
        fit_line(PointCloud(np.ones((10, 3)), ""))


def test_projection_properties():
    x_axis = Line3.through(Point3(0, 0, 0), [1.0, 0.0, 0.0])
    assert project_onto_line(Point3(0.0, 1.0, 0.0), x_axis).as_array().tolist() == [0.0, 0.0, 0.0]
    on_line = Point3(4.0, 0.0, 0.0)
    assert np.allclose(project_onto_line(on_line, x_axis).as_array(), on_line.as_array())
    rng = np.random.default_rng(17)
    for _ in range(50):
        line = Line3.through(
            Point3.from_array(rng.uniform(-50, 50, 3)), rng.normal(size=3)
        )
        p = Point3.from_array(rng.uniform(-50, 50, 3))
        proj = project_onto_line(p, line)
        # displacement orthogonal to the direction, and idempotent
        assert abs((p.as_array() - proj.as_array()) @ line.direction) <= 1e-12
        again = project_onto_line(proj, line)
        assert np.abs(again.as_array() - proj.as_array()).max() <= 1e-9


def test_sample_line_segment():
    x_axis = Line3.through(Point3(0, 0, 0), [1.0, 0.0, 0.0])
    cloud = sample_line_segment(x_axis, 0.0, 9.0, 10)
    assert np.allclose(cloud.points[:, 0], np.arange(10.0))
    assert np.abs(cloud.points[:, 1:]).max() == 0.0
    assert point_line_distances(cloud.points, x_axis).max() <= 1e-12
    with pytest.raises(InvalidRange):
        sample_line_segment(x_axis, 5.0, 5.0, 10)
    with pytest.raises(InvalidRange):
        sample_line_segment(x_axis, 0.0, 1.0, 1)
