"""Geometry-based end-effector calibration.

Derives the rigid transform between a robot end-effector and a tracked
marker on its attachment from digitized geometric features alone, corrects
fiducial localization error by line fitting, and reproduces repeatability,
workspace-independence and alignment-accuracy experiments against a
relative-motion (AX=XB, Tsai-Lenz) baseline on a synthetic scene.
"""

from .errors import (
    BadGeometry,
    ConfigInvalid,
    CountMismatch,
    DegenerateGeometry,
    GbecError,
    GroovesRequired,
    InsufficientMotion,
    InvalidRange,
    MissingFeature,
    NonPositiveRadius,
)
from .geometry import (
    Line3,
    Point3,
    PointCloud,
    RigidTransform,
    apply,
    compose,
    invert,
    rotation_angle_between,
)
from .models import (
    AttachmentSpec,
    GrooveModel,
    PointLandmarkModel,
    circular_landmarks,
    load_attachment,
    rdid_model,
    tms_holder_model,
)
from .pipelines import (
    CalibrationTrial,
    DigitizationSet,
    PoseSample,
    alignment_error,
    build_motion_pairs,
    run_gbec,
    solve_axxb,
)
from .registration import (
    LineFitResult,
    RegistrationResult,
    fit_line,
    project_onto_line,
    sample_line_segment,
    solve_paired_point,
)
from .simulator import (
    CampaignReport,
    ExperimentConfig,
    NoiseSpec,
    SceneTruth,
    TrialReport,
    WorkspaceSpec,
    run_experiment_campaign,
    simulate_digitization,
    simulate_pose_stream,
)

__version__ = "0.1.0"

__all__ = [
    "AttachmentSpec",
    "BadGeometry",
    "CalibrationTrial",
    "CampaignReport",
    "ConfigInvalid",
    "CountMismatch",
    "DegenerateGeometry",
    "DigitizationSet",
    "ExperimentConfig",
    "GbecError",
    "GrooveModel",
    "GroovesRequired",
    "InsufficientMotion",
    "InvalidRange",
    "Line3",
    "LineFitResult",
    "MissingFeature",
    "NoiseSpec",
    "NonPositiveRadius",
    "Point3",
    "PointCloud",
    "PointLandmarkModel",
    "PoseSample",
    "RegistrationResult",
    "RigidTransform",
    "SceneTruth",
    "TrialReport",
    "WorkspaceSpec",
    "alignment_error",
    "apply",
    "build_motion_pairs",
    "circular_landmarks",
    "compose",
    "fit_line",
    "invert",
    "load_attachment",
    "project_onto_line",
    "rdid_model",
    "rotation_angle_between",
    "run_experiment_campaign",
    "run_gbec",
    "sample_line_segment",
    "simulate_digitization",
    "simulate_pose_stream",
    "solve_axxb",
    "solve_paired_point",
    "tms_holder_model",
]
