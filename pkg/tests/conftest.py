import math

import numpy as np

from gbec.geometry import RigidTransform, random_rotation
from gbec.simulator import SceneTruth


def random_transform(rng, max_angle_deg=180.0, span_mm=200.0):
    return RigidTransform(random_rotation(rng, max_angle_deg), rng.uniform(-span_mm, span_mm, 3))


def random_scene(rng, spec):
    return SceneTruth(
        true_handeye=random_transform(rng, span_mm=150.0),
        camera_to_base=random_transform(rng, span_mm=900.0),
        attachment=spec,
    )


def binomial_tail_p(n, k):
    """P(X >= k) for X ~ Binomial(n, 1/2); exact sign-test p-value."""
    return sum(math.comb(n, i) for i in range(k, n + 1)) / 2.0**n


def transforms_close(a, b, tol_deg, tol_mm):
    from gbec.geometry import rotation_angle_between, translation_distance

    return rotation_angle_between(a, b) <= tol_deg and translation_distance(a, b) <= tol_mm


def per_axis_translation_std(trials):
    t = np.array([tr.result.translation for tr in trials])
    return t.std(axis=0, ddof=1)
