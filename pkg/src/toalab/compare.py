"""Curve-comparison metrics used by tests and the ``compare`` CLI verb."""

import numpy as np

from .errors import ValidationError
from .quadrature import integrate_uniform


def _check_grids(x_a, x_b):
    if len(x_a) != len(x_b) or np.max(np.abs(np.asarray(x_a) - np.asarray(x_b))) > 1e-12:
        raise ValidationError("curves are sampled on different grids")


def tv_distance(x, values_a, values_b) -> float:
    """Total-variation distance between the two curves after conditioning each
    to unit integral."""
    x = np.asarray(x, dtype=float)
    h = float(x[1] - x[0])
    a = np.asarray(values_a, dtype=float)
    b = np.asarray(values_b, dtype=float)
    za = integrate_uniform(a, h)
    zb = integrate_uniform(b, h)
    if za <= 0.0 or zb <= 0.0:
        raise ValidationError("cannot condition a curve with non-positive integral")
    return 0.5 * integrate_uniform(np.abs(a / za - b / zb), h)


def compare_curves(x_a, values_a, x_b, values_b) -> dict:
    """TV distance (of conditioned curves), max-abs difference, argmax shift."""
    _check_grids(x_a, x_b)
    a = np.asarray(values_a, dtype=float)
    b = np.asarray(values_b, dtype=float)
    x = np.asarray(x_a, dtype=float)
    return {
        "tv_distance": tv_distance(x, a, b),
        "max_abs_difference": float(np.max(np.abs(a - b))),
        "argmax_shift": float(x[int(np.argmax(a))] - x[int(np.argmax(b))]),
    }
