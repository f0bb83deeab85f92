"""Composite Newton-Cotes weights on uniform grids.

Weights are exposed explicitly (not just integral values) because several
operators are assembled as weighted sums of matrices, where positivity of the
weights preserves positive semidefiniteness of the result.
"""

import numpy as np

from .errors import ValidationError


def odd_count(n: int) -> int:
    """Smallest odd integer >= n (Simpson needs an odd node count)."""
    n = int(n)
    if n < 3:
        raise ValidationError(f"quadrature needs at least 3 points, got {n}")
    return n if n % 2 == 1 else n + 1


def simpson_weights(n: int, h: float) -> np.ndarray:
    """Composite Simpson weights for n (odd) uniform nodes with spacing h."""
    if n < 3 or n % 2 == 0:
        raise ValidationError(f"Simpson rule needs an odd node count >= 3, got {n}")
    w = np.full(n, 2.0)
    w[1::2] = 4.0
    w[0] = w[-1] = 1.0
    return w * (h / 3.0)


def boole_weights(n: int, h: float) -> np.ndarray:
    """Composite Boole weights; n must satisfy n = 4k + 1."""
    if n < 5 or (n - 1) % 4 != 0:
        raise ValidationError(f"Boole rule needs n = 4k + 1 nodes, got {n}")
    w = np.zeros(n)
    w[0::4] = 14.0
    w[1::4] = 32.0
    w[2::4] = 12.0
    w[3::4] = 32.0
    w[0] = w[-1] = 7.0
    return w * (2.0 * h / 45.0)


def integrate_uniform(values: np.ndarray, h: float) -> float:
    """Integrate samples on a uniform grid.

    Uses composite Boole when the node count allows it, composite Simpson for
    other odd counts, and Simpson plus a trailing trapezoid panel for even
    counts.  The rule choice is a deterministic function of the node count.
    """
    y = np.asarray(values, dtype=float)
    n = y.shape[0]
    if n < 2:
        raise ValidationError("integration needs at least 2 samples")
    if n >= 5 and (n - 1) % 4 == 0:
        return float(boole_weights(n, h) @ y)
    if n >= 3 and n % 2 == 1:
        return float(simpson_weights(n, h) @ y)
    if n == 2:
        return float(0.5 * h * (y[0] + y[1]))
    head = simpson_weights(n - 1, h) @ y[:-1]
    return float(head + 0.5 * h * (y[-2] + y[-1]))


def uniform_nodes(lo: float, hi: float, n: int) -> tuple[np.ndarray, float]:
    """Uniform nodes including both endpoints, plus the spacing."""
    if not hi > lo:
        raise ValidationError(f"empty integration window [{lo}, {hi}]")
    nodes = np.linspace(lo, hi, n)
    return nodes, float(nodes[1] - nodes[0])
