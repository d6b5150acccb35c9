"""Central finite differences for checking analytic gradients."""

from typing import Callable

import numpy as np

from softgrad.exceptions import ConfigurationError, StructuralError

DEFAULT_STEP = 1e-6
RELATIVE_TOLERANCE = 1e-6
ABSOLUTE_FLOOR = 1e-9

# (offset in steps, weight) pairs, divided by the step size
_STENCILS: dict[int, tuple[tuple[int, float], ...]] = {
    3: ((1, 0.5), (-1, -0.5)),
    5: ((2, -1.0 / 12.0), (1, 8.0 / 12.0), (-1, -8.0 / 12.0), (-2, 1.0 / 12.0)),
}


def central_difference(
    func: Callable[[np.ndarray], float], x: np.ndarray, h: float = DEFAULT_STEP, stencil: int = 3
) -> np.ndarray:
    """Coordinate-wise central differences of a scalar function.

    :param func: Called with perturbed copies of x, never with x itself.
    :param stencil: 3 (error O(h^2)) or 5 points (O(h^4)).
    :return: Array shaped like x.
    """

    if not h > 0:
        raise ConfigurationError(f"Step has to be positive, got {h}.", ["h"])

    try:
        points = _STENCILS[stencil]
    except KeyError:
        raise ConfigurationError(f"Unsupported stencil {stencil}, use 3 or 5.", ["stencil"]) from None

    x = np.asarray(x, dtype=np.float64)
    flat = x.ravel()
    res = np.empty_like(flat)

    for idx in range(flat.size):
        acc = 0.0
        for offset, weight in points:
            shifted = flat.copy()
            shifted[idx] += offset * h
            acc += weight * func(shifted.reshape(x.shape))
        res[idx] = acc / h

    return res.reshape(x.shape)


def tolerance(
    expected: np.ndarray, estimate: np.ndarray, rel: float = RELATIVE_TOLERANCE, floor: float = ABSOLUTE_FLOOR
) -> np.ndarray:
    return rel * np.maximum(np.abs(expected), np.abs(estimate)) + floor


def violation(
    expected: np.ndarray, estimate: np.ndarray, rel: float = RELATIVE_TOLERANCE, floor: float = ABSOLUTE_FLOOR
) -> float:
    """Largest |expected - estimate| relative to its per-coordinate
    tolerance; values up to 1 mean agreement."""

    expected = np.asarray(expected, dtype=np.float64)
    estimate = np.asarray(estimate, dtype=np.float64)

    if expected.shape != estimate.shape:
        raise StructuralError(f"Can't compare shapes {expected.shape} and {estimate.shape}.")

    if expected.size == 0:
        return 0.0

    return float(np.max(np.abs(expected - estimate) / tolerance(expected, estimate, rel, floor)))
