"""
Clamped B-spline bases on a uniform knot grid.
"""

from typing import Tuple

import numpy as np
from scipy.interpolate import BSpline

from ..models.errors import ParameterError


def clamped_knots(degree: int, n_basis: int, domain: Tuple[float, float]) -> np.ndarray:
    """Boundary knots repeated degree+1 times around uniformly spaced internal knots."""
    low, high = domain
    n_internal = n_basis - degree - 1
    internal = np.linspace(low, high, n_internal + 2)[1:-1]
    return np.concatenate((np.full(degree + 1, low), internal, np.full(degree + 1, high)))


def bspline_basis(times, degree: int, n_basis: int, domain: Tuple[float, float]) -> np.ndarray:
    """
    Evaluate a clamped B-spline basis (Cox-de Boor recursion via scipy).

    Args:
        times: Evaluation points, all inside ``domain``
        degree: Polynomial degree of the pieces
        n_basis: Number of basis functions (>= degree + 1)
        domain: Closed interval (low, high) carrying the boundary knots

    Returns:
        Basis matrix of shape (len(times), n_basis); rows sum to one

    Raises:
        ParameterError: If the basis is ill-specified or a time falls outside the domain
    """
    times = np.atleast_1d(np.asarray(times, dtype=float))
    low, high = float(domain[0]), float(domain[1])
    if degree < 0 or n_basis < degree + 1:
        raise ParameterError(f"n_basis ({n_basis}) must be at least degree + 1 ({degree + 1})")
    if not high > low:
        raise ParameterError(f"domain must be an increasing interval, got {domain}")
    outside = (times < low) | (times > high) | ~np.isfinite(times)
    if np.any(outside):
        first = int(np.flatnonzero(outside)[0])
        raise ParameterError(f"time {times[first]} at position {first} is outside the domain [{low}, {high}]")
    knots = clamped_knots(degree, n_basis, (low, high))
    if times.size == 0:
        return np.zeros((0, n_basis))
    return BSpline.design_matrix(times, knots, degree).toarray()
