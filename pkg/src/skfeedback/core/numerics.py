"""Scalar primitives: Gaussian tail function, its inverse, decibels and the modulo reduction.

Every function accepts Python floats or numpy arrays and returns the same kind.
"""

import math

import numpy as np
from scipy.special import erfc, erfcinv

from skfeedback.errors import DomainError

_SQRT2 = math.sqrt(2.0)
_SQRT2PI = math.sqrt(2.0 * math.pi)
NEWTON_STEPS = 2


def _as_output(value: np.ndarray, like) -> float | np.ndarray:
    if np.ndim(like) == 0:
        return float(value)
    return value


def qfunc(x: float | np.ndarray) -> float | np.ndarray:
    """Gaussian tail probability Q(x) = Pr(N(0,1) > x).

    Evaluated through the complementary error function, so it keeps full relative
    accuracy deep in the tail and saturates to 0.0 instead of underflowing.

    Args:
        x (float | np.ndarray): Finite argument(s).

    Raises:
        DomainError: If any argument is not finite.

    Returns:
        float | np.ndarray: Q(x).
    """
    arr = np.asarray(x, dtype=float)
    if not np.all(np.isfinite(arr)):
        raise DomainError(f"qfunc requires finite arguments, got {x}")
    return _as_output(0.5 * erfc(arr / _SQRT2), x)


def qfunc_inv(p: float | np.ndarray) -> float | np.ndarray:
    """Inverse of the Gaussian tail function.

    The initial guess comes from ``scipy.special.erfcinv`` and is refined by two
    Newton steps on :func:`qfunc`, which keeps ``|Q(Q^-1(p)) - p| <= 1e-12 p``
    down to the 1e-8 arguments used for the aliasing budget.

    Args:
        p (float | np.ndarray): Probabilities in the open interval (0, 1).

    Raises:
        DomainError: If any probability is outside (0, 1).

    Returns:
        float | np.ndarray: x such that Q(x) = p.
    """
    arr = np.asarray(p, dtype=float)
    if not np.all((arr > 0.0) & (arr < 1.0)):
        raise DomainError(f"qfunc_inv requires 0 < p < 1, got {p}")
    x = _SQRT2 * erfcinv(2.0 * arr)
    for _ in range(NEWTON_STEPS):
        density = np.exp(-0.5 * x * x) / _SQRT2PI
        step = np.where(density > 0.0, (0.5 * erfc(x / _SQRT2) - arr) / np.where(density > 0.0, density, 1.0), 0.0)
        x = x + step
    return _as_output(x, p)


def to_db(x: float | np.ndarray) -> float | np.ndarray:
    """Linear power ratio to decibels. Infinity maps to infinity."""
    arr = np.asarray(x, dtype=float)
    if np.any(np.isnan(arr)) or np.any(arr <= 0.0):
        raise DomainError(f"to_db requires positive values, got {x}")
    return _as_output(10.0 * np.log10(arr), x)


def from_db(x_db: float | np.ndarray) -> float | np.ndarray:
    """Decibels to linear power ratio."""
    arr = np.asarray(x_db, dtype=float)
    if np.any(np.isnan(arr)):
        raise DomainError(f"from_db requires numeric values, got {x_db}")
    return _as_output(np.power(10.0, arr / 10.0), x_db)


def mod_reduce(x: float | np.ndarray, d: float) -> float | np.ndarray:
    """Reduce x into [-d/2, d/2) as x - d * floor(x/d + 1/2).

    Half-way points round up (round(k + 1/2) = k + 1 for every integer k), so
    ``mod_reduce(d/2, d) == -d/2``. Values already inside the interval come back
    unchanged, bit for bit.

    Args:
        x (float | np.ndarray): Finite value(s) to reduce.
        d (float): Interval length, strictly positive.

    Raises:
        DomainError: If d is not a positive finite number or x is not finite.

    Returns:
        float | np.ndarray: The reduced value(s).
    """
    if not (math.isfinite(d) and d > 0.0):
        raise DomainError(f"mod_reduce requires d > 0, got d={d}")
    arr = np.asarray(x, dtype=float)
    if not np.all(np.isfinite(arr)):
        raise DomainError("mod_reduce requires finite arguments")
    half = 0.5 * d
    out = arr - d * np.floor(arr / d + 0.5)
    # rounding in x/d can push the result one ulp past either edge
    out = np.where(out >= half, out - d, out)
    out = np.where(out < -half, out + d, out)
    return _as_output(out, x)
