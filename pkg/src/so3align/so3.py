"""SO(3) / so(3) primitives with explicit handling of the singular branches.

Rotations are plain ``(3, 3)`` float arrays, tangent vectors are ``(3,)``
arrays and Lie-algebra elements are ``(3, 3)`` skew arrays built with
:func:`hat`. Every function is pure.
"""

from __future__ import annotations

import math
from dataclasses import dataclass
from fractions import Fraction
from functools import lru_cache

import numpy as np

SMALL_ANGLE = 1e-4
PI_BRANCH = 1e-6
SKEW_TOL = 1e-9
ROTATION_TOL = 1e-9

# below this the closed-form dlog coefficient loses more digits than its series
_DLOG_SERIES = 1e-2
# |axis . skew part| under this cannot fix the sign of a near-pi rotation vector
_PI_SIGN_TOL = 1e-12
# X^T X - I entries below this are rounding noise
_ORTHO_TOL = 4e-15

_I3 = np.eye(3)


class NotSkewError(ValueError):
    pass


class DomainError(ValueError):
    pass


class DegenerateError(ValueError):
    pass


@dataclass(frozen=True)
class LogResult:
    """Output of :func:`log_so3`.

    ``theta`` is the rotation angle in ``[0, pi]`` and equals ``norm(tau)``.
    ``sign_ambiguous`` is only ever set on the pi branch, where ``tau`` and
    ``-tau`` describe the same rotation and the sign comes from convention.
    """

    tau: np.ndarray
    theta: float
    at_pi_branch: bool = False
    sign_ambiguous: bool = False


def hat(x) -> np.ndarray:
    """Skew matrix with ``hat(x) @ y == cross(x, y)``."""
    x0, x1, x2 = float(x[0]), float(x[1]), float(x[2])
    return np.array([[0.0, -x2, x1], [x2, 0.0, -x0], [-x1, x0, 0.0]])


def vee(M) -> np.ndarray:
    """Inverse of :func:`hat`. Raises :class:`NotSkewError` on non-skew input."""
    M = np.asarray(M, dtype=float)
    if M.shape != (3, 3):
        raise NotSkewError(f"expected a 3x3 matrix, got shape {M.shape}")
    asym = np.max(np.abs(M + M.T))
    if not asym <= SKEW_TOL:
        raise NotSkewError(f"matrix is not skew-symmetric (max |M + M^T| = {asym:.3e})")
    return np.array([M[2, 1], M[0, 2], M[1, 0]])


def _vee(M: np.ndarray) -> np.ndarray:
    return np.array([M[2, 1], M[0, 2], M[1, 0]])


def skew_part(M) -> np.ndarray:
    """Project a 3x3 matrix onto so(3)."""
    M = np.asarray(M, dtype=float)
    return 0.5 * (M - M.T)


def is_rotation(R, tol: float = ROTATION_TOL) -> bool:
    R = np.asarray(R, dtype=float)
    if R.shape != (3, 3) or not np.all(np.isfinite(R)):
        return False
    return (
        np.linalg.norm(R.T @ R - _I3) <= tol and abs(np.linalg.det(R) - 1.0) <= tol
    )


def unit(v) -> np.ndarray:
    """Normalize a 3-vector; zero or non-finite input is rejected."""
    v = np.asarray(v, dtype=float).reshape(3)
    n = np.linalg.norm(v)
    if not np.isfinite(n) or n == 0.0:
        raise ValueError(f"cannot normalize {v!r}")
    return v / n


def exp_so3(tau) -> np.ndarray:
    """Rodrigues' formula, with Taylor coefficients below ``SMALL_ANGLE``."""
    tau = np.asarray(tau, dtype=float)
    theta = math.sqrt(float(tau @ tau))
    K = hat(tau)
    if theta < SMALL_ANGLE:
        t2 = theta * theta
        a = 1.0 - t2 / 6.0 + t2 * t2 / 120.0
        b = 0.5 - t2 / 24.0 + t2 * t2 / 720.0
    else:
        a = math.sin(theta) / theta
        half = math.sin(0.5 * theta) / theta
        b = 2.0 * half * half
    return _I3 + a * K + b * (K @ K)


def log_so3(R) -> LogResult:
    """Rotation vector of ``R`` with the angle restricted to ``[0, pi]``.

    The angle is taken as ``atan2(|skew|, (tr R - 1) / 2)``, which equals the
    clamped ``arccos`` of the trace but keeps full precision near 0 and pi.
    Within ``PI_BRANCH`` of pi the axis comes from the symmetric part
    ``(R + R^T) / 2 = cos(theta) I + (1 - cos(theta)) l l^T``; its sign is read
    off the (tiny) skew part when that is above noise, otherwise the
    largest-magnitude component is made positive and ``sign_ambiguous`` is set.
    """
    R = np.asarray(R, dtype=float)
    w = 0.5 * np.array([R[2, 1] - R[1, 2], R[0, 2] - R[2, 0], R[1, 0] - R[0, 1]])
    s = math.sqrt(float(w @ w))
    c = min(1.0, max(-1.0, 0.5 * (R[0, 0] + R[1, 1] + R[2, 2] - 1.0)))
    theta = math.atan2(s, c)

    if theta < math.pi - PI_BRANCH:
        if theta < SMALL_ANGLE:
            t2 = theta * theta
            return LogResult((1.0 + t2 / 6.0 + 7.0 * t2 * t2 / 360.0) * w, theta)
        return LogResult((theta / s) * w, theta)

    B = (0.5 * (R + R.T) - c * _I3) / (1.0 - c)
    i = int(np.argmax(np.diag(B)))
    axis = B[:, i] / math.sqrt(max(B[i, i], 1e-300))
    axis = axis / np.linalg.norm(axis)
    proj = float(axis @ w)
    ambiguous = abs(proj) <= _PI_SIGN_TOL
    if ambiguous:
        k = int(np.argmax(np.abs(axis)))
        if axis[k] < 0.0:
            axis = -axis
    elif proj < 0.0:
        axis = -axis
    return LogResult(theta * axis, theta, at_pi_branch=True, sign_ambiguous=ambiguous)


def log_hat(R) -> np.ndarray:
    """``log(R)`` as an so(3) matrix."""
    return hat(log_so3(R).tau)


def frob_norm_skew(M) -> float:
    M = np.asarray(M, dtype=float)
    return math.sqrt(float(np.trace(M.T @ M)))


def dist_so3(Ra, Rb) -> float:
    """Geodesic distance ``|| log(Ra^T Rb) ||_F = sqrt(2) * angle``.

    Total: antipodal pairs return ``sqrt(2) * pi`` (use :func:`log_so3` on
    ``Ra.T @ Rb`` when the branch flag matters).
    """
    Ra = np.asarray(Ra, dtype=float)
    Rb = np.asarray(Rb, dtype=float)
    return math.sqrt(2.0) * log_so3(Ra.T @ Rb).theta


def dist_s2(x, y) -> float:
    """Great-circle distance between unit vectors, in ``[0, pi]``.

    Computed as ``atan2(|x × y|, x·y)``, identical to ``arccos(clip(x·y))`` on
    the sphere but exact at coincident and antipodal points.
    """
    x0, x1, x2 = (float(c) for c in x)
    y0, y1, y2 = (float(c) for c in y)
    c0, c1, c2 = x1 * y2 - x2 * y1, x2 * y0 - x0 * y2, x0 * y1 - x1 * y0
    return math.atan2(math.sqrt(c0 * c0 + c1 * c1 + c2 * c2), x0 * y0 + x1 * y1 + x2 * y2)


def adjoint(R, M) -> np.ndarray:
    """``Ad_R(M) = R M R^T``."""
    R = np.asarray(R, dtype=float)
    A = R @ np.asarray(M, dtype=float) @ R.T
    return 0.5 * (A - A.T)


def lie_bracket(A, B) -> np.ndarray:
    A = np.asarray(A, dtype=float)
    B = np.asarray(B, dtype=float)
    return A @ B - B @ A


def ad_series(A, B, terms: int) -> np.ndarray:
    """Partial sum ``sum_{m < terms} ad_A^m(B) / m!`` of ``Ad_{exp(A)}(B)``."""
    if terms < 1:
        raise ValueError("terms must be >= 1")
    A = np.asarray(A, dtype=float)
    term = np.asarray(B, dtype=float).copy()
    total = term.copy()
    for m in range(1, terms):
        term = lie_bracket(A, term) / m
        total = total + term
    return total


def _dlog_coefficient(theta: float) -> float:
    """``(1 - alpha(theta)) / theta^2`` with ``alpha = (theta/2) cot(theta/2)``."""
    if theta < _DLOG_SERIES:
        t2 = theta * theta
        return 1.0 / 12.0 + t2 / 720.0 + t2 * t2 / 30240.0
    half = 0.5 * theta
    alpha = half / math.tan(half)
    return (1.0 - alpha) / (theta * theta)


def dlog(tau, Omega) -> np.ndarray:
    """Rate of ``hat(tau) = log R`` when ``R' = R Omega`` (closed form).

    ``Omega + 1/2 ad_T(Omega) + (1 - alpha)/theta^2 ad_T^2(Omega)``, ``T = hat(tau)``.
    """
    tau = np.asarray(tau, dtype=float)
    theta = float(np.linalg.norm(tau))
    if not theta < math.pi:
        raise DomainError(f"dlog needs |tau| < pi, got {theta!r}")
    Omega = np.asarray(Omega, dtype=float)
    T = hat(tau)
    ad1 = lie_bracket(T, Omega)
    ad2 = lie_bracket(T, ad1)
    return Omega + 0.5 * ad1 + _dlog_coefficient(theta) * ad2


@lru_cache(maxsize=None)
def bernoulli_numbers(n_max: int = 32) -> tuple[float, ...]:
    """``B_0 .. B_n_max`` with the ``B_1 = -1/2`` convention.

    Akiyama-Tanigawa in exact rationals (the float version of the recurrence
    is catastrophically unstable); it natively yields ``B_1 = +1/2``, which is
    flipped afterwards.
    """
    a = [Fraction(0)] * (n_max + 1)
    out = []
    for m in range(n_max + 1):
        a[m] = Fraction(1, m + 1)
        for j in range(m, 0, -1):
            a[j - 1] = j * (a[j - 1] - a[j])
        out.append(a[0])
    if n_max >= 1:
        out[1] = -out[1]
    return tuple(float(b) for b in out)


def dlog_series(tau, Omega, terms: int) -> np.ndarray:
    """Bernoulli series ``sum_{n < terms} (-1)^n B_n / n! ad_T^n(Omega)``.

    Converges for ``|tau| < 2 pi``; used to cross-check :func:`dlog`.
    """
    if terms < 1:
        raise ValueError("terms must be >= 1")
    B = bernoulli_numbers(max(32, terms))
    T = hat(tau)
    term = np.asarray(Omega, dtype=float).copy()  # ad_T^n(Omega) / n!
    total = B[0] * term
    for n in range(1, terms):
        term = lie_bracket(T, term) / n
        if B[n] != 0.0:
            total = total + ((-1.0) ** n * B[n]) * term
    return total


def _det3(M: np.ndarray) -> float:
    (a, b, c), (d, e, f), (g, h, i) = M.tolist()
    return a * (e * i - f * h) - b * (d * i - f * g) + c * (d * h - e * g)


def orthonormalize(M, max_iter: int = 30) -> np.ndarray:
    """Nearest rotation to ``M`` in the Frobenius sense (orthogonal polar factor).

    Newton-Schulz steps ``X <- X (3I - X^T X) / 2`` close to SO(3), Newton
    steps ``X <- (X + X^-T) / 2`` further out. Iteration stops once
    ``X^T X - I`` is at rounding level, so a valid rotation comes back unchanged.
    """
    X = np.array(M, dtype=float)
    if X.shape != (3, 3) or not np.all(np.isfinite(X)):
        raise DegenerateError("orthonormalize needs a finite 3x3 matrix")
    if not _det3(X) > 0.0:
        raise DegenerateError("orthonormalize needs det(M) > 0")
    for _ in range(max_iter):
        E = X.T @ X - _I3
        err = np.max(np.abs(E))
        if err <= _ORTHO_TOL:
            break
        if err < 0.5:
            X = X - 0.5 * (X @ E)
        else:
            X = 0.5 * (X + np.linalg.inv(X).T)
    return X
