"""Attitude error, error dynamics and the tracking / alignment control laws.

Convention: ``mu`` is always the Frobenius-scale geodesic error
``|| log(Re) ||_F = sqrt(2) * angle``; ``delta`` and ``delta_star`` are plain
angles. Comparisons between the two convert explicitly.
"""

from __future__ import annotations

import math
from dataclasses import dataclass
from enum import Enum

import numpy as np

from .so3 import adjoint, dist_s2, hat, log_so3, unit

SQRT2 = math.sqrt(2.0)
PARALLEL_TOL = 1e-6
WORLD_Y = np.array([0.0, 1.0, 0.0])
WORLD_Z = np.array([0.0, 0.0, 1.0])


class AtPiBranchError(ArithmeticError):
    """The attitude error sits on the log singularity (angle pi)."""


class BadBoundError(ValueError):
    pass


class DegenerateFrameError(ValueError):
    pass


class ControllerMode(str, Enum):
    FULL = "full"
    PARTIAL = "partial"


@dataclass(frozen=True)
class AttitudeError:
    Re: np.ndarray
    mu: float
    delta: float
    tau: np.ndarray
    at_pi: bool = False

    @property
    def angle(self) -> float:
        """Rotation angle of ``Re`` (``mu / sqrt(2)``)."""
        return self.mu / SQRT2


@dataclass(frozen=True)
class ControllerParams:
    """Gains of one robot.

    ``k_w`` is used directly in full-information mode. In partial mode it
    may be left as ``None`` and is then synthesised from ``omega_d`` and
    ``mu_star``.
    """

    mode: ControllerMode = ControllerMode.FULL
    k_w: float | None = 1.0
    omega_d: float = 0.0
    mu_star: float | None = None
    delta_star: float | None = None

    def __post_init__(self):
        object.__setattr__(self, "mode", ControllerMode(self.mode))
        if self.mu_star is not None and self.delta_star is not None:
            if not self.mu_star <= self.delta_star:
                raise BadBoundError(
                    f"mu* <= delta* violated: mu*={self.mu_star}, delta*={self.delta_star}"
                )
        if self.delta_star is not None and not 0.0 < self.delta_star <= math.pi:
            raise BadBoundError(f"delta* must lie in (0, pi], got {self.delta_star}")
        if self.omega_d < 0.0:
            raise BadBoundError(f"omega_d must be >= 0, got {self.omega_d}")
        if self.k_w is None:
            if self.mu_star is None:
                raise BadBoundError("either k_w or mu_star is required")
            object.__setattr__(self, "k_w", gain_from_bound(self.omega_d, self.mu_star))
        if not self.k_w > 0.0:
            raise BadBoundError(f"k_w must be > 0, got {self.k_w}")


def attitude_error(Ra, R) -> AttitudeError:
    Ra = np.asarray(Ra, dtype=float)
    R = np.asarray(R, dtype=float)
    Re = Ra.T @ R
    lg = log_so3(Re)
    return AttitudeError(
        Re=Re,
        mu=SQRT2 * lg.theta,
        delta=dist_s2(R[:, 0], Ra[:, 0]),
        tau=lg.tau,
        at_pi=lg.at_pi_branch,
    )


def error_velocity(Omega, Re, Omega_a) -> np.ndarray:
    """Velocity tensor of ``Re``: ``Omega - Ad_{Re^T}(Omega_a)``."""
    Re = np.asarray(Re, dtype=float)
    return np.asarray(Omega, dtype=float) - adjoint(Re.T, Omega_a)


def _proportional(Re, k_w: float) -> np.ndarray:
    lg = log_so3(Re)
    if lg.at_pi_branch:
        raise AtPiBranchError(
            f"attitude error angle {lg.theta!r} is on the log singularity"
        )
    return -k_w * hat(lg.tau)


def control_full_info(Re, Omega_a, k_w: float) -> np.ndarray:
    """``-k_w log(Re) + Ad_{Re^T}(Omega_a)`` with the full target velocity."""
    Re = np.asarray(Re, dtype=float)
    return _proportional(Re, k_w) + adjoint(Re.T, Omega_a)


def control_partial_info(Re, Omega_a_known, k_w: float) -> np.ndarray:
    """Same law, feeding forward only the known part of the target velocity.

    The signature is the information pattern: nothing about the unknown
    component can reach this function.
    """
    Re = np.asarray(Re, dtype=float)
    return _proportional(Re, k_w) + adjoint(Re.T, Omega_a_known)


def gain_from_bound(omega_d: float, mu_star: float) -> float:
    """Gain ``sqrt(2) * omega_d / mu_star`` for the ultimate bound ``mu <= mu_star``."""
    if not mu_star > 0.0:
        raise BadBoundError(f"mu* must be > 0, got {mu_star}")
    if omega_d < 0.0:
        raise BadBoundError(f"omega_d must be >= 0, got {omega_d}")
    return SQRT2 * omega_d / mu_star


def frame_from_direction(m_d, roll_reference=WORLD_Z) -> np.ndarray:
    """Rotation whose first column is ``m_d``.

    The second column is the part of ``roll_reference`` orthogonal to ``m_d``
    (Gram-Schmidt), the third completes a right-handed frame.
    """
    x = unit(m_d)
    r = unit(roll_reference)
    y = r - (r @ x) * x
    ny = np.linalg.norm(y)
    # |y| = sin(angle between m_d and the reference)
    if ny < math.sin(PARALLEL_TOL):
        raise DegenerateFrameError("roll reference is parallel to the direction")
    y = y / ny
    return np.column_stack((x, y, np.cross(x, y)))


def frame_with_fallback(m_d, roll_reference=WORLD_Z, fallback=WORLD_Y) -> np.ndarray:
    """:func:`frame_from_direction`, retrying with ``fallback`` if degenerate."""
    try:
        return frame_from_direction(m_d, roll_reference)
    except DegenerateFrameError:
        return frame_from_direction(m_d, fallback)


def control_2d(delta: float, k_w: float, omega_d_ff: float) -> float:
    """Planar heading rate ``-k_w * delta + omega_d_ff``."""
    return -k_w * delta + omega_d_ff
