"""Planar unicycles aligning with a uniformly rotating direction field.

The heading law is continuous, ``psi' = -k_w (psi - psi_d(t)) + omega_d`` with
``psi_d(t) = psi_d0 + omega_d t``, so the closed loop is integrated with a
fixed-step RK4 rather than sampled-and-held like the 3D simulator.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field

import numpy as np

from .analysis import BoundName, BoundReport, make_bound_report
from .control import control_2d


@dataclass(frozen=True)
class PlanarConfig:
    headings: tuple[float, ...]
    positions: np.ndarray | None = None
    k_w: float = 1.0
    omega_d: float = 0.0
    psi_d0: float = 0.0
    speed: float = 1.0
    dt: float = 1e-3
    t_end: float = 10.0

    @property
    def n_steps(self) -> int:
        return int(round(self.t_end / self.dt))


@dataclass(frozen=True)
class PlanarTrajectory:
    times: np.ndarray
    psi: np.ndarray
    p: np.ndarray
    delta: np.ndarray
    pairs: tuple[tuple[int, int], ...] = field(default=())

    def delta_pair(self, i: int, j: int) -> np.ndarray:
        """``delta_j - delta_i``."""
        return self.delta[j] - self.delta[i]

    def drift(self, i: int, j: int) -> np.ndarray:
        pij = self.p[i] - self.p[j]
        return np.linalg.norm(pij - pij[0], axis=-1)


def _rhs(t, psi, cfg: PlanarConfig):
    delta = psi - (cfg.psi_d0 + cfg.omega_d * t)
    dpsi = control_2d(delta, cfg.k_w, cfg.omega_d)
    vel = cfg.speed * np.stack([np.cos(psi), np.sin(psi)], axis=-1)
    return dpsi, vel


def run_planar(cfg: PlanarConfig) -> PlanarTrajectory:
    psi = np.asarray(cfg.headings, dtype=float).copy()
    n_rob = psi.size
    if cfg.positions is None:
        p = np.zeros((n_rob, 2))
    else:
        p = np.asarray(cfg.positions, dtype=float).reshape(n_rob, 2).copy()
    n = cfg.n_steps + 1
    h = cfg.dt
    times = np.arange(n) * h
    PSI = np.empty((n_rob, n))
    P = np.empty((n_rob, n, 2))
    PSI[:, 0] = psi
    P[:, 0] = p
    for k in range(1, n):
        t = times[k - 1]
        a1, v1 = _rhs(t, psi, cfg)
        a2, v2 = _rhs(t + h / 2, psi + h / 2 * a1, cfg)
        a3, v3 = _rhs(t + h / 2, psi + h / 2 * a2, cfg)
        a4, v4 = _rhs(t + h, psi + h * a3, cfg)
        psi = psi + h / 6 * (a1 + 2 * a2 + 2 * a3 + a4)
        p = p + h / 6 * (v1 + 2 * v2 + 2 * v3 + v4)
        PSI[:, k] = psi
        P[:, k] = p
    delta = PSI - (cfg.psi_d0 + cfg.omega_d * times)
    pairs = tuple((i, j) for i in range(n_rob) for j in range(i + 1, n_rob))
    return PlanarTrajectory(times, PSI, P, delta, pairs)


def check_planar(traj: PlanarTrajectory, cfg: PlanarConfig) -> list[BoundReport]:
    """Drift bound ``speed * 2 pi / k_w`` for every pair."""
    bound = cfg.speed * 2.0 * math.pi / cfg.k_w
    return [
        make_bound_report(BoundName.COR1, bound, float(traj.drift(i, j).max()), (i, j))
        for i, j in traj.pairs
    ]


def heading_decay_error(traj: PlanarTrajectory, cfg: PlanarConfig, i: int = 0, j: int = 1) -> float:
    """Max relative deviation of ``delta_ij(t)`` from ``delta_ij(0) exp(-k_w t)``."""
    d = traj.delta_pair(i, j)
    expected = d[0] * np.exp(-cfg.k_w * traj.times)
    return float(np.max(np.abs(d - expected) / np.abs(expected)))
