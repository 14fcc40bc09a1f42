"""Deterministic kinematic simulation of 3D unicycle robots.

Each robot follows ``p' = R v``, ``R' = R Omega`` with constant body velocity
``v``. The attitude is advanced with the exact group exponential for the
piecewise-constant control, the position with a midpoint quadrature.
"""

from __future__ import annotations

import logging
import math
from dataclasses import dataclass, field
from enum import Enum
from typing import Callable, Sequence, Union

import numpy as np

from .control import (
    AtPiBranchError,
    ControllerMode,
    ControllerParams,
    WORLD_Y,
    WORLD_Z,
    attitude_error,
    control_full_info,
    control_partial_info,
    frame_from_direction,
    DegenerateFrameError,
)
from .so3 import exp_so3, hat, log_so3, orthonormalize, unit

log = logging.getLogger(__name__)

NUDGE_ANGLE = 1e-3
GRADIENT_TOL = 1e-9
MAX_STEPS = 50_000_000

RateLike = Union[Callable[[float], np.ndarray], Sequence[float], np.ndarray]


class ConfigError(ValueError):
    pass


class ZeroGradientError(ValueError):
    pass


class TargetMode(str, Enum):
    FIXED = "fixed"
    FULL = "full"
    PARTIAL = "partial"


@dataclass(frozen=True)
class RobotState:
    p: np.ndarray
    R: np.ndarray
    v: np.ndarray


@dataclass(frozen=True)
class QuadraticBowl:
    """Scalar field ``sigma(p) = -|p - center|^2``, maximal at ``center``."""

    center: np.ndarray = field(default_factory=lambda: np.zeros(3))

    def value(self, p) -> float:
        d = np.asarray(p, dtype=float) - self.center
        return -float(d @ d)

    def gradient(self, p) -> np.ndarray:
        return -2.0 * (np.asarray(p, dtype=float) - self.center)


def gradient_field_target(field: QuadraticBowl, p) -> np.ndarray:
    """Unit ascent direction of ``field`` at ``p``."""
    g = field.gradient(p)
    n = float(np.linalg.norm(g))
    if not n > GRADIENT_TOL:
        raise ZeroGradientError(f"field gradient vanishes at p={np.asarray(p)!r}")
    return g / n


def _rate_fn(rate: RateLike) -> Callable[[float], np.ndarray]:
    if callable(rate):
        return lambda t: np.asarray(rate(t), dtype=float).reshape(3)
    const = np.asarray(rate, dtype=float).reshape(3).copy()
    return lambda t: const


@dataclass(frozen=True)
class TargetSpec:
    """Target attitude ``Ra(t)``.

    ``omega_known`` is a body-frame rate, ``omega_unknown`` an earth-frame
    rate, so ``Ra' = hat(w_u) Ra + Ra hat(w_k)``. Either may be a constant
    vector or a function of time. With ``field`` set, every robot gets its own
    target whose first column is the field's ascent direction at the robot.
    """

    mode: TargetMode = TargetMode.FIXED
    direction: np.ndarray = field(default_factory=lambda: np.array([1.0, 0.0, 0.0]))
    roll_reference: np.ndarray = field(default_factory=lambda: WORLD_Z.copy())
    omega_known: RateLike = (0.0, 0.0, 0.0)
    omega_unknown: RateLike = (0.0, 0.0, 0.0)
    field: QuadraticBowl | None = None

    def __post_init__(self):
        object.__setattr__(self, "mode", TargetMode(self.mode))

    @property
    def Ra0(self) -> np.ndarray:
        return frame(self.direction, self.roll_reference)

    def known(self, t: float) -> np.ndarray:
        return _rate_fn(self.omega_known)(t)

    def unknown(self, t: float) -> np.ndarray:
        return _rate_fn(self.omega_unknown)(t)


@dataclass(frozen=True)
class TargetEvent:
    """Instant override of the target direction at ``time``.

    Without ``roll_reference`` the current second target axis is kept as
    reference, so the frame turns as little as possible.
    """

    time: float
    direction: np.ndarray
    roll_reference: np.ndarray | None = None


@dataclass(frozen=True)
class RobotSpec:
    controller: ControllerParams
    speed: float = 1.0
    position: np.ndarray = field(default_factory=lambda: np.zeros(3))
    # rotation vector of R(0); None draws a seeded attitude relative to Ra(0)
    attitude: np.ndarray | None = None


@dataclass(frozen=True)
class SimConfig:
    robots: tuple[RobotSpec, ...]
    target: TargetSpec = field(default_factory=TargetSpec)
    dt: float = 1e-3
    t_end: float = 10.0
    seed: int = 0
    events: tuple[TargetEvent, ...] = ()
    t0: float = 0.0
    name: str = "custom"
    qualitative: bool = False

    @property
    def n_steps(self) -> int:
        return int(round(self.t_end / self.dt))

    @property
    def times(self) -> np.ndarray:
        return np.arange(self.n_steps + 1) * self.dt


@dataclass(frozen=True)
class Trajectory:
    """Sampled run. Robot arrays are indexed ``[robot, sample, ...]``.

    ``omega`` holds the body rate applied over ``[t_k, t_k + dt)``; pair
    arrays are indexed ``[pair, sample]`` in the order of ``pairs``.
    """

    times: np.ndarray
    p: np.ndarray
    R: np.ndarray
    Ra: np.ndarray | None  # None for trajectories loaded from disk
    mu: np.ndarray
    delta: np.ndarray
    omega: np.ndarray
    at_pi: np.ndarray
    pairs: tuple[tuple[int, int], ...]
    pair_dist: np.ndarray
    pair_drift: np.ndarray
    t0: float = 0.0
    name: str = "custom"
    qualitative: bool = False
    nudges: tuple[tuple[float, int], ...] = ()

    @property
    def n_robots(self) -> int:
        return self.p.shape[0]


def frame(direction, roll_reference=WORLD_Z) -> np.ndarray:
    """Target frame from a direction, falling back to world y, then world z."""
    for ref in (roll_reference, WORLD_Y, WORLD_Z):
        try:
            return frame_from_direction(direction, ref)
        except DegenerateFrameError:
            continue
    raise DegenerateFrameError(f"no usable roll reference for {direction!r}")


def step(state: RobotState, Omega, dt: float) -> RobotState:
    """Advance one robot by ``dt`` under a constant body velocity tensor."""
    if not dt > 0.0:
        raise ValueError("dt must be > 0")
    Omega = np.asarray(Omega, dtype=float)
    w = np.array([Omega[2, 1], Omega[0, 2], Omega[1, 0]])
    R = state.R
    p = state.p + (R @ exp_so3(0.5 * dt * w)) @ state.v * dt
    return RobotState(p, orthonormalize(R @ exp_so3(dt * w)), state.v)


def propagate_target(spec: TargetSpec, Ra, t: float, dt: float) -> np.ndarray:
    """``Ra(t + dt)`` for rates held constant over the step (exact in that case)."""
    Ra = np.asarray(Ra, dtype=float)
    out = exp_so3(dt * spec.unknown(t)) @ Ra @ exp_so3(dt * spec.known(t))
    return orthonormalize(out)


def random_attitude(rng: np.random.Generator, Ra) -> np.ndarray:
    """``Ra exp(theta l)`` with uniform axis ``l`` and ``theta ~ U(0, pi - 0.1)``."""
    axis = unit(rng.normal(size=3))
    theta = rng.uniform(0.0, math.pi - 0.1)
    return np.asarray(Ra, dtype=float) @ exp_so3(theta * axis)


def _validate(config: SimConfig) -> None:
    if not config.robots:
        raise ConfigError("at least one robot is required")
    if not (config.dt > 0.0 and math.isfinite(config.dt)):
        raise ConfigError(f"dt must be > 0, got {config.dt}")
    if not (config.t_end >= 0.0 and math.isfinite(config.t_end)):
        raise ConfigError(f"t_end must be >= 0, got {config.t_end}")
    if config.t_end / config.dt > MAX_STEPS:
        raise ConfigError(f"t_end/dt = {config.t_end / config.dt:.3g} exceeds {MAX_STEPS} steps")
    if not math.isfinite(config.t0):
        raise ConfigError(f"t0 must be finite, got {config.t0}")
    k_max = max(r.controller.k_w for r in config.robots)
    if config.dt > 0.1 / k_max:
        raise ConfigError(
            f"dt={config.dt} exceeds the stability margin 0.1/k_w_max={0.1 / k_max:.4g}"
        )
    target = config.target
    for i, r in enumerate(config.robots):
        if not r.speed >= 0.0:
            raise ConfigError(f"robot {i}: speed must be >= 0")
        if target.mode is TargetMode.PARTIAL and r.controller.mode is not ControllerMode.PARTIAL:
            raise ConfigError(
                f"robot {i}: a partial-information target needs a partial-information controller"
            )
    if target.field is not None and target.mode is not TargetMode.PARTIAL:
        raise ConfigError("a field-driven target is only known partially; use mode 'partial'")
    if target.mode is TargetMode.FIXED:
        for t in config.times[:: max(1, config.n_steps // 100)]:
            if np.any(target.known(t)) or np.any(target.unknown(t)):
                raise ConfigError("a fixed target must have zero rates")
    if target.mode is TargetMode.PARTIAL and target.field is None:
        omega_d = min(r.controller.omega_d for r in config.robots)
        for t in config.times:
            wu = float(np.linalg.norm(target.unknown(t)))
            if wu > omega_d + 1e-12:
                raise ConfigError(
                    f"|omega_unknown({t:g})| = {wu:.6g} exceeds omega_d = {omega_d:.6g}"
                )


def _nudge(R, Ra, t: float, i: int) -> np.ndarray:
    """Move a robot off the log singularity by ``NUDGE_ANGLE`` about the error axis."""
    lg = log_so3(Ra.T @ R)
    axis = lg.tau / lg.theta
    log.warning(
        "robot %d at t=%g: attitude error on the log singularity, nudging by %g rad",
        i, t, NUDGE_ANGLE,
    )
    return orthonormalize(R @ exp_so3(-NUDGE_ANGLE * axis))


def run(config: SimConfig) -> Trajectory:
    """Closed-loop simulation.

    Per sample: read the target, compute the error and the control, record,
    then advance robots and target. Same config, same output bits.
    """
    _validate(config)
    target = config.target
    n_rob = len(config.robots)
    n = config.n_steps + 1
    dt = config.dt
    rng = np.random.default_rng(config.seed)

    # initial targets and states
    if target.field is not None:
        Ra = [frame(gradient_field_target(target.field, r.position), target.roll_reference)
              for r in config.robots]
    else:
        Ra = [target.Ra0] * n_rob
    states = []
    for i, r in enumerate(config.robots):
        if r.attitude is None:
            R0 = random_attitude(rng, Ra[i])
        else:
            R0 = exp_so3(np.asarray(r.attitude, dtype=float))
        v = np.array([r.speed, 0.0, 0.0])
        states.append(RobotState(np.asarray(r.position, dtype=float).copy(), R0, v))

    times = config.times
    P = np.empty((n_rob, n, 3))
    Rs = np.empty((n_rob, n, 3, 3))
    Ras = np.empty((n_rob, n, 3, 3))
    MU = np.empty((n_rob, n))
    DELTA = np.empty((n_rob, n))
    W = np.empty((n_rob, n, 3))
    AT_PI = np.zeros((n_rob, n), dtype=bool)
    nudges = []
    events = sorted(config.events, key=lambda e: e.time)
    next_event = 0

    for k in range(n):
        t = float(times[k])
        while next_event < len(events) and t >= events[next_event].time - 1e-9:
            ev = events[next_event]
            ref = ev.roll_reference if ev.roll_reference is not None else Ra[0][:, 1]
            Ra = [frame(ev.direction, ref)] * n_rob
            next_event += 1

        wk = target.known(t)
        wu = target.unknown(t)
        new_states = []
        for i, (r, s) in enumerate(zip(config.robots, states)):
            Ra_i = Ra[i]
            err = attitude_error(Ra_i, s.R)
            if err.at_pi:
                s = RobotState(s.p, _nudge(s.R, Ra_i, t, i), s.v)
                nudges.append((t, i))
                err = attitude_error(Ra_i, s.R)
            ctl = r.controller
            if ctl.mode is ControllerMode.FULL:
                Omega = control_full_info(err.Re, hat(wk + Ra_i.T @ wu), ctl.k_w)
            else:
                Omega = control_partial_info(err.Re, hat(wk), ctl.k_w)

            P[i, k] = s.p
            Rs[i, k] = s.R
            Ras[i, k] = Ra_i
            MU[i, k] = err.mu
            DELTA[i, k] = err.delta
            W[i, k] = (Omega[2, 1], Omega[0, 2], Omega[1, 0])
            AT_PI[i, k] = err.at_pi
            if k + 1 < n:
                new_states.append(step(s, Omega, dt))
        if k + 1 == n:
            break
        states = new_states

        if target.field is None:
            Ra = [orthonormalize(exp_so3(dt * wu) @ Ra[0] @ exp_so3(dt * wk))] * n_rob
        else:
            rolled = [Ra_i @ exp_so3(dt * wk) for Ra_i in Ra]
            Ra = [frame(gradient_field_target(target.field, s.p), ro[:, 1])
                  for s, ro in zip(states, rolled)]

    pairs, dist, drift = pair_series(times, P, Rs, config.t0)
    return Trajectory(
        times=times, p=P, R=Rs, Ra=Ras, mu=MU, delta=DELTA, omega=W, at_pi=AT_PI,
        pairs=pairs, pair_dist=dist, pair_drift=drift, t0=config.t0,
        name=config.name, qualitative=config.qualitative, nudges=tuple(nudges),
    )


def rotation_angles(R) -> np.ndarray:
    """Rotation angle of each matrix in a ``(..., 3, 3)`` stack."""
    R = np.asarray(R, dtype=float)
    w = np.stack(
        [R[..., 2, 1] - R[..., 1, 2], R[..., 0, 2] - R[..., 2, 0], R[..., 1, 0] - R[..., 0, 1]],
        axis=-1,
    )
    s = 0.5 * np.linalg.norm(w, axis=-1)
    c = np.clip(0.5 * (np.trace(R, axis1=-2, axis2=-1) - 1.0), -1.0, 1.0)
    return np.arctan2(s, c)


def pair_series(times, P, Rs, t0: float):
    """Per pair: ``dist_so3(R_i, R_j)`` and ``|p_ij(t) - p_ij(t0)|`` over time."""
    n_rob = P.shape[0]
    pairs = tuple((i, j) for i in range(n_rob) for j in range(i + 1, n_rob))
    n = len(times)
    dist = np.empty((len(pairs), n))
    drift = np.empty((len(pairs), n))
    k0 = int(np.searchsorted(times, t0 - 1e-9)) if n else 0
    k0 = min(k0, max(n - 1, 0))
    for m, (i, j) in enumerate(pairs):
        Rij = np.einsum("tki,tkj->tij", Rs[i], Rs[j])
        dist[m] = math.sqrt(2.0) * rotation_angles(Rij)
        pij = P[i] - P[j]
        drift[m] = np.linalg.norm(pij - pij[k0], axis=-1) if n else pij[:, 0]
    return pairs, dist, drift
