"""Metrics extracted from trajectories: decay rates, pair series and bounds."""

from __future__ import annotations

import logging
import math
from dataclasses import dataclass
from enum import Enum

import numpy as np

from .control import ControllerMode
from .sim import SimConfig, TargetMode, Trajectory

log = logging.getLogger(__name__)

RATE_FLOOR = 1e-5
RATE_CEILING = 0.9
BOUND_SLACK = 1e-9


class BoundName(str, Enum):
    LEMMA4 = "Lemma4"
    PROP2 = "Prop2"
    COR1 = "Cor1"


@dataclass(frozen=True)
class BoundReport:
    bound_name: BoundName
    theoretical: float
    observed_max: float
    satisfied: bool
    margin: float
    pair: tuple[int, int] | None = None


@dataclass(frozen=True)
class PairSeries:
    i: int
    j: int
    dist: np.ndarray
    drift: np.ndarray
    rate: float


def make_bound_report(name, theoretical, observed, pair=None) -> BoundReport:
    theoretical = float(theoretical)
    observed = float(observed)
    return BoundReport(
        bound_name=BoundName(name),
        theoretical=theoretical,
        observed_max=observed,
        satisfied=observed <= theoretical + BOUND_SLACK,
        margin=theoretical - observed,
        pair=pair,
    )


def fit_decay_rate(times, values, floor: float = RATE_FLOOR, ceiling: float = RATE_CEILING) -> float:
    """Least-squares exponential rate of ``values`` (returned positive for decay).

    Only samples inside ``[floor, ceiling * values[0]]`` enter the fit, which
    drops the initial transient and the numerical floor. ``nan`` when fewer
    than three samples qualify.
    """
    t = np.asarray(times, dtype=float)
    y = np.asarray(values, dtype=float)
    if len(y) == 0:
        return math.nan
    mask = (y >= floor) & (y <= ceiling * y[0])
    if np.count_nonzero(mask) < 3:
        return math.nan
    slope = np.polyfit(t[mask], np.log(y[mask]), 1)[0]
    return float(-slope)


def segment_bounds(times, event_times) -> list[tuple[int, int]]:
    """Index ranges ``[a, b)`` between target events."""
    times = np.asarray(times)
    cuts = [0]
    for te in sorted(event_times):
        k = int(np.searchsorted(times, te - 1e-9))
        if 0 < k < len(times):
            cuts.append(k)
    cuts.append(len(times))
    return [(a, b) for a, b in zip(cuts[:-1], cuts[1:]) if b > a]


def segment_rates(times, values, event_times=()) -> list[tuple[float, float, float]]:
    """``(t_start, t_end, rate)`` for each event-free segment."""
    times = np.asarray(times)
    out = []
    for a, b in segment_bounds(times, event_times):
        out.append((float(times[a]), float(times[b - 1]), fit_decay_rate(times[a:b], values[a:b])))
    return out


def first_entry(values, bound: float) -> int | None:
    hit = np.flatnonzero(np.asarray(values) <= bound)
    return int(hit[0]) if hit.size else None


def max_after_entry(values, bound: float) -> tuple[int | None, float]:
    """Index of the first sample ``<= bound`` and the max from there on."""
    values = np.asarray(values)
    k = first_entry(values, bound)
    if k is None:
        return None, math.inf
    return k, float(values[k:].max())


def pairwise_metrics(traj: Trajectory) -> list[PairSeries]:
    """Attitude distance, position drift and fitted decay rate for every pair."""
    if traj.n_robots < 2:
        raise ValueError("pairwise metrics need at least two robots")
    return [
        PairSeries(i, j, traj.pair_dist[m], traj.pair_drift[m],
                   fit_decay_rate(traj.times, traj.pair_dist[m]))
        for m, (i, j) in enumerate(traj.pairs)
    ]


def check_bounds(traj: Trajectory, config: SimConfig) -> list[BoundReport]:
    """Relative-position drift bounds for every pair.

    Fixed or fully known targets get the ``2 sqrt(3) pi / r`` bound with
    ``r = k_w``; partially known targets the ``2 sqrt(3) mu* / k_w`` bound.
    Both are derived for unit speed, so they are scaled by the robots' speed.
    Field-driven targets differ per robot, so neither bound applies.
    """
    reports = []
    if config.target.field is not None:
        return reports
    horizon = traj.times[-1] if len(traj.times) else 0.0
    for m, (i, j) in enumerate(traj.pairs):
        ri, rj = config.robots[i], config.robots[j]
        k = min(ri.controller.k_w, rj.controller.k_w)
        if math.exp(-k * horizon) >= 1e-3:
            log.warning("pair (%d, %d): horizon %.3g too short for k_w=%.3g", i, j, horizon, k)
        speed = max(ri.speed, rj.speed)
        mask = traj.times >= traj.t0 - 1e-9
        observed = float(traj.pair_drift[m][mask].max()) if mask.any() else 0.0
        if config.target.mode is TargetMode.PARTIAL:
            mu_star = max(ri.controller.mu_star or math.nan, rj.controller.mu_star or math.nan)
            if math.isnan(mu_star):
                continue
            bound = speed * 2.0 * math.sqrt(3.0) * mu_star / k
            reports.append(make_bound_report(BoundName.PROP2, bound, observed, (i, j)))
        elif ri.controller.mode is ControllerMode.FULL and rj.controller.mode is ControllerMode.FULL:
            bound = speed * 2.0 * math.sqrt(3.0) * math.pi / k
            reports.append(make_bound_report(BoundName.LEMMA4, bound, observed, (i, j)))
    return reports


def lemma1_holds(traj: Trajectory, robot: int = 0) -> bool:
    """If ``mu`` never increases and starts off the singularity, the log never
    enters the pi branch."""
    mu = traj.mu[robot]
    if np.any(np.diff(mu) > 1e-12) or traj.at_pi[robot, 0]:
        return True
    return not bool(np.any(traj.at_pi[robot]))
