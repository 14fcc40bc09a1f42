"""Pass/fail summary of a run against the convergence rates and bounds it claims."""

from __future__ import annotations

import math
from dataclasses import asdict, dataclass, field

import numpy as np

from .analysis import BoundReport, check_bounds, fit_decay_rate, max_after_entry, segment_rates
from .control import ControllerMode
from .sim import SimConfig, TargetMode, Trajectory

RATE_TOL = 0.02
PAIR_RATE_TOL = 0.05
BOUND_TOL = 0.02


@dataclass(frozen=True)
class RateReport:
    robot: int
    t_start: float
    t_end: float
    fitted: float
    theoretical: float

    @property
    def rel_error(self) -> float:
        return abs(self.fitted - self.theoretical) / self.theoretical


@dataclass(frozen=True)
class Check:
    name: str
    passed: bool
    detail: str
    category: str = "check"


@dataclass
class SummaryReport:
    name: str
    qualitative: bool
    rates: list[RateReport] = field(default_factory=list)
    bounds: list[BoundReport] = field(default_factory=list)
    checks: list[Check] = field(default_factory=list)

    @property
    def passed(self) -> bool:
        return all(c.passed for c in self.checks)

    def first_failure(self) -> Check | None:
        return next((c for c in self.checks if not c.passed), None)

    def to_dict(self) -> dict:
        return {
            "name": self.name,
            "qualitative": self.qualitative,
            "passed": self.passed,
            "rates": [dict(asdict(r), rel_error=r.rel_error) for r in self.rates],
            "bounds": [dict(asdict(b), bound_name=b.bound_name.value) for b in self.bounds],
            "checks": [asdict(c) for c in self.checks],
        }

    def format(self) -> str:
        head = f"scenario {self.name}"
        if self.qualitative:
            head += " [qualitative: simplified gradient field, not a reproduction of reported numbers]"
        lines = [head]
        for r in self.rates:
            lines.append(
                f"  rate robot {r.robot} t=[{r.t_start:g}, {r.t_end:g}]: fitted {r.fitted:.6g}"
                f" theory {r.theoretical:.6g} rel.err {r.rel_error:.3%}"
            )
        for b in self.bounds:
            lines.append(
                f"  bound {b.bound_name.value} pair {b.pair}: observed {b.observed_max:.6g}"
                f" <= {b.theoretical:.6g} (margin {b.margin:.6g})"
            )
        for c in self.checks:
            lines.append(f"  [{'PASS' if c.passed else 'FAIL'}] {c.name}: {c.detail}")
        lines.append("PASS" if self.passed else "FAIL")
        return "\n".join(lines)


def _rate_checks(traj: Trajectory, config: SimConfig, out: SummaryReport) -> None:
    event_times = [e.time for e in config.events]
    for i, r in enumerate(config.robots):
        if r.controller.mode is not ControllerMode.FULL:
            continue
        for t_a, t_b, rate in segment_rates(traj.times, traj.mu[i], event_times):
            rep = RateReport(i, t_a, t_b, rate, r.controller.k_w)
            out.rates.append(rep)
            ok = math.isfinite(rate) and rep.rel_error <= RATE_TOL
            out.checks.append(Check(
                f"rate robot {i} [{t_a:g}, {t_b:g}]", ok,
                f"fitted {rate:.6g} vs k_w {rep.theoretical:.6g} (tol {RATE_TOL:.0%})", "rate",
            ))


def _ultimate_bound_checks(traj: Trajectory, config: SimConfig, out: SummaryReport) -> None:
    for i, r in enumerate(config.robots):
        c = r.controller
        if c.mode is not ControllerMode.PARTIAL or c.mu_star is None:
            continue
        k, mu_max = max_after_entry(traj.mu[i], c.mu_star)
        ok = k is not None and mu_max <= (1.0 + BOUND_TOL) * c.mu_star
        when = "never entered" if k is None else f"entered t={traj.times[k]:g}"
        out.checks.append(Check(
            f"mu bound robot {i}", ok,
            f"{when}, max after {mu_max:.6g} vs mu* {c.mu_star:g}", "bound",
        ))
        if c.delta_star is not None:
            k, d_max = max_after_entry(traj.delta[i], c.delta_star)
            ok = k is not None and d_max <= (1.0 + BOUND_TOL) * c.delta_star
            when = "never entered" if k is None else f"entered t={traj.times[k]:g}"
            out.checks.append(Check(
                f"delta bound robot {i}", ok,
                f"{when}, max after {d_max:.6g} vs delta* {c.delta_star:g}", "bound",
            ))


def _pair_rate_checks(traj: Trajectory, config: SimConfig, out: SummaryReport) -> None:
    for m, (i, j) in enumerate(traj.pairs):
        ki, kj = config.robots[i].controller.k_w, config.robots[j].controller.k_w
        if not math.isclose(ki, kj):
            continue
        rate = fit_decay_rate(traj.times, traj.pair_dist[m])
        rel = abs(rate - ki) / ki
        ok = math.isfinite(rate) and rel <= PAIR_RATE_TOL
        out.checks.append(Check(
            f"pair rate ({i}, {j})", ok,
            f"fitted {rate:.6g} vs k_w {ki:.6g} rel.err {rel:.3%} (tol {PAIR_RATE_TOL:.0%})", "rate",
        ))


def _approach_checks(traj: Trajectory, config: SimConfig, out: SummaryReport) -> None:
    center = config.target.field.center
    for i, r in enumerate(config.robots):
        d_star = r.controller.delta_star if r.controller.delta_star is not None else math.pi / 2
        dist = np.linalg.norm(traj.p[i] - center, axis=-1)
        hit = np.flatnonzero(traj.delta[i] <= d_star)
        if not hit.size:
            out.checks.append(Check(f"approach robot {i}", False, "never aligned", "approach"))
            continue
        k = int(hit[0])
        ok = bool(np.all(np.diff(dist[k:]) < 0.0))
        out.checks.append(Check(
            f"approach robot {i}", ok,
            f"aligned at t={traj.times[k]:g}, distance {dist[k]:.6g} -> {dist[-1]:.6g}", "approach",
        ))


def summarize(traj: Trajectory, config: SimConfig) -> SummaryReport:
    """Compare ``traj`` with what ``config`` claims.

    * full-information robots: decay rate of ``mu`` equals ``k_w`` (2%) on
      every event-free segment;
    * partial-information robots: after first entry, ``mu <= mu*`` and
      ``delta <= delta*`` (2%);
    * pairs under a partially known target: ``dist_so3`` decays at ``k_w`` (5%);
    * every applicable drift bound;
    * field targets: distance to the field's peak decreases once aligned.
    """
    out = SummaryReport(traj.name, bool(traj.qualitative or config.qualitative))
    if len(traj.times) < 2:
        return out
    _rate_checks(traj, config, out)
    if config.target.field is None:
        _ultimate_bound_checks(traj, config, out)
        if config.target.mode is TargetMode.PARTIAL:
            _pair_rate_checks(traj, config, out)
    else:
        _approach_checks(traj, config, out)
    out.bounds = check_bounds(traj, config)
    for b in out.bounds:
        out.checks.append(Check(
            f"{b.bound_name.value} drift {b.pair}", b.satisfied,
            f"observed {b.observed_max:.6g} <= {b.theoretical:.6g}", "bound",
        ))
    return out
