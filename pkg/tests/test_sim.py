import dataclasses
import logging
import math

import numpy as np
import pytest

from oracles import random_rotation
from so3align.analysis import (
    BoundName,
    check_bounds,
    fit_decay_rate,
    lemma1_holds,
    make_bound_report,
    pairwise_metrics,
    segment_bounds,
)
from so3align.control import ControllerMode, ControllerParams
from so3align.sim import (
    ConfigError,
    QuadraticBowl,
    RobotSpec,
    RobotState,
    SimConfig,
    TargetMode,
    TargetSpec,
    ZeroGradientError,
    gradient_field_target,
    propagate_target,
    random_attitude,
    run,
    step,
)
from so3align.so3 import exp_so3, hat, log_so3, vee

FULL = ControllerParams(ControllerMode.FULL, k_w=1.0)


def fixed_config(**kw):
    base = dict(robots=(RobotSpec(FULL),), target=TargetSpec(), dt=1e-3, t_end=2.0, seed=0)
    base.update(kw)
    return SimConfig(**base)


# ----------------------------------------------------------------- step


def test_step_straight_line(rng):
    R = random_rotation(rng)
    s = RobotState(np.array([1.0, 2.0, 3.0]), R, np.array([0.7, 0.0, 0.0]))
    out = step(s, np.zeros((3, 3)), 0.01)
    assert np.allclose(out.p, s.p + R @ s.v * 0.01, atol=1e-15)
    assert np.allclose(out.R, R, atol=1e-15)
    with pytest.raises(ValueError):
        step(s, np.zeros((3, 3)), 0.0)


def circle_error(dt: float, c: float = 2.0, t_end: float = 3.0) -> float:
    s = RobotState(np.zeros(3), np.eye(3), np.array([1.0, 0.0, 0.0]))
    Om = hat([0.0, 0.0, c])
    n = int(round(t_end / dt))
    for _ in range(n):
        s = step(s, Om, dt)
    t = n * dt
    exact = np.array([math.sin(c * t) / c, (1 - math.cos(c * t)) / c, 0.0])
    return float(np.linalg.norm(s.p - exact))


def test_step_traces_circle():
    assert circle_error(1e-3) < 1e-6


def test_step_position_is_second_order():
    ratio = circle_error(2e-3) / circle_error(1e-3)
    assert ratio >= 3.8


def test_constant_rate_attitude_is_exact():
    w = np.array([0.3, -0.7, 1.1])
    dt, n = 1e-3, 2000
    s = RobotState(np.zeros(3), np.eye(3), np.array([1.0, 0.0, 0.0]))
    for _ in range(n):
        s = step(s, hat(w), dt)
    assert np.max(np.abs(s.R - exp_so3(n * dt * w))) < 1e-12


# ----------------------------------------------------------------- target


def test_propagate_target_static():
    spec = TargetSpec()
    Ra = spec.Ra0
    assert np.array_equal(propagate_target(spec, Ra, 0.0, 0.01), Ra)


def test_propagate_target_period_two_roll():
    spec = TargetSpec(TargetMode.FULL, omega_known=(math.pi, 0.0, 0.0))
    Ra0 = exp_so3([0.2, -0.5, 0.9])
    Ra, dt = Ra0, 1e-3
    for k in range(2000):
        Ra = propagate_target(spec, Ra, k * dt, dt)
    assert np.max(np.abs(Ra - Ra0)) < 1e-10


def test_propagate_target_precession():
    w_d = math.pi / 14
    spec = TargetSpec(TargetMode.PARTIAL, omega_known=(math.pi, 0.0, 0.0), omega_unknown=(0.0, 0.0, -w_d))
    Ra0 = spec.Ra0
    x0 = Ra0[:, 0]
    Ra, dt = Ra0, 1e-3
    for k in range(1, 3001):
        Ra = propagate_target(spec, Ra, (k - 1) * dt, dt)
        if k % 500 == 0:
            t = k * dt
            expected = exp_so3([0.0, 0.0, -w_d * t]) @ x0
            assert np.max(np.abs(Ra[:, 0] - expected)) < 1e-12


def test_gradient_field_target():
    bowl = QuadraticBowl(np.array([1.0, 2.0, 3.0]))
    p = np.array([4.0, 6.0, 3.0])
    assert np.allclose(gradient_field_target(bowl, p), [-0.6, -0.8, 0.0], atol=1e-15)
    with pytest.raises(ZeroGradientError):
        gradient_field_target(bowl, bowl.center)


def test_random_attitude_stays_off_singularity():
    rng = np.random.default_rng(0)
    Ra = exp_so3([0.1, 0.2, 0.3])
    for _ in range(500):
        R = random_attitude(rng, Ra)
        assert log_so3(Ra.T @ R).theta < math.pi - 0.1 + 1e-12


# ----------------------------------------------------------------- run


def test_run_is_deterministic():
    cfg = fixed_config(robots=(RobotSpec(FULL), RobotSpec(FULL, position=np.array([0, 1.0, 0]))), seed=7)
    a, b = run(cfg), run(cfg)
    for f in ("p", "R", "mu", "delta", "omega", "pair_dist", "pair_drift"):
        assert np.array_equal(getattr(a, f), getattr(b, f))


def test_trajectory_shapes(fig3_run):
    cfg, tr = fig3_run
    n = cfg.n_steps + 1
    assert tr.times.shape == (n,) and tr.p.shape == (1, n, 3) and tr.R.shape == (1, n, 3, 3)
    assert tr.mu.shape == tr.delta.shape == (1, n)
    assert np.allclose(np.diff(tr.times), cfg.dt, rtol=0, atol=1e-12)


def test_manifold_preservation(fig5_run):
    cfg, tr = fig5_run
    I = np.eye(3)
    after = np.linalg.norm(np.einsum("rtki,rtkj->rtij", tr.R, tr.R) - I, axis=(-2, -1))
    assert after.max() < 1e-9
    # before repair: the raw product R exp(dt w) of each recorded step
    before = 0.0
    for i in range(tr.n_robots):
        for k in range(0, len(tr.times) - 1, 97):
            M = tr.R[i, k] @ exp_so3(cfg.dt * tr.omega[i, k])
            before = max(before, float(np.linalg.norm(M.T @ M - I)))
    assert before < 1e-6


def test_speed_is_preserved(fig3_run):
    cfg, tr = fig3_run
    speeds = np.linalg.norm(np.diff(tr.p[0], axis=0), axis=-1) / cfg.dt
    assert np.max(np.abs(speeds - cfg.robots[0].speed)) < 1e-12


def test_zero_error_start_stays_put():
    spec = TargetSpec(TargetMode.FULL, direction=np.array([0.0, 1.0, 0.0]), omega_known=(0.5, 0.2, -0.1))
    att = log_so3(spec.Ra0).tau
    cfg = SimConfig((RobotSpec(FULL, attitude=att),), spec, t_end=5.0)
    assert run(cfg).mu.max() <= 1e-9


def test_fig3_rates(fig3_run):
    cfg, tr = fig3_run
    for a, b in segment_bounds(tr.times, [e.time for e in cfg.events]):
        rate = fit_decay_rate(tr.times[a:b], tr.mu[0, a:b])
        assert abs(rate - 1.0) <= 0.02


def test_fig4_ultimate_bound(fig4_run):
    cfg, tr = fig4_run
    mu_star = cfg.robots[0].controller.mu_star
    k = int(np.flatnonzero(tr.mu[0] <= mu_star)[0])
    assert tr.mu[0, k:].max() <= 1.02 * mu_star
    assert tr.mu[0, 0] > mu_star  # the run actually starts outside the bound
    assert np.all(tr.delta <= tr.mu / math.sqrt(2) + 1e-9)


def test_information_pattern():
    """Partial-information controls only depend on what the plant sees."""
    w_d, dt = math.pi / 14, 1e-3
    wu = np.array([0.0, 0.0, -w_d])

    def same_on_samples(t):
        on_grid = abs(t / dt - round(t / dt)) < 1e-9
        return wu if on_grid else np.array([5.0, -3.0, 1.0])

    ctl = ControllerParams(ControllerMode.PARTIAL, k_w=None, omega_d=w_d, mu_star=0.4, delta_star=0.4)
    target = TargetSpec(TargetMode.PARTIAL, omega_known=(math.pi, 0, 0), omega_unknown=wu)
    a = run(SimConfig((RobotSpec(ctl),), target, dt=dt, t_end=2.0, seed=2))
    b = run(SimConfig((RobotSpec(ctl),), dataclasses.replace(target, omega_unknown=same_on_samples),
                      dt=dt, t_end=2.0, seed=2))
    assert np.array_equal(a.omega, b.omega)
    assert np.array_equal(a.R, b.R)


def test_partial_controller_blind_to_unknown_rate():
    """Same initial state, different unknown rate: the first control is identical."""
    ctl = ControllerParams(ControllerMode.PARTIAL, k_w=None, omega_d=0.3, mu_star=0.4, delta_star=0.4)
    mk = lambda wu: SimConfig(
        (RobotSpec(ctl),), TargetSpec(TargetMode.PARTIAL, omega_unknown=wu), t_end=0.01, seed=5
    )
    a, b = run(mk((0.0, 0.0, 0.3))), run(mk((0.3, 0.0, 0.0)))
    assert np.array_equal(a.omega[:, 0], b.omega[:, 0])


def test_lemma1_runtime_check(fig3_run, fig5_run):
    for _, tr in (fig3_run, fig5_run):
        for i in range(tr.n_robots):
            assert lemma1_holds(tr, i)
    _, tr = fig3_run
    # mu is nonincreasing under the exact feedforward law, so the pi branch is never entered
    assert not tr.at_pi.any()


def test_lemma1_pair_trace_stays_away_from_minus_one():
    cfg = fixed_config(robots=(RobotSpec(FULL), RobotSpec(FULL, position=np.array([0, 1.0, 0]))),
                       seed=11, t_end=6.0)
    tr = run(cfg)
    d = tr.pair_dist[0]
    assert np.all(np.diff(d) <= 1e-12)
    Rij = np.einsum("tki,tkj->tij", tr.R[0], tr.R[1])
    assert np.min(np.abs(np.trace(Rij, axis1=1, axis2=2) + 1)) > 0


def test_identical_robots_have_zero_pair_metrics():
    att = np.array([0.4, 1.0, -0.3])
    r = RobotSpec(FULL, attitude=att)
    tr = run(fixed_config(robots=(r, r)))
    assert np.all(tr.pair_dist == 0.0) and np.all(tr.pair_drift == 0.0)
    tr = run(fixed_config(robots=(r, dataclasses.replace(r, position=np.array([3.0, -1.0, 2.0])))))
    assert np.max(np.abs(tr.pair_drift)) < 1e-12


def test_nudge_at_singularity(caplog):
    Ra0 = TargetSpec().Ra0
    R0 = Ra0 @ exp_so3([0.0, math.pi, 0.0])  # half turn away from the target
    att = log_so3(R0).tau
    assert log_so3(Ra0.T @ exp_so3(att)).at_pi_branch
    with caplog.at_level(logging.WARNING, logger="so3align.sim"):
        tr = run(fixed_config(robots=(RobotSpec(FULL, attitude=att),), t_end=0.1))
    assert tr.nudges and tr.nudges[0] == (0.0, 0)
    assert "nudging" in caplog.text
    assert not tr.at_pi[0, 0]
    assert tr.mu[0, 0] == pytest.approx(math.sqrt(2) * (math.pi - 1e-3), abs=1e-9)


def test_config_errors():
    with pytest.raises(ConfigError, match="stability margin"):
        run(fixed_config(dt=0.2))
    with pytest.raises(ConfigError, match="partial-information controller"):
        run(fixed_config(target=TargetSpec(TargetMode.PARTIAL)))
    with pytest.raises(ConfigError, match="zero rates"):
        run(fixed_config(target=TargetSpec(TargetMode.FIXED, omega_known=(1.0, 0, 0))))
    ctl = ControllerParams(ControllerMode.PARTIAL, k_w=None, omega_d=0.1, mu_star=0.4, delta_star=0.4)
    with pytest.raises(ConfigError, match="exceeds omega_d"):
        run(SimConfig((RobotSpec(ctl),), TargetSpec(TargetMode.PARTIAL, omega_unknown=(0, 0, 0.2))))
    with pytest.raises(ConfigError):
        run(fixed_config(robots=()))
    with pytest.raises(ConfigError):
        run(fixed_config(target=TargetSpec(TargetMode.FULL, field=QuadraticBowl())))


# ----------------------------------------------------------------- bounds


def test_bound_report_satisfied_iff_within_slack():
    assert make_bound_report("Lemma4", 1.0, 1.0 + 5e-10).satisfied
    assert not make_bound_report("Lemma4", 1.0, 1.0 + 2e-9).satisfied
    r = make_bound_report(BoundName.PROP2, 2.0, 0.5)
    assert r.margin == 1.5 and r.bound_name is BoundName.PROP2


def test_pairwise_metrics_need_two_robots(fig3_run):
    with pytest.raises(ValueError):
        pairwise_metrics(fig3_run[1])


def test_fig5_pair_rate_and_drift(fig5_run):
    cfg, tr = fig5_run
    k = cfg.robots[0].controller.k_w
    (ps,) = pairwise_metrics(tr)
    assert abs(ps.rate - k) / k < 0.05
    (rep,) = check_bounds(tr, cfg)
    assert rep.bound_name is BoundName.PROP2 and rep.satisfied
    assert rep.theoretical == pytest.approx(0.5 * 2 * math.sqrt(3) * 0.5 / k)


def test_lemma4_fixed_target():
    robots = (RobotSpec(FULL), RobotSpec(FULL, position=np.array([0.0, 5.0, 0.0])))
    for seed in range(3):
        cfg = fixed_config(robots=robots, seed=seed, t_end=10.0)
        (rep,) = check_bounds(run(cfg), cfg)
        assert rep.bound_name is BoundName.LEMMA4
        assert rep.theoretical == pytest.approx(2 * math.sqrt(3) * math.pi)
        assert rep.satisfied


def test_fig6_swarm_approaches_peak(fig6_run):
    cfg, tr = fig6_run
    assert tr.n_robots == 10
    for i in range(10):
        d = np.linalg.norm(tr.p[i] - cfg.target.field.center, axis=-1)
        k = int(np.flatnonzero(tr.delta[i] <= cfg.robots[i].controller.delta_star)[0])
        assert np.all(np.diff(d[k:]) < 0)
