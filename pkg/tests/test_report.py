import dataclasses

import pytest

from so3align.report import summarize
from so3align.sim import run


def test_fig3_rate_check_passes(fig3_run):
    cfg, tr = fig3_run
    rep = summarize(tr, cfg)
    assert rep.passed
    assert len(rep.rates) == 2
    assert all(abs(r.fitted - 1.0) <= 0.02 for r in rep.rates)


def test_fig5_drift_bound_passes(fig5_run):
    cfg, tr = fig5_run
    rep = summarize(tr, cfg)
    assert rep.passed
    (b,) = rep.bounds
    assert b.bound_name.value == "Prop2" and b.satisfied
    assert any(c.name.startswith("pair rate") and c.passed for c in rep.checks)


def test_halved_gain_fails_rate_check(fig3_run):
    cfg, _ = fig3_run
    cfg = dataclasses.replace(cfg, t_end=6.0, events=())
    r = cfg.robots[0]
    halved = dataclasses.replace(
        cfg, robots=(dataclasses.replace(r, controller=dataclasses.replace(r.controller, k_w=0.5)),)
    )
    rep = summarize(run(halved), cfg)
    assert not rep.passed
    fail = rep.first_failure()
    assert fail.category == "rate"
    assert "FAIL" in rep.format()


def test_fig6_is_labelled_qualitative(fig6_run):
    cfg, tr = fig6_run
    rep = summarize(tr, cfg)
    assert rep.qualitative and "qualitative" in rep.format().splitlines()[0]
    assert rep.to_dict()["qualitative"] is True
    assert rep.passed
    assert sum(c.category == "approach" for c in rep.checks) == 10


def test_short_fig4_run_fails_bound_check(fig4_run):
    cfg, _ = fig4_run
    short = dataclasses.replace(cfg, t_end=0.5)
    rep = summarize(run(short), short)
    assert not rep.passed and rep.first_failure().category == "bound"


def test_every_number_comes_from_the_trajectory(fig4_run):
    cfg, tr = fig4_run
    rep = summarize(tr, cfg)
    detail = next(c.detail for c in rep.checks if c.name == "mu bound robot 0")
    k = int((tr.mu[0] <= 0.4).argmax())
    assert f"{tr.mu[0, k:].max():.6g}" in detail
    assert f"t={tr.times[k]:g}" in detail
