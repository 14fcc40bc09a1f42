"""Scenario documents (YAML, strict schema) and the built-in figure presets.

A document looks like::

    schema_version: 1
    name: demo
    units: {angle: rad, rate: rad/time}
    sim: {dt: 0.001, t_end: 10.0, seed: 0}
    target:
      mode: full                 # fixed | full | partial
      direction: [1, 0, 0]
      omega_known: [3.14159, 0, 0]    # body frame
      omega_unknown: [0, 0, 0]        # earth frame
      events: [{time: 8.0, direction: [1, 0, 0]}]
    robots:
      - speed: 0.5
        controller: {mode: full, k_w: 1.0}

or simply ``{schema_version: 1, preset: fig3}`` plus optional ``sim``
overrides. All angles are radians and all rates radians per time unit; the
``units`` block must say so.
"""

from __future__ import annotations

import dataclasses
import math
import re
from typing import Annotated, Any, Literal, Optional

import numpy as np
import pydantic
import yaml
from pydantic import BaseModel, ConfigDict, Field, model_validator

from .control import ControllerMode, ControllerParams
from .sim import (
    ConfigError,
    QuadraticBowl,
    RobotSpec,
    SimConfig,
    TargetEvent,
    TargetMode,
    TargetSpec,
    _validate,
)

SCHEMA_VERSION = 1


class _Loader(yaml.SafeLoader):
    """Safe loader that also reads exponent floats without a dot (``1e-3``)."""


_Loader.yaml_implicit_resolvers = {
    k: list(v) for k, v in yaml.SafeLoader.yaml_implicit_resolvers.items()
}
_Loader.add_implicit_resolver(
    "tag:yaml.org,2002:float",
    re.compile(r"^[-+]?(?:[0-9][0-9_]*)(?:\.[0-9_]*)?[eE][-+]?[0-9]+$"),
    list("-+0123456789"),
)


class ParseError(ConfigError):
    """The document is not well-formed YAML (or not a mapping)."""


class ValidationError(ConfigError):
    """The document is well-formed but violates the schema or an invariant."""


class UnknownPresetError(ConfigError):
    pass


Real = Annotated[float, Field(allow_inf_nan=False)]
Vec3 = Annotated[list[Real], Field(min_length=3, max_length=3)]


class _Doc(BaseModel):
    model_config = ConfigDict(extra="forbid", strict=True)


class UnitsDoc(_Doc):
    angle: Literal["rad"]
    rate: Literal["rad/time"]


class SimDoc(_Doc):
    dt: Real = 1e-3
    t_end: Real = 10.0
    seed: Annotated[int, Field(ge=0)] = 0
    t0: Real = 0.0


class SimOverrideDoc(_Doc):
    dt: Optional[Real] = None
    t_end: Optional[Real] = None
    seed: Optional[Annotated[int, Field(ge=0)]] = None
    t0: Optional[Real] = None


class ControllerDoc(_Doc):
    mode: Literal["full", "partial"]
    k_w: Optional[Real] = None
    omega_d: Real = 0.0
    mu_star: Optional[Real] = None
    delta_star: Optional[Real] = None

    @model_validator(mode="after")
    def _check(self):
        if self.mu_star is not None and self.delta_star is not None:
            if not self.mu_star <= self.delta_star:
                raise ValueError(
                    f"μ* ≤ δ* violated (mu_star={self.mu_star}, delta_star={self.delta_star})"
                )
        if self.mode == "full" and self.k_w is None:
            raise ValueError("a full-information controller needs k_w")
        if self.mode == "partial" and self.k_w is None and self.mu_star is None:
            raise ValueError("a partial-information controller needs k_w or mu_star")
        return self


class RobotDoc(_Doc):
    speed: Real = 1.0
    position: Vec3 = [0.0, 0.0, 0.0]
    attitude: Optional[Vec3] = None
    controller: ControllerDoc


class EventDoc(_Doc):
    time: Real
    direction: Vec3
    roll_reference: Optional[Vec3] = None


class FieldDoc(_Doc):
    kind: Literal["quadratic_bowl"]
    center: Vec3 = [0.0, 0.0, 0.0]


class TargetDoc(_Doc):
    mode: Literal["fixed", "full", "partial"] = "fixed"
    direction: Vec3 = [1.0, 0.0, 0.0]
    roll_reference: Vec3 = [0.0, 0.0, 1.0]
    omega_known: Vec3 = [0.0, 0.0, 0.0]
    omega_unknown: Vec3 = [0.0, 0.0, 0.0]
    field: Optional[FieldDoc] = None
    events: list[EventDoc] = []


class ScenarioDoc(_Doc):
    schema_version: Literal[1]
    name: str = "custom"
    qualitative: bool = False
    units: UnitsDoc
    sim: SimDoc = SimDoc()
    target: TargetDoc = TargetDoc()
    robots: Annotated[list[RobotDoc], Field(min_length=1)]


class PresetDoc(_Doc):
    schema_version: Literal[1]
    preset: str
    sim: SimOverrideDoc = SimOverrideDoc()


# --------------------------------------------------------------------------- presets


def _fig3() -> SimConfig:
    robot = RobotSpec(ControllerParams(ControllerMode.FULL, k_w=1.0), speed=0.5)
    target = TargetSpec(
        TargetMode.FULL, direction=np.array([-1.0, 1.0, 1.0]),
        omega_known=(math.pi, 0.0, 0.0),
    )
    return SimConfig(
        robots=(robot,), target=target, dt=1e-3, t_end=16.0, seed=3,
        events=(TargetEvent(8.0, np.array([1.0, 0.0, 0.0])),), name="fig3",
    )


def _partial(omega_d: float, mu_star: float, delta_star: float) -> ControllerParams:
    return ControllerParams(
        ControllerMode.PARTIAL, k_w=None, omega_d=omega_d, mu_star=mu_star, delta_star=delta_star
    )


def _fig4() -> SimConfig:
    w_d = math.pi / 14
    target = TargetSpec(
        TargetMode.PARTIAL, omega_known=(math.pi, 0.0, 0.0), omega_unknown=(0.0, 0.0, -w_d)
    )
    robot = RobotSpec(_partial(w_d, 0.4, 0.4), speed=0.5)
    return SimConfig(robots=(robot,), target=target, dt=1e-3, t_end=20.0, seed=1, name="fig4")


def _fig5() -> SimConfig:
    w_d = math.pi / 15
    target = TargetSpec(
        TargetMode.PARTIAL, omega_known=(math.pi, 0.0, 0.0), omega_unknown=(0.0, 0.0, -w_d)
    )
    ctl = _partial(w_d, 0.5, 0.5)
    robots = (
        RobotSpec(ctl, speed=0.5, position=np.array([0.0, 0.0, 0.0])),
        RobotSpec(ctl, speed=0.5, position=np.array([0.0, 2.0, 0.0])),
    )
    return SimConfig(robots=robots, target=target, dt=1e-3, t_end=20.0, seed=1, t0=0.5, name="fig5")


def _fig6() -> SimConfig:
    w_d = math.pi / 4
    rng = np.random.default_rng(6)
    ctl = _partial(w_d, 0.4, 0.4)
    robots = []
    for _ in range(10):
        direction = rng.normal(size=3)
        direction /= np.linalg.norm(direction)
        position = rng.uniform(250.0, 300.0) * direction
        robots.append(RobotSpec(ctl, speed=15.0, position=position))
    target = TargetSpec(
        TargetMode.PARTIAL, omega_known=(math.pi, 0.0, 0.0),
        field=QuadraticBowl(np.zeros(3)),
    )
    return SimConfig(
        robots=tuple(robots), target=target, dt=1e-3, t_end=6.0, seed=6,
        name="fig6", qualitative=True,
    )


PRESETS = {
    "fig3": (_fig3, "one robot, known rolling target, k_w = 1, direction switch at t = 8"),
    "fig4": (_fig4, "one robot, unknown drift pi/14, mu* = delta* = 0.4"),
    "fig5": (_fig5, "two robots, unknown drift pi/15, mu* = 0.5, drift from t0 = 0.5"),
    "fig6": (_fig6, "10-robot swarm on a quadratic field, v = 15 (qualitative)"),
}


def preset(name: str) -> SimConfig:
    try:
        factory = PRESETS[name][0]
    except KeyError:
        raise UnknownPresetError(
            f"unknown preset {name!r}; choose from {', '.join(PRESETS)}"
        ) from None
    return factory()


# --------------------------------------------------------------------------- parsing


def _line_map(text: str) -> dict[tuple, int]:
    """Map document paths to 1-based line numbers."""
    out: dict[tuple, int] = {}

    def walk(node, path):
        out[path] = node.start_mark.line + 1
        if isinstance(node, yaml.MappingNode):
            for k, v in node.value:
                key = k.value
                out[path + (key,)] = k.start_mark.line + 1
                walk(v, path + (key,))
        elif isinstance(node, yaml.SequenceNode):
            for i, v in enumerate(node.value):
                walk(v, path + (i,))

    try:
        root = yaml.compose(text, Loader=_Loader)
    except Exception:
        return out
    if root is not None:
        walk(root, ())
    return out


def _format_errors(err: pydantic.ValidationError, lines: dict[tuple, int]) -> str:
    parts = []
    for e in err.errors():
        loc = tuple(x for x in e["loc"])
        where = ".".join(str(x) for x in loc) or "<document>"
        line = None
        probe = loc
        while probe and line is None:
            line = lines.get(probe)
            probe = probe[:-1]
        if line is None:
            line = lines.get(())
        msg = e["msg"]
        if msg.startswith("Value error, "):
            msg = msg[len("Value error, "):]
        parts.append(f"{where}" + (f" (line {line})" if line else "") + f": {msg}")
    return "; ".join(parts)


def _controller(doc: ControllerDoc) -> ControllerParams:
    return ControllerParams(
        mode=ControllerMode(doc.mode), k_w=doc.k_w, omega_d=doc.omega_d,
        mu_star=doc.mu_star, delta_star=doc.delta_star,
    )


def _arr(v):
    return None if v is None else np.array(v, dtype=float)


def _from_doc(doc: ScenarioDoc) -> SimConfig:
    t = doc.target
    target = TargetSpec(
        mode=TargetMode(t.mode),
        direction=_arr(t.direction),
        roll_reference=_arr(t.roll_reference),
        omega_known=tuple(t.omega_known),
        omega_unknown=tuple(t.omega_unknown),
        field=None if t.field is None else QuadraticBowl(_arr(t.field.center)),
    )
    robots = tuple(
        RobotSpec(_controller(r.controller), speed=r.speed,
                  position=_arr(r.position), attitude=_arr(r.attitude))
        for r in doc.robots
    )
    events = tuple(TargetEvent(e.time, _arr(e.direction), _arr(e.roll_reference)) for e in t.events)
    return SimConfig(
        robots=robots, target=target, dt=doc.sim.dt, t_end=doc.sim.t_end, seed=doc.sim.seed,
        events=events, t0=doc.sim.t0, name=doc.name, qualitative=doc.qualitative,
    )


def validate_config(config: SimConfig) -> SimConfig:
    """Run the simulator's precondition checks, re-raised as :class:`ValidationError`."""
    try:
        _validate(config)
        config.target.Ra0
        for e in config.events:
            if not np.all(np.isfinite(e.direction)) or not np.any(e.direction):
                raise ConfigError(f"event at t={e.time}: direction must be a nonzero vector")
    except ValidationError:
        raise
    except (ConfigError, ValueError) as exc:
        raise ValidationError(str(exc)) from exc
    return config


def with_overrides(config: SimConfig, **overrides) -> SimConfig:
    """Replace ``dt``/``t_end``/``seed``/``t0`` (``None`` values are ignored) and revalidate."""
    changes = {k: v for k, v in overrides.items() if v is not None}
    return validate_config(dataclasses.replace(config, **changes)) if changes else config


def parse_scenario(text: str) -> SimConfig:
    """Parse and validate a scenario document.

    Raises :class:`ParseError` for malformed YAML and :class:`ValidationError`
    (with field path and line) for everything else. No other exception
    escapes.
    """
    try:
        data = yaml.load(text, Loader=_Loader)
    except yaml.MarkedYAMLError as exc:
        mark = exc.problem_mark
        where = f"line {mark.line + 1}, column {mark.column + 1}: " if mark else ""
        raise ParseError(f"{where}{exc.problem or exc}") from None
    except Exception as exc:
        raise ParseError(f"unreadable document: {type(exc).__name__}") from None
    if not isinstance(data, dict):
        raise ParseError(f"expected a mapping at the top level, got {type(data).__name__}")

    lines = _line_map(text)
    try:
        if "preset" in data:
            pdoc = PresetDoc.model_validate(data)
            config = preset(pdoc.preset)
            o = pdoc.sim
            return with_overrides(config, dt=o.dt, t_end=o.t_end, seed=o.seed, t0=o.t0)
        doc = ScenarioDoc.model_validate(data)
    except pydantic.ValidationError as exc:
        raise ValidationError(_format_errors(exc, lines)) from None
    except UnknownPresetError as exc:
        line = lines.get(("preset",))
        raise ValidationError("preset" + (f" (line {line})" if line else "") + f": {exc}") from None
    except ValidationError:
        raise
    except Exception as exc:
        raise ValidationError(f"{type(exc).__name__}: {exc}") from None

    try:
        return validate_config(_from_doc(doc))
    except ValidationError:
        raise
    except Exception as exc:  # parsing is total: nothing else may escape
        raise ValidationError(f"{type(exc).__name__}: {exc}") from None


def _vec(v) -> list[float]:
    return [float(x) for x in np.asarray(v, dtype=float).reshape(3)]


def _const_rate(rate, what: str) -> list[float]:
    if callable(rate):
        raise ValueError(f"{what} is a function of time and cannot be written to a document")
    return _vec(rate)


def config_to_dict(config: SimConfig) -> dict[str, Any]:
    """Document form of a config; ``parse_scenario`` of its YAML dump gives it back."""
    t = config.target
    target: dict[str, Any] = {
        "mode": t.mode.value,
        "direction": _vec(t.direction),
        "roll_reference": _vec(t.roll_reference),
        "omega_known": _const_rate(t.omega_known, "omega_known"),
        "omega_unknown": _const_rate(t.omega_unknown, "omega_unknown"),
    }
    if t.field is not None:
        target["field"] = {"kind": "quadratic_bowl", "center": _vec(t.field.center)}
    if config.events:
        target["events"] = []
        for e in config.events:
            ev = {"time": float(e.time), "direction": _vec(e.direction)}
            if e.roll_reference is not None:
                ev["roll_reference"] = _vec(e.roll_reference)
            target["events"].append(ev)
    robots = []
    for r in config.robots:
        c = r.controller
        ctl: dict[str, Any] = {"mode": c.mode.value, "k_w": float(c.k_w), "omega_d": float(c.omega_d)}
        if c.mu_star is not None:
            ctl["mu_star"] = float(c.mu_star)
        if c.delta_star is not None:
            ctl["delta_star"] = float(c.delta_star)
        robot: dict[str, Any] = {"speed": float(r.speed), "position": _vec(r.position), "controller": ctl}
        if r.attitude is not None:
            robot["attitude"] = _vec(r.attitude)
        robots.append(robot)
    return {
        "schema_version": SCHEMA_VERSION,
        "name": config.name,
        "qualitative": bool(config.qualitative),
        "units": {"angle": "rad", "rate": "rad/time"},
        "sim": {"dt": float(config.dt), "t_end": float(config.t_end),
                "seed": int(config.seed), "t0": float(config.t0)},
        "target": target,
        "robots": robots,
    }


def dump_scenario(config: SimConfig) -> str:
    return yaml.safe_dump(config_to_dict(config), sort_keys=False, default_flow_style=None)
