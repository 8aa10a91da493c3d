"""Scenario configuration: dataclasses, YAML parsing with positions, validation.

A configuration document is a YAML mapping with the optional top-level
``preset`` key and the sections ``graph``, ``platoon``, ``controller``,
``gains``, ``leader``, ``attacker``, ``sim`` and ``detection``.  Keys given
in a section override the preset (or the built-in defaults); unknown keys
are rejected with their line and column.
"""

from __future__ import annotations

import dataclasses
import math
import types
import typing
from dataclasses import dataclass, field
from typing import Any

import yaml

PLAN_KINDS = ("none", "t1", "t2", "t3", "t4", "t5")
CONTROLLER_KINDS = ("dynamic", "static")
SGN_MODES = ("exact", "boundary")


class ConfigError(ValueError):
    """Invalid configuration; ``hint`` suggests a remedy."""

    def __init__(self, message: str, hint: str | None = None, path: str | None = None,
                 line: int | None = None, column: int | None = None):
        self.message = message
        self.hint = hint
        self.path = path
        self.line = line
        self.column = column
        super().__init__(str(self))

    def __str__(self) -> str:
        where = ""
        if self.line is not None:
            where = f"line {self.line}, column {self.column}: "
        key = f"{self.path}: " if self.path else ""
        text = f"{where}{key}{self.message}"
        if self.hint:
            text += f" (hint: {self.hint})"
        return text


@dataclass
class GraphConfig:
    N: int = 4
    k: int | None = 2
    edges: list[list[int]] | None = None  # explicit follower edges, 1-based
    pins: list[int] | None = None         # followers wired to the leader
    require_assumption1: bool = True


@dataclass
class PlatoonConfig:
    tau: float = 0.4
    d0: float = 20.0
    init_offset: float = 5.0  # every follower starts this far ahead of its slot
    init_states: list[list[float]] | None = None  # explicit (p, v, a) per follower


@dataclass
class ControllerConfig:
    kind: str = "dynamic"
    sgn_mode: str = "boundary"
    sgn_eps: float = 1e-3
    tau_adapt: float = 1.0
    e0: float = 1.0


@dataclass
class GainsConfig:
    K: list[float] | None = None
    Q: list[list[float]] | None = None
    c1: float | None = None
    c2: float | None = None
    margin: float = 1.1


@dataclass
class LeaderConfig:
    v_bias: float = 20.0
    amplitude: float = 0.05
    omega: float = 0.1
    p0: float = 0.0
    input: str = "consistent"  # or "literal": u_0 = 0.4 (0.005 sin + 0.0075 cos)


@dataclass
class AttackerConfig:
    plan: str = "none"
    targets: list[int] = field(default_factory=list)
    t_start: float = 50.0
    v_bias: float = 10.0
    amplitude: float = 0.05
    omega: float = 0.1
    p0: float | None = None      # default: meet the leader's position at onset
    gamma2: float | None = None  # rescales the amplitude to this input bound
    c3: float | None = None
    sgn_mode: str = "exact"
    sgn_eps: float = 1e-3
    t5_sigma: str = "attacker"   # leader slot of the watched disagreement: attacker | leader


@dataclass
class SimConfig:
    horizon: float = 200.0
    h: float = 1e-4
    sample_period: float = 0.05


@dataclass
class DetectionConfig:
    settle: float = 60.0
    window: float = 20.0
    eps_stealth: float = 1e-3


@dataclass
class ScenarioConfig:
    name: str = "custom"
    description: str = ""
    graph: GraphConfig = field(default_factory=GraphConfig)
    platoon: PlatoonConfig = field(default_factory=PlatoonConfig)
    controller: ControllerConfig = field(default_factory=ControllerConfig)
    gains: GainsConfig = field(default_factory=GainsConfig)
    leader: LeaderConfig = field(default_factory=LeaderConfig)
    attacker: AttackerConfig = field(default_factory=AttackerConfig)
    sim: SimConfig = field(default_factory=SimConfig)
    detection: DetectionConfig = field(default_factory=DetectionConfig)

    def to_dict(self) -> dict:
        return dataclasses.asdict(self)

    def replace(self, **sections) -> "ScenarioConfig":
        return dataclasses.replace(self, **sections)

    def with_value(self, key: str, value) -> "ScenarioConfig":
        """Copy with one dotted key (``section.field``) set and validated."""
        return self.with_values({key: value})

    def with_values(self, values: dict) -> "ScenarioConfig":
        """Copy with several dotted keys set; validation runs once on the result."""
        data = self.to_dict()
        for key, value in values.items():
            parts = key.split(".")
            if len(parts) != 2 or parts[0] not in data or not isinstance(data[parts[0]], dict) \
                    or parts[1] not in data[parts[0]]:
                raise ConfigError(f"unknown config key {key!r}", hint="use section.field, e.g. attacker.gamma2")
            data[parts[0]][parts[1]] = value
        return from_dict(data)


def _section_types() -> dict[str, type]:
    hints = typing.get_type_hints(ScenarioConfig)
    return {name: tp for name, tp in hints.items() if dataclasses.is_dataclass(tp)}


_SECTIONS = _section_types()


# -- coercion -----------------------------------------------------------------

def _coerce(value: Any, tp, path: str):
    origin = typing.get_origin(tp)
    args = typing.get_args(tp)
    if origin in (typing.Union, types.UnionType):
        if value is None and type(None) in args:
            return None
        inner = [a for a in args if a is not type(None)]
        return _coerce(value, inner[0], path)
    if origin is list:
        if not isinstance(value, (list, tuple)):
            raise ConfigError(f"expected a list, got {value!r}", path=path)
        return [_coerce(v, args[0], f"{path}[{n}]") for n, v in enumerate(value)]
    if tp is bool:
        if not isinstance(value, bool):
            raise ConfigError(f"expected true/false, got {value!r}", path=path)
        return value
    if tp is int:
        if isinstance(value, bool) or not isinstance(value, int):
            if isinstance(value, float) and value.is_integer():
                return int(value)
            raise ConfigError(f"expected an integer, got {value!r}", path=path)
        return value
    if tp is float:
        if isinstance(value, bool):
            raise ConfigError(f"expected a number, got {value!r}", path=path)
        if isinstance(value, (int, float)):
            return float(value)
        if isinstance(value, str):
            try:
                return float(value)
            except ValueError:
                pass
        raise ConfigError(f"expected a number, got {value!r}", path=path)
    if tp is str:
        if not isinstance(value, str):
            raise ConfigError(f"expected a string, got {value!r}", path=path)
        return value
    raise TypeError(f"unsupported field type {tp}")


def _build_section(cls, data: dict, path: str, base=None):
    hints = typing.get_type_hints(cls)
    names = [f.name for f in dataclasses.fields(cls)]
    for key in data:
        if key not in names:
            raise ConfigError(f"unknown key {key!r}", hint=f"valid keys: {', '.join(names)}", path=f"{path}.{key}")
    values = dataclasses.asdict(base) if base is not None else {}
    for key, raw in data.items():
        values[key] = _coerce(raw, hints[key], f"{path}.{key}")
    return cls(**values)


def from_dict(data: dict, base: ScenarioConfig | None = None) -> ScenarioConfig:
    """Build a validated config from plain data layered over ``base``."""
    if not isinstance(data, dict):
        raise ConfigError("configuration must be a mapping")
    data = dict(data)
    if base is None:
        preset = data.pop("preset", None)
        if preset is not None:
            from .presets import get_preset
            base = get_preset(_coerce(preset, str, "preset"))
        else:
            base = ScenarioConfig()
    elif "preset" in data:
        raise ConfigError("preset can only be given once", path="preset")
    top = {f.name for f in dataclasses.fields(ScenarioConfig)}
    for key in data:
        if key not in top:
            raise ConfigError(f"unknown section {key!r}", hint=f"valid sections: preset, {', '.join(sorted(top))}",
                              path=key)
    kwargs = {}
    for name in ("name", "description"):
        kwargs[name] = _coerce(data[name], str, name) if name in data else getattr(base, name)
    for name, cls in _SECTIONS.items():
        sec = data.get(name)
        if sec is None:
            kwargs[name] = dataclasses.replace(getattr(base, name))
            continue
        if not isinstance(sec, dict):
            raise ConfigError("section must be a mapping", path=name)
        kwargs[name] = _build_section(cls, sec, name, getattr(base, name))
    cfg = ScenarioConfig(**kwargs)
    validate(cfg)
    return cfg


# -- validation ---------------------------------------------------------------

def _positive(value, path, what):
    if value is None or not (value > 0) or not math.isfinite(value):
        raise ConfigError(f"{what} must be positive", path=path)


def validate(cfg: ScenarioConfig) -> None:
    """Semantic checks that need no simulation."""
    g = cfg.graph
    if g.N < 1:
        raise ConfigError("need at least one follower", path="graph.N")
    if g.edges is None and g.pins is None:
        if g.k is None:
            raise ConfigError("graph needs k or explicit edges/pins", path="graph.k",
                              hint="set graph.k for a k-nearest-neighbour platoon")
        if not 1 <= g.k <= g.N:
            raise ConfigError(f"k={g.k} outside 1..N={g.N}", path="graph.k", hint=f"choose 1 <= k <= {g.N}")
    else:
        if g.edges is None or g.pins is None:
            raise ConfigError("explicit graphs need both edges and pins", path="graph.edges")
        for n, e in enumerate(g.edges):
            if len(e) != 2:
                raise ConfigError("edges are pairs of follower indices", path=f"graph.edges[{n}]")
            a, b = e
            if not (1 <= a <= g.N and 1 <= b <= g.N):
                raise ConfigError(f"edge {e} references a vehicle outside 1..{g.N}", path=f"graph.edges[{n}]")
            if a == b:
                raise ConfigError(f"self-loop {e} is not allowed", path=f"graph.edges[{n}]")
        for n, p in enumerate(g.pins):
            if not 1 <= p <= g.N:
                raise ConfigError(f"pin {p} outside 1..{g.N}", path=f"graph.pins[{n}]")
    _positive(cfg.platoon.tau, "platoon.tau", "lag constant")
    if not cfg.platoon.d0 >= 0:
        raise ConfigError("spacing must be non-negative", path="platoon.d0")
    xs = cfg.platoon.init_states
    if xs is not None and (len(xs) != g.N or any(len(x) != 3 for x in xs)):
        raise ConfigError(f"init_states needs {g.N} rows of (p, v, a)", path="platoon.init_states")

    c = cfg.controller
    if c.kind not in CONTROLLER_KINDS:
        raise ConfigError(f"unknown controller {c.kind!r}", path="controller.kind", hint="dynamic or static")
    if c.sgn_mode not in SGN_MODES:
        raise ConfigError(f"unknown signum mode {c.sgn_mode!r}", path="controller.sgn_mode", hint="exact or boundary")
    if c.sgn_mode == "boundary":
        _positive(c.sgn_eps, "controller.sgn_eps", "boundary-layer width")
    _positive(c.tau_adapt, "controller.tau_adapt", "adaptation rate")
    _positive(c.e0, "controller.e0", "initial coupling gain")

    gs = cfg.gains
    if gs.K is not None and len(gs.K) != 3:
        raise ConfigError("K must have three entries", path="gains.K")
    if gs.Q is not None and (len(gs.Q) != 3 or any(len(r) != 3 for r in gs.Q)):
        raise ConfigError("Q must be a 3x3 matrix", path="gains.Q")
    for name in ("c1", "c2"):
        v = getattr(gs, name)
        if v is not None:
            _positive(v, f"gains.{name}", name)
    if not gs.margin > 1:
        raise ConfigError("margin must exceed 1", path="gains.margin", hint="the default is 1.1")

    ld = cfg.leader
    if ld.input not in ("consistent", "literal"):
        raise ConfigError(f"unknown leader input {ld.input!r}", path="leader.input", hint="consistent or literal")
    _positive(ld.omega, "leader.omega", "frequency")

    a = cfg.attacker
    if a.plan not in PLAN_KINDS:
        raise ConfigError(f"unknown attack plan {a.plan!r}", path="attacker.plan", hint=", ".join(PLAN_KINDS))
    if a.plan in ("t4", "t5") and c.kind != "static":
        raise ConfigError(f"plan {a.plan} targets the static controller", path="attacker.plan",
                          hint="set controller.kind: static")
    if a.plan in ("t1", "t2", "t3") and c.kind != "dynamic":
        raise ConfigError(f"plan {a.plan} targets the dynamic controller", path="attacker.plan",
                          hint="set controller.kind: dynamic, or use t4 for the static controller")
    if a.plan == "t5" and a.c3 is None:
        raise ConfigError("plan t5 needs the gain c3", path="attacker.c3")
    if a.plan == "t3" and not a.targets:
        raise ConfigError("plan t3 needs targets", path="attacker.targets")
    for n, t in enumerate(a.targets):
        if not 1 <= t <= g.N:
            raise ConfigError(f"target {t} outside 1..{g.N}", path=f"attacker.targets[{n}]")
    if a.sgn_mode not in SGN_MODES:
        raise ConfigError(f"unknown signum mode {a.sgn_mode!r}", path="attacker.sgn_mode", hint="exact or boundary")
    if a.sgn_mode == "boundary":
        _positive(a.sgn_eps, "attacker.sgn_eps", "boundary-layer width")
    if a.t5_sigma not in ("attacker", "leader"):
        raise ConfigError(f"unknown t5_sigma {a.t5_sigma!r}", path="attacker.t5_sigma", hint="attacker or leader")
    if a.gamma2 is not None:
        _positive(a.gamma2, "attacker.gamma2", "attacker input bound")
    _positive(a.omega, "attacker.omega", "frequency")
    if not a.t_start >= 0:
        raise ConfigError("onset must be non-negative", path="attacker.t_start")

    s = cfg.sim
    _positive(s.h, "sim.h", "step")
    _positive(s.sample_period, "sim.sample_period", "sample period")
    if not s.horizon >= s.sample_period:
        raise ConfigError(f"horizon {s.horizon:g} s is shorter than the sample period {s.sample_period:g} s",
                          path="sim.horizon")
    for name, val in (("horizon", s.horizon), ("sample_period", s.sample_period)):
        ratio = val / s.h
        if abs(ratio - round(ratio)) > 1e-6 * max(1.0, ratio):
            raise ConfigError(f"{name} must be a whole number of steps (got {ratio:g} steps)",
                              path=f"sim.{name}", hint="pick h dividing both horizon and sample_period")

    d = cfg.detection
    _positive(d.window, "detection.window", "tail window")
    if not d.settle >= 0:
        raise ConfigError("settle time must be non-negative", path="detection.settle")
    _positive(d.eps_stealth, "detection.eps_stealth", "stealth threshold")
    if not s.horizon > d.settle + d.window:
        raise ConfigError(f"horizon {s.horizon:g} s must exceed settle + window = {d.settle + d.window:g} s",
                          path="sim.horizon", hint="lengthen the run or shorten detection.settle/window")


# -- YAML front end -----------------------------------------------------------

def _node_marks(node, path: str, marks: dict) -> None:
    if isinstance(node, yaml.MappingNode):
        for key, val in node.value:
            sub = f"{path}.{key.value}" if path else str(key.value)
            marks[sub] = (key.start_mark.line + 1, key.start_mark.column + 1)
            _node_marks(val, sub, marks)
    elif isinstance(node, yaml.SequenceNode):
        for n, val in enumerate(node.value):
            sub = f"{path}[{n}]"
            marks[sub] = (val.start_mark.line + 1, val.start_mark.column + 1)
            _node_marks(val, sub, marks)


def parse_config(text: str) -> ScenarioConfig:
    """Parse a YAML scenario document; errors carry line and column."""
    try:
        node = yaml.compose(text, Loader=yaml.SafeLoader)
        data = yaml.safe_load(text)
    except yaml.MarkedYAMLError as exc:
        mark = exc.problem_mark or exc.context_mark
        raise ConfigError(f"YAML syntax error: {exc.problem}",
                          line=mark.line + 1 if mark else None,
                          column=mark.column + 1 if mark else None) from None
    except yaml.YAMLError as exc:
        raise ConfigError(f"YAML error: {exc}") from None
    if data is None:
        data = {}
    marks: dict[str, tuple[int, int]] = {}
    if node is not None:
        _node_marks(node, "", marks)
    try:
        return from_dict(data)
    except ConfigError as exc:
        if exc.path is not None and exc.line is None:
            probe = exc.path
            while probe and probe not in marks:
                probe = probe.rsplit(".", 1)[0] if "." in probe else ""
            if probe:
                exc.line, exc.column = marks[probe]
        raise


def load_config(path) -> ScenarioConfig:
    try:
        with open(path, encoding="utf-8") as fh:
            text = fh.read()
    except OSError as exc:
        raise ConfigError(f"cannot read config {path}: {exc.strerror}") from None
    return parse_config(text)


def serialize_config(cfg: ScenarioConfig) -> str:
    """Fully resolved YAML document; ``parse_config`` of it returns an equal config."""
    return yaml.safe_dump(cfg.to_dict(), sort_keys=False, default_flow_style=None)
