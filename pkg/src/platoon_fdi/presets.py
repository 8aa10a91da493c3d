"""Reference platoon scenarios.

All presets share one leader and four followers on a 2-nearest-neighbour
graph, lag constant 0.4 s, 20 m spacing and the feedback gain
``K = [-0.7, -1.2, -0.05]``.  Attacks switch on at 50 s.
"""

from __future__ import annotations

import dataclasses

from .config import (AttackerConfig, ConfigError, ControllerConfig, GainsConfig, GraphConfig,
                     ScenarioConfig, validate)

REFERENCE_K = [-0.7, -1.2, -0.05]
REFERENCE_C1 = 2.0
REFERENCE_C2 = 1.0
DEFAULT_C3 = 2.0
# the fast attacker needs a thinner boundary layer for a sub-millimetre tail
T5_SGN_EPS = 1e-4


def _base(name: str, description: str, **sections) -> ScenarioConfig:
    cfg = ScenarioConfig(name=name, description=description, gains=GainsConfig(K=list(REFERENCE_K)))
    cfg = dataclasses.replace(cfg, **sections)
    validate(cfg)
    return cfg


def _static_gains() -> GainsConfig:
    return GainsConfig(K=list(REFERENCE_K), c1=REFERENCE_C1, c2=REFERENCE_C2)


def paper_presets() -> list[ScenarioConfig]:
    """The attack-free baseline and the five reference attack scenarios."""
    static = ControllerConfig(kind="static")
    return [
        _base("scenario0", "attack-free platoon, dynamic controller"),
        _base("scenario1", "leader-link substitution against the dynamic controller",
              attacker=AttackerConfig(plan="t1")),
        _base("scenario2", "capture of the followers not pinned to the leader (3, 4)",
              attacker=AttackerConfig(plan="t2", targets=[3, 4])),
        _base("scenario3", "capture of follower 4 only",
              attacker=AttackerConfig(plan="t3", targets=[4])),
        _base("scenario4a", "leader-link substitution against the static controller, attacker input within bound",
              controller=static, gains=_static_gains(), attacker=AttackerConfig(plan="t4")),
        _base("scenario4b", "signum-lifting attack against the static controller, fast attacker",
              controller=ControllerConfig(kind="static", sgn_eps=T5_SGN_EPS), gains=_static_gains(),
              attacker=AttackerConfig(plan="t5", amplitude=5.0, c3=DEFAULT_C3)),
    ]


def variant_presets() -> list[ScenarioConfig]:
    """Extra configurations used by the property checks."""
    by_name = {p.name: p for p in paper_presets()}
    s1, s2, s4a = by_name["scenario1"], by_name["scenario2"], by_name["scenario4a"]
    return [
        dataclasses.replace(s2, name="scenario2_onset0", description="scenario2 with the attack active from t = 0",
                            attacker=dataclasses.replace(s2.attacker, t_start=0.0)),
        dataclasses.replace(s1, name="scenario1_onset0", description="scenario1 with the attack active from t = 0",
                            attacker=dataclasses.replace(s1.attacker, t_start=0.0)),
        dataclasses.replace(s4a, name="scenario4a_bounds",
                            description="scenario4a with c1, c2 at their margin bounds and an exact signum",
                            controller=dataclasses.replace(s4a.controller, sgn_mode="exact"),
                            gains=GainsConfig(K=list(REFERENCE_K))),
        _base("synthetic_t3", "six-vehicle chain; capturing follower 4 cuts 5 and 6 off the leader",
              graph=GraphConfig(N=6, k=1), attacker=AttackerConfig(plan="t3", targets=[4])),
    ]


def get_preset(name: str) -> ScenarioConfig:
    for cfg in paper_presets() + variant_presets():
        if cfg.name == name:
            return cfg
    names = [c.name for c in paper_presets() + variant_presets()]
    raise ConfigError(f"unknown preset {name!r}", hint=f"available: {', '.join(names)}", path="preset")
