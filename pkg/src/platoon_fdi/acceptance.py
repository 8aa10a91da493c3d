"""Acceptance checks for the reference scenarios.

Each check returns a :class:`CriterionResult` with the measured quantities
next to their thresholds.  Simulation runs are shared through
:class:`RunCache`, so the whole suite integrates each scenario once.
"""

from __future__ import annotations

import contextlib
import dataclasses
import io
import json
import time
from dataclasses import dataclass, field
from typing import Callable

import numpy as np

from .adversary import t5_residual_floor
from .config import AttackerConfig, LeaderConfig, ScenarioConfig
from .control import lyapunov_value
from .dynamics import LinearPlant, PowertrainParams, linearization_gap
from .engine import SimResult, prepare, run_scenario, step, initial_world
from .presets import get_preset, paper_presets
from .synthesis import care_residual, solve_care, verify_riccati_inequality

TRACK_TOL = 1e-3
GAIN_DRIFT_TOL = 1e-4
RUNTIME_LIMIT = 30.0
T5_TRACK_TOL = 5e-2
T5_FLOOR_FRACTION = 0.5
TRANSIENT_RATIO = 2.0
SUBSTITUTION_TOL = 1e-12
LINEARIZATION_TOL = 1e-4
CARE_TOL = 1e-8
LYAPUNOV_SETTLE = 10.0


@dataclass
class CriterionResult:
    number: int
    title: str
    passed: bool
    measured: dict = field(default_factory=dict)

    def line(self) -> str:
        parts = []
        for k, v in self.measured.items():
            if isinstance(v, float):
                parts.append(f"{k}={v:.3g}")
            elif isinstance(v, (list, tuple)) and v and isinstance(v[0], float):
                parts.append(f"{k}=[{', '.join(f'{x:.3g}' for x in v)}]")
            else:
                parts.append(f"{k}={v}")
        return f"{'PASS' if self.passed else 'FAIL'} criterion {self.number:>2}: {self.title}: {'; '.join(parts)}"

    def to_dict(self) -> dict:
        return {"number": self.number, "title": self.title, "passed": self.passed,
                "measured": json.loads(json.dumps(self.measured, default=float))}


def warm_up() -> None:
    """Compile the integration kernel on a one-step problem."""
    prep = prepare(get_preset("scenario0"))
    step(initial_world(prep), prep.cfg.sim.h, prep)


class RunCache:
    def __init__(self):
        self._runs: dict[str, SimResult] = {}
        self.wall: dict[str, float] = {}

    def get(self, key: str, cfg: ScenarioConfig | None = None) -> SimResult:
        if key not in self._runs:
            cfg = get_preset(key) if cfg is None else cfg
            start = time.perf_counter()
            self._runs[key] = run_scenario(cfg)
            self.wall[key] = time.perf_counter() - start
        return self._runs[key]


def _tail_max(res: SimResult, series: np.ndarray) -> float:
    return float(np.max(series[res.tail()]))


def _vs_attacker(res: SimResult) -> dict[int, float]:
    return {j: _tail_max(res, e) for j, e in res.error_vs_attacker().items()}


def _vs_leader(res: SimResult) -> list[float]:
    err = res.error_vs_leader()
    return [_tail_max(res, err[:, i]) for i in range(res.N)]


def _list(d: dict) -> list[float]:
    return [d[k] for k in sorted(d)]


def c1_nominal(cache: RunCache) -> CriterionResult:
    res = cache.get("scenario0")
    tail = res.tail()
    drift = (res.e[tail].max(axis=0) - res.e[tail].min(axis=0)).tolist()
    errs = _vs_leader(res)
    wall = cache.wall["scenario0"]
    ok = max(errs) < TRACK_TOL and max(drift) < GAIN_DRIFT_TOL and wall < RUNTIME_LIMIT
    return CriterionResult(1, "nominal tracking", ok,
                           {"tail_err_vs_leader": errs, "gain_drift": drift, "runtime_s": wall})


def c2_t1(cache: RunCache) -> CriterionResult:
    res = cache.get("scenario1")
    ev = _vs_attacker(res)
    ok = max(ev.values()) < TRACK_TOL and res.verdict.all_stealthy
    return CriterionResult(2, "scenario1 leader-link substitution", ok,
                           {"tail_err_vs_attacker": _list(ev), "residual_tail_max": list(res.verdict.tail_max)})


def c3_t2(cache: RunCache) -> CriterionResult:
    res = cache.get("scenario2")
    ev = _vs_attacker(res)
    el = _vs_leader(res)
    ok = (set(ev) == {3, 4} and max(ev.values()) < TRACK_TOL and max(el[:2]) < TRACK_TOL
          and res.verdict.all_stealthy)
    return CriterionResult(3, "scenario2 capture of followers 3, 4", ok,
                           {"err_vs_attacker_3_4": _list(ev), "err_vs_leader_1_2": el[:2],
                            "residual_tail_max": list(res.verdict.tail_max)})


def c4_t3(cache: RunCache) -> CriterionResult:
    res = cache.get("scenario3")
    ev = _vs_attacker(res)
    el = _vs_leader(res)
    syn = cache.get("synthetic_t3")
    sev = _vs_attacker(syn)
    part = syn.prepared.plan.partition
    ok = (set(ev) == {4} and ev[4] < TRACK_TOL and max(el[:3]) < TRACK_TOL and res.verdict.all_stealthy
          and len(part.V_nd_dc) > 0 and max(sev.values()) < TRACK_TOL and syn.verdict.all_stealthy)
    return CriterionResult(4, "scenario3 capture of follower 4 and disconnected-tail variant", ok,
                           {"err_vs_attacker_4": ev.get(4), "err_vs_leader_1_3": el[:3],
                            "residual_tail_max": list(res.verdict.tail_max),
                            "synthetic_V_nd_dc": sorted(part.V_nd_dc),
                            "synthetic_err_vs_attacker": _list(sev),
                            "synthetic_residual_tail_max": list(syn.verdict.tail_max)})


def c5_t4(cache: RunCache) -> CriterionResult:
    res = cache.get("scenario4a")
    ev = _vs_attacker(res)
    gamma2 = res.metadata["gamma2"]
    ok = max(ev.values()) < TRACK_TOL and res.verdict.all_stealthy and gamma2 <= res.metadata["gamma"] * (1 + 1e-12)
    return CriterionResult(5, "scenario4a static controller, slow attacker", ok,
                           {"tail_err_vs_attacker": _list(ev), "gamma2": gamma2, "gamma": res.metadata["gamma"],
                            "residual_tail_max": list(res.verdict.tail_max)})


def c6_t5(cache: RunCache) -> CriterionResult:
    res = cache.get("scenario4b")
    p = res.prepared
    floor = t5_residual_floor(p.c1, p.c2, p.cfg.attacker.c3, p.gains.K)
    ev = _vs_attacker(res)
    tail = res.tail()
    V_d = set(p.graph.pinned())
    low = {i: float(res.residuals[tail, i - 1].min()) for i in sorted(V_d)}
    others = {i: res.verdict.tail_max[i - 1] for i in range(1, p.N + 1) if i not in V_d}
    ok = (max(ev.values()) < T5_TRACK_TOL and min(low.values()) >= T5_FLOOR_FRACTION * floor
          and all(v < p.cfg.detection.eps_stealth for v in others.values()))
    return CriterionResult(6, "scenario4b signum-lifting attack", ok,
                           {"tail_err_vs_attacker": _list(ev), "floor": floor,
                            "V_d_tail_min_residual": _list(low), "other_tail_max_residual": _list(others)})


def c7_transient(cache: RunCache) -> CriterionResult:
    att = cache.get("scenario2_onset0")
    nom = cache.get("scenario0")
    V_d = att.prepared.graph.pinned()
    ratios = [float(att.residuals[:, i - 1].max() / nom.residuals[:, i - 1].max()) for i in V_d]
    ok = all(1.0 / TRANSIENT_RATIO <= r <= TRANSIENT_RATIO for r in ratios)
    return CriterionResult(7, "transient-onset attack hides in transient residuals", ok,
                           {"V_d_peak_ratio": ratios,
                            "attacked_peak": [float(att.residuals[:, i - 1].max()) for i in V_d],
                            "attack_free_peak": [float(nom.residuals[:, i - 1].max()) for i in V_d]})


def substituted_nominal(cfg: ScenarioConfig) -> ScenarioConfig:
    """Attack-free copy of ``cfg`` whose leader starts and moves as the attacker."""
    prep = prepare(cfg)
    a = cfg.attacker
    N = cfg.graph.N
    followers = prep.y0[3:3 * (N + 1)].reshape(N, 3)
    return dataclasses.replace(
        cfg, name=f"{cfg.name}_substituted", attacker=AttackerConfig(plan="none"),
        leader=LeaderConfig(v_bias=a.v_bias, amplitude=prep.attacker_profile.amp, omega=a.omega,
                            p0=float(prep.attacker.x_a0[0])),
        platoon=dataclasses.replace(cfg.platoon, init_states=[[float(x) for x in row] for row in followers]))


def c8_substitution(cache: RunCache) -> CriterionResult:
    att = cache.get("scenario1_onset0")
    sub = cache.get("scenario1_substituted", substituted_nominal(att.config))
    dev = float(np.max(np.abs(att.X[:, 1:] - sub.X[:, 1:])))
    lead = float(np.max(np.abs(att.x_a - sub.X[:, 0])))
    ok = dev <= SUBSTITUTION_TOL and lead <= SUBSTITUTION_TOL
    return CriterionResult(8, "onset-0 substitution equals a nominal run led by the attacker", ok,
                           {"max_follower_dev": dev, "max_leader_dev": lead})


def c9_linearization(cache: RunCache, seed: int = 2024) -> CriterionResult:
    rng = np.random.default_rng(seed)
    params = PowertrainParams()
    gaps = []
    for _ in range(3):
        amp = rng.uniform(-1.0, 1.0, 3)
        w = rng.uniform(0.1, 2.0, 3)
        phase = rng.uniform(0.0, 2 * np.pi, 3)

        def u(t, amp=amp, w=w, phase=phase):
            return float(np.sum(amp * np.sin(w * t + phase)))

        gaps.append(linearization_gap(u, (0.0, float(rng.uniform(5, 30)), 0.0), params))
    return CriterionResult(9, "feedback linearization matches the lag model", max(gaps) < LINEARIZATION_TOL,
                           {"max_gap": gaps})


def lyapunov_trace(res: SimResult) -> np.ndarray:
    p = res.prepared
    alpha = max(1.1 * p.gamma, 1.1 / p.blocks.lambda1)
    d = np.array([p.spacing.d(i) for i in range(1, p.N + 1)])
    Z = res.X[:, 1:] - res.X[:, :1] + d[None]
    return np.array([lyapunov_value(Z[n], res.e[n], p.blocks.L1, p.gains.P_inv, alpha, p.cfg.controller.tau_adapt)
                     for n in range(len(res.t))])


def c10_synthesis(cache: RunCache) -> CriterionResult:
    plant = LinearPlant(0.4)
    X = solve_care(plant)
    resid = care_residual(plant, X)
    ok_ineq, top = verify_riccati_inequality(X, plant)
    base = get_preset("scenario0")
    cfg = dataclasses.replace(base, name="scenario0_synthesized", gains=dataclasses.replace(base.gains, K=None))
    res = cache.get(cfg.name, cfg)
    V = lyapunov_trace(res)
    dV = np.diff(V)
    late = res.t[1:] >= LYAPUNOV_SETTLE
    h = cfg.sim.h
    tol = 10.0 * h ** 4 * float(V[0])  # ten RK4 local-error units at the initial level
    worst = float(dV[late].max())
    ok = resid < CARE_TOL and ok_ineq and worst <= tol
    return CriterionResult(10, "Riccati synthesis and Lyapunov decrease", ok,
                           {"care_residual": resid, "riccati_max_eig": top, "max_dV_after_settle": worst,
                            "tolerance": tol, "violations": int(np.sum(dV[late] > tol))})


def c11_determinism(cache: RunCache) -> CriterionResult:
    from .cli import main

    mismatched = []
    for cfg in paper_presets():
        first = cache.get(cfg.name).digest
        buf = io.StringIO()
        with contextlib.redirect_stdout(buf):
            code = main(["run", "--preset", cfg.name, "--hash-only"])
        again = buf.getvalue().strip()
        if code != 0 or again != first:
            mismatched.append(cfg.name)
    return CriterionResult(11, "repeated hash-only runs agree", not mismatched,
                           {"presets": len(paper_presets()), "mismatched": mismatched})


CRITERIA: dict[int, Callable[[RunCache], CriterionResult]] = {
    1: c1_nominal, 2: c2_t1, 3: c3_t2, 4: c4_t3, 5: c5_t4, 6: c6_t5,
    7: c7_transient, 8: c8_substitution, 9: c9_linearization, 10: c10_synthesis, 11: c11_determinism,
}


def run_acceptance(only=None, cache: RunCache | None = None) -> list[CriterionResult]:
    warm_up()
    cache = RunCache() if cache is None else cache
    numbers = sorted(CRITERIA) if not only else sorted(only)
    return [CRITERIA[n](cache) for n in numbers]


def format_table(results: list[CriterionResult]) -> str:
    lines = [r.line() for r in results]
    passed = sum(r.passed for r in results)
    lines.append(f"{passed}/{len(results)} criteria passed")
    return "\n".join(lines)
