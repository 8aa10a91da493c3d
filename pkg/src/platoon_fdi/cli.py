"""Command-line front end.

Subcommands: ``run``, ``presets``, ``verify``, ``resources`` and ``sweep``.
Machine-readable results go to stdout as JSON, log lines to stderr.
Exit codes: 0 success, 1 acceptance failure, 2 configuration error.
"""

from __future__ import annotations

import argparse
import json
import logging
import os
import sys
from pathlib import Path

import numpy as np
import yaml

from .adversary import AttackPlanError, build_attack_plan, required_resources
from .config import ConfigError, ScenarioConfig, load_config
from .control import SpacingPolicy
from .engine import SimulationError, run_scenario
from .export import ExportError, export_traces
from .graph import build_knn_topology
from .presets import get_preset, paper_presets, variant_presets

OUT_ENV = "PLATOON_FDI_OUT"
EXIT_OK, EXIT_FAIL, EXIT_CONFIG = 0, 1, 2

log = logging.getLogger("platoon_fdi")


def _emit(obj) -> None:
    print(json.dumps(obj, indent=2, sort_keys=False, default=float))


def _apply_sets(cfg: ScenarioConfig, sets: list[str]) -> ScenarioConfig:
    values = {}
    for item in sets or []:
        key, sep, raw = item.partition("=")
        if not sep:
            raise ConfigError(f"--set expects key=value, got {item!r}")
        values[key.strip()] = yaml.safe_load(raw)
    return cfg.with_values(values) if values else cfg


def _load(args) -> tuple[ScenarioConfig, str | None]:
    if getattr(args, "config", None):
        cfg, path = load_config(args.config), str(args.config)
    else:
        cfg, path = get_preset(args.preset), None
    return _apply_sets(cfg, getattr(args, "set", None)), path


def cmd_run(args) -> int:
    cfg, path = _load(args)
    log.info("running %s", cfg.name)
    result = run_scenario(cfg)
    if args.hash_only:
        print(result.digest)
        return EXIT_OK
    out = Path(args.out) if args.out else Path(os.environ.get(OUT_ENV, "runs")) / cfg.name
    manifest = export_traces(result, out, config_path=path, figures=not args.no_figures)
    log.info("wrote %d files to %s", len(manifest["files"]), out)
    _emit(result.summary() | {"output_dir": str(out), "files": [f["name"] for f in manifest["files"]]})
    return EXIT_OK


def cmd_presets(args) -> int:
    rows = paper_presets() + (variant_presets() if args.all else [])
    _emit([{"name": c.name, "description": c.description, "plan": c.attacker.plan,
            "controller": c.controller.kind} for c in rows])
    return EXIT_OK


def cmd_verify(args) -> int:
    from .acceptance import format_table, run_acceptance

    only = [int(x) for x in args.only.split(",")] if args.only else None
    results = run_acceptance(only)
    print(format_table(results), file=sys.stderr)
    passed = sum(r.passed for r in results)
    _emit({"passed": passed, "total": len(results), "criteria": [r.to_dict() for r in results]})
    return EXIT_OK if passed == len(results) else EXIT_FAIL


def parse_topology(text: str):
    kind, _, rest = text.partition(":")
    if kind != "knn":
        raise ConfigError(f"unknown topology {text!r}", hint="use knn:N:k")
    try:
        N, k = (int(x) for x in rest.split(":"))
    except ValueError:
        raise ConfigError(f"bad topology {text!r}", hint="use knn:N:k, e.g. knn:4:2") from None
    try:
        return build_knn_topology(N, k)
    except ValueError as exc:
        raise ConfigError(str(exc), hint="choose 1 <= k <= N") from None


def cmd_resources(args) -> int:
    g = parse_topology(args.topology)
    targets = [int(x) for x in args.targets.split(",")] if args.targets else []
    try:
        plan = build_attack_plan(args.plan, g, SpacingPolicy(), targets, c3=args.c3 if args.plan == "t5" else None)
        ledger = required_resources(plan, g)
    except AttackPlanError as exc:
        raise ConfigError(str(exc), path="--targets" if targets else "--plan") from None
    if args.format == "table":
        print(ledger.to_table())
    else:
        _emit(ledger.to_dict())
    return EXIT_OK


def parse_range(text: str) -> np.ndarray:
    parts = text.split(":")
    try:
        vals = [float(p) for p in parts]
    except ValueError:
        raise ConfigError(f"bad range {text!r}", hint="use start:stop[:count]") from None
    if len(vals) not in (2, 3):
        raise ConfigError(f"bad range {text!r}", hint="use start:stop[:count]")
    n = int(vals[2]) if len(vals) == 3 else 8
    if n < 2:
        raise ConfigError("a sweep needs at least two points")
    return np.linspace(vals[0], vals[1], n)


def cmd_sweep(args) -> int:
    base, _ = _load(args)
    values = parse_range(args.over)
    rows = []
    for v in values:
        cfg = base.with_value(args.key, float(v))
        res = run_scenario(cfg)
        s = res.summary()
        row = {args.key: float(v), "stealthy": s["stealthy"], "max_tail_residual": max(res.verdict.tail_max),
               "max_err_vs_attacker": max(s["tail_error_vs_attacker"].values(), default=None),
               "gamma": res.metadata["gamma"], "gamma2": res.metadata["gamma2"],
               "within_gamma": res.metadata["gamma2"] <= res.metadata["gamma"] * (1 + 1e-12)}
        rows.append(row)
        log.info("%s=%g stealthy=%s max residual %.3g", args.key, v, row["stealthy"], row["max_tail_residual"])
    boundary = None
    for prev, cur in zip(rows, rows[1:]):
        if prev["stealthy"] != cur["stealthy"]:
            boundary = [prev[args.key], cur[args.key]]
            break
    header = f"{args.key:>16} {'stealthy':>9} {'tail residual':>14} {'gamma2<=gamma':>14}"
    print(header, file=sys.stderr)
    for r in rows:
        print(f"{r[args.key]:>16.6g} {str(r['stealthy']):>9} {r['max_tail_residual']:>14.3e} "
              f"{str(r['within_gamma']):>14}", file=sys.stderr)
    _emit({"key": args.key, "base": base.name, "rows": rows, "stealth_boundary": boundary})
    return EXIT_OK


def build_parser() -> argparse.ArgumentParser:
    p = argparse.ArgumentParser(prog="platoon-fdi", description=__doc__.splitlines()[0])
    p.add_argument("-v", "--verbose", action="store_true", help="debug logging")
    sub = p.add_subparsers(dest="command", required=True)

    def source(sp, default_preset=None):
        g = sp.add_mutually_exclusive_group(required=default_preset is None)
        g.add_argument("config", nargs="?", help="YAML scenario file")
        g.add_argument("--preset", default=default_preset, help="named preset instead of a file")
        sp.add_argument("--set", action="append", metavar="KEY=VALUE", help="override one config key")

    r = sub.add_parser("run", help="simulate one scenario and export traces")
    source(r)
    r.add_argument("--out", help=f"output directory (default ${OUT_ENV}/<name> or runs/<name>)")
    r.add_argument("--hash-only", action="store_true", help="print the trace hash and write nothing")
    r.add_argument("--no-figures", action="store_true", help="skip PNG rendering")
    r.set_defaults(func=cmd_run)

    ps = sub.add_parser("presets", help="list the reference scenarios")
    ps.add_argument("--all", action="store_true", help="include the auxiliary variants")
    ps.set_defaults(func=cmd_presets)

    v = sub.add_parser("verify", help="run the acceptance suite")
    v.add_argument("--only", help="comma-separated criterion numbers")
    v.set_defaults(func=cmd_verify)

    rs = sub.add_parser("resources", help="attacker resources for a plan")
    rs.add_argument("--plan", required=True, choices=["t1", "t2", "t3", "t4", "t5"])
    rs.add_argument("--topology", default="knn:4:2", help="knn:N:k")
    rs.add_argument("--targets", help="comma-separated target followers (t2, t3)")
    rs.add_argument("--c3", type=float, default=2.0, help="signum gain for t5")
    rs.add_argument("--format", choices=["json", "table"], default="json")
    rs.set_defaults(func=cmd_resources)

    sw = sub.add_parser("sweep", help="vary one scalar config key")
    source(sw, default_preset="scenario4a_bounds")
    sw.add_argument("--key", required=True, help="dotted key, e.g. attacker.gamma2")
    sw.add_argument("--over", required=True, help="start:stop[:count]")
    sw.set_defaults(func=cmd_sweep)
    return p


def main(argv=None) -> int:
    parser = build_parser()
    args = parser.parse_args(argv)
    logging.basicConfig(level=logging.DEBUG if args.verbose else logging.INFO,
                        format="%(levelname)s %(name)s: %(message)s", stream=sys.stderr)
    if getattr(args, "config", None) is None and hasattr(args, "preset") and args.preset is None:
        parser.error("give a config file or --preset")
    try:
        return args.func(args)
    except ConfigError as exc:
        print(f"config error: {exc}", file=sys.stderr)
        return EXIT_CONFIG
    except (SimulationError, ExportError) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_FAIL


if __name__ == "__main__":
    sys.exit(main())
