"""Write simulation results as CSV traces, figures and a run manifest."""

from __future__ import annotations

import hashlib
import inspect
import json
from pathlib import Path

import numpy as np

from . import plotting
from .config import serialize_config
from .engine import SimResult

PLOT_STUB = "plot_traces.py"
MANIFEST = "manifest.json"


class ExportError(OSError):
    pass


def _fmt(x: float) -> str:
    return repr(float(x))


def _write(path: Path, text: str) -> None:
    try:
        with open(path, "w", encoding="utf-8", newline="") as fh:
            fh.write(text)
    except OSError as exc:
        raise ExportError(f"cannot write {path}: {exc.strerror}") from None


def _long_table(header: str, t: np.ndarray, values: np.ndarray, first_vehicle: int) -> str:
    """Rows ``t, vehicle, col...`` with ``values`` shaped ``(T, V)`` or ``(T, V, k)``."""
    if values.ndim == 2:
        values = values[:, :, None]
    lines = [header]
    for n in range(len(t)):
        tn = _fmt(t[n])
        for v in range(values.shape[1]):
            cols = ",".join(_fmt(x) for x in values[n, v])
            lines.append(f"{tn},{v + first_vehicle},{cols}")
    return "\n".join(lines) + "\n"


def trace_tables(result: SimResult) -> dict[str, str]:
    """CSV text of every trace family, keyed by file name."""
    t = result.t
    tables = {
        "states.csv": _long_table("t,vehicle,p,v,a", t, result.X, 0),
        "residuals.csv": _long_table("t,vehicle,r", t, result.residuals, 1),
        "gains.csv": _long_table("t,vehicle,e", t, result.e, 1),
        "controls.csv": _long_table("t,vehicle,u", t, result.u, 0),
    }
    lines = ["t,p,v,a"]
    for n in range(len(t)):
        lines.append(",".join([_fmt(t[n])] + [_fmt(x) for x in result.x_a[n]]))
    tables["attacker.csv"] = "\n".join(lines) + "\n"
    return tables


def _sha256(path: Path) -> str:
    return hashlib.sha256(path.read_bytes()).hexdigest()


def export_traces(result: SimResult, out_dir, config_path: str | None = None, figures: bool = True) -> dict:
    """Write CSVs, resolved config, metadata, plot stub, figures and finally the manifest."""
    cfg = result.config
    if cfg.sim.horizon < cfg.sim.sample_period:
        raise ExportError("horizon is shorter than the sample period; nothing to export")
    out = Path(out_dir)
    try:
        out.mkdir(parents=True, exist_ok=True)
    except OSError as exc:
        raise ExportError(f"cannot create {out}: {exc.strerror}") from None
    written: list[Path] = []
    for name, text in trace_tables(result).items():
        _write(out / name, text)
        written.append(out / name)
    _write(out / "config.yaml", serialize_config(cfg))
    written.append(out / "config.yaml")
    meta = {k: v for k, v in result.metadata.items() if k != "elapsed_s"}
    _write(out / "metadata.json", json.dumps(meta, indent=2, sort_keys=True) + "\n")
    written.append(out / "metadata.json")
    _write(out / PLOT_STUB, inspect.getsource(plotting))
    written.append(out / PLOT_STUB)
    if figures:
        written.extend(plotting.render(out))
    manifest = {
        "config_path": config_path,
        "files": [{"name": p.name, "sha256": _sha256(p), "bytes": p.stat().st_size} for p in written],
        "hash": result.digest,
        "verdict": result.verdict.to_dict(),
        "gains": result.metadata["gains"],
        "gains_provenance": result.metadata["gains_provenance"],
    }
    _write(out / MANIFEST, json.dumps(manifest, indent=2, sort_keys=True) + "\n")
    return manifest
