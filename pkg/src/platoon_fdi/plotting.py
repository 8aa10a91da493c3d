"""Render trace figures from an exported run directory.

This module only needs numpy and matplotlib so it can also be copied next
to the CSV files and executed on its own:

    python plot_traces.py [RUN_DIR]
"""

from __future__ import annotations

import csv
import sys
from pathlib import Path

import numpy as np

FIGURES = ("positions.png", "velocities.png", "residuals.png", "gains.png")


def _read(path: Path, value: str) -> dict[str, tuple[np.ndarray, np.ndarray]]:
    series: dict[str, tuple[list, list]] = {}
    with open(path, newline="", encoding="utf-8") as fh:
        for row in csv.DictReader(fh):
            t, y = series.setdefault(row.get("vehicle", "attacker"), ([], []))
            t.append(float(row["t"]))
            y.append(float(row[value]))
    return {k: (np.array(t), np.array(y)) for k, (t, y) in series.items()}


def _label(vehicle: str) -> str:
    return "leader" if vehicle == "0" else f"follower {vehicle}"


def _plot(out: Path, series, ylabel: str, title: str, extra=None, logy=False) -> None:
    import matplotlib
    matplotlib.use("Agg")
    import matplotlib.pyplot as plt

    fig, ax = plt.subplots(figsize=(7.0, 4.0))
    for vehicle, (t, y) in series.items():
        ax.plot(t, y, lw=1.0, label=_label(vehicle))
    if extra is not None:
        t, y, label = extra
        ax.plot(t, y, "k--", lw=1.0, label=label)
    if logy:
        ax.set_yscale("symlog", linthresh=1e-6)
    ax.set_xlabel("time (s)")
    ax.set_ylabel(ylabel)
    ax.set_title(title)
    ax.grid(True, alpha=0.3)
    ax.legend(fontsize=8)
    fig.tight_layout()
    fig.savefig(out, dpi=110, metadata={"Software": None})
    plt.close(fig)


def render(run_dir) -> list[Path]:
    """Write the PNG figures for ``run_dir`` and return their paths."""
    run_dir = Path(run_dir)
    written = []
    attacker = None
    if (run_dir / "attacker.csv").exists():
        a = _read(run_dir / "attacker.csv", "p")
        if a:
            t, p = next(iter(a.values()))
            attacker = (t, p, "attacker")
    pos = _read(run_dir / "states.csv", "p")
    _plot(run_dir / "positions.png", pos, "position (m)", "vehicle positions", attacker)
    written.append(run_dir / "positions.png")
    vel = _read(run_dir / "states.csv", "v")
    av = None
    if attacker is not None:
        t, v = next(iter(_read(run_dir / "attacker.csv", "v").values()))
        av = (t, v, "attacker")
    _plot(run_dir / "velocities.png", vel, "velocity (m/s)", "vehicle velocities", av)
    written.append(run_dir / "velocities.png")
    res = _read(run_dir / "residuals.csv", "r")
    _plot(run_dir / "residuals.png", res, "residual", "follower residuals", logy=True)
    written.append(run_dir / "residuals.png")
    gains = _read(run_dir / "gains.csv", "e")
    _plot(run_dir / "gains.png", gains, "coupling gain", "adaptive coupling gains")
    written.append(run_dir / "gains.png")
    return written


if __name__ == "__main__":
    for path in render(sys.argv[1] if len(sys.argv) > 1 else Path(__file__).resolve().parent):
        print(path)
