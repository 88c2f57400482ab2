"""Serialization of run artifacts: CSV logs, PGM/PPM rasters, JSON summary.

All files are UTF-8 with \n newlines and fixed numeric formatting, so
identical runs produce byte-identical output trees.
"""

from __future__ import annotations

import csv
import json
from pathlib import Path

import numpy as np

from .config import SimulationConfig, config_to_dict
from .engine import METRICS_HEADER, RunLogs, SIGN_EVENT_HEADER, TRAJECTORY_HEADER


def fmt_t(t: float) -> str:
    return f"{t:.3f}"


def fmt_pos(x: float) -> str:
    return f"{x:.4f}"


def fmt_len(x: float) -> str:
    return f"{x:.6f}"


def write_ppm(path, pixels: np.ndarray) -> None:
    """Binary P6 with 8-bit channels; pixels are floats in [0, 1], shape (H, W, 3)."""
    data = (np.clip(pixels, 0.0, 1.0) * 255.0).round().astype(np.uint8)
    h, w = data.shape[:2]
    with open(path, "wb") as fh:
        fh.write(f"P6\n{w} {h}\n255\n".encode("ascii"))
        fh.write(data.tobytes())


def write_pgm16(path, values: np.ndarray) -> None:
    """Binary P5 with 16-bit big-endian samples, shape (H, W)."""
    data = np.clip(values, 0, 65535).astype(">u2")
    h, w = data.shape
    with open(path, "wb") as fh:
        fh.write(f"P5\n{w} {h}\n65535\n".encode("ascii"))
        fh.write(data.tobytes())


def write_pgm16_unit(path, values: np.ndarray) -> None:
    """P5 16-bit from floats in [0, 1]."""
    write_pgm16(path, (np.clip(values, 0.0, 1.0) * 65535.0).round())


def _open_csv(path):
    fh = open(path, "w", encoding="utf-8", newline="")
    return fh, csv.writer(fh, lineterminator="\n")


def write_outputs(all_logs: list[RunLogs], aggregates: dict, config: SimulationConfig,
                  out_dir) -> list[Path]:
    """Write trajectories, sign events, metrics, audit, heatmaps, and the summary."""
    out = Path(out_dir)
    out.mkdir(parents=True, exist_ok=True)
    written = []

    path = out / "trajectories.csv"
    fh, writer = _open_csv(path)
    with fh:
        writer.writerow(TRAJECTORY_HEADER)
        for logs in all_logs:
            for rep, agent, t, floor, x, y, speed, mode, goal in logs.trajectory_rows:
                writer.writerow((rep, agent, fmt_t(t), floor, fmt_pos(x), fmt_pos(y),
                                 fmt_pos(speed), mode, goal))
    written.append(path)

    path = out / "sign_events.csv"
    fh, writer = _open_csv(path)
    with fh:
        writer.writerow(SIGN_EVENT_HEADER)
        for logs in all_logs:
            for rep, agent, t, sign_id, attn, thr, seen, category, decision in logs.sign_event_rows:
                writer.writerow((rep, agent, fmt_t(t), sign_id, f"{attn:.6f}", f"{thr:.6f}",
                                 seen, category, decision))
    written.append(path)

    path = out / "metrics.csv"
    fh, writer = _open_csv(path)
    with fh:
        writer.writerow(METRICS_HEADER)
        for logs in all_logs:
            for m in logs.leg_metrics:
                writer.writerow((
                    m.replication, m.agent, m.leg, int(m.completed),
                    fmt_t(m.travel_time) if m.travel_time is not None else "",
                    fmt_len(m.path_length) if m.path_length is not None else "",
                ))
    written.append(path)

    path = out / "audit.csv"
    fh, writer = _open_csv(path)
    with fh:
        writer.writerow(("sign_id", "seen_fraction", "mean_attention_when_visible",
                         "decisions_triggered"))
        for sign_id in sorted(aggregates["signs"]):
            row = aggregates["signs"][sign_id]
            writer.writerow((sign_id, f"{row['seen_fraction']:.6f}",
                             f"{row['mean_attention_when_visible']:.6f}",
                             row["decisions_triggered"]))
    written.append(path)

    heat_total = {}
    for logs in all_logs:
        for floor_id, heat in logs.heatmaps.items():
            if floor_id not in heat_total:
                heat_total[floor_id] = heat.astype(np.uint64).copy()
            else:
                heat_total[floor_id] += heat
    for floor_id in sorted(heat_total):
        path = out / f"heatmap_{floor_id}.pgm"
        write_pgm16(path, heat_total[floor_id])
        written.append(path)

    path = out / "summary.json"
    summary = {
        "config": config_to_dict(config),
        "aggregates": _jsonable(aggregates),
        "notes": [
            {"replication": logs.replication, "agent": agent, "t": t, "reason": reason}
            for logs in all_logs for agent, t, reason in logs.notes
        ],
    }
    with open(path, "w", encoding="utf-8", newline="\n") as fh:
        json.dump(summary, fh, indent=2, sort_keys=True)
        fh.write("\n")
    written.append(path)
    return written


def _jsonable(value):
    if isinstance(value, dict):
        return {str(k): _jsonable(v) for k, v in value.items()}
    if isinstance(value, (list, tuple)):
        return [_jsonable(v) for v in value]
    if isinstance(value, (np.integer,)):
        return int(value)
    if isinstance(value, (np.floating,)):
        return float(value)
    return value


class DebugDumper:
    """Per perception tick raster/attention dumps for --dump-views/--dump-attention."""

    def __init__(self, out_dir, views: bool, maps: bool):
        self.dir = Path(out_dir)
        self.views = views
        self.maps = maps
        if views:
            (self.dir / "views").mkdir(parents=True, exist_ok=True)
        if maps:
            (self.dir / "attention").mkdir(parents=True, exist_ok=True)

    def __call__(self, replication, agent, t, raster, mask, sal, sem, fru, fused):
        stem = f"r{replication:03d}_a{agent:03d}_t{t:08.3f}"
        if self.views:
            write_ppm(self.dir / "views" / f"{stem}.ppm", raster.pixels)
            write_pgm16(self.dir / "views" / f"{stem}_mask.pgm", mask.ids)
        if self.maps:
            for name, grid in (("sal", sal), ("sem", sem), ("fru", fru), ("fused", fused)):
                write_pgm16_unit(self.dir / "attention" / f"{stem}_{name}.pgm", grid)
