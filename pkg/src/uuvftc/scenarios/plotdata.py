"""Columnar plot data rebuilt from a run transcript.

Nothing here touches the simulator: every file is derived from the typed
messages, so plots can be regenerated from an archived ``transcript.jsonl``.
"""
from __future__ import annotations

import csv
import math
from pathlib import Path

from ..bus import MsgType, TypedMessage
from ..geometry import densify_route, fillet_route
from ..reasoner.strategy import ParseError, parse_symbolic


def _write(path: Path, header, rows) -> Path:
    with open(path, "w", newline="") as fh:
        w = csv.writer(fh)
        w.writerow(header)
        w.writerows(rows)
    return path


def dispatched_plans(messages: list[TypedMessage]) -> list[tuple[str, float, object]]:
    """(corr_id, time, theta) for the initial plan and every verified replan."""
    passed = {m.corr_id for m in messages
              if m.msg_type is MsgType.VERIFICATION_RESULT and m.payload.passed}
    out = []
    for m in messages:
        if m.msg_type is not MsgType.STRATEGY or not m.payload.theta:
            continue
        if m.corr_id == "c0a0" or m.corr_id in passed:
            try:
                out.append((m.corr_id, m.t_stamp, parse_symbolic(m.payload.theta)))
            except ParseError:
                continue
    return out


def emit_plot_data(messages: list[TypedMessage], out_dir: str | Path, spacing: float = 1.0,
                   channels: bool = False) -> dict[str, Path]:
    """Write trajectory, reference, depth and latency tables (plus the
    lateral/along-track estimate channels when ``channels`` is set)."""
    out = Path(out_dir)
    out.mkdir(parents=True, exist_ok=True)
    states = [m.payload for m in messages if m.msg_type is MsgType.STATE_DATA]
    files: dict[str, Path] = {}

    rows = []
    for s in states:
        tr = s.truth
        rows.append([s.t, "" if tr is None else tr.x, "" if tr is None else tr.y,
                     "" if tr is None else tr.d, s.est_state.x, s.est_state.y, s.est_state.d,
                     s.e_p, int(s.confirmed), s.active_index])
    files["trajectory"] = _write(out / "trajectory.csv",
                                 ["t", "x_true", "y_true", "d_true", "x_est", "y_est", "d_est",
                                  "e_p", "confirmed", "active_index"], rows)

    rows = []
    for plan_no, (corr, t, theta) in enumerate(dispatched_plans(messages)):
        pts, depths = densify_route(fillet_route(theta.waypoints_new, theta.R_new), spacing)
        for i, (p, d) in enumerate(zip(pts, depths)):
            rows.append([plan_no, corr, t, i, p[0], p[1], d])
    files["reference"] = _write(out / "reference.csv",
                                ["plan", "corr_id", "t_dispatch", "seq", "x", "y", "depth"], rows)

    files["depth"] = _write(out / "depth.csv", ["t", "d_true", "d_est"],
                            [[s.t, "" if s.truth is None else s.truth.d, s.est_state.d]
                             for s in states])

    rows = []
    for m in messages:
        if m.msg_type is MsgType.STRATEGY:
            rows.append([m.corr_id, "reasoner", m.t_stamp, m.payload.latency])
        elif m.msg_type is MsgType.VERIFICATION_RESULT:
            rows.append([m.corr_id, "solver", m.t_stamp, m.payload.latency])
    files["latency"] = _write(out / "latency.csv", ["corr_id", "phase", "t", "latency"], rows)

    if channels and states and states[0].truth is not None:
        # channels in the frame of the launch heading
        psi0 = states[0].truth.psi
        ax, ay = math.cos(psi0), math.sin(psi0)
        rows = []
        for s in states:
            if s.truth is None:
                continue
            e, tr = s.est_state, s.truth
            rows.append([s.t, -tr.x * ay + tr.y * ax, -e.x * ay + e.y * ax,
                         tr.x * ax + tr.y * ay, e.x * ax + e.y * ay])
        files["channels"] = _write(out / "channels.csv",
                                   ["t", "lateral_true", "lateral_est", "along_true", "along_est"],
                                   rows)
    return files
