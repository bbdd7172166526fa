"""Scenario orchestration: initial plan, closed loop, outputs."""
from __future__ import annotations

import csv
import json
import time
from dataclasses import dataclass
from pathlib import Path

from .. import bus
from ..dynamics import ModelError
from ..estimator import NumericalError
from ..scheduler import Agent, StepRecord
from ..transport import open_link
from .config import ScenarioConfig
from .metrics import RunMetrics, compute_metrics


class ScenarioAborted(RuntimeError):
    """A module failed mid-run; the partial transcript has been written."""


@dataclass
class RunResult:
    config: ScenarioConfig
    metrics: RunMetrics
    transcript: list[bytes]
    steps: list[StepRecord]
    passed: bool
    out_dir: Path | None = None

    @property
    def messages(self) -> list[bus.TypedMessage]:
        return [bus.decode(line) for line in self.transcript]


STEP_COLUMNS = ("t", "x", "y", "psi", "u", "d", "x_m", "y_m", "psi_m", "u_m", "d_m",
                "x_hat", "y_hat", "psi_hat", "e_p", "e_psi", "rudder_cmd", "rudder_bias",
                "speed_setpoint", "source", "mode", "confirmed", "active_index")


def _step_row(s: StepRecord) -> list:
    m = s.meas
    meas = ["", "", "", "", ""] if m is None else [m.x_m, m.y_m, m.psi_m, m.u_m, m.d_m]
    return [s.t, s.truth.x, s.truth.y, s.truth.psi, s.truth.u, s.truth.d, *meas,
            s.est.x, s.est.y, s.est.psi, s.e_p, s.e_psi, s.cmd.rudder_cmd, s.cmd.rudder_bias,
            s.cmd.speed_setpoint, s.cmd.source.value, s.mode, int(s.confirmed), s.active_index]


def write_outputs(out_dir: Path, transcript: list[bytes], steps: list[StepRecord],
                  metrics: RunMetrics | None, extra: dict | None = None) -> None:
    out_dir.mkdir(parents=True, exist_ok=True)
    (out_dir / "transcript.jsonl").write_bytes(b"".join(transcript))
    with open(out_dir / "steps.csv", "w", newline="") as fh:
        w = csv.writer(fh)
        w.writerow(STEP_COLUMNS)
        for s in steps:
            w.writerow(_step_row(s))
    if metrics is not None:
        doc = {**metrics.to_dict(), **(extra or {})}
        (out_dir / "metrics.json").write_text(json.dumps(doc, indent=2, sort_keys=True) + "\n")


def acceptance_predicate(cfg: ScenarioConfig, m: RunMetrics) -> bool:
    """The scenario's own pass condition, read from its ``acceptance`` block."""
    a = cfg.acceptance
    ok = m.mission_completed if a.get("mission_completed", True) else True
    if "fault_raised" in a:
        ok &= m.fault_raised == bool(a["fault_raised"])
    if "e_p_max_below" in a:
        ok &= m.e_p_max < float(a["e_p_max_below"])
    if "solver_invocations" in a:
        ok &= m.solver_invocations == int(a["solver_invocations"])
    if a.get("first_attempt_pass"):
        ok &= bool(m.first_attempt_pass)
    if "trigger_time" in a:
        lo, hi = a["trigger_time"]
        ok &= m.time_to_trigger is not None and lo <= m.time_to_trigger <= hi
    if "peak_lateral_err_below" in a:
        ok &= m.peak_lateral_err < float(a["peak_lateral_err_below"])
    return bool(ok)


def run_scenario(cfg: ScenarioConfig, out_dir: str | Path | None = None, transport: str = "inproc",
                 reasoner=None, endpoint_url: str | None = None,
                 duration_cap: float | None = None, wall_clock: bool = False) -> RunResult:
    cap = duration_cap if duration_cap is not None else cfg.timing.duration_cap
    n_cap = int(round(cap / cfg.timing.dt))
    out = Path(out_dir) if out_dir is not None else None
    agent = Agent(cfg, reasoner=reasoner, wall_clock=wall_clock, endpoint_url=endpoint_url)
    link = open_link(cfg, transport)
    try:
        agent.start()
        rep = link.initial()
        while True:
            tick_start = time.perf_counter()
            frame = agent.on_report(rep)
            if agent.complete or rep.tick >= n_cap:
                break
            if agent.in_flight:
                # a remote reasoner call is outstanding: keep fast ticks on wall-clock pace
                lag = cfg.timing.dt - (time.perf_counter() - tick_start)
                if lag > 0:
                    time.sleep(lag)
            rep = link.exchange(frame)
    except (ModelError, NumericalError, ValueError, RuntimeError) as exc:
        if out is not None:
            write_outputs(out, agent.transcript, agent.steps, None)
            (out / "error.txt").write_text(f"{type(exc).__name__}: {exc}\n")
        raise ScenarioAborted(f"{cfg.name} aborted at t={agent.t:.2f} s: {exc}") from exc
    finally:
        agent.close()
        link.close()
    metrics = compute_metrics([bus.decode(line) for line in agent.transcript])
    passed = acceptance_predicate(cfg, metrics)
    if out is not None:
        write_outputs(out, agent.transcript, agent.steps, metrics,
                      {"scenario": cfg.name, "seed": cfg.seed, "acceptance_passed": passed})
    return RunResult(cfg, metrics, agent.transcript, agent.steps, passed, out)
