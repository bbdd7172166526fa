"""Grid search for the heading-loop gains on the nominal lake mission."""
from __future__ import annotations

from dataclasses import dataclass, replace
from itertools import product
from typing import Sequence

from .config import ScenarioConfig
from .runner import run_scenario

KP_GRID = (0.8, 1.2, 1.6)
KD_GRID = (0.2, 0.4)


@dataclass(frozen=True)
class GainScore:
    Kp: float
    Kd: float
    worst_e_p: float
    clean: bool            # no flag raised and every mission completed

    @property
    def key(self) -> tuple:
        return (not self.clean, self.worst_e_p)


def tune_gains(cfg: ScenarioConfig, seeds: Sequence[int] = (0, 1),
               kp_grid: Sequence[float] = KP_GRID,
               kd_grid: Sequence[float] = KD_GRID) -> tuple[GainScore, list[GainScore]]:
    """Score each (Kp, Kd) by its worst cross-track peak over ``seeds``.

    Returns the best score and the full table in grid order.
    """
    table = []
    for kp, kd in product(kp_grid, kd_grid):
        g = replace(cfg.guidance, Kp=float(kp), Kd=float(kd))
        worst, clean = 0.0, True
        for s in seeds:
            m = run_scenario(cfg.with_overrides(guidance=g, seed=int(s))).metrics
            worst = max(worst, m.e_p_max)
            clean &= (not m.fault_raised) and m.mission_completed
        table.append(GainScore(float(kp), float(kd), worst, clean))
    return min(table, key=lambda sc: sc.key), table
