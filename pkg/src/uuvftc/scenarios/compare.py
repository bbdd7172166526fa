"""Side-by-side comparison of two runs' metrics."""
from __future__ import annotations

import json
from dataclasses import dataclass
from pathlib import Path


class ComparisonError(ValueError):
    """The two runs cannot be compared (different seeds)."""


@dataclass(frozen=True)
class ComparisonRow:
    metric: str
    a: object
    b: object
    delta: float | None
    reduction_pct: float | None


@dataclass(frozen=True)
class ComparisonReport:
    label_a: str
    label_b: str
    seed: int | None
    rows: tuple[ComparisonRow, ...]

    def row(self, metric: str) -> ComparisonRow:
        for r in self.rows:
            if r.metric == metric:
                return r
        raise KeyError(metric)

    def render(self) -> str:
        def fmt(v):
            if v is None:
                return "-"
            if isinstance(v, bool):
                return "yes" if v else "no"
            if isinstance(v, float):
                return f"{v:.3f}"
            return str(v)

        head = ("metric", self.label_a, self.label_b, "delta", "reduction %")
        body = [(r.metric, fmt(r.a), fmt(r.b), fmt(r.delta), fmt(r.reduction_pct))
                for r in self.rows]
        widths = [max(len(x[i]) for x in [head, *body]) for i in range(5)]
        lines = ["  ".join(c.ljust(w) for c, w in zip(line, widths)) for line in [head, *body]]
        lines.insert(1, "  ".join("-" * w for w in widths))
        return "\n".join(lines)


def _number(v) -> bool:
    return isinstance(v, (int, float)) and not isinstance(v, bool)


def compare_runs(metrics_a: dict, metrics_b: dict, label_a: str | None = None,
                 label_b: str | None = None) -> ComparisonReport:
    """Compare metric dicts (as written to ``metrics.json``).

    Reduction is ``(a - b) / a`` in percent, so a positive figure means run
    ``b`` lowered the metric. Runs recorded with different seeds saw
    different noise and fault traces and are refused.
    """
    sa, sb = metrics_a.get("seed"), metrics_b.get("seed")
    if sa is not None and sb is not None and sa != sb:
        raise ComparisonError(f"seed mismatch: {sa} vs {sb}")
    skip = {"seed", "scenario", "acceptance_passed"}
    keys = [k for k in metrics_a if k not in skip and k in metrics_b]
    rows = []
    for k in keys:
        a, b = metrics_a[k], metrics_b[k]
        delta = red = None
        if _number(a) and _number(b):
            delta = float(b) - float(a)
            red = 0.0 if a == b else (100.0 * (a - b) / a if a != 0 else None)
        rows.append(ComparisonRow(k, a, b, delta, red))
    return ComparisonReport(label_a or str(metrics_a.get("scenario", "a")),
                            label_b or str(metrics_b.get("scenario", "b")),
                            sa if sa is not None else sb, tuple(rows))


def load_metrics(path: str | Path) -> dict:
    p = Path(path)
    if p.is_dir():
        p = p / "metrics.json"
    return json.loads(p.read_text())
