"""Command line entry point: ``uuvftc run | plot-data | compare | validate``."""
from __future__ import annotations

import argparse
import json
import sys
from pathlib import Path

from ..bus import DecodeError, read_transcript
from ..dynamics import FaultKind
from ..geometry import ConfigurationError
from .compare import ComparisonError, compare_runs, load_metrics
from .config import SCENARIOS, load, validate
from .plotdata import emit_plot_data
from .runner import ScenarioAborted, run_scenario


def _config(args):
    cfg = load(args.scenario)
    kw = {}
    if args.seed is not None:
        kw["seed"] = args.seed
    if args.reasoner is not None:
        kw["reasoner"] = args.reasoner
    if args.endpoint_url is not None:
        kw["endpoint_url"] = args.endpoint_url
    return validate(cfg.with_overrides(**kw)) if kw else cfg


def cmd_run(args) -> int:
    cfg = _config(args)
    out = Path(args.out) if args.out else None
    try:
        res = run_scenario(cfg, out, transport=args.transport,
                           endpoint_url=args.endpoint_url, duration_cap=args.duration_cap)
    except ScenarioAborted as exc:
        print(f"aborted: {exc}", file=sys.stderr)
        return 2
    doc = {"scenario": cfg.name, "seed": cfg.seed, "acceptance_passed": res.passed,
           **res.metrics.to_dict()}
    print(json.dumps(doc, indent=2, sort_keys=True))
    return 0 if res.passed else 1


def cmd_plot_data(args) -> int:
    src = Path(args.transcript)
    if src.is_dir():
        src = src / "transcript.jsonl"
    msgs = read_transcript(src)
    channels = args.channels
    if args.scenario is not None and not channels:
        cfg = load(args.scenario)
        channels = cfg.fault.kind is FaultKind.DVL_BIAS or cfg.estimator.mode == "dvl_kf"
    out = Path(args.out) if args.out else src.parent / "plot"
    for name, path in emit_plot_data(msgs, out, channels=channels).items():
        print(f"{name}: {path}")
    return 0


def cmd_compare(args) -> int:
    a, b = load_metrics(args.run_a), load_metrics(args.run_b)
    try:
        report = compare_runs(a, b, args.label_a, args.label_b)
    except ComparisonError as exc:
        print(f"refused: {exc}", file=sys.stderr)
        return 1
    print(report.render())
    return 0


def cmd_validate(args) -> int:
    names = [args.scenario] if args.scenario else list(SCENARIOS)
    bad = 0
    for name in names:
        try:
            cfg = load(name)
            print(f"ok       {name}  ({cfg.kind}, fault={cfg.fault.kind.value})")
        except ConfigurationError as exc:
            bad += 1
            print(f"invalid  {name}: {exc}")
    return 1 if bad else 0


def build_parser() -> argparse.ArgumentParser:
    p = argparse.ArgumentParser(prog="uuvftc", description=__doc__)
    sub = p.add_subparsers(dest="command", required=True)

    r = sub.add_parser("run", help="run one scenario; exit 0 iff its acceptance predicate holds")
    r.add_argument("--scenario", required=True, help="bundled name or YAML path")
    r.add_argument("--seed", type=int)
    r.add_argument("--out", help="directory for transcript, steps.csv and metrics.json")
    r.add_argument("--reasoner", choices=("scripted", "endpoint"))
    r.add_argument("--endpoint-url")
    r.add_argument("--duration-cap", type=float)
    r.add_argument("--transport", choices=("inproc", "tcp"), default="inproc")
    r.set_defaults(func=cmd_run)

    d = sub.add_parser("plot-data", help="columnar plot files from a transcript")
    d.add_argument("transcript", help="transcript.jsonl or a run directory")
    d.add_argument("--out")
    d.add_argument("--scenario", help="scenario the run came from (enables DVL channels)")
    d.add_argument("--channels", action="store_true", help="always write estimate channels")
    d.set_defaults(func=cmd_plot_data)

    c = sub.add_parser("compare", help="side-by-side metrics of two runs")
    c.add_argument("run_a")
    c.add_argument("run_b")
    c.add_argument("--label-a")
    c.add_argument("--label-b")
    c.set_defaults(func=cmd_compare)

    v = sub.add_parser("validate", help="load and check scenario configs")
    v.add_argument("--scenario")
    v.set_defaults(func=cmd_validate)
    return p


def main(argv=None) -> int:
    args = build_parser().parse_args(argv)
    try:
        return args.func(args)
    except (ConfigurationError, DecodeError, FileNotFoundError) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 2


if __name__ == "__main__":
    sys.exit(main())
