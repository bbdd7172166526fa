"""What happens when the reasoner keeps proposing turns the vehicle cannot fly.

First a reasoner whose opening guess is too tight: the solver names the
radius violation, the retry widens the turn, and the second proposal flies.
Then one that never learns: after the retry budget the agent holds its
heading at minimum speed and stays there.

    python demos/retry_then_hold.py
"""
from dataclasses import replace

from uuvftc.bus import MsgType
from uuvftc.reasoner import ScriptedReasoner
from uuvftc.scenarios.config import load
from uuvftc.scenarios.runner import run_scenario


class Stubborn(ScriptedReasoner):
    def generate(self, prompt):
        if prompt.initial:
            return super().generate(prompt)
        return "radius: 4 m\nspeed: 1 kn\nwaypoints: (60,0);(100,0);(100,30)\nreturn_heading: 0\n"


def story(title, res):
    print(f"== {title}")
    for m in res.messages:
        if m.msg_type is MsgType.VERIFICATION_RESULT and m.corr_id.startswith("c1a"):
            p = m.payload
            print(f"  {m.corr_id}: {'PASS' if p.passed else 'FAIL ' + ','.join(p.violations)}")
    srcs = [m.payload.source for m in res.messages if m.msg_type is MsgType.CONTROL_COMMAND]
    print(f"  final command source: {srcs[-1]}, mission complete: {res.metrics.mission_completed}\n")


def main():
    cfg = load("exp_f")
    story("tight first guess", run_scenario(replace(cfg, strategy=replace(cfg.strategy, first_radius=4.0))))
    story("stubborn reasoner", run_scenario(cfg, reasoner=Stubborn(cfg.strategy, cfg.limits, cfg.area),
                                            duration_cap=150.0))


if __name__ == "__main__":
    main()
