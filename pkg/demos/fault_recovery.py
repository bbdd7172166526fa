"""Walk through the lower-rudder fault run message by message.

The vehicle starts a lake mission with a tight 4 m turn it can no longer
fly. Watch the cross-track error build, the confirmation window fill, the
reasoner propose a wider turn, the solver clear it, and the mission finish.

    python demos/fault_recovery.py [--seed N]
"""
import argparse

from uuvftc.bus import MsgType
from uuvftc.scenarios.config import load
from uuvftc.scenarios.runner import run_scenario


def main():
    ap = argparse.ArgumentParser()
    ap.add_argument("--seed", type=int, default=0)
    args = ap.parse_args()

    cfg = load("exp_f").with_overrides(seed=args.seed)
    res = run_scenario(cfg)
    eps = cfg.thresholds.eps_p

    print(f"{cfg.name}, seed {cfg.seed}: plan radius {cfg.radius} m, eps_p {eps} m\n")
    last = (0, False)
    for m in res.messages:
        p = m.payload
        if m.msg_type is MsgType.STATE_DATA:
            if (p.alpha, p.confirmed) != last:
                tag = "CONFIRMED" if p.confirmed else ("raw flag" if p.alpha else "clear")
                print(f"{m.t_stamp:7.2f} s  e_p={p.e_p:5.2f} m  {tag} {list(p.labels)}")
            last = (p.alpha, p.confirmed)
        elif m.msg_type is MsgType.PLANNING_REQUEST and p.kind == "replan":
            print(f"{m.t_stamp:7.2f} s  -> reasoner  ({m.corr_id}, retry {p.retry_index})")
        elif m.msg_type is MsgType.STRATEGY and m.corr_id != "c0a0":
            print(f"{m.t_stamp:7.2f} s  <- strategy  {p.theta.splitlines()[0]}, "
                  f"{p.theta.splitlines()[1]}")
        elif m.msg_type is MsgType.VERIFICATION_RESULT:
            word = "PASS" if p.passed else f"FAIL {list(p.violations)}"
            print(f"{m.t_stamp:7.2f} s  solver {word} ({p.checks_passed}/3 checks)")
        elif m.msg_type is MsgType.CONTROL_COMMAND and p.source != "Track" and m.corr_id:
            print(f"{m.t_stamp:7.2f} s  guidance switches to {p.source} at {p.speed_setpoint:.3f} m/s")

    mt = res.metrics
    print(f"\npeak e_p {mt.e_p_max:.2f} m, detected {mt.detection_cycles} cycles after first "
          f"exceedance, mission complete: {mt.mission_completed} at {mt.duration:.1f} s")


if __name__ == "__main__":
    main()
