"""Tune channel-2 asymmetry (od_eff, overlap) against two EIT targets.

1. group delay of the retrieved pulse (default 2.4 us);
2. retrieval efficiency relative to channel 1 (default 59.1/80.8).

For each od_eff on a grid the overlap reproducing the delay is found by
bisection (delay falls monotonically with overlap); the od_eff whose
efficiency ratio is closest to the target is reported.

    python tools/tune_channel2.py [--params FILE] [--delay 2.4us] [--ratio 0.7314]
"""

from __future__ import annotations

import argparse
import numpy as np

from slp_lab.config import load_params
from slp_lab.dynamics import ChannelParams
from slp_lab.scenarios import load_scenario, run_timeline
from slp_lab.units import parse_quantity


def eit(params, od, overlap, timeline):
    ch1 = params.channels[1]
    p = params.with_channels({1: ch1, 2: ChannelParams(od, overlap, params.channels[2].angle, ch1.delta_k_l)})
    m = run_timeline(p, timeline).metrics
    return m[1], m[2]


def main(argv=None):
    ap = argparse.ArgumentParser(description=__doc__.splitlines()[0])
    ap.add_argument("--params")
    ap.add_argument("--delay", default="2.4us")
    ap.add_argument("--ratio", type=float, default=59.1 / 80.8)
    args = ap.parse_args(argv)
    params = load_params(args.params)
    target = parse_quantity(args.delay, "time")
    tl = load_scenario("fig3-eit")
    od1 = params.channels[1].od_eff

    best = None
    for od in np.arange(30.0, od1 - 1.0, 5.0)  # channel 2 sees the thinner part of the cloud:
        lo, hi = 0.2, 1.0
        for _ in range(12):
            mid = 0.5 * (lo + hi)
            _, m2 = eit(params, od, mid, tl)
            lo, hi = (lo, mid) if m2["group_delay"] < target else (mid, hi)
        ov = round(0.5 * (lo + hi), 4)
        m1, m2 = eit(params, od, ov, tl)
        r = m2["retrieval_efficiency"] / m1["retrieval_efficiency"]
        print(f"od={od:5.1f} overlap={ov:.4f} delay={m2['group_delay'] * 1e6:.3f}us "
              f"eta1={m1['retrieval_efficiency']:.4f} eta2={m2['retrieval_efficiency']:.4f} ratio={r:.3f}")
        if best is None or abs(r - args.ratio) < abs(best[2] - args.ratio):
            best = (od, ov, r)
    print(f"closest to ratio {args.ratio:.3f}: ch2.od_eff = {best[0]:g}, ch2.overlap = {best[1]:.4f} (ratio {best[2]:.3f})")


if __name__ == "__main__":
    main()
