#!/usr/bin/env python3
"""Fit the backward/forward emission-strength ratio to undesired-share targets.

By default fits against the bundled reference shares (13.0 / 55.4 / 30.1 %)
with the 5 % imperfect polarizing splitter; pass three percentages to fit
other targets.  The achieved shares and residuals are the interesting output:
a single ratio cannot reach all three reference values at once.
"""

import sys

from cqtsim.protocol import ProtocolConfig
from cqtsim.spdc import fit_source_ratio


def config_factory(label):
    return {
        "uncontrolled": ProtocolConfig(channel="reference", action="none",
                                       pbs_epsilon=0.05),
        "allowed": ProtocolConfig(channel="g1", action="allow", pbs_epsilon=0.05),
        "denied": ProtocolConfig(channel="g1", action="deny", pbs_epsilon=0.05),
    }[label]


def main(*argv):
    if argv:
        values = [float(v) / 100.0 for v in argv[:3]]
        targets = dict(zip(("uncontrolled", "allowed", "denied"), values))
    else:
        targets = {"uncontrolled": 0.130, "allowed": 0.554, "denied": 0.301}
    fit = fit_source_ratio(targets, config_factory)
    print(f"fitted backward/forward ratio: {fit.ratio:.6f}")
    print(f"sum of squared residuals:      {fit.sum_squared_residual:.6e}")
    for label in targets:
        print(f"  {label:<13} target {100 * targets[label]:6.2f} %   "
              f"achieved {100 * fit.achieved[label]:6.2f} %   "
              f"residual {100 * fit.residuals[label]:+7.2f} pp")


if __name__ == "__main__":
    main(*sys.argv[1:])
