#!/usr/bin/env python3
"""Scan the white-noise GHZ channel family and write a plot-ready CSV.

Writes (q, F_allowed, F_denied) rows plus the threshold where the allowed
fidelity crosses the classical bound 2/3.
"""

import sys

import numpy as np

from cqtsim.channels import werner_scan


def main(out_path="werner_scan.csv", points=101):
    result = werner_scan(np.linspace(0.0, 1.0, int(points)))
    with open(out_path, "w", encoding="utf-8") as fh:
        fh.write("# schema=cqtsim.v1\n")
        fh.write(f"# f_allowed crosses 2/3 at q={result.threshold_q:.9f}\n")
        fh.write("q,f_allowed,f_denied\n")
        for q, fa, fd in result.rows:
            fh.write(f"{q:.6f},{fa:.9f},{fd:.9f}\n")
    print(f"wrote {len(result.rows)} rows to {out_path}; "
          f"threshold q = {result.threshold_q:.9f}")


if __name__ == "__main__":
    main(*sys.argv[1:])
