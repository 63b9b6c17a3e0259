#!/usr/bin/env python3
"""Capacity versus sample rank N under both signatures.

Euclidean channels accumulate capacity monotonically; Minkowski channels can
contribute negative amounts, so the monotone reading does not apply there.
"""
from __future__ import annotations

import argparse

import numpy as np

from infocap.fisher import capacity_over_rank
from infocap.metric import MetricSignature
from infocap.statmodel import ParameterVector, gaussian_location_model


def sweep(kind, k, n_max):
    metric = MetricSignature.from_name(kind, k)
    build = lambda n: gaussian_location_model(np.eye(k), channel_count=n)
    theta = lambda n: ParameterVector(np.zeros((n, k)))
    return capacity_over_rank(build, theta, metric, n_max)


def main():
    ap = argparse.ArgumentParser(description=__doc__)
    ap.add_argument("--n-max", type=int, default=8)
    ap.add_argument("--obs-dim", type=int, default=4)
    args = ap.parse_args()

    for kind in ("euclidean", "minkowski"):
        rows, monotone = sweep(kind, args.obs_dim, args.n_max)
        print(f"\n{kind} (k = {args.obs_dim})")
        for n, total, per in rows:
            print(f"  N={n:>2d}  I={total:+10.4f}  per-channel "
                  f"{np.round(per, 4)}")
        print("  monotone:", "not applicable" if monotone is None else monotone)


if __name__ == "__main__":
    main()
