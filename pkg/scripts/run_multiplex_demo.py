#!/usr/bin/env python3
"""Multiplexed single-shot capture through a random binary mask and its
least-squares inversion, noiseless and regularized."""

import argparse
import json

from depthfield.demos import demo_multiplex

if __name__ == "__main__":
    ap = argparse.ArgumentParser(description=__doc__)
    ap.add_argument("--out", default="out/multiplex")
    ap.add_argument("--seed", type=int, default=0)
    ap.add_argument("--threads", type=int, default=1)
    args = ap.parse_args()
    manifest = demo_multiplex(args.out, seed=args.seed,
                              threads=args.threads)
    print(json.dumps(manifest["metrics"], indent=2, sort_keys=True))
