#!/usr/bin/env python3
"""See-through-foreground benchmark: cluster ray depths, mask the near
cluster, and compare masked vs unmasked refocus on the backdrop."""

import argparse
import json

from depthfield.demos import demo_occlusion

if __name__ == "__main__":
    ap = argparse.ArgumentParser(description=__doc__)
    ap.add_argument("--out", default="out/occlusion")
    ap.add_argument("--seed", type=int, default=0)
    ap.add_argument("--threads", type=int, default=1)
    ap.add_argument("--sigma", type=float, default=0.005)
    args = ap.parse_args()
    manifest = demo_occlusion(args.out, seed=args.seed,
                              threads=args.threads, sigma=args.sigma)
    print(json.dumps(manifest["metrics"], indent=2, sort_keys=True))
