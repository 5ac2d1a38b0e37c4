#!/usr/bin/env python3
"""Sweep the cost prefactor and fit the scaling of the optimal cell count.

For the sqrt cost the optimal number of cells scales like lambda^(-2/3);
the fitted slope of log N against log lambda lands near -0.67.
"""

import argparse

from powerlloyd import cli


def main():
    ap = argparse.ArgumentParser(description=__doc__)
    ap.add_argument("--out", default="out/sweep")
    ap.add_argument("--seed", type=int, default=11)
    ap.add_argument("--config", default="configs/sweep.json")
    args = ap.parse_args()
    return cli.main(
        ["--config", args.config, "--seed", str(args.seed), "--out", args.out, "sweep"]
    )


if __name__ == "__main__":
    raise SystemExit(main())
