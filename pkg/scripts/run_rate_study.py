#!/usr/bin/env python3
"""Convergence-rate study: fit the linear rate r at several generator counts.

The energy error decays like r^n; the fitted rate grows toward 1 as the
number of generators increases (more generators converge more slowly).
"""

import argparse

from powerlloyd import cli


def main():
    ap = argparse.ArgumentParser(description=__doc__)
    ap.add_argument("--out", default="out/rate")
    ap.add_argument("--seed", type=int, default=13)
    ap.add_argument("--config", default="configs/rate.json")
    args = ap.parse_args()
    return cli.main(
        ["--config", args.config, "--seed", str(args.seed), "--out", args.out, "rate"]
    )


if __name__ == "__main__":
    raise SystemExit(main())
