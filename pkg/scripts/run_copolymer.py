#!/usr/bin/env python3
"""Multistart minimization with the sqrt cost on the unit square.

Reproduces the hexagon-dominated local minimizers: run with the default
settings and inspect out/copolymer/final.svg.
"""

import argparse
import collections

from powerlloyd import cli


def main():
    ap = argparse.ArgumentParser(description=__doc__)
    ap.add_argument("--out", default="out/copolymer")
    ap.add_argument("--seed", type=int, default=7)
    ap.add_argument("--config", default="configs/copolymer.json")
    args = ap.parse_args()
    rc = cli.main(
        ["--config", args.config, "--seed", str(args.seed), "--out", args.out, "lloyd"]
    )
    if rc == 0:
        import json

        from powerlloyd import serialize
        from powerlloyd.geometry import build_power_diagram

        domain, gens = serialize.load_state(f"{args.out}/final_state.json")
        diagram = build_power_diagram(domain, gens)
        sides = collections.Counter(
            c.polygon.n_vertices for c in diagram.cells if not c.is_empty
        )
        print("cell side-count histogram:", dict(sorted(sides.items())))
    return rc


if __name__ == "__main__":
    raise SystemExit(main())
