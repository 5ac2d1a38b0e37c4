#!/usr/bin/env python3
"""Generate the synthetic two-Gaussian "country" raster density fixture.

The raster covers the unit square; population concentrates in two blobs and
vanishes outside an irregular coastline-like support, so some power cells
carry zero mass and get eliminated during the Lloyd iteration.
"""

import argparse

import numpy as np

from powerlloyd.measures import RasterDensity, save_raster


def country_raster(nx=96, ny=96):
    x = (np.arange(nx) + 0.5) / nx
    y = (np.arange(ny) + 0.5) / ny
    xx, yy = np.meshgrid(x, y)
    blob1 = 1.0 * np.exp(-60.0 * ((xx - 0.32) ** 2 + (yy - 0.62) ** 2))
    blob2 = 0.7 * np.exp(-45.0 * ((xx - 0.68) ** 2 + (yy - 0.35) ** 2))
    vals = blob1 + blob2
    # carve an ocean: zero density outside a wavy pseudo-coastline
    coast = 0.12 + 0.05 * np.sin(9.0 * yy) + 0.04 * np.cos(7.0 * xx)
    land = (xx > coast) & (xx < 1.0 - coast) & (yy > coast) & (yy < 1.0 - coast)
    vals = np.where(land, vals, 0.0)
    vals[vals < 1e-3] = 0.0
    # rows stored north-up: row 0 is the top of the domain
    return RasterDensity(vals[::-1], 0.0, 0.0, 1.0 / nx, 1.0 / ny)


def main():
    ap = argparse.ArgumentParser(description=__doc__)
    ap.add_argument("out", nargs="?", default="configs/country.raster")
    ap.add_argument("--nx", type=int, default=96)
    ap.add_argument("--ny", type=int, default=96)
    args = ap.parse_args()
    save_raster(args.out, country_raster(args.nx, args.ny))
    print(f"wrote {args.out}")


if __name__ == "__main__":
    main()
