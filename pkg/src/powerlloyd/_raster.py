"""Exact moment integration of convex polygons against raster densities.

A raster density is piecewise constant on grid pixels, so polygon moments
are computed exactly by clipping the polygon to every overlapping pixel
rectangle and applying the constant-density edge-sum formulas.  The hot
loop is compiled with numba when available.
"""

import numpy as np


def _poly_raster_moments_py(v, values, xmin, ymin, dx, dy):
    n = v.shape[0]
    ny, nx = values.shape
    out = np.zeros(6)  # mass, fx, fy, sxx, sxy, syy
    if n < 3:
        return out
    bx0 = v[0, 0]
    bx1 = v[0, 0]
    by0 = v[0, 1]
    by1 = v[0, 1]
    for k in range(1, n):
        if v[k, 0] < bx0:
            bx0 = v[k, 0]
        if v[k, 0] > bx1:
            bx1 = v[k, 0]
        if v[k, 1] < by0:
            by0 = v[k, 1]
        if v[k, 1] > by1:
            by1 = v[k, 1]
    ix0 = int(np.floor((bx0 - xmin) / dx))
    ix1 = int(np.floor((bx1 - xmin) / dx))
    iy0 = int(np.floor((by0 - ymin) / dy))
    iy1 = int(np.floor((by1 - ymin) / dy))
    if ix0 < 0:
        ix0 = 0
    if iy0 < 0:
        iy0 = 0
    if ix1 > nx - 1:
        ix1 = nx - 1
    if iy1 > ny - 1:
        iy1 = ny - 1

    maxv = n + 8
    sx = np.empty(maxv)
    sy = np.empty(maxv)
    tx = np.empty(maxv)
    ty = np.empty(maxv)
    px = np.empty(maxv)
    py = np.empty(maxv)

    for iy in range(iy0, iy1 + 1):
        ylo = ymin + iy * dy
        yhi = ylo + dy
        row = ny - 1 - iy
        # clip the polygon to the horizontal strip [ylo, yhi]
        m = 0
        for k in range(n):
            k1 = k + 1
            if k1 == n:
                k1 = 0
            s0 = v[k, 1] - yhi
            s1 = v[k1, 1] - yhi
            if s0 <= 0.0:
                sx[m] = v[k, 0]
                sy[m] = v[k, 1]
                m += 1
                if s1 > 0.0:
                    t = s0 / (s0 - s1)
                    sx[m] = v[k, 0] + t * (v[k1, 0] - v[k, 0])
                    sy[m] = yhi
                    m += 1
            elif s1 <= 0.0:
                t = s0 / (s0 - s1)
                sx[m] = v[k, 0] + t * (v[k1, 0] - v[k, 0])
                sy[m] = yhi
                m += 1
        m2 = 0
        for k in range(m):
            k1 = k + 1
            if k1 == m:
                k1 = 0
            s0 = ylo - sy[k]
            s1 = ylo - sy[k1]
            if s0 <= 0.0:
                tx[m2] = sx[k]
                ty[m2] = sy[k]
                m2 += 1
                if s1 > 0.0:
                    t = s0 / (s0 - s1)
                    tx[m2] = sx[k] + t * (sx[k1] - sx[k])
                    ty[m2] = ylo
                    m2 += 1
            elif s1 <= 0.0:
                t = s0 / (s0 - s1)
                tx[m2] = sx[k] + t * (sx[k1] - sx[k])
                ty[m2] = ylo
                m2 += 1
        if m2 < 3:
            continue
        for ix in range(ix0, ix1 + 1):
            val = values[row, ix]
            if val <= 0.0:
                continue
            xlo = xmin + ix * dx
            xhi = xlo + dx
            # clip the strip polygon to the vertical band [xlo, xhi]
            c = 0
            for k in range(m2):
                k1 = k + 1
                if k1 == m2:
                    k1 = 0
                s0 = tx[k] - xhi
                s1 = tx[k1] - xhi
                if s0 <= 0.0:
                    px[c] = tx[k]
                    py[c] = ty[k]
                    c += 1
                    if s1 > 0.0:
                        t = s0 / (s0 - s1)
                        px[c] = xhi
                        py[c] = ty[k] + t * (ty[k1] - ty[k])
                        c += 1
                elif s1 <= 0.0:
                    t = s0 / (s0 - s1)
                    px[c] = xhi
                    py[c] = ty[k] + t * (ty[k1] - ty[k])
                    c += 1
            c2 = 0
            qx = sx  # reuse scratch
            qy = sy
            for k in range(c):
                k1 = k + 1
                if k1 == c:
                    k1 = 0
                s0 = xlo - px[k]
                s1 = xlo - px[k1]
                if s0 <= 0.0:
                    qx[c2] = px[k]
                    qy[c2] = py[k]
                    c2 += 1
                    if s1 > 0.0:
                        t = s0 / (s0 - s1)
                        qx[c2] = xlo
                        qy[c2] = py[k] + t * (py[k1] - py[k])
                        c2 += 1
                elif s1 <= 0.0:
                    t = s0 / (s0 - s1)
                    qx[c2] = xlo
                    qy[c2] = py[k] + t * (py[k1] - py[k])
                    c2 += 1
            if c2 < 3:
                continue
            for k in range(c2):
                k1 = k + 1
                if k1 == c2:
                    k1 = 0
                x0 = qx[k]
                y0 = qy[k]
                x1 = qx[k1]
                y1 = qy[k1]
                cr = x0 * y1 - y0 * x1
                out[0] += 0.5 * val * cr
                out[1] += val * cr * (x0 + x1) / 6.0
                out[2] += val * cr * (y0 + y1) / 6.0
                out[3] += val * cr * (x0 * x0 + x0 * x1 + x1 * x1) / 12.0
                out[4] += val * cr * (
                    2.0 * x0 * y0 + 2.0 * x1 * y1 + x0 * y1 + x1 * y0
                ) / 24.0
                out[5] += val * cr * (y0 * y0 + y0 * y1 + y1 * y1) / 12.0
    return out


try:  # pragma: no cover - exercised implicitly everywhere
    import numba

    poly_raster_moments = numba.njit(cache=True)(_poly_raster_moments_py)
except ImportError:  # pragma: no cover
    poly_raster_moments = _poly_raster_moments_py
