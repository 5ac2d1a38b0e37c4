"""Half-plane clipping kernel for power-cell construction.

The kernel clips the domain polygon against the separating half-planes of
all other generators, keeping track of which generator contributed each
surviving edge.  Edge labels: -1 for a domain-boundary edge, j >= 0 for the
half-plane separating the cell's generator from generator j.

The hot loop is compiled with numba when available; the pure-Python body is
kept as a fallback so the package still works without a JIT.
"""

import math

import numpy as np

ON_LINE_TOL = 1e-12
DOMAIN_BOUNDARY = -1


def _clip_cells_py(domain_v, pos, w, tol):
    n_dom = domain_v.shape[0]
    n_gen = pos.shape[0]
    max_v = n_dom + n_gen + 4

    out_v = np.zeros((n_gen, max_v, 2))
    out_l = np.full((n_gen, max_v), -2, dtype=np.int64)
    out_n = np.zeros(n_gen, dtype=np.int64)

    buf_v = np.zeros((max_v, 2))
    buf_l = np.zeros(max_v, dtype=np.int64)
    new_v = np.zeros((max_v, 2))
    new_l = np.zeros(max_v, dtype=np.int64)
    sval = np.zeros(max_v)

    for i in range(n_gen):
        m = n_dom
        for k in range(n_dom):
            buf_v[k, 0] = domain_v[k, 0]
            buf_v[k, 1] = domain_v[k, 1]
            buf_l[k] = DOMAIN_BOUNDARY

        d2 = (pos[:, 0] - pos[i, 0]) ** 2 + (pos[:, 1] - pos[i, 1]) ** 2
        order = np.argsort(d2)

        for oo in range(n_gen):
            j = int(order[oo])
            if j == i or m == 0:
                continue
            dx = pos[j, 0] - pos[i, 0]
            dy = pos[j, 1] - pos[i, 1]
            d2ij = dx * dx + dy * dy
            if d2ij < 1e-28:
                # coincident positions: the heavier weight wins everywhere
                if w[i] >= w[j]:
                    continue
                m = 0
                break
            d = math.sqrt(d2ij)
            nx = dx / d
            ny = dy / d
            # point on the separating line, offset from the midpoint by the
            # weight difference
            shift = (w[j] - w[i]) / (2.0 * d2ij)
            ax = 0.5 * (pos[i, 0] + pos[j, 0]) - shift * dx
            ay = 0.5 * (pos[i, 1] + pos[j, 1]) - shift * dy
            b = ax * nx + ay * ny

            smax = -1e300
            smin = 1e300
            for k in range(m):
                s = buf_v[k, 0] * nx + buf_v[k, 1] * ny - b
                sval[k] = s
                if s > smax:
                    smax = s
                if s < smin:
                    smin = s
            if smax <= tol:
                continue  # polygon already inside this half-plane
            if smin > tol:
                m = 0  # polygon entirely cut away
                break

            cnt = 0
            for k in range(m):
                k1 = k + 1
                if k1 == m:
                    k1 = 0
                s0 = sval[k]
                s1 = sval[k1]
                if s0 <= tol:
                    new_v[cnt, 0] = buf_v[k, 0]
                    new_v[cnt, 1] = buf_v[k, 1]
                    new_l[cnt] = buf_l[k]
                    cnt += 1
                    if s1 > tol:
                        t = s0 / (s0 - s1)
                        new_v[cnt, 0] = buf_v[k, 0] + t * (buf_v[k1, 0] - buf_v[k, 0])
                        new_v[cnt, 1] = buf_v[k, 1] + t * (buf_v[k1, 1] - buf_v[k, 1])
                        new_l[cnt] = j
                        cnt += 1
                elif s1 <= tol:
                    t = s0 / (s0 - s1)
                    new_v[cnt, 0] = buf_v[k, 0] + t * (buf_v[k1, 0] - buf_v[k, 0])
                    new_v[cnt, 1] = buf_v[k, 1] + t * (buf_v[k1, 1] - buf_v[k, 1])
                    new_l[cnt] = buf_l[k]
                    cnt += 1

            # drop zero-length edges; the label of a collapsed edge is
            # discarded and the following edge's label takes over
            m2 = 0
            for k in range(cnt):
                if m2 > 0:
                    ddx = new_v[k, 0] - buf_v[m2 - 1, 0]
                    ddy = new_v[k, 1] - buf_v[m2 - 1, 1]
                    if ddx * ddx + ddy * ddy <= tol * tol:
                        buf_l[m2 - 1] = new_l[k]
                        continue
                buf_v[m2, 0] = new_v[k, 0]
                buf_v[m2, 1] = new_v[k, 1]
                buf_l[m2] = new_l[k]
                m2 += 1
            # wrap-around duplicate
            if m2 > 1:
                ddx = buf_v[m2 - 1, 0] - buf_v[0, 0]
                ddy = buf_v[m2 - 1, 1] - buf_v[0, 1]
                if ddx * ddx + ddy * ddy <= tol * tol:
                    # the zero-length closing edge and its label are dropped
                    m2 -= 1
            m = m2
            if m < 3:
                m = 0
                break

        out_n[i] = m
        for k in range(m):
            out_v[i, k, 0] = buf_v[k, 0]
            out_v[i, k, 1] = buf_v[k, 1]
            out_l[i, k] = buf_l[k]

    return out_v, out_l, out_n


try:  # pragma: no cover - exercised implicitly everywhere
    import numba

    clip_cells = numba.njit(cache=True)(_clip_cells_py)
except ImportError:  # pragma: no cover
    clip_cells = _clip_cells_py
