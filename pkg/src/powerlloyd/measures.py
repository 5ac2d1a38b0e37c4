"""Densities and moments of cells and edges.

Constant densities use the exact edge-sum (divergence theorem) formulas for
polygon mass, first moment and x (x) x moment.  Non-constant densities are
integrated by fan-triangulating the polygon and applying a tensor
Gauss-Jacobi x Gauss-Legendre rule on the reference triangle (36 nodes,
exact for total degree <= 11); segments use 16-point Gauss-Legendre.
"""

from dataclasses import dataclass

import numpy as np
from scipy.special import roots_jacobi, roots_legendre

from ._raster import poly_raster_moments
from .errors import RasterParseError
from .geometry import ConvexPolygon

__all__ = [
    "Density",
    "ConstantDensity",
    "AnalyticDensity",
    "RasterDensity",
    "CellMoments",
    "EdgeMoments",
    "TriangleRule",
    "triangle_rule",
    "segment_rule",
    "polygon_moments",
    "edge_moments",
    "total_mass",
    "load_raster",
    "save_raster",
]

TRIANGLE_RULE_DEGREE = 11
SEGMENT_RULE_POINTS = 16


class Density:
    """Non-negative measure rho dx on the domain."""

    is_constant = False

    def __call__(self, points):
        raise NotImplementedError


@dataclass(frozen=True)
class ConstantDensity(Density):
    value: float = 1.0
    is_constant = True

    def __post_init__(self):
        if not (np.isfinite(self.value) and self.value >= 0):
            raise ValueError("constant density must be finite and >= 0")

    def __call__(self, points):
        pts = np.asarray(points, dtype=float)
        return np.full(pts.shape[:-1], self.value)


@dataclass(frozen=True)
class AnalyticDensity(Density):
    fn: object
    name: str = "analytic"

    def __call__(self, points):
        pts = np.asarray(points, dtype=float)
        return np.asarray(self.fn(pts[..., 0], pts[..., 1]), dtype=float)


@dataclass(frozen=True)
class RasterDensity(Density):
    """Piecewise-constant density on a regular grid, row 0 at the top
    (north-up).  Lookups outside the grid return 0."""

    values: np.ndarray  # (ny, nx), row-major from the top
    xmin: float
    ymin: float
    dx: float
    dy: float

    def __post_init__(self):
        v = np.asarray(self.values, dtype=float)
        if v.ndim != 2:
            raise ValueError("raster values must be a 2D grid")
        if np.any(v < 0) or not np.all(np.isfinite(v)):
            raise ValueError("raster values must be finite and >= 0")
        object.__setattr__(self, "values", v)

    @property
    def ny(self):
        return self.values.shape[0]

    @property
    def nx(self):
        return self.values.shape[1]

    def __call__(self, points):
        pts = np.asarray(points, dtype=float)
        x, y = pts[..., 0], pts[..., 1]
        ix = np.floor((x - self.xmin) / self.dx).astype(int)
        iy = np.floor((y - self.ymin) / self.dy).astype(int)
        ok = (ix >= 0) & (ix < self.nx) & (iy >= 0) & (iy < self.ny)
        row = self.ny - 1 - np.clip(iy, 0, self.ny - 1)
        col = np.clip(ix, 0, self.nx - 1)
        return np.where(ok, self.values[row, col], 0.0)


@dataclass(frozen=True)
class CellMoments:
    mass: float
    first_moment: np.ndarray  # integral of x rho
    second_moment: np.ndarray  # integral of x (x) x rho, 2x2

    @property
    def centroid(self):
        if self.mass <= 0:
            raise ZeroDivisionError("centroid of a zero-mass cell")
        return self.first_moment / self.mass

    @staticmethod
    def zero():
        return CellMoments(0.0, np.zeros(2), np.zeros((2, 2)))


@dataclass(frozen=True)
class EdgeMoments:
    mass: float  # m_ij = line integral of rho
    centroid: np.ndarray
    second_moment: np.ndarray  # S(F) = (1/m) * line integral of x (x) x rho

    @staticmethod
    def zero():
        return EdgeMoments(0.0, np.zeros(2), np.zeros((2, 2)))


@dataclass(frozen=True)
class TriangleRule:
    """Quadrature nodes (in reference-triangle coordinates) and weights."""

    nodes: np.ndarray  # (n, 2) on the triangle (0,0),(1,0),(0,1)
    weights: np.ndarray  # sum to 1/2
    degree: int


def triangle_rule(degree=TRIANGLE_RULE_DEGREE):
    """Collapsed-coordinate rule on the reference triangle.

    Gauss-Jacobi (weight 1-x) in x times Gauss-Legendre in the collapsed
    y-direction; exact for all bivariate polynomials of total degree
    <= 2n - 1 with n points per direction.
    """
    n = max(2, (degree + 2) // 2)
    tj, wj = roots_jacobi(n, 1.0, 0.0)
    xs = (tj + 1.0) / 2.0
    wx = wj / 4.0  # folds the (1-x) jacobian into the weight
    tl, wl = roots_legendre(n)
    us = (tl + 1.0) / 2.0
    wu = wl / 2.0
    X, U = np.meshgrid(xs, us, indexing="ij")
    WX, WU = np.meshgrid(wx, wu, indexing="ij")
    nodes = np.column_stack([X.ravel(), ((1.0 - X) * U).ravel()])
    weights = (WX * WU).ravel()
    return TriangleRule(nodes, weights, 2 * n - 1)


def segment_rule(n=SEGMENT_RULE_POINTS):
    """Gauss-Legendre nodes/weights on [0, 1]."""
    t, w = roots_legendre(n)
    return (t + 1.0) / 2.0, w / 2.0


_TRI_RULE = triangle_rule()
_SEG_T, _SEG_W = segment_rule()


def _cyclic_shift(a):
    out = np.empty_like(a)
    out[:-1] = a[1:]
    out[-1] = a[0]
    return out


def _edge_cross(v):
    v1 = _cyclic_shift(v)
    return v[:, 0] * v1[:, 1] - v[:, 1] * v1[:, 0]


def _constant_polygon_moments(v, rho0):
    """Exact edge-sum formulas for constant density."""
    x, y = v[:, 0], v[:, 1]
    x1, y1 = _cyclic_shift(x), _cyclic_shift(y)
    c = x * y1 - y * x1
    mass = 0.5 * rho0 * c.sum()
    first = (rho0 / 6.0) * np.array(
        [np.dot(c, x + x1), np.dot(c, y + y1)]
    )
    sxx = (rho0 / 12.0) * np.dot(c, x * x + x * x1 + x1 * x1)
    syy = (rho0 / 12.0) * np.dot(c, y * y + y * y1 + y1 * y1)
    sxy = (rho0 / 24.0) * np.dot(c, 2.0 * x * y + 2.0 * x1 * y1 + x * y1 + x1 * y)
    second = np.array([[sxx, sxy], [sxy, syy]])
    return CellMoments(float(mass), first, second)


def _fan_triangles(v):
    """Triangles (v0, v_k, v_{k+1}) of the fan from vertex 0."""
    n = len(v)
    a = np.repeat(v[0][None, :], n - 2, axis=0)
    return np.stack([a, v[1:-1], v[2:]], axis=1)


def _quadrature_triangles_moments(tris, density, rule=_TRI_RULE):
    """Summed moments over a batch of triangles, (T, 3, 2)."""
    a = tris[:, 0]
    e1 = tris[:, 1] - a
    e2 = tris[:, 2] - a
    jac = np.abs(e1[:, 0] * e2[:, 1] - e1[:, 1] * e2[:, 0])  # 2 * area
    # physical nodes, (T, n, 2)
    pts = (
        a[:, None, :]
        + rule.nodes[None, :, 0, None] * e1[:, None, :]
        + rule.nodes[None, :, 1, None] * e2[:, None, :]
    )
    w = rule.weights[None, :] * jac[:, None]  # (T, n)
    rho = density(pts)
    wr = w * rho
    mass = float(wr.sum())
    first = (wr[:, :, None] * pts).sum(axis=(0, 1))
    second = np.einsum("tn,tni,tnj->ij", wr, pts, pts)
    return CellMoments(mass, first, second)


def _raster_polygon_moments(v, density):
    out = poly_raster_moments(
        np.ascontiguousarray(v, dtype=float), density.values,
        float(density.xmin), float(density.ymin),
        float(density.dx), float(density.dy),
    )
    second = np.array([[out[3], out[4]], [out[4], out[5]]])
    return CellMoments(float(out[0]), out[1:3].copy(), second)


def polygon_moments(poly, density):
    """Mass, first moment and x (x) x moment of a convex polygon."""
    if isinstance(poly, ConvexPolygon):
        v = poly.vertices
    else:
        v = np.asarray(poly, dtype=float).reshape(-1, 2)
    if len(v) < 3:
        return CellMoments.zero()
    if density.is_constant:
        return _constant_polygon_moments(v, density.value)
    if isinstance(density, RasterDensity):
        # piecewise constant on pixels: exact by clipping to each pixel
        return _raster_polygon_moments(v, density)
    return _quadrature_triangles_moments(_fan_triangles(v), density)


def polygon_moments_batch(polys, density):
    """Moments of many polygons at once (empty polygons give zero moments)."""
    out = [None] * len(polys)
    if density.is_constant or isinstance(density, RasterDensity):
        for k, p in enumerate(polys):
            out[k] = polygon_moments(p, density)
        return out
    tris = []
    owner = []
    for k, p in enumerate(polys):
        v = p.vertices if isinstance(p, ConvexPolygon) else np.asarray(p)
        if len(v) < 3:
            out[k] = CellMoments.zero()
            continue
        t = _fan_triangles(v)
        tris.append(t)
        owner.extend([k] * len(t))
    if not tris:
        return out
    tris = np.concatenate(tris, axis=0)
    owner = np.asarray(owner)
    rule = _TRI_RULE
    a = tris[:, 0]
    e1 = tris[:, 1] - a
    e2 = tris[:, 2] - a
    jac = np.abs(e1[:, 0] * e2[:, 1] - e1[:, 1] * e2[:, 0])
    pts = (
        a[:, None, :]
        + rule.nodes[None, :, 0, None] * e1[:, None, :]
        + rule.nodes[None, :, 1, None] * e2[:, None, :]
    )
    wr = rule.weights[None, :] * jac[:, None] * density(pts)
    t_mass = wr.sum(axis=1)
    t_first = (wr[:, :, None] * pts).sum(axis=1)
    t_second = np.einsum("tn,tni,tnj->tij", wr, pts, pts)
    n_out = len(polys)
    mass = np.zeros(n_out)
    first = np.zeros((n_out, 2))
    second = np.zeros((n_out, 2, 2))
    np.add.at(mass, owner, t_mass)
    np.add.at(first, owner, t_first)
    np.add.at(second, owner, t_second)
    for k in range(n_out):
        if out[k] is None:
            out[k] = CellMoments(float(mass[k]), first[k], second[k])
    return out


def edge_moments(segment, density):
    """Line-integral moments of a straight segment."""
    a = np.asarray(segment[0], dtype=float)
    b = np.asarray(segment[1], dtype=float)
    u = b - a
    length = float(np.hypot(u[0], u[1]))
    if length == 0.0:
        return EdgeMoments.zero()
    if density.is_constant:
        rho0 = density.value
        mass = rho0 * length
        if mass == 0.0:
            return EdgeMoments.zero()
        centroid = 0.5 * (a + b)
        s_int = (
            np.outer(a, a)
            + 0.5 * (np.outer(a, u) + np.outer(u, a))
            + np.outer(u, u) / 3.0
        )
        return EdgeMoments(mass, centroid, s_int)
    if isinstance(density, RasterDensity):
        return _raster_edge_moments(a, b, density)
    pts = a[None, :] + _SEG_T[:, None] * u[None, :]
    rho = density(pts)
    w = _SEG_W * rho * length
    mass = float(w.sum())
    if mass <= 0.0:
        return EdgeMoments.zero()
    centroid = (w[:, None] * pts).sum(axis=0) / mass
    second = np.einsum("n,ni,nj->ij", w, pts, pts) / mass
    return EdgeMoments(mass, centroid, second)


def _raster_edge_moments(a, b, density):
    """Exact segment moments: split at pixel boundaries, constant per piece."""
    u = b - a
    breaks = [0.0, 1.0]
    for lo, d, comp in ((density.xmin, density.dx, 0), (density.ymin, density.dy, 1)):
        if u[comp] != 0.0:
            n_pix = density.nx if comp == 0 else density.ny
            for k in range(n_pix + 1):
                t = (lo + k * d - a[comp]) / u[comp]
                if 0.0 < t < 1.0:
                    breaks.append(t)
    ts = np.unique(np.asarray(breaks))
    mass = 0.0
    first = np.zeros(2)
    s_int = np.zeros((2, 2))
    for t0, t1 in zip(ts[:-1], ts[1:]):
        mid = a + 0.5 * (t0 + t1) * u
        val = float(density(mid[None, :])[0])
        if val <= 0.0:
            continue
        p = a + t0 * u
        q = a + t1 * u
        seg = q - p
        length = float(np.hypot(seg[0], seg[1]))
        mass += val * length
        first += val * length * 0.5 * (p + q)
        s_int += val * length * (
            np.outer(p, p)
            + 0.5 * (np.outer(p, seg) + np.outer(seg, p))
            + np.outer(seg, seg) / 3.0
        )
    if mass <= 0.0:
        return EdgeMoments.zero()
    return EdgeMoments(mass, first / mass, s_int / mass)


def total_mass(domain, density):
    """Integral of rho over the whole domain."""
    return polygon_moments(domain.boundary, density).mass


def load_raster(path):
    """Read a raster density file.

    Format: a header line ``nx ny xmin ymin dx dy`` followed by ny rows of
    nx whitespace-separated non-negative reals, row-major, north-up.
    """
    with open(path) as fh:
        lines = fh.readlines()
    if not lines:
        raise RasterParseError("empty file", line=1)
    head = lines[0].split()
    if len(head) != 6:
        raise RasterParseError("header must be 'nx ny xmin ymin dx dy'", line=1)
    try:
        nx, ny = int(head[0]), int(head[1])
        xmin, ymin, dx, dy = (float(t) for t in head[2:])
    except ValueError as exc:
        raise RasterParseError(f"bad header value: {exc}", line=1) from None
    if nx < 1 or ny < 1 or dx <= 0 or dy <= 0:
        raise RasterParseError("grid shape and pixel sizes must be positive", line=1)
    rows = []
    lineno = 1
    for raw in lines[1:]:
        lineno += 1
        if not raw.strip():
            continue
        try:
            row = [float(t) for t in raw.split()]
        except ValueError:
            raise RasterParseError("non-numeric density value", line=lineno) from None
        if len(row) != nx:
            raise RasterParseError(f"expected {nx} values, got {len(row)}", line=lineno)
        if any(r < 0 for r in row):
            raise RasterParseError("NegativeDensity", line=lineno)
        rows.append(row)
        if len(rows) == ny:
            break
    if len(rows) != ny:
        raise RasterParseError(f"expected {ny} rows, got {len(rows)}", line=lineno)
    return RasterDensity(np.asarray(rows), xmin, ymin, dx, dy)


def save_raster(path, density):
    with open(path, "w") as fh:
        fh.write(
            f"{density.nx} {density.ny} {float(density.xmin)!r} "
            f"{float(density.ymin)!r} {float(density.dx)!r} {float(density.dy)!r}\n"
        )
        for row in density.values:
            fh.write(" ".join(repr(float(v)) for v in row) + "\n")
