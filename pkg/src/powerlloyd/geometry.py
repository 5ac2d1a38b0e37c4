"""Power diagrams in a bounded convex polygonal domain.

Cells are built by half-plane intersection: cell i is the domain clipped
against the separating half-plane of every other generator.  The clipping
history records which generator produced each surviving edge, so the
adjacency graph comes out of the construction for free.
"""

from dataclasses import dataclass, field

import numpy as np

from ._clip import ON_LINE_TOL, DOMAIN_BOUNDARY, clip_cells
from .errors import CoincidentGenerators, GeometryError, InvalidDomain

__all__ = [
    "DOMAIN_BOUNDARY",
    "EMPTY_AREA_TOL",
    "ConvexPolygon",
    "Domain",
    "GeneratorSet",
    "HalfPlane",
    "PowerCell",
    "AdjacencyGraph",
    "PowerDiagram",
    "DomainValidationReport",
    "separating_halfplane",
    "clip_halfplane",
    "build_power_diagram",
    "voronoi",
    "locate",
    "validate_domain",
]

# cells smaller than this are normalized to empty; slivers destabilize the
# Lloyd map
EMPTY_AREA_TOL = 1e-14


def _as_points(a):
    pts = np.asarray(a, dtype=float)
    if pts.size == 0:
        return pts.reshape(0, 2)
    if pts.ndim == 1:
        pts = pts.reshape(1, 2)
    if pts.shape[-1] != 2:
        raise GeometryError(f"expected 2D points, got shape {pts.shape}")
    if not np.all(np.isfinite(pts)):
        raise GeometryError("non-finite coordinates")
    return pts


@dataclass(frozen=True)
class ConvexPolygon:
    """Convex polygon with CCW-ordered vertices; zero vertices = empty."""

    vertices: np.ndarray

    def __init__(self, vertices):
        object.__setattr__(self, "vertices", _as_points(vertices).reshape(-1, 2))

    @property
    def is_empty(self):
        return len(self.vertices) == 0

    @property
    def n_vertices(self):
        return len(self.vertices)

    def signed_area(self):
        v = self.vertices
        if len(v) < 3:
            return 0.0
        x, y = v[:, 0], v[:, 1]
        return 0.5 * float(
            np.dot(x[:-1], y[1:]) - np.dot(y[:-1], x[1:]) + x[-1] * y[0] - y[-1] * x[0]
        )

    def area(self):
        return abs(self.signed_area())

    def centroid(self):
        v = self.vertices
        if len(v) < 3:
            raise GeometryError("centroid of a degenerate polygon")
        cross = v[:, 0] * np.roll(v[:, 1], -1) - v[:, 1] * np.roll(v[:, 0], -1)
        a = cross.sum() / 2.0
        c = ((v + np.roll(v, -1, axis=0)) * cross[:, None]).sum(axis=0) / (6.0 * a)
        return c

    def contains(self, points, margin=0.0):
        """True where points are inside (all edge half-planes), with margin > 0
        meaning strictly inside by that distance."""
        pts = _as_points(points)
        v = self.vertices
        if len(v) < 3:
            return np.zeros(len(pts), dtype=bool)
        e = np.roll(v, -1, axis=0) - v
        # inward normal of edge k for a CCW polygon is (-ey, ex)
        lens = np.hypot(e[:, 0], e[:, 1])
        inside = np.ones(len(pts), dtype=bool)
        for k in range(len(v)):
            s = ((pts[:, 0] - v[k, 0]) * (-e[k, 1]) + (pts[:, 1] - v[k, 1]) * e[k, 0]) / lens[k]
            inside &= s >= margin
        return inside

    def bounding_box(self):
        v = self.vertices
        return v.min(axis=0), v.max(axis=0)


@dataclass(frozen=True)
class HalfPlane:
    """Half-plane {p : (p - anchor) . normal <= 0} with |normal| = 1."""

    normal: np.ndarray
    anchor: np.ndarray

    def __init__(self, normal, anchor):
        n = np.asarray(normal, dtype=float)
        a = np.asarray(anchor, dtype=float)
        if not (np.all(np.isfinite(n)) and np.all(np.isfinite(a))):
            raise GeometryError("non-finite half-plane data")
        if abs(np.hypot(n[0], n[1]) - 1.0) > 1e-12:
            raise GeometryError("half-plane normal must be a unit vector")
        object.__setattr__(self, "normal", n)
        object.__setattr__(self, "anchor", a)

    def signed_distance(self, points):
        pts = _as_points(points)
        return (pts - self.anchor) @ self.normal

    def contains(self, points, tol=ON_LINE_TOL):
        return self.signed_distance(points) <= tol


@dataclass(frozen=True)
class Domain:
    """Convex problem domain; the seed polygon for every cell clip."""

    boundary: ConvexPolygon
    area: float = field(init=False)
    centroid_point: np.ndarray = field(init=False)

    def __init__(self, boundary):
        if not isinstance(boundary, ConvexPolygon):
            boundary = ConvexPolygon(boundary)
        report = validate_domain(boundary)
        if report.orientation == "cw":
            boundary = ConvexPolygon(boundary.vertices[::-1])
            report = validate_domain(boundary)
        if not report.valid:
            raise InvalidDomain("; ".join(report.problems))
        object.__setattr__(self, "boundary", boundary)
        object.__setattr__(self, "area", boundary.area())
        object.__setattr__(self, "centroid_point", boundary.centroid())

    def diameter(self):
        lo, hi = self.boundary.bounding_box()
        return float(np.hypot(*(hi - lo)))

    def contains(self, points, margin=0.0):
        return self.boundary.contains(points, margin=margin)


@dataclass(frozen=True)
class GeneratorSet:
    """Weighted generators (positions X, weights w) of a power diagram."""

    positions: np.ndarray
    weights: np.ndarray

    def __init__(self, positions, weights=None):
        pos = _as_points(positions)
        if len(pos) < 1:
            raise GeometryError("need at least one generator")
        if weights is None:
            w = np.zeros(len(pos))
        else:
            w = np.asarray(weights, dtype=float).reshape(-1)
        if len(w) != len(pos):
            raise GeometryError("positions and weights length mismatch")
        if not np.all(np.isfinite(w)):
            raise GeometryError("non-finite weights")
        object.__setattr__(self, "positions", pos)
        object.__setattr__(self, "weights", w)

    @property
    def n(self):
        return len(self.positions)

    def check_distinct(self):
        """Reject exactly identical (position, weight) pairs."""
        rows = np.column_stack([self.positions, self.weights])
        order = np.lexsort(rows.T)
        srt = rows[order]
        same = np.all(srt[1:] == srt[:-1], axis=1)
        if np.any(same):
            k = int(np.argmax(same))
            raise CoincidentGenerators(
                f"generators {order[k]} and {order[k + 1]} are identical"
            )

    def shifted(self, c):
        return GeneratorSet(self.positions, self.weights + c)

    def subset(self, keep):
        return GeneratorSet(self.positions[keep], self.weights[keep])


@dataclass(frozen=True)
class PowerCell:
    generator_index: int
    polygon: ConvexPolygon
    # (neighbor index or DOMAIN_BOUNDARY, (2,2) segment endpoints) per edge
    neighbor_edges: tuple

    @property
    def is_empty(self):
        return self.polygon.is_empty


@dataclass(frozen=True)
class AdjacencyGraph:
    """Per-edge geometric data of the diagram's neighbor relations.

    ``segments`` maps the unordered pair (i, j), i < j, to the shared edge
    endpoints; distances and unit vectors are derived from the generator
    positions, so symmetry d_ij = d_ji, n_ij = -n_ji holds exactly.
    """

    positions: np.ndarray
    neighbors: tuple  # tuple of frozensets, J_i per cell
    segments: dict  # (i, j) with i < j -> (2, 2) ndarray
    point_contacts: tuple = ()

    def pairs(self):
        return self.segments.keys()

    def segment(self, i, j):
        return self.segments[(i, j) if i < j else (j, i)]

    def distance(self, i, j):
        return float(np.hypot(*(self.positions[j] - self.positions[i])))

    def direction(self, i, j):
        d = self.positions[j] - self.positions[i]
        return d / np.hypot(d[0], d[1])

    def is_connected(self, active=None):
        """Connectivity of the graph restricted to the given cell indices."""
        if active is None:
            active = range(len(self.neighbors))
        active = list(active)
        if not active:
            return True
        seen = {active[0]}
        stack = [active[0]]
        act = set(active)
        while stack:
            i = stack.pop()
            for j in self.neighbors[i]:
                if j in act and j not in seen:
                    seen.add(j)
                    stack.append(j)
        return seen == act


@dataclass(frozen=True)
class PowerDiagram:
    domain: Domain
    generators: GeneratorSet
    cells: tuple
    adjacency: AdjacencyGraph

    @property
    def n(self):
        return self.generators.n

    @property
    def nonempty_indices(self):
        return [c.generator_index for c in self.cells if not c.is_empty]

    def cell_area_sum(self):
        return sum(c.polygon.area() for c in self.cells)


@dataclass(frozen=True)
class DomainValidationReport:
    valid: bool
    convex: bool
    orientation: str  # "ccw", "cw" or "degenerate"
    duplicate_vertices: tuple
    reflex_vertices: tuple
    auto_fixable: bool
    problems: tuple


def validate_domain(poly):
    """Check convexity, orientation and duplicates of a candidate domain."""
    if not isinstance(poly, ConvexPolygon):
        poly = ConvexPolygon(poly)
    v = poly.vertices
    problems = []
    duplicates = []
    reflex = []
    if len(v) < 3:
        return DomainValidationReport(
            False, False, "degenerate", (), (), False, ("fewer than 3 vertices",)
        )
    scale = max(np.ptp(v[:, 0]), np.ptp(v[:, 1]), 1e-300)
    d = np.hypot(*(np.roll(v, -1, axis=0) - v).T)
    for k in np.nonzero(d < 1e-12 * scale)[0]:
        duplicates.append(int(k))
        problems.append(f"duplicate vertex {k}")

    e_prev = v - np.roll(v, 1, axis=0)
    e_next = np.roll(v, -1, axis=0) - v
    cross = e_prev[:, 0] * e_next[:, 1] - e_prev[:, 1] * e_next[:, 0]
    tol = 1e-12 * scale * scale
    sa = poly.signed_area()
    if sa > 0:
        orientation = "ccw"
        bad = cross < -tol
    elif sa < 0:
        orientation = "cw"
        bad = cross > tol
    else:
        orientation = "degenerate"
        bad = np.ones(len(v), dtype=bool)
    for k in np.nonzero(bad)[0]:
        reflex.append(int(k))
        problems.append(f"reflex vertex {k}")
    convex = not reflex
    if orientation == "cw" and convex and not duplicates:
        problems.append("clockwise orientation (auto-fixable)")
    valid = convex and orientation == "ccw" and not duplicates
    auto_fixable = convex and orientation == "cw" and not duplicates
    return DomainValidationReport(
        valid, convex, orientation, tuple(duplicates), tuple(reflex),
        auto_fixable, tuple(problems),
    )


def separating_halfplane(gi, gj):
    """Half-plane of points closer (in power distance) to generator gi.

    gi, gj are (position, weight) pairs with distinct positions.
    """
    xi, wi = np.asarray(gi[0], dtype=float), float(gi[1])
    xj, wj = np.asarray(gj[0], dtype=float), float(gj[1])
    diff = xj - xi
    d2 = float(diff @ diff)
    if d2 < 1e-28:
        raise CoincidentGenerators("separating half-plane of coincident positions")
    anchor = 0.5 * (xi + xj) - (wj - wi) / (2.0 * d2) * diff
    return HalfPlane(diff / np.sqrt(d2), anchor)


def clip_halfplane(poly, h):
    """Intersect a convex polygon with a half-plane (may return empty)."""
    v = poly.vertices
    if len(v) < 3:
        return ConvexPolygon(np.zeros((0, 2)))
    s = h.signed_distance(v)
    if np.all(s <= ON_LINE_TOL):
        return poly
    if np.all(s > ON_LINE_TOL):
        return ConvexPolygon(np.zeros((0, 2)))
    out = []
    n = len(v)
    for k in range(n):
        k1 = (k + 1) % n
        s0, s1 = s[k], s[k1]
        if s0 <= ON_LINE_TOL:
            out.append(v[k])
            if s1 > ON_LINE_TOL:
                t = s0 / (s0 - s1)
                out.append(v[k] + t * (v[k1] - v[k]))
        elif s1 <= ON_LINE_TOL:
            t = s0 / (s0 - s1)
            out.append(v[k] + t * (v[k1] - v[k]))
    out = np.asarray(out)
    keep = [0]
    for k in range(1, len(out)):
        if np.hypot(*(out[k] - out[keep[-1]])) > ON_LINE_TOL:
            keep.append(k)
    if len(keep) > 1 and np.hypot(*(out[keep[-1]] - out[keep[0]])) <= ON_LINE_TOL:
        keep.pop()
    out = out[keep]
    if len(out) < 3:
        return ConvexPolygon(np.zeros((0, 2)))
    return ConvexPolygon(out)


def build_power_diagram(domain, gens):
    """Construct the power diagram of the generators inside the domain."""
    gens.check_distinct()
    if not np.all(domain.contains(gens.positions, margin=-1e-9 * domain.diameter())):
        raise GeometryError("generator position outside the closure of the domain")

    verts, labels, counts = clip_cells(
        domain.boundary.vertices, gens.positions, gens.weights, ON_LINE_TOL
    )

    cells = []
    half_edges = {}
    for i in range(gens.n):
        m = int(counts[i])
        poly = ConvexPolygon(verts[i, :m])
        if m < 3 or poly.area() < EMPTY_AREA_TOL:
            cells.append(PowerCell(i, ConvexPolygon(np.zeros((0, 2))), ()))
            continue
        edges = []
        for k in range(m):
            j = int(labels[i, k])
            seg = np.array([verts[i, k], verts[i, (k + 1) % m]])
            edges.append((j, seg))
            if j >= 0:
                half_edges[(i, j)] = seg
        cells.append(PowerCell(i, poly, tuple(edges)))

    neighbors = [set() for _ in range(gens.n)]
    segments = {}
    contacts = set()
    for (i, j), seg in half_edges.items():
        if (j, i) in half_edges:
            if i < j:
                segments[(i, j)] = seg
                neighbors[i].add(j)
                neighbors[j].add(i)
        else:
            # the twin edge was lost to a degenerate clip: point contact
            contacts.add((min(i, j), max(i, j)))

    # Cells that meet at a single point leave no half-edge trace at all when
    # the degenerate edge collapses symmetrically on both sides, so also look
    # for non-adjacent cells sharing a vertex.
    scale = max(domain.diameter(), 1.0)
    vertex_owners = {}
    for cell in cells:
        for vx, vy in cell.polygon.vertices:
            key = (round(vx / scale, 9), round(vy / scale, 9))
            vertex_owners.setdefault(key, set()).add(cell.generator_index)
    for owners in vertex_owners.values():
        if len(owners) < 2:
            continue
        for i in sorted(owners):
            for j in sorted(owners):
                if i < j and j not in neighbors[i]:
                    contacts.add((i, j))

    adjacency = AdjacencyGraph(
        positions=gens.positions,
        neighbors=tuple(frozenset(s) for s in neighbors),
        segments=segments,
        point_contacts=tuple(sorted(contacts)),
    )
    return PowerDiagram(domain, gens, tuple(cells), adjacency)


def voronoi(domain, points):
    """Voronoi diagram = power diagram with all weights equal to zero."""
    pts = _as_points(points)
    return build_power_diagram(domain, GeneratorSet(pts, np.zeros(len(pts))))


def locate(gens, p):
    """Index of the generator whose cell contains p; ties -> lowest index."""
    p = np.asarray(p, dtype=float)
    if not np.all(np.isfinite(p)):
        raise GeometryError("non-finite query point")
    power = ((gens.positions - p) ** 2).sum(axis=1) - gens.weights
    return int(np.argmin(power))


def locate_many(gens, points):
    pts = _as_points(points)
    d2 = ((pts[:, None, :] - gens.positions[None, :, :]) ** 2).sum(axis=2)
    return np.argmin(d2 - gens.weights[None, :], axis=1)
