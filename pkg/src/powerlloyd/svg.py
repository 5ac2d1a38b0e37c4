"""Deterministic SVG rendering of power diagrams and simple line plots.

Cells are filled by side count (hexagons stand out in near-optimal
configurations) and generators with negative weights can be annotated with
their circles of radius sqrt(-w).
"""

import numpy as np

__all__ = ["diagram_svg", "line_plot_svg", "SIDE_COLORS"]

# fill colors keyed by number of sides; anything else falls back to grey
SIDE_COLORS = {
    3: "#c6dbef",
    4: "#9ecae1",
    5: "#6baed6",
    6: "#fdd835",
    7: "#fb8c00",
    8: "#e53935",
}
FALLBACK_COLOR = "#cccccc"


def _fmt(x):
    return f"{x:.8g}"


def diagram_svg(diagram, width=640, show_weight_circles=False, show_points=True):
    """Render a power diagram to an SVG string.

    The viewBox is the domain bounding box; output depends only on the
    diagram, so renders are byte-identical across runs.
    """
    (xmin, ymin), (xmax, ymax) = diagram.domain.boundary.bounding_box()
    w = xmax - xmin
    h = ymax - ymin
    height = int(round(width * h / w)) if w > 0 else width
    stroke = 0.002 * max(w, h)
    parts = [
        f'<svg xmlns="http://www.w3.org/2000/svg" width="{width}" height="{height}" '
        f'viewBox="{_fmt(xmin)} {_fmt(ymin)} {_fmt(w)} {_fmt(h)}">',
        # flip y so the math convention (y up) renders upright
        f'<g transform="translate(0 {_fmt(ymin + ymax)}) scale(1 -1)">',
    ]
    for cell in diagram.cells:
        if cell.polygon.is_empty:
            continue
        color = SIDE_COLORS.get(cell.polygon.n_vertices, FALLBACK_COLOR)
        pts = " ".join(f"{_fmt(x)},{_fmt(y)}" for x, y in cell.polygon.vertices)
        parts.append(
            f'<polygon points="{pts}" fill="{color}" stroke="#333333" '
            f'stroke-width="{_fmt(stroke)}"/>'
        )
    if show_weight_circles:
        for i in diagram.nonempty_indices:
            wi = diagram.generators.weights[i]
            r = np.sqrt(max(-wi, 0.0))
            if r > 0:
                x, y = diagram.generators.positions[i]
                parts.append(
                    f'<circle cx="{_fmt(x)}" cy="{_fmt(y)}" r="{_fmt(r)}" '
                    f'fill="none" stroke="#1a237e" stroke-width="{_fmt(stroke)}"/>'
                )
    if show_points:
        for i in diagram.nonempty_indices:
            x, y = diagram.generators.positions[i]
            parts.append(
                f'<circle cx="{_fmt(x)}" cy="{_fmt(y)}" r="{_fmt(2.5 * stroke)}" '
                f'fill="#000000"/>'
            )
    parts.append("</g></svg>")
    return "\n".join(parts)


def line_plot_svg(x, y, width=640, height=400, log_y=False, xlabel="", ylabel=""):
    """Minimal line plot (one series) as an SVG string."""
    x = np.asarray(x, dtype=float)
    y = np.asarray(y, dtype=float)
    if log_y:
        keep = y > 0
        x, y = x[keep], np.log10(y[keep])
        ylabel = f"log10({ylabel})" if ylabel else "log10"
    if x.size == 0:
        return (
            f'<svg xmlns="http://www.w3.org/2000/svg" width="{width}" '
            f'height="{height}"/>'
        )
    pad = 50
    xr = (x.min(), x.max() if x.max() > x.min() else x.min() + 1)
    yr = (y.min(), y.max() if y.max() > y.min() else y.min() + 1)

    def sx(v):
        return pad + (v - xr[0]) / (xr[1] - xr[0]) * (width - 2 * pad)

    def sy(v):
        return height - pad - (v - yr[0]) / (yr[1] - yr[0]) * (height - 2 * pad)

    pts = " ".join(f"{_fmt(sx(a))},{_fmt(sy(b))}" for a, b in zip(x, y))
    parts = [
        f'<svg xmlns="http://www.w3.org/2000/svg" width="{width}" height="{height}">',
        f'<rect width="{width}" height="{height}" fill="#ffffff"/>',
        f'<line x1="{pad}" y1="{height-pad}" x2="{width-pad}" y2="{height-pad}" '
        f'stroke="#000"/>',
        f'<line x1="{pad}" y1="{pad}" x2="{pad}" y2="{height-pad}" stroke="#000"/>',
        f'<polyline points="{pts}" fill="none" stroke="#1565c0" stroke-width="1.5"/>',
        f'<text x="{width//2}" y="{height-12}" text-anchor="middle" '
        f'font-size="13">{xlabel}</text>',
        f'<text x="16" y="{height//2}" text-anchor="middle" font-size="13" '
        f'transform="rotate(-90 16 {height//2})">{ylabel}</text>',
        "</svg>",
    ]
    return "\n".join(parts)
