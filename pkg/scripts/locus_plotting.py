from __future__ import annotations

import html
import math
from typing import Iterable, Sequence

import numpy as np
from matplotlib import colormaps
from matplotlib.colors import to_hex

from locus_models import Bbox, LocusTrace, Polyline, Region
from locus_rational import RationalMap


WIDTH_PX = 640
MARGIN_PX = 24
GAIN_DECADES = (-6, 6)
GAIN_CMAP = "viridis"
REGION_CMAP = "tab10"


def _num(value: float) -> str:
    return repr(float(value))


class Canvas:
    """Maps data coordinates (sigma right, t up) onto an SVG viewport."""

    def __init__(self, bbox: Bbox, width: int = WIDTH_PX):
        self.bbox = bbox
        self.scale = width / bbox.width
        self.width = width
        self.height = int(math.ceil(bbox.height * self.scale))
        self.items: list[str] = []

    def pixel(self, s: complex) -> tuple[float, float]:
        return (
            MARGIN_PX + (s.real - self.bbox.sigma_min) * self.scale,
            MARGIN_PX + (self.bbox.t_max - s.imag) * self.scale,
        )

    def transform(self) -> str:
        # matrix(a b c d e f): x' = a*sigma + e, y' = d*t + f
        e = MARGIN_PX - self.bbox.sigma_min * self.scale
        f = MARGIN_PX + self.bbox.t_max * self.scale
        return f"matrix({_num(self.scale)} 0 0 {_num(-self.scale)} {_num(e)} {_num(f)})"

    def path(self, points: np.ndarray, closed: bool, stroke: str, fill: str = "none", title: str = "") -> None:
        if not len(points):
            return
        parts = [f"M {_num(points[0][0])} {_num(points[0][1])}"]
        parts.extend(f"L {_num(x)} {_num(y)}" for x, y in points[1:])
        if closed:
            parts.append("Z")
        tooltip = f"<title>{html.escape(title)}</title>" if title else ""
        self.items.append(
            f'    <path d="{" ".join(parts)}" fill="{fill}" stroke="{stroke}" stroke-width="1.5" '
            f'vector-effect="non-scaling-stroke">{tooltip}</path>'
        )

    def region(self, boundary: Sequence[Polyline], color: str, title: str) -> None:
        parts = []
        for line in boundary:
            if not len(line.points):
                continue
            parts.append(f"M {_num(line.points[0][0])} {_num(line.points[0][1])}")
            parts.extend(f"L {_num(x)} {_num(y)}" for x, y in line.points[1:])
            parts.append("Z")
        if parts:
            self.items.append(
                f'    <path d="{" ".join(parts)}" fill="{color}" fill-opacity="0.35" fill-rule="evenodd" '
                f'stroke="{color}" stroke-width="1" vector-effect="non-scaling-stroke">'
                f"<title>{html.escape(title)}</title></path>"
            )

    def render(self, markers: Iterable[str] = (), caption: str = "") -> str:
        total_w = self.width + 2 * MARGIN_PX
        total_h = self.height + 2 * MARGIN_PX
        b = self.bbox
        lines = [
            f'<svg xmlns="http://www.w3.org/2000/svg" viewBox="0 0 {total_w} {total_h}" width="{total_w}" height="{total_h}">',
            '  <rect x="0" y="0" width="100%" height="100%" fill="white"/>',
            f'  <rect x="{MARGIN_PX}" y="{MARGIN_PX}" width="{self.width}" height="{self.height}" '
            'fill="none" stroke="#888888" stroke-width="1"/>',
            f'  <g transform="{self.transform()}">',
            *self.items,
            "  </g>",
            *markers,
            f'  <text x="{MARGIN_PX}" y="{MARGIN_PX - 8}" font-family="sans-serif" font-size="12px">'
            f"{html.escape(caption)} [{_num(b.sigma_min)}, {_num(b.sigma_max)}] x [{_num(b.t_min)}, {_num(b.t_max)}]</text>",
            "</svg>",
        ]
        return "\n".join(lines) + "\n"


def gain_color(gain: float) -> str:
    lo, hi = GAIN_DECADES
    decade = math.log10(gain) if gain > 0 else -math.inf
    if math.isnan(decade):
        decade = hi
    fraction = (min(max(decade, lo), hi) - lo) / (hi - lo)
    return to_hex(colormaps[GAIN_CMAP](fraction))


def _decade(gain: float) -> int:
    lo, hi = GAIN_DECADES
    if gain <= 0:
        return lo
    if math.isinf(gain):
        return hi
    return min(max(int(math.floor(math.log10(gain))), lo), hi)


def gain_chunks(trace: LocusTrace) -> list[tuple[int, np.ndarray]]:
    """Split a trace into runs of one gain decade; consecutive runs share their joining point."""
    positions = trace.positions()
    decades = [_decade(p.gain) for p in trace.points]
    chunks = []
    start = 0
    for i in range(1, len(decades) + 1):
        if i == len(decades) or decades[i] != decades[start]:
            end = min(i + 1, len(decades))
            chunks.append((decades[start], positions[start:end]))
            start = i
    return chunks


def _marker(canvas: Canvas, s: complex, shape: str, color: str, title: str) -> str:
    if not canvas.bbox.contains(s):
        return ""
    x, y = canvas.pixel(s)
    label = f"<title>{html.escape(title)}</title>"
    if shape == "circle":
        return f'  <circle cx="{x:.3f}" cy="{y:.3f}" r="4" fill="none" stroke="{color}" stroke-width="1.5">{label}</circle>'
    if shape == "cross":
        return (
            f'  <path d="M {x - 4:.3f} {y - 4:.3f} L {x + 4:.3f} {y + 4:.3f} M {x - 4:.3f} {y + 4:.3f} '
            f'L {x + 4:.3f} {y - 4:.3f}" stroke="{color}" stroke-width="1.5">{label}</path>'
        )
    return f'  <rect x="{x - 3:.3f}" y="{y - 3:.3f}" width="6" height="6" fill="{color}">{label}</rect>'


def map_markers(canvas: Canvas, W: RationalMap) -> list[str]:
    markers = [_marker(canvas, c, "circle", "#1f77b4", f"zero x{m}") for c, m in W.zeros]
    markers += [_marker(canvas, c, "cross", "#d62728", f"pole x{m}") for c, m in W.poles]
    markers += [_marker(canvas, c, "square", "#7f7f7f", "saddle") for c in W.saddles]
    return [m for m in markers if m]


def trace_svg(W: RationalMap, bbox: Bbox, traces: Sequence[LocusTrace], alpha: float) -> str:
    canvas = Canvas(bbox)
    for index, trace in enumerate(traces):
        for decade, points in gain_chunks(trace):
            canvas.path(points, False, gain_color(10.0 ** decade), title=f"trace {index} gain 1e{decade}")
    return canvas.render(map_markers(canvas, W), caption=f"alpha={_num(alpha)}")


def contours_svg(bbox: Bbox, contours: Sequence[Polyline], caption: str, W: RationalMap | None = None) -> str:
    canvas = Canvas(bbox)
    for line in contours:
        canvas.path(line.points, line.closed, "#333333")
    markers = map_markers(canvas, W) if W is not None else []
    return canvas.render(markers, caption=caption)


def regions_svg(bbox: Bbox, thetas: Sequence[complex], regions: Sequence[Sequence[Region]], caption: str) -> str:
    """Sublevel components per critical point, shaded in that critical point's colour."""
    canvas = Canvas(bbox)
    cmap = colormaps[REGION_CMAP]
    for i, found in enumerate(regions):
        color = to_hex(cmap(i % cmap.N))
        for region in found:
            canvas.region(region.boundary, color, f"theta {i} region {region.id}")
    markers = [
        _marker(canvas, theta, "square", to_hex(cmap(i % cmap.N)), f"critical point {i}")
        for i, theta in enumerate(thetas)
    ]
    return canvas.render([m for m in markers if m], caption=caption)
