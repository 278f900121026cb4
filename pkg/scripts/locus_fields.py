from __future__ import annotations

import math
from typing import Callable, Sequence

import numpy as np
from scipy import ndimage
from scipy.spatial import cKDTree

from locus_models import Bbox, GridField, Polyline, Region
from locus_rational import RationalMap, phase_many, signed_wrap


# Corner order: bottom-left, bottom-right, top-right, top-left.
# Edge order: bottom, right, top, left. Each corner touches two edges.
_CORNER_EDGES = ((3, 0), (0, 1), (1, 2), (2, 3))
_EDGE_CORNERS = ((0, 1), (1, 2), (2, 3), (3, 0))


def sample_grid(fn: Callable[[np.ndarray], np.ndarray], bbox: Bbox, nx: int, ny: int) -> GridField:
    """Sample a vectorized fn on the nx-by-ny node lattice spanning bbox (edges included)."""
    if nx < 2 or ny < 2:
        raise ValueError(f"grid needs at least 2x2 samples, got {nx}x{ny}")
    sigmas = np.linspace(bbox.sigma_min, bbox.sigma_max, nx)
    ts = np.linspace(bbox.t_min, bbox.t_max, ny)
    points = sigmas[None, :] + 1j * ts[:, None]
    with np.errstate(all="ignore"):
        values = np.broadcast_to(np.asarray(fn(points), dtype=float), points.shape).copy()
    values[~np.isfinite(values)] = np.inf
    return GridField(bbox, nx, ny, values)


def _edge_key(row: int, col: int, edge: int) -> tuple[str, int, int]:
    if edge == 0:
        return ("h", row, col)
    if edge == 2:
        return ("h", row + 1, col)
    if edge == 3:
        return ("v", row, col)
    return ("v", row, col + 1)


def _edge_point(field: GridField, key: tuple[str, int, int], level: float) -> tuple[float, float]:
    kind, row, col = key
    r1, c1 = (row, col + 1) if kind == "h" else (row + 1, col)
    v0 = field.values[row, col]
    v1 = field.values[r1, c1]
    if math.isfinite(v0) and math.isfinite(v1) and v1 != v0:
        t = min(1.0, max(0.0, (level - v0) / (v1 - v0)))
    else:
        t = 0.5
    sigma0 = field.bbox.sigma_min + col * field.dx
    t0 = field.bbox.t_min + row * field.dy
    if kind == "h":
        return (sigma0 + t * field.dx, t0)
    return (sigma0, t0 + t * field.dy)


def _cell_segments(corners: np.ndarray, above: np.ndarray, level: float) -> list[tuple[int, int]]:
    crossing = [e for e, (a, b) in enumerate(_EDGE_CORNERS) if above[a] != above[b]]
    if len(crossing) == 2:
        return [(crossing[0], crossing[1])]
    # Saddle cell: the corners whose side differs from the centre sample get cut off.
    finite = corners[np.isfinite(corners)]
    center = float(np.mean(corners)) if len(finite) == 4 else math.inf
    center_above = center >= level
    return [_CORNER_EDGES[k] for k in range(4) if bool(above[k]) != center_above]


def _stitch(segments: list[tuple[tuple, tuple]]) -> list[tuple[list[tuple], bool]]:
    touching: dict[tuple, list[int]] = {}
    for index, (a, b) in enumerate(segments):
        touching.setdefault(a, []).append(index)
        touching.setdefault(b, []).append(index)
    used = [False] * len(segments)

    def walk(start: int, key: tuple) -> tuple[list[tuple], bool]:
        keys = [key]
        current = start
        while True:
            used[current] = True
            a, b = segments[current]
            key = b if a == key else a
            keys.append(key)
            following = [i for i in touching[key] if not used[i]]
            if not following:
                break
            current = following[0]
        closed = len(keys) > 2 and keys[-1] == keys[0]
        return (keys[:-1] if closed else keys), closed

    chains = []
    for index, (a, b) in enumerate(segments):
        if used[index]:
            continue
        if len(touching[a]) == 1:
            chains.append(walk(index, a))
        elif len(touching[b]) == 1:
            chains.append(walk(index, b))
    for index, (a, _) in enumerate(segments):
        if not used[index]:
            chains.append(walk(index, a))
    return chains


def contour_extract(field: GridField, level: float, max_jump: float | None = None) -> list[Polyline]:
    """Marching squares with linear edge interpolation; saddles resolved by the centre sample.

    Cells holding a non-finite sample or whose corner spread exceeds max_jump are skipped
    when max_jump is given (used to ignore branch cuts of wrapped fields).
    """
    if not math.isfinite(level):
        raise ValueError("contour level must be finite")
    values = field.values
    above = values >= level
    code = (
        above[:-1, :-1].astype(np.int8)
        + 2 * above[:-1, 1:]
        + 4 * above[1:, 1:]
        + 8 * above[1:, :-1]
    )
    active = (code != 0) & (code != 15)
    if max_jump is not None:
        stack = np.stack([values[:-1, :-1], values[:-1, 1:], values[1:, 1:], values[1:, :-1]])
        with np.errstate(invalid="ignore"):
            spread = stack.max(axis=0) - stack.min(axis=0)
        active &= np.all(np.isfinite(stack), axis=0) & (spread <= max_jump)

    segments: list[tuple[tuple, tuple]] = []
    for row, col in zip(*np.nonzero(active)):
        row, col = int(row), int(col)
        corners = np.array([
            values[row, col], values[row, col + 1], values[row + 1, col + 1], values[row + 1, col],
        ])
        for e0, e1 in _cell_segments(corners, corners >= level, level):
            segments.append((_edge_key(row, col, e0), _edge_key(row, col, e1)))

    cache: dict[tuple, tuple[float, float]] = {}
    polylines = []
    for keys, closed in _stitch(segments):
        points = []
        for key in keys:
            if key not in cache:
                cache[key] = _edge_point(field, key, level)
            points.append(cache[key])
        polylines.append(Polyline(np.array(points, dtype=float), closed))
    return polylines


def _cell_of(field: GridField, s: complex) -> tuple[int, int] | None:
    if not field.bbox.contains(s):
        return None
    col = min(int((s.real - field.bbox.sigma_min) / field.dx), field.nx - 2)
    row = min(int((s.imag - field.bbox.t_min) / field.dy), field.ny - 2)
    return row, col


def region_at(labels: np.ndarray, field: GridField, s: complex) -> int:
    """Label of the component owning the cell around s (0 when none of its corners is labelled)."""
    cell = _cell_of(field, s)
    if cell is None:
        return 0
    row, col = cell
    corners = labels[row:row + 2, col:col + 2].ravel()
    corners = corners[corners > 0]
    if not len(corners):
        return 0
    nearest_row = row + int(round((s.imag - field.bbox.t_min) / field.dy - row))
    nearest_col = col + int(round((s.real - field.bbox.sigma_min) / field.dx - col))
    nearest = labels[nearest_row, nearest_col]
    return int(nearest) if nearest > 0 else int(corners.min())


def label_components(field: GridField, predicate: Callable[[np.ndarray], np.ndarray]) -> tuple[np.ndarray, int]:
    mask = np.asarray(predicate(field.values), dtype=bool)
    structure = ndimage.generate_binary_structure(2, 1)
    labels, count = ndimage.label(mask, structure=structure)
    return labels, int(count)


def connected_components(
    field: GridField,
    predicate: Callable[[np.ndarray], np.ndarray],
    level: float | None = None,
    marks: Sequence[complex] = (),
) -> list[Region]:
    """4-connected components of the samples satisfying predicate.

    With level, boundaries are the level contours around each component; otherwise they are
    the half-way contours of the component's indicator.
    """
    labels, count = label_components(field, predicate)
    selected = labels > 0
    owners = [region_at(labels, field, complex(m)) for m in marks]
    regions = []
    for rid in range(1, count + 1):
        region_mask = labels == rid
        if level is not None:
            isolated = field.values.copy()
            isolated[selected & ~region_mask] = np.inf
            boundary = contour_extract(field.with_values(isolated), level)
        else:
            indicator = np.where(region_mask, 0.0, 1.0)
            boundary = contour_extract(field.with_values(indicator), 0.5)
        regions.append(Region(
            id=rid,
            cells=np.flatnonzero(region_mask),
            boundary=tuple(boundary),
            contains=tuple(k for k, owner in enumerate(owners) if owner == rid),
            mask=region_mask,
        ))
    return regions


def phase_level_scan(W: RationalMap, alpha: float, bbox: Bbox, nx: int, ny: int) -> list[Polyline]:
    """Implicit-curve rendition of the alpha loci: zero contours of the signed wrapped residual."""
    field = sample_grid(lambda points: signed_wrap(phase_many(W, points), alpha), bbox, nx, ny)
    return contour_extract(field, 0.0, max_jump=math.pi)


def densify(polylines: Sequence[Polyline | np.ndarray], spacing: float) -> np.ndarray:
    chunks = []
    for line in polylines:
        vertices = line.vertices() if isinstance(line, Polyline) else np.asarray(line, dtype=float)
        if len(vertices) == 1:
            chunks.append(vertices)
            continue
        for a, b in zip(vertices[:-1], vertices[1:]):
            n = max(1, int(math.ceil(np.hypot(*(b - a)) / spacing)))
            fractions = np.linspace(0.0, 1.0, n, endpoint=False)[:, None]
            chunks.append(a + fractions * (b - a))
        chunks.append(vertices[-1:])
    return np.vstack(chunks) if chunks else np.empty((0, 2))


def hausdorff_distance(
    a: Sequence[Polyline | np.ndarray],
    b: Sequence[Polyline | np.ndarray],
    spacing: float,
) -> float:
    """Symmetric Hausdorff distance between two polyline sets, resolved to the given spacing."""
    pa = densify(a, spacing)
    pb = densify(b, spacing)
    if not len(pa) or not len(pb):
        return math.inf
    d_ab = cKDTree(pb).query(pa)[0].max()
    d_ba = cKDTree(pa).query(pb)[0].max()
    return float(max(d_ab, d_ba))
