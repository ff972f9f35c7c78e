"""Level-set contours of a scale-space field and their nesting order.

Components of {phi = c} are traced with marching squares on the (x, rho)
grid.  For kernels of the admissible family the monotonicity condition
forbids any component from turning around at a local maximum of rho, so a
component either

* runs between two points of the finest-bandwidth row (an *arch*: its two
  *feet* sit on the signal-side boundary and its *apex* is the unique
  point of minimal rho, the coarsening scale at which the two level
  crossings merge), or
* enters the coarsest row, in which case it is an arch truncated by the
  grid (the merge happens below the computed range; the bottom row stands
  in for rho -> 0 and the apex is placed at the truncation point), or
* closes on itself (a *loop*), which cannot happen for family kernels and
  signals satisfying the sign condition, but is representable for
  negative controls.

Components clipped by the left/right padding margins are boundary
artifacts of the zero-extension and are discarded with a warning.
"""

from __future__ import annotations

import warnings
from dataclasses import dataclass, field as dataclass_field

import numpy as np

from .errors import ContainmentError, DomainError
from .scalespace import ScaleSpaceField

# marching-squares connectivity: cell code -> list of (edge, edge) segments;
# codes 5 and 10 are saddles resolved by the bilinear center sign
_SEGMENTS = {
    1: [("B", "L")], 2: [("B", "R")], 3: [("L", "R")], 4: [("T", "R")],
    6: [("B", "T")], 7: [("L", "T")], 8: [("L", "T")], 9: [("B", "T")],
    11: [("T", "R")], 12: [("L", "R")], 13: [("B", "R")], 14: [("B", "L")],
}
_SADDLE = {
    5: {True: [("L", "T"), ("B", "R")], False: [("L", "B"), ("T", "R")]},
    10: {True: [("B", "L"), ("T", "R")], False: [("B", "R"), ("L", "T")]},
}


@dataclass
class Contour:
    """One connected component of a level set."""

    id: int
    points: np.ndarray              # (k, 2) columns x, rho, in trace order
    kind: str                       # 'arch' | 'loop'
    level: float
    apex: tuple                     # (x, rho) at minimal rho
    feet: tuple | None              # x of the signal-side endpoints (arches)
    truncated: bool = False         # entered the coarsest row
    ends: tuple = ("", "")          # endpoint boundaries: 'signal'|'coarse'

    @property
    def apex_x(self) -> float:
        return self.apex[0]

    @property
    def apex_rho(self) -> float:
        return self.apex[1]


@dataclass
class NestingForest:
    """Minimal-encloser relation over one extraction's contours."""

    contours: list
    parent: dict                    # id -> id | None
    children: dict = dataclass_field(default_factory=dict)

    @property
    def roots(self) -> list:
        return [c.id for c in self.contours if self.parent.get(c.id) is None]


def _edge_key(kind: str, i: int, j: int, edge: str):
    if edge == "B":
        return ("h", i, j)
    if edge == "T":
        return ("h", i + 1, j)
    if edge == "L":
        return ("v", i, j)
    return ("v", i, j + 1)


def _trace_segments(u: np.ndarray, x: np.ndarray, rho: np.ndarray,
                    floor: float):
    """All cell segments of {u = 0}; returns vertex map and adjacency.

    Cells whose four corners all sit below ``floor`` in magnitude are
    skipped: the level set is meaningless where the field is pure rounding
    noise (deep padding, underflowed tails).
    """
    pos = (u > 0).astype(np.int8)
    code = (pos[:-1, :-1] + 2 * pos[:-1, 1:]
            + 4 * pos[1:, 1:] + 8 * pos[1:, :-1])
    mag = np.abs(u)
    alive = np.maximum(np.maximum(mag[:-1, :-1], mag[:-1, 1:]),
                       np.maximum(mag[1:, 1:], mag[1:, :-1])) >= floor
    cells = np.argwhere((code != 0) & (code != 15) & alive)
    verts: dict = {}
    adjacency: dict = {}

    def vertex(key):
        if key in verts:
            return
        kind, i, j = key
        if kind == "h":
            ua, ub = u[i, j], u[i, j + 1]
            t = ua / (ua - ub)
            verts[key] = (x[j] + t * (x[j + 1] - x[j]), rho[i])
        else:
            ua, ub = u[i, j], u[i + 1, j]
            t = ua / (ua - ub)
            verts[key] = (x[j], rho[i] + t * (rho[i + 1] - rho[i]))

    for i, j in cells:
        c = int(code[i, j])
        if c in _SADDLE:
            center = (u[i, j] + u[i, j + 1] + u[i + 1, j] + u[i + 1, j + 1]) > 0
            segs = _SADDLE[c][bool(center)]
        else:
            segs = _SEGMENTS[c]
        for ea, eb in segs:
            ka = _edge_key("", i, j, ea)
            kb = _edge_key("", i, j, eb)
            vertex(ka)
            vertex(kb)
            adjacency.setdefault(ka, []).append(kb)
            adjacency.setdefault(kb, []).append(ka)
    return verts, adjacency


def _walk_components(adjacency: dict):
    """Split the 1-manifold adjacency into open chains and closed loops."""
    visited = set()
    chains = []

    def walk(start, first):
        path = [start, first]
        visited.add(start)
        visited.add(first)
        prev, cur = start, first
        while True:
            nbrs = [k for k in adjacency[cur] if k != prev]
            if not nbrs:
                return path, False
            nxt = nbrs[0]
            if nxt == start:
                return path, True
            path.append(nxt)
            visited.add(nxt)
            prev, cur = cur, nxt

    endpoints = sorted(k for k, v in adjacency.items() if len(v) == 1)
    for key in endpoints:
        if key in visited:
            continue
        path, closed = walk(key, adjacency[key][0])
        chains.append((path, False))
    for key in sorted(adjacency):
        if key in visited or len(adjacency[key]) != 2:
            continue
        path, closed = walk(key, adjacency[key][0])
        chains.append((path, True))
    return chains


def _boundary_of(key, n_rows: int, n_cols: int) -> str:
    kind, i, j = key
    if kind == "h":
        if i == 0:
            return "coarse"
        if i == n_rows - 1:
            return "signal"
    else:
        if j == 0 or j == n_cols - 1:
            return "side"
    return "interior"


def extract_contours(field: ScaleSpaceField, c: float,
                     x_slice: slice | None = None,
                     floor_rel: float = 1e-9) -> list:
    """Trace the level set {phi = c} and classify its components.

    Tracing is limited to the columns of ``x_slice`` (default: the field's
    valid window, i.e. the signal plus a smoothing margin).  Grid values
    exactly equal to the level are nudged by a deterministic +1e-12 of the
    field peak so no corner sits on the level set; cells where the shifted
    field is below ``floor_rel`` of the peak everywhere are ignored as
    rounding noise.
    """
    if not np.isfinite(c):
        raise DomainError("level must be finite")
    cols = x_slice if x_slice is not None else field.valid_slice
    u = field.phi[:, cols] - c
    x = field.x_values[cols]
    rho = field.rho_values
    peak = float(np.max(np.abs(field.phi)))
    eps = 1e-12 * peak
    if eps > 0:
        u = np.where(u == 0.0, u + eps, u)
    elif np.all(u == 0.0):
        return []

    verts, adjacency = _trace_segments(u, x, rho, floor_rel * peak)
    chains = _walk_components(adjacency)

    contours = []
    clipped = 0
    noise = 0
    next_id = 0
    n_rows, n_cols = u.shape
    for path, closed in chains:
        if len(path) < 3:
            continue
        pts = np.array([verts[k] for k in path])
        if closed:
            pts = np.vstack([pts, pts[:1]])
            contours.append(Contour(
                id=next_id, points=pts, kind="loop", level=c,
                apex=_min_rho_point(pts), feet=None, truncated=False,
                ends=("closed", "closed")))
            next_id += 1
            continue
        b0 = _boundary_of(path[0], n_rows, n_cols)
        b1 = _boundary_of(path[-1], n_rows, n_cols)
        if "side" in (b0, b1):
            clipped += 1
            continue
        if "interior" in (b0, b1):
            # chain petered out at the noise floor, not at a boundary
            noise += 1
            continue
        truncated = "coarse" in (b0, b1)
        if b0 == b1 == "signal":
            feet = tuple(sorted((float(pts[0, 0]), float(pts[-1, 0]))))
        elif truncated:
            top_x = float(pts[0, 0] if b0 == "signal" else pts[-1, 0])
            feet = (top_x, top_x)
        else:
            feet = None
        contours.append(Contour(
            id=next_id, points=pts, kind="arch", level=c,
            apex=_min_rho_point(pts), feet=feet, truncated=truncated,
            ends=(b0, b1)))
        next_id += 1
    if clipped:
        warnings.warn(f"discarded {clipped} contour(s) clipped at the "
                      "padding margins", RuntimeWarning)
    return contours


def _min_rho_point(pts: np.ndarray) -> tuple:
    order = np.lexsort((pts[:, 0], pts[:, 1]))
    k = order[0]
    return (float(pts[k, 0]), float(pts[k, 1]))


def _closed_polygon(contour: Contour) -> np.ndarray:
    """Close an arch along the boundary segment between its endpoints."""
    if contour.kind == "loop":
        return contour.points
    return np.vstack([contour.points, contour.points[:1]])


def _point_in_polygon(xq: float, yq: float, poly: np.ndarray) -> bool:
    """Even-odd rule with a +x ray; poly is closed (first == last row)."""
    x1, y1 = poly[:-1, 0], poly[:-1, 1]
    x2, y2 = poly[1:, 0], poly[1:, 1]
    straddle = (y1 > yq) != (y2 > yq)
    with np.errstate(divide="ignore", invalid="ignore"):
        xs = x1 + (yq - y1) / (y2 - y1) * (x2 - x1)
    hits = straddle & (xs > xq)
    return bool(np.sum(hits) % 2 == 1)


def _polygon_area(poly: np.ndarray) -> float:
    x, y = poly[:-1, 0], poly[:-1, 1]
    xn, yn = poly[1:, 0], poly[1:, 1]
    return 0.5 * abs(float(np.sum(x * yn - xn * y)))


def _min_vertex_distance(xq: float, yq: float, poly: np.ndarray,
                         x_scale: float, y_scale: float) -> float:
    dx = (poly[:, 0] - xq) / x_scale
    dy = (poly[:, 1] - yq) / y_scale
    return float(np.sqrt(np.min(dx * dx + dy * dy)))


def build_nesting(contours: list, field: ScaleSpaceField,
                  ambiguity_tol: float = 1e-9) -> NestingForest:
    """Minimal-encloser forest over one extraction.

    An arch encloses the region bounded by its curve and the signal-side
    boundary segment between its feet; a loop encloses its interior.
    Containment is decided by an even-odd ray test at the candidate's apex.
    Raises ContainmentError when an apex lies within ``ambiguity_tol``
    (relative to the grid extents) of another contour's curve.
    """
    x_scale = float(field.x_values[-1] - field.x_values[0]) or 1.0
    y_scale = float(field.rho_values[-1] - field.rho_values[0]) or 1.0
    polys = {}
    for c in contours:
        # a truncated single branch bounds no area; it can only be enclosed
        if c.kind == "arch" and c.truncated and c.ends.count("signal") <= 1:
            polys[c.id] = None
        else:
            polys[c.id] = _closed_polygon(c)

    parent: dict = {}
    by_id = {c.id: c for c in contours}
    for c in contours:
        xq, yq = c.apex
        enclosing = []
        for other in contours:
            if other.id == c.id or polys[other.id] is None:
                continue
            poly = polys[other.id]
            d = _min_vertex_distance(xq, yq, poly, x_scale, y_scale)
            if d < ambiguity_tol:
                raise ContainmentError(
                    f"apex of contour {c.id} lies within {ambiguity_tol} of "
                    f"contour {other.id}; containment ambiguous")
            if _point_in_polygon(xq, yq, poly):
                enclosing.append(other.id)
        if enclosing:
            parent[c.id] = min(enclosing, key=lambda i: _polygon_area(polys[i]))
        else:
            parent[c.id] = None

    children: dict = {c.id: [] for c in contours}
    for cid, pid in parent.items():
        if pid is not None:
            children[pid].append(cid)
    for pid in children:
        children[pid].sort()
    return NestingForest(contours=list(contours), parent=parent,
                         children=children)


def branch_positions(contour: Contour, rho_level: float) -> np.ndarray:
    """x positions where the contour crosses the horizontal line rho_level.

    Used by the interval-tree construction to decide whether a later apex
    lies left of, inside, or right of an arch.  Vertices exactly on the
    line are handled by a deterministic upward nudge of the query level.
    """
    pts = contour.points
    r = pts[:, 1]
    level = rho_level
    for _ in range(8):
        d = r - level
        if np.any(d == 0.0):
            level = level * (1.0 + 1e-12) + 1e-300
            continue
        break
    d = r - level
    sign_flip = d[:-1] * d[1:] < 0
    idx = np.nonzero(sign_flip)[0]
    if idx.size == 0:
        return np.array([])
    t = d[idx] / (d[idx] - d[idx + 1])
    xs = pts[idx, 0] + t * (pts[idx + 1, 0] - pts[idx, 0])
    return np.sort(xs)
