"""Polygonal curves, oriented lines, and robust planar predicates.

Closed polygons stand in for smooth closed curves; open polylines are used
for graph flows and translating-soliton segments.  All predicates use the
tolerance ``eps_geom = 1e-12 * diameter`` and deterministic perturbation
(lines are shifted by ``+eps_geom`` when a vertex lands on them).
"""

from __future__ import annotations

import json
import math
from dataclasses import dataclass

import numpy as np

from .errors import DegenerateConfigurationError, InvalidInputError

EPS_FACTOR = 1e-12

# Vertices turning more than this (radians) are treated as hard corners and
# survive resampling, which is what keeps the 0.1% length contract.
SHARP_CORNER_ANGLE = 0.45

N_ALIGN_DEFAULT = 256


def _as_points(vertices) -> np.ndarray:
    pts = np.asarray(vertices, dtype=float)
    if pts.ndim != 2 or pts.shape[1] != 2:
        raise InvalidInputError(f"expected (n, 2) vertex array, got shape {pts.shape}")
    if not np.all(np.isfinite(pts)):
        raise InvalidInputError("vertices must be finite")
    return pts


@dataclass(frozen=True)
class PolyCurve:
    """Oriented polygonal curve: closed polygon or open polyline.

    Invariants: closed curves have at least 3 vertices, open ones at least 2,
    and no edge is shorter than ``eps_geom``.  Orientation is carried by the
    vertex order (sign of the shoelace area for closed embedded curves).
    """

    vertices: np.ndarray
    closed: bool = True

    def __post_init__(self):
        pts = _as_points(self.vertices)
        min_pts = 3 if self.closed else 2
        if pts.shape[0] < min_pts:
            kind = "closed curve" if self.closed else "polyline"
            raise InvalidInputError(f"{kind} needs at least {min_pts} vertices")
        object.__setattr__(self, "vertices", pts)
        el = self.edge_lengths()
        if np.any(el <= self.eps_geom):
            raise InvalidInputError("zero-length edge (consecutive vertices coincide)")
        self.vertices.setflags(write=False)

    @property
    def n(self) -> int:
        return self.vertices.shape[0]

    @property
    def eps_geom(self) -> float:
        span = self.vertices.max(axis=0) - self.vertices.min(axis=0)
        return EPS_FACTOR * max(float(np.hypot(*span)), 1.0)

    def edge_vectors(self) -> np.ndarray:
        if self.closed:
            return np.roll(self.vertices, -1, axis=0) - self.vertices
        return np.diff(self.vertices, axis=0)

    def edge_lengths(self) -> np.ndarray:
        return np.linalg.norm(self.edge_vectors(), axis=1)

    def length(self) -> float:
        return float(self.edge_lengths().sum())

    def signed_area(self) -> float:
        x, y = self.vertices[:, 0], self.vertices[:, 1]
        return 0.5 * float(np.sum(x * np.roll(y, -1) - np.roll(x, -1) * y))

    def arclengths(self) -> np.ndarray:
        """Cumulative arclength at each vertex, starting at 0."""
        return np.concatenate([[0.0], np.cumsum(self.edge_lengths())])[: self.n]

    def reversed(self) -> "PolyCurve":
        return PolyCurve(self.vertices[::-1].copy(), self.closed)

    def transformed(self, angle: float = 0.0, translation=(0.0, 0.0)) -> "PolyCurve":
        c, s = math.cos(angle), math.sin(angle)
        rot = np.array([[c, -s], [s, c]])
        return PolyCurve(self.vertices @ rot.T + np.asarray(translation, float), self.closed)

    def point_at_arclength(self, s) -> np.ndarray:
        """Points on the polygon at the given arclengths (wraps when closed)."""
        s = np.atleast_1d(np.asarray(s, dtype=float))
        total = self.length()
        if self.closed:
            verts = np.vstack([self.vertices, self.vertices[:1]])
            s = np.mod(s, total)
        else:
            verts = self.vertices
            s = np.clip(s, 0.0, total)
        cum = np.concatenate(
            [[0.0], np.cumsum(np.linalg.norm(np.diff(verts, axis=0), axis=1))]
        )
        idx = np.clip(np.searchsorted(cum, s, side="right") - 1, 0, len(cum) - 2)
        seg = cum[idx + 1] - cum[idx]
        frac = np.where(seg > 0, (s - cum[idx]) / np.where(seg > 0, seg, 1.0), 0.0)
        return verts[idx] + frac[:, None] * (verts[idx + 1] - verts[idx])


@dataclass(frozen=True)
class Line:
    """Oriented line {p : p . normal = offset}, normal = direction rotated +90 deg."""

    direction: np.ndarray
    offset: float = 0.0

    def __post_init__(self):
        d = np.asarray(self.direction, dtype=float)
        nrm = float(np.linalg.norm(d))
        if nrm == 0.0 or not np.all(np.isfinite(d)):
            raise InvalidInputError("line direction must be a nonzero finite vector")
        object.__setattr__(self, "direction", d / nrm)
        object.__setattr__(self, "offset", float(self.offset))
        self.direction.setflags(write=False)

    @property
    def normal(self) -> np.ndarray:
        dx, dy = self.direction
        return np.array([-dy, dx])

    def signed_distance(self, points) -> np.ndarray:
        pts = np.atleast_2d(np.asarray(points, dtype=float))
        return pts @ self.normal - self.offset

    @staticmethod
    def through(point, direction) -> "Line":
        line = Line(direction, 0.0)
        return Line(line.direction, float(np.asarray(point, float) @ line.normal))


@dataclass(frozen=True)
class Strip:
    """Open neighbourhood of a line with the given radius."""

    line: Line
    radius: float

    def __post_init__(self):
        if not self.radius > 0:
            raise InvalidInputError("strip radius must be positive")


# ---------------------------------------------------------------------------
# metrics


def metrics(curve: PolyCurve) -> dict:
    """Length, signed shoelace area, diameter and isoperimetric ratio.

    The isoperimetric ratio is ``L^2 / (4 pi |A|)`` (1 for a round circle)
    and ``inf`` when the signed area vanishes.
    """
    if curve.closed and curve.n < 3:
        raise InvalidInputError("closed curve needs at least 3 vertices")
    length = curve.length()
    area = curve.signed_area() if curve.closed else 0.0
    diam = diameter(curve.vertices)
    iso = length**2 / (4.0 * math.pi * abs(area)) if area != 0.0 else math.inf
    return {
        "length": length,
        "signed_area": area,
        "diameter": diam,
        "isoperimetric_ratio": iso,
    }


def diameter(points: np.ndarray) -> float:
    pts = np.asarray(points, dtype=float)
    if pts.shape[0] > 512:
        try:
            from scipy.spatial import ConvexHull

            pts = pts[ConvexHull(pts).vertices]
        except Exception:
            pass  # degenerate (collinear) input: fall through to direct scan
    if pts.shape[0] > 4096:  # pairwise matrix would be too large
        best = 0.0
        for p in pts:
            best = max(best, float(np.max(np.linalg.norm(pts - p, axis=1))))
        return best
    d = pts[:, None, :] - pts[None, :, :]
    return float(np.sqrt((d**2).sum(-1)).max())


# ---------------------------------------------------------------------------
# intersections


def _segment_arrays(curve: PolyCurve):
    p = curve.vertices
    if curve.closed:
        return p, np.roll(p, -1, axis=0)
    return p[:-1], p[1:]


def _cross(a, b):
    return a[..., 0] * b[..., 1] - a[..., 1] * b[..., 0]


def self_intersection_number(curve: PolyCurve) -> int:
    """Count parameter points whose image is shared (2 per transverse double point).

    Requires general position: collinear overlaps, vertex-on-edge contacts and
    repeated vertices raise :class:`DegenerateConfigurationError`.
    """
    if not curve.closed:
        raise InvalidInputError("self intersection count is defined for closed curves")
    P, Q = _segment_arrays(curve)
    n = P.shape[0]
    eps = curve.eps_geom
    crossings = 0
    block = 256
    D = Q - P
    L = np.linalg.norm(D, axis=1)
    for i0 in range(0, n, block):
        i1 = min(i0 + block, n)
        idx_i = np.arange(i0, i1)
        # pairs (i, j) with j > i + 1, excluding the cyclic-adjacent pair (0, n-1)
        for j0 in range(i0, n, block):
            j1 = min(j0 + block, n)
            idx_j = np.arange(j0, j1)
            I, J = np.meshgrid(idx_i, idx_j, indexing="ij")
            mask = J > I + 1
            mask &= ~((I == 0) & (J == n - 1))
            if not mask.any():
                continue
            ii, jj = I[mask], J[mask]
            d1, d2 = D[ii], D[jj]
            o1 = _cross(d1, P[jj] - P[ii])
            o2 = _cross(d1, Q[jj] - P[ii])
            o3 = _cross(d2, P[ii] - P[jj])
            o4 = _cross(d2, Q[ii] - P[jj])
            # normalised orientation magnitudes ~ point-line distances
            m1 = np.abs(o1) / L[ii]
            m2 = np.abs(o2) / L[ii]
            m3 = np.abs(o3) / L[jj]
            m4 = np.abs(o4) / L[jj]
            tiny = np.minimum(np.minimum(m1, m2), np.minimum(m3, m4)) < eps
            if tiny.any():
                near = _boxes_near(P[ii][tiny], Q[ii][tiny], P[jj][tiny], Q[jj][tiny], eps)
                if near.any():
                    raise DegenerateConfigurationError(
                        "non-transverse contact between curve edges"
                    )
            crossings += int(np.count_nonzero((o1 * o2 < 0) & (o3 * o4 < 0)))
    return 2 * crossings


def _boxes_near(p1, q1, p2, q2, eps):
    lo1 = np.minimum(p1, q1) - eps
    hi1 = np.maximum(p1, q1) + eps
    lo2 = np.minimum(p2, q2)
    hi2 = np.maximum(p2, q2)
    return np.all((lo1 <= hi2) & (lo2 <= hi1), axis=1)


def curve_curve_intersections(a: PolyCurve, b: PolyCurve) -> int:
    """Number of transverse crossings between two curves (degenerate contact raises)."""
    Pa, Qa = _segment_arrays(a)
    Pb, Qb = _segment_arrays(b)
    eps = max(a.eps_geom, b.eps_geom)
    Da, Db = Qa - Pa, Qb - Pb
    La = np.linalg.norm(Da, axis=1)
    Lb = np.linalg.norm(Db, axis=1)
    count = 0
    block = 256
    for i0 in range(0, Pa.shape[0], block):
        i1 = min(i0 + block, Pa.shape[0])
        d1 = Da[i0:i1, None, :]
        p1 = Pa[i0:i1, None, :]
        q1 = Qa[i0:i1, None, :]
        o1 = _cross(d1, Pb[None, :, :] - p1)
        o2 = _cross(d1, Qb[None, :, :] - p1)
        o3 = _cross(Db[None, :, :], p1 - Pb[None, :, :])
        o4 = _cross(Db[None, :, :], q1 - Pb[None, :, :])
        m = np.minimum(
            np.minimum(np.abs(o1), np.abs(o2)) / La[i0:i1, None],
            np.minimum(np.abs(o3), np.abs(o4)) / Lb[None, :],
        )
        hit = (o1 * o2 < 0) & (o3 * o4 < 0)
        tiny = m < eps
        if tiny.any():
            ii, jj = np.nonzero(tiny)
            near = _boxes_near(
                Pa[i0 + ii], Qa[i0 + ii], Pb[jj], Qb[jj], eps
            )
            if near.any():
                raise DegenerateConfigurationError("non-transverse curve-curve contact")
        count += int(np.count_nonzero(hit))
    return count


def curve_line_intersections(curve: PolyCurve, line: Line, max_perturb: int = 8) -> int:
    """Transverse crossings of a line, with deterministic offset perturbation.

    When a vertex lies on the line the offset is nudged by ``+eps_geom``
    (escalating geometrically); a :class:`DegenerateConfigurationError` is
    raised once the perturbation budget is exhausted.
    """
    eps = curve.eps_geom
    shift = 0.0
    for attempt in range(max_perturb + 1):
        d = line.signed_distance(curve.vertices) - shift
        if np.min(np.abs(d)) > eps:
            if curve.closed:
                nxt = np.roll(d, -1)
            else:
                nxt = d[1:]
                d = d[:-1]
            return int(np.count_nonzero((d > 0) != (nxt > 0)))
        shift += eps * (4.0**attempt)
    raise DegenerateConfigurationError("vertex remains on line after perturbation budget")


# ---------------------------------------------------------------------------
# graphs over a line


def lipschitz_graph_check(curve: PolyCurve, line: Line, alpha: float) -> dict:
    """Check whether the curve is a slope-bounded graph over ``line``.

    ``is_graph`` is true iff the projection onto the line is strictly monotone
    and every edge slope (height change over abscissa change) has magnitude at
    most ``alpha``.  ``max_slope`` is reported regardless (``inf`` for edges
    perpendicular to the line).
    """
    if not alpha > 0:
        raise InvalidInputError("alpha must be positive")
    u = line.direction
    t = curve.vertices @ u
    h = line.signed_distance(curve.vertices)
    if curve.closed:
        dt = np.roll(t, -1) - t
        dh = np.roll(h, -1) - h
    else:
        dt = np.diff(t)
        dh = np.diff(h)
    eps = curve.eps_geom
    vertical = np.abs(dt) <= eps
    with np.errstate(divide="ignore", invalid="ignore"):
        slopes = np.where(vertical, np.inf, np.abs(dh) / np.abs(np.where(vertical, 1.0, dt)))
    max_slope = float(np.max(slopes)) if slopes.size else 0.0
    monotone = bool(np.all(dt > eps) or np.all(dt < -eps))
    return {"is_graph": monotone and max_slope <= alpha, "max_slope": max_slope}


# ---------------------------------------------------------------------------
# resampling


def resample(curve: PolyCurve, target_edge: float) -> PolyCurve:
    """Re-space vertices along the polygon at roughly ``target_edge`` spacing.

    New vertices lie on the input polygon.  Sharp corners (turn angle above
    ~26 degrees) are kept, and a coarsening pass is only accepted when it
    changes the total length by at most 0.1%; otherwise only overlong edges
    are subdivided.  Consequently edges stay within ``[0.5, 1.5] * target``
    except where the length contract forbids merging sub-target features.
    """
    if not target_edge > 0:
        raise InvalidInputError("target_edge must be positive")
    total = curve.length()
    if target_edge > total / 3.0:
        raise InvalidInputError("target_edge exceeds a third of the curve length")

    anchors = _mandatory_vertices(curve, target_edge)
    candidate = _respace(curve, target_edge, anchors)
    if candidate.length() >= total * (1.0 - 1e-3):
        return candidate
    return _subdivide_only(curve, target_edge)


def _mandatory_vertices(curve: PolyCurve, target: float) -> np.ndarray:
    """Sharp corners that must survive respacing, thinned so that a cluster
    of sharp vertices (a corner mid-rounding) pins only its sharpest one."""
    v = curve.vertices
    if curve.closed:
        prev = v - np.roll(v, 1, axis=0)
        nxt = np.roll(v, -1, axis=0) - v
    else:
        prev = np.vstack([v[1] - v[0], np.diff(v, axis=0)])
        nxt = np.vstack([np.diff(v, axis=0), v[-1] - v[-2]])
    dot = np.sum(prev * nxt, axis=1)
    crs = _cross(prev, nxt)
    turn = np.abs(np.arctan2(crs, dot))
    keep = turn > SHARP_CORNER_ANGLE
    if not curve.closed:
        keep[0] = keep[-1] = True
    idx = np.flatnonzero(keep)
    if idx.size < 2:
        return idx
    cum = curve.arclengths()
    total = curve.length()
    groups = [[int(idx[0])]]
    for i in idx[1:]:
        if cum[i] - cum[groups[-1][-1]] < 0.5 * target:
            groups[-1].append(int(i))
        else:
            groups.append([int(i)])
    if (
        curve.closed
        and len(groups) > 1
        and total - cum[groups[-1][-1]] + cum[groups[0][0]] < 0.5 * target
    ):
        groups[0] = groups.pop() + groups[0]
    thinned = [g[int(np.argmax(turn[g]))] for g in groups]
    if not curve.closed:
        thinned = sorted(set(thinned) | {0, curve.n - 1})
    return np.array(sorted(thinned), dtype=int)


def _respace(curve: PolyCurve, target: float, anchors: np.ndarray) -> PolyCurve:
    cum = curve.arclengths()
    total = curve.length()
    if anchors.size == 0:
        if curve.closed:
            anchors = np.array([0])
        else:
            anchors = np.array([0, curve.n - 1])
    stops = cum[anchors]
    samples: list[np.ndarray] = []
    if curve.closed:
        spans = np.diff(np.concatenate([stops, [stops[0] + total]]))
    else:
        spans = np.diff(stops)
    for s0, span in zip(stops, spans):
        if span <= 0:
            continue
        k = max(1, int(round(span / target)))
        samples.append(s0 + span * np.arange(k) / k)
    if not curve.closed:
        samples.append(np.array([total]))
    s = np.concatenate(samples)
    pts = curve.point_at_arclength(s)
    pts = _drop_dup_points(pts, curve.eps_geom, curve.closed)
    min_pts = 3 if curve.closed else 2
    if pts.shape[0] < min_pts:
        return _subdivide_only(curve, target)
    return PolyCurve(pts, curve.closed)


def _subdivide_only(curve: PolyCurve, target: float) -> PolyCurve:
    P, Q = _segment_arrays(curve)
    lens = np.linalg.norm(Q - P, axis=1)
    pieces = np.maximum(1, np.ceil(lens / (1.5 * target)).astype(int))
    out = []
    for p, q, k in zip(P, Q, pieces):
        fr = np.arange(k) / k
        out.append(p + fr[:, None] * (q - p))
    pts = np.vstack(out)
    if not curve.closed:
        pts = np.vstack([pts, curve.vertices[-1]])
    return PolyCurve(pts, curve.closed)


def _drop_dup_points(pts: np.ndarray, eps: float, closed: bool) -> np.ndarray:
    if pts.shape[0] < 2:
        return pts
    d = np.linalg.norm(np.diff(pts, axis=0), axis=1)
    keep = np.concatenate([[True], d > eps])
    pts = pts[keep]
    if closed and pts.shape[0] > 1 and np.linalg.norm(pts[0] - pts[-1]) <= eps:
        pts = pts[:-1]
    return pts


# ---------------------------------------------------------------------------
# distances


def point_polyline_distance(points, curve: PolyCurve) -> np.ndarray:
    """Distance from each query point to the curve (as a union of segments)."""
    pts = np.atleast_2d(np.asarray(points, dtype=float))
    P, Q = _segment_arrays(curve)
    D = Q - P
    L2 = np.sum(D**2, axis=1)
    best = np.full(pts.shape[0], np.inf)
    block = 512
    for j0 in range(0, P.shape[0], block):
        j1 = min(j0 + block, P.shape[0])
        rel = pts[:, None, :] - P[None, j0:j1, :]
        t = np.clip(
            np.sum(rel * D[None, j0:j1, :], axis=2) / L2[None, j0:j1], 0.0, 1.0
        )
        foot = P[None, j0:j1, :] + t[..., None] * D[None, j0:j1, :]
        d = np.linalg.norm(pts[:, None, :] - foot, axis=2)
        best = np.minimum(best, d.min(axis=1))
    return best


def hausdorff_distance(a: PolyCurve, b: PolyCurve) -> float:
    d_ab = float(point_polyline_distance(a.vertices, b).max())
    d_ba = float(point_polyline_distance(b.vertices, a).max())
    return max(d_ab, d_ba)


def distances(a: PolyCurve, b: PolyCurve, n_align: int = N_ALIGN_DEFAULT) -> dict:
    """Hausdorff distance and best cyclically-aligned sup distance.

    ``matched_sup`` minimises, over both orientations and ``n_align`` start
    offsets of an equal-arclength correspondence, the sup pointwise distance.
    The sampled value is clamped from below by the Hausdorff distance, which
    every parametrised sup metric dominates.
    """
    if not (a.closed and b.closed):
        raise InvalidInputError("distances() expects two closed curves")
    haus = hausdorff_distance(a, b)
    sa = a.point_at_arclength(a.length() * np.arange(n_align) / n_align)
    sb = b.point_at_arclength(b.length() * np.arange(n_align) / n_align)
    best = math.inf
    for pb in (sb, sb[::-1]):
        D = np.linalg.norm(sa[:, None, :] - pb[None, :, :], axis=2)
        idx = (np.arange(n_align)[:, None] + np.arange(n_align)[None, :]) % n_align
        per_shift = D[np.arange(n_align)[:, None], idx].max(axis=0)
        best = min(best, float(per_shift.min()))
    return {"hausdorff": haus, "matched_sup": max(best, haus)}


# ---------------------------------------------------------------------------
# point-in-polygon and hulls


def points_in_polygon(points, curve: PolyCurve) -> np.ndarray:
    """Even-odd test for a closed polygon, vectorised over query points."""
    if not curve.closed:
        raise InvalidInputError("containment needs a closed curve")
    pts = np.atleast_2d(np.asarray(points, dtype=float))
    x, y = pts[:, 0], pts[:, 1]
    P, Q = _segment_arrays(curve)
    inside = np.zeros(pts.shape[0], dtype=bool)
    block = 512
    for j0 in range(0, P.shape[0], block):
        j1 = min(j0 + block, P.shape[0])
        x0, y0 = P[j0:j1, 0], P[j0:j1, 1]
        x1, y1 = Q[j0:j1, 0], Q[j0:j1, 1]
        cond = (y0[None, :] <= y[:, None]) != (y1[None, :] <= y[:, None])
        with np.errstate(divide="ignore", invalid="ignore"):
            t = (y[:, None] - y0[None, :]) / (y1 - y0)[None, :]
        xi = x0[None, :] + t * (x1 - x0)[None, :]
        hits = cond & (x[:, None] < xi)
        inside ^= (hits.sum(axis=1) % 2).astype(bool)
    return inside


def convex_hull_contains(points, curve: PolyCurve, tol: float = 1e-9) -> bool:
    """True when all query points lie in the convex hull of the curve's vertices."""
    from scipy.spatial import ConvexHull

    hull = ConvexHull(curve.vertices)
    pts = np.atleast_2d(np.asarray(points, dtype=float))
    eq = hull.equations
    vals = pts @ eq[:, :2].T + eq[:, 2][None, :]
    return bool(np.all(vals <= tol))


# ---------------------------------------------------------------------------
# JSON interchange


def curve_to_dict(curve: PolyCurve) -> dict:
    return {"closed": bool(curve.closed), "vertices": curve.vertices.tolist()}


def curve_from_dict(data: dict) -> PolyCurve:
    try:
        return PolyCurve(np.asarray(data["vertices"], dtype=float), bool(data["closed"]))
    except KeyError as exc:
        raise InvalidInputError(f"curve JSON missing field {exc}") from exc


def save_curve(curve: PolyCurve, path) -> None:
    with open(path, "w", newline="\n") as fh:
        json.dump(curve_to_dict(curve), fh)
        fh.write("\n")


def load_curve(path) -> PolyCurve:
    with open(path) as fh:
        return curve_from_dict(json.load(fh))
