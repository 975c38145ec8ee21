"""Occupancy-grid compacta, dyadic exhaustion of complement components, and
the sampled local-connectivity function.

A compact set K is stored as occupied points of a raster at spacing h.  The
exhaustion at level n collects closed dyadic squares of side 2^-n that are
wholly disjoint from K and side-connected to the seed square; its boundary is
stitched into simple lattice loops (region kept on the left, ties resolved by
the sharpest counterclockwise turn, which splits pinch points instead of
crossing them).
"""

from __future__ import annotations

import json
import math
from dataclasses import dataclass

import numpy as np

from .curves import PolyCurve, diameter
from .errors import InvalidInputError
from .multiplicity import r_multiplicity


@dataclass
class RasterSet:
    """Occupied points of a uniform raster; point (row i, col j) sits at
    origin + (j*h, i*h)."""

    origin: np.ndarray
    spacing: float
    occupancy: np.ndarray

    def __post_init__(self):
        self.origin = np.asarray(self.origin, dtype=float)
        if self.origin.shape != (2,):
            raise InvalidInputError("origin must be a 2-vector")
        if not self.spacing > 0:
            raise InvalidInputError("spacing must be positive")
        occ = np.asarray(self.occupancy)
        if occ.ndim != 2 or occ.size == 0:
            raise InvalidInputError("occupancy must be a nonempty 2D grid")
        self.occupancy = occ.astype(bool)

    @property
    def shape(self):
        return self.occupancy.shape

    def points(self) -> np.ndarray:
        """Model coordinates of the occupied raster points."""
        rows, cols = np.nonzero(self.occupancy)
        return self.origin + self.spacing * np.stack([cols, rows], axis=1)

    def count(self) -> int:
        return int(self.occupancy.sum())

    def measure_estimate(self) -> float:
        return self.count() * self.spacing**2

    def diameter(self) -> float:
        pts = self.points()
        if pts.shape[0] == 0:
            return 0.0
        return diameter(pts)

    def to_dict(self) -> dict:
        r, c = self.occupancy.shape
        return {
            "origin": [float(self.origin[0]), float(self.origin[1])],
            "spacing": float(self.spacing),
            "rows": r,
            "cols": c,
            "data": self.occupancy.astype(int).ravel().tolist(),
        }

    @staticmethod
    def from_dict(data: dict) -> "RasterSet":
        occ = np.asarray(data["data"], dtype=int).reshape(data["rows"], data["cols"])
        return RasterSet(np.asarray(data["origin"], float), float(data["spacing"]), occ)

    def save(self, path) -> None:
        with open(path, "w", newline="\n") as fh:
            json.dump(self.to_dict(), fh)
            fh.write("\n")

    @staticmethod
    def load(path) -> "RasterSet":
        with open(path) as fh:
            return RasterSet.from_dict(json.load(fh))


def rasterize_curves(curves, h: float, pad_cells: int = 2) -> RasterSet:
    """Mark the raster corners of every cell visited by the curve(s).

    Each curve is sampled at arclength step h/4 and the four raster points
    around each sample are occupied, giving a 4-connected band of width ~h.
    """
    if isinstance(curves, PolyCurve):
        curves = [curves]
    if not curves:
        raise InvalidInputError("need at least one curve")
    if not h > 0:
        raise InvalidInputError("spacing must be positive")
    all_pts = []
    for c in curves:
        n_samp = max(8, int(math.ceil(c.length() / (h / 4.0))))
        s = np.linspace(0.0, c.length(), n_samp, endpoint=not c.closed)
        all_pts.append(c.point_at_arclength(s))
    pts = np.vstack(all_pts)
    lo = np.floor(pts.min(axis=0) / h).astype(int) - pad_cells
    hi = np.floor(pts.max(axis=0) / h).astype(int) + pad_cells + 2
    origin = lo * h
    cols = hi[0] - lo[0]
    rows = hi[1] - lo[1]
    occ = np.zeros((rows, cols), dtype=bool)
    f = (pts - origin) / h
    j0 = np.clip(np.floor(f[:, 0]).astype(int), 0, cols - 2)
    i0 = np.clip(np.floor(f[:, 1]).astype(int), 0, rows - 2)
    for dj in (0, 1):
        for di in (0, 1):
            occ[i0 + di, j0 + dj] = True
    return RasterSet(origin, h, occ)


# ---------------------------------------------------------------------------
# dyadic exhaustion


@dataclass
class GridRegion:
    level: int
    cells: set  # of (ix, iy); cell spans [ix*s, (ix+1)*s] x [iy*s, (iy+1)*s]
    seed: np.ndarray

    @property
    def cell_size(self) -> float:
        return 2.0 ** (-self.level)

    def area(self) -> float:
        return len(self.cells) * self.cell_size**2

    def refines_into(self, finer: "GridRegion") -> bool:
        """True when every cell, split in four, appears in the finer region."""
        if finer.level != self.level + 1:
            raise InvalidInputError("refinement check needs consecutive levels")
        for ix, iy in self.cells:
            for dx in (0, 1):
                for dy in (0, 1):
                    if (2 * ix + dx, 2 * iy + dy) not in finer.cells:
                        return False
        return True


@dataclass
class ExhaustionResult:
    region: GridRegion
    boundary: PolyCurve | None
    loops: list
    touches_frame: bool


def grid_exhaustion(K: RasterSet, seed, n: int, margin: float = 2.0) -> ExhaustionResult:
    """Side-connected union of free dyadic squares around the seed, plus its
    outer boundary polygon.

    A square is free when no occupied raster point lies in the closed cell.
    The unbounded complement component is clipped by a frame ``margin`` model
    units beyond the raster extent; the frame-hugging loop is discarded and
    the loop enclosing K is returned instead.
    """
    from scipy import ndimage

    s = 2.0 ** (-n)
    if s < 2.0 * K.spacing * (1.0 - 1e-12):
        raise InvalidInputError("cells must be at least twice the raster spacing")
    seed = np.asarray(seed, dtype=float)
    occ_pts = K.points()
    if occ_pts.shape[0] == 0:
        raise InvalidInputError("raster holds no occupied points")
    if float(np.min(np.linalg.norm(occ_pts - seed, axis=1))) <= 0.5 * K.spacing:
        raise InvalidInputError("seed lies inside K")

    bb_lo = occ_pts.min(axis=0) - margin
    bb_hi = occ_pts.max(axis=0) + margin
    ix_lo = int(math.floor(bb_lo[0] / s))
    iy_lo = int(math.floor(bb_lo[1] / s))
    ix_hi = int(math.ceil(bb_hi[0] / s))
    iy_hi = int(math.ceil(bb_hi[1] / s))
    nx, ny = ix_hi - ix_lo, iy_hi - iy_lo
    if not (ix_lo <= seed[0] / s < ix_hi and iy_lo <= seed[1] / s < iy_hi):
        raise InvalidInputError("seed outside the exhaustion frame")

    blocked = np.zeros((ny, nx), dtype=bool)
    f = occ_pts / s
    jx = np.floor(f[:, 0]).astype(int)
    jy = np.floor(f[:, 1]).astype(int)
    btol = 1e-9
    on_x = f[:, 0] - jx < btol
    on_y = f[:, 1] - jy < btol
    for dx, dy, mask in (
        (0, 0, np.ones(jx.size, dtype=bool)),
        (-1, 0, on_x),
        (0, -1, on_y),
        (-1, -1, on_x & on_y),
    ):
        cx = jx[mask] + dx - ix_lo
        cy = jy[mask] + dy - iy_lo
        keep = (cx >= 0) & (cx < nx) & (cy >= 0) & (cy < ny)
        blocked[cy[keep], cx[keep]] = True

    free = ~blocked
    labels, _ = ndimage.label(free, structure=np.array([[0, 1, 0], [1, 1, 1], [0, 1, 0]]))
    sx = int(math.floor(seed[0] / s)) - ix_lo
    sy = int(math.floor(seed[1] / s)) - iy_lo
    seed_label = labels[sy, sx]
    if seed_label == 0:
        return ExhaustionResult(GridRegion(n, set(), seed), None, [], False)
    mask = labels == seed_label
    cy, cx = np.nonzero(mask)
    cells = {(int(x) + ix_lo, int(y) + iy_lo) for x, y in zip(cx, cy)}
    region = GridRegion(n, cells, seed)

    touches = bool(
        mask[0, :].any() or mask[-1, :].any() or mask[:, 0].any() or mask[:, -1].any()
    )
    loops = _boundary_loops(mask, ix_lo, iy_lo, s)
    boundary = _select_boundary(loops, touches)
    return ExhaustionResult(region, boundary, loops, touches)


def _select_boundary(loops: list, touches_frame: bool) -> PolyCurve | None:
    if not loops:
        return None
    areas = [abs(lp.signed_area()) for lp in loops]
    order = sorted(range(len(loops)), key=lambda k: -areas[k])
    pick = order[0]
    if touches_frame:
        if len(loops) == 1:
            return None  # only the frame hug exists; nothing encloses K
        pick = order[1]
    loop = loops[pick]
    return loop if loop.signed_area() > 0 else loop.reversed()


_TURN_PREFERENCE = {
    (1, 0): [(0, 1), (1, 0), (0, -1)],
    (0, 1): [(-1, 0), (0, 1), (1, 0)],
    (-1, 0): [(0, -1), (-1, 0), (0, 1)],
    (0, -1): [(1, 0), (0, -1), (-1, 0)],
}


def _boundary_loops(mask: np.ndarray, ix_lo: int, iy_lo: int, s: float) -> list:
    """Stitch the directed boundary edges of the cell union into simple loops."""
    ny, nx = mask.shape
    pad = np.zeros((ny + 2, nx + 2), dtype=bool)
    pad[1:-1, 1:-1] = mask
    edges: dict = {}

    def emit(px, py, dx, dy):
        edges.setdefault((px, py), []).append((dx, dy))

    ys, xs = np.nonzero(mask)
    south = ~pad[ys, xs + 1]
    north = ~pad[ys + 2, xs + 1]
    west = ~pad[ys + 1, xs]
    east = ~pad[ys + 1, xs + 2]
    exposed = south | north | west | east
    ys, xs = ys[exposed], xs[exposed]
    south, north = south[exposed], north[exposed]
    west, east = west[exposed], east[exposed]
    for x, y, so, no, we, ea in zip(xs, ys, south, north, west, east):
        gx, gy = int(x) + ix_lo, int(y) + iy_lo
        if so:
            emit(gx, gy, 1, 0)
        if ea:
            emit(gx + 1, gy, 0, 1)
        if no:
            emit(gx + 1, gy + 1, -1, 0)
        if we:
            emit(gx, gy + 1, 0, -1)

    loops = []
    while edges:
        start, dirs = next(iter(edges.items()))
        d = dirs.pop()
        if not dirs:
            del edges[start]
        pts = [start]
        p = (start[0] + d[0], start[1] + d[1])
        while p != start:
            pts.append(p)
            options = edges.get(p)
            if not options:
                raise InvalidInputError("boundary stitching failed (open chain)")
            for cand in _TURN_PREFERENCE[d]:
                if cand in options:
                    options.remove(cand)
                    d = cand
                    break
            else:
                raise InvalidInputError("boundary stitching failed (no continuation)")
            if not options:
                del edges[p]
            p = (p[0] + d[0], p[1] + d[1])
        loops.append(_loop_to_curve(pts, s))
    return loops


def _loop_to_curve(pts: list, s: float) -> PolyCurve:
    arr = np.asarray(pts, dtype=float)
    nxt = np.roll(arr, -1, axis=0)
    prv = np.roll(arr, 1, axis=0)
    keep = np.any((arr - prv) != (nxt - arr), axis=1)
    return PolyCurve(arr[keep] * s, closed=True)


# ---------------------------------------------------------------------------
# local connectivity


def _raster_graph(K: RasterSet):
    from scipy import sparse

    occ = K.occupancy
    ids = -np.ones(occ.shape, dtype=int)
    rows, cols = np.nonzero(occ)
    m = rows.size
    ids[rows, cols] = np.arange(m)
    coords = K.origin + K.spacing * np.stack([cols, rows], axis=1)
    src, dst = [], []
    for di, dj in ((0, 1), (1, 0), (1, 1), (1, -1)):
        r2 = rows + di
        c2 = cols + dj
        ok = (r2 >= 0) & (r2 < occ.shape[0]) & (c2 >= 0) & (c2 < occ.shape[1])
        ok[ok] &= occ[r2[ok], c2[ok]]
        src.append(np.arange(m)[ok])
        dst.append(ids[r2[ok], c2[ok]])
    src = np.concatenate(src)
    dst = np.concatenate(dst)
    data = np.ones(src.size)
    graph = sparse.csr_matrix(
        (np.concatenate([data, data]), (np.concatenate([src, dst]), np.concatenate([dst, src]))),
        shape=(m, m),
    )
    return graph, coords


def _spread_sources(coords: np.ndarray, max_sources: int) -> np.ndarray:
    lo = coords.min(axis=0)
    hi = coords.max(axis=0)
    span = np.maximum(hi - lo, 1e-12)
    grid = max(2, int(math.sqrt(max_sources)))
    bins = np.minimum((grid * (coords - lo) / span).astype(int), grid - 1)
    key = bins[:, 0] * grid + bins[:, 1]
    _, first = np.unique(key, return_index=True)
    anchors = [int(np.argmin(coords[:, 0])), int(np.argmax(coords[:, 0])),
               int(np.argmin(coords[:, 1])), int(np.argmax(coords[:, 1]))]
    return np.unique(np.concatenate([first, anchors]))


def local_connectivity_estimate(K: RasterSet, s_values, max_sources: int = 96) -> list:
    """Sampled local-connectivity function of the raster set.

    For pairs p, q with d(p, q) <= s the minimal diameter of a connected
    subset joining them is estimated by the bounding-box diagonal of the
    union of shortest raster paths between them.  The estimate is forced
    non-decreasing in s.  Raises on a disconnected raster.
    """
    from scipy.sparse import csgraph

    s_values = sorted(float(s) for s in s_values)
    if not s_values or s_values[0] <= 0:
        raise InvalidInputError("s values must be positive")
    graph, coords = _raster_graph(K)
    n_comp, _ = csgraph.connected_components(graph, directed=False)
    if n_comp != 1:
        raise InvalidInputError("raster set is not connected")

    sources = _spread_sources(coords, max_sources)
    D = csgraph.dijkstra(graph, directed=False, indices=sources, unweighted=True)

    s_max = s_values[-1]
    pair_idx: set = set()
    euclid = np.linalg.norm(coords[sources][:, None, :] - coords[sources][None, :, :], axis=2)
    for a in range(len(sources)):
        for b in range(a + 1, len(sources)):
            if euclid[a, b] <= s_max:
                pair_idx.add((int(sources[a]), int(sources[b])))
    dist_all = np.linalg.norm(coords[sources][:, None, :] - coords[None, :, :], axis=2)
    for a in range(len(sources)):
        for s in s_values:
            within = dist_all[a] <= s
            if not within.any():
                continue
            j_far = int(np.argmax(np.where(within, dist_all[a], -1.0)))
            pair_idx.add((int(sources[a]), j_far))
            hops = np.where(within, D[a], -1.0)
            hops[~np.isfinite(D[a])] = -1.0
            j_hop = int(np.argmax(hops))
            pair_idx.add((int(sources[a]), j_hop))

    partners = sorted({j for _, j in pair_idx} | {i for i, _ in pair_idx})
    D_full = csgraph.dijkstra(graph, directed=False, indices=partners, unweighted=True)
    row_of = {node: k for k, node in enumerate(partners)}

    pair_data = []
    for i, j in pair_idx:
        if i == j:
            continue
        di, dj = D_full[row_of[i]], D_full[row_of[j]]
        dij = di[j]
        on_geodesic = di + dj <= dij + 0.5
        pts = coords[on_geodesic]
        diag = float(np.hypot(np.ptp(pts[:, 0]), np.ptp(pts[:, 1]))) if pts.shape[0] else 0.0
        pair_data.append((float(np.linalg.norm(coords[i] - coords[j])), diag))

    out = []
    best = 0.0
    k = 0
    pair_data.sort()
    dists = np.array([p[0] for p in pair_data])
    diags = np.array([p[1] for p in pair_data])
    for s in s_values:
        while k < len(pair_data) and dists[k] <= s:
            best = max(best, float(diags[k]))
            k += 1
        out.append((s, best))
    return out


# ---------------------------------------------------------------------------
# multiplicity bound


@dataclass
class BoundCheck:
    measured: int
    bound: float | None
    ok: bool | None
    s_used: float | None
    inconclusive: bool
    f_hat: list


def multiplicity_bound_check(
    K: RasterSet,
    boundary: PolyCurve,
    r: float,
    s_values=None,
    direction_budget: int = 32,
    level: int | None = None,
) -> BoundCheck:
    """Compare the measured r-multiplicity of an exhaustion boundary with the
    counting bound ``4 (diam(K)/s + 1)`` at the largest sampled s whose
    local-connectivity estimate stays below r/2.

    When no sampled scale qualifies the check is inconclusive, not an error.
    """
    if not r > 0:
        raise InvalidInputError("r must be positive")
    if level is not None and math.sqrt(2.0) * 2.0 ** (-level) >= r / 2.0:
        raise InvalidInputError("exhaustion level too coarse for this r")
    diam = K.diameter()
    if s_values is None:
        s_values = [diam * 0.75**k for k in range(1, 12)]
        s_values = [s for s in s_values if s > 2.0 * K.spacing]
    f_hat = local_connectivity_estimate(K, s_values)
    qualifying = [s for s, f in f_hat if f < r / 2.0]
    measured = r_multiplicity(boundary, r, direction_budget).value
    if not qualifying:
        return BoundCheck(measured, None, None, None, True, f_hat)
    s_used = max(qualifying)
    bound = 4.0 * (diam / s_used + 1.0)
    return BoundCheck(measured, bound, measured <= bound, s_used, False, f_hat)
