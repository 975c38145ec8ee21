"""Strip crossing counts and the scale-by-scale canonical reparametrization.

``strip_multiplicity`` counts the parameter components of a curve that cross
an infinite strip of total height ``r`` (radius ``r/2``) around a line.
``tilde_strip_multiplicity`` is the coarser variant counting components of
the ``2r``-neighbourhood preimage that touch the closed ``r``-strip.  The
sup over lines is discretised by direction: for a polygon the count in a
fixed direction is piecewise constant in the offset with breakpoints at the
vertex projections shifted by ``+/- r/2``, so enumerating interval midpoints
is exact per direction and a certified lower bound over all directions.
"""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np

from .curves import Line, PolyCurve
from .errors import InvalidInputError


@dataclass(frozen=True)
class ScaleList:
    """Strictly decreasing positive scales for the reparametrization."""

    radii: tuple

    def __post_init__(self):
        radii = tuple(float(r) for r in self.radii)
        if not radii:
            raise InvalidInputError("need at least one scale")
        if any(r <= 0 for r in radii):
            raise InvalidInputError("scales must be positive")
        if any(a <= b for a, b in zip(radii, radii[1:])):
            raise InvalidInputError("scales must be strictly decreasing")
        object.__setattr__(self, "radii", radii)


@dataclass
class MultiplicityCertificate:
    value: int
    witness_lines: list  # (Line, count) pairs, one per sampled direction
    mode: str
    directions_used: int
    offsets_policy: str

    def to_dict(self) -> dict:
        return {
            "value": self.value,
            "mode": self.mode,
            "directions_used": self.directions_used,
            "offsets_policy": self.offsets_policy,
            "witness_lines": [
                {
                    "dir": [float(line.direction[0]), float(line.direction[1])],
                    "offset": float(line.offset),
                    "count": int(count),
                }
                for line, count in self.witness_lines
            ],
        }


def _runs_of(mask: np.ndarray, closed: bool):
    """Maximal runs of True as (start, length); circular when closed."""
    n = mask.size
    if not mask.any():
        return []
    if mask.all():
        return [(0, n)]
    if closed:
        k = int(np.argmin(mask))  # an outside position to cut the circle at
        rolled = np.roll(mask, -k)
    else:
        k = 0
        rolled = mask
    padded = np.concatenate([[False], rolled, [False]])
    d = np.diff(padded.astype(np.int8))
    starts = np.flatnonzero(d == 1)
    ends = np.flatnonzero(d == -1)
    return [((int(s) + k) % n, int(e - s)) for s, e in zip(starts, ends)]


def _neighbor_values(d: np.ndarray, start: int, length: int, closed: bool):
    """Signed distances of the outside vertices flanking a run (None at open ends)."""
    n = d.size
    if closed:
        return d[(start - 1) % n], d[(start + length) % n]
    left = d[start - 1] if start > 0 else None
    right = d[start + length] if start + length < n else None
    return left, right


def _full_crossings(d: np.ndarray, half: float, closed: bool) -> int:
    """Edges running from one side of the strip to the other with no inside vertex."""
    if closed:
        a, b = d, np.roll(d, -1)
    else:
        a, b = d[:-1], d[1:]
    return int(np.count_nonzero(((a <= -half) & (b >= half)) | ((a >= half) & (b <= -half))))


def strip_multiplicity(curve: PolyCurve, line: Line, r: float) -> int:
    """Components of the preimage of the open r/2-strip reaching both boundaries.

    A component counts when its image closure attains signed distances
    ``<= -r/2 + eps`` and ``>= r/2 - eps`` from the line.
    """
    if not r > 0:
        raise InvalidInputError("strip scale r must be positive")
    d = line.signed_distance(curve.vertices)
    return _strip_count(d, r / 2.0, curve.eps_geom, curve.closed)


def _strip_count(d: np.ndarray, half: float, eps: float, closed: bool) -> int:
    inside = np.abs(d) < half
    count = _full_crossings(d, half, closed)
    for start, length in _runs_of(inside, closed):
        idx = (start + np.arange(length)) % d.size if closed else np.arange(start, start + length)
        vals = d[idx]
        left, right = (None, None) if length == d.size else _neighbor_values(d, start, length, closed)
        top = vals.max() >= half - eps
        bot = vals.min() <= -half + eps
        for nb in (left, right):
            if nb is None:
                continue
            top = top or nb >= half
            bot = bot or nb <= -half
        if top and bot:
            count += 1
    return count


def tilde_strip_multiplicity(curve: PolyCurve, line: Line, r: float) -> int:
    """Components of the open 2r-strip preimage whose image meets the closed r-strip."""
    if not r > 0:
        raise InvalidInputError("strip scale r must be positive")
    d = line.signed_distance(curve.vertices)
    eps = curve.eps_geom
    wide = 2.0 * r
    inside = np.abs(d) < wide
    count = _full_crossings(d, wide, curve.closed)  # such edges pass through the line itself
    for start, length in _runs_of(inside, curve.closed):
        idx = (start + np.arange(length)) % d.size if curve.closed else np.arange(start, start + length)
        vals = d[idx]
        if length == d.size:
            ext = vals
        else:
            left, right = _neighbor_values(d, start, length, curve.closed)
            pre = [] if left is None else [math.copysign(wide, left)]
            post = [] if right is None else [math.copysign(wide, right)]
            ext = np.concatenate([pre, vals, post])
        touches = np.min(np.abs(ext)) <= r + eps
        if not touches and ext.size > 1:
            sign_change = np.any((ext[:-1] > 0) != (ext[1:] > 0))
            touches = bool(sign_change)
        if curve.closed and length == d.size and not touches:
            touches = bool((vals[0] > 0) != (vals[-1] > 0))
        if touches:
            count += 1
    return count


def _direction_offsets(p: np.ndarray, r: float, eps: float) -> np.ndarray:
    """Midpoints of the offset intervals on which the per-direction count is constant."""
    brk = np.unique(np.concatenate([p - r / 2.0, p + r / 2.0]))
    if brk.size < 2:
        return brk
    mids = 0.5 * (brk[:-1] + brk[1:])
    wide = np.diff(brk) > 2.0 * eps
    return mids[wide]


def r_multiplicity(curve: PolyCurve, r: float, direction_budget: int = 64) -> MultiplicityCertificate:
    """Max strip multiplicity over sampled directions with exact offset sweeps.

    Exact for the polygon within each sampled direction; a lower bound for
    the sup over all lines.  Ties between directions resolve to the lowest
    direction index, making the certificate deterministic.
    """
    if not r > 0:
        raise InvalidInputError("strip scale r must be positive")
    if direction_budget < 1:
        raise InvalidInputError("direction_budget must be at least 1")
    eps = curve.eps_geom
    witnesses = []
    best_value = 0
    for j in range(direction_budget):
        ang = math.pi * j / direction_budget
        direction = np.array([math.cos(ang), math.sin(ang)])
        normal = np.array([-direction[1], direction[0]])
        p = curve.vertices @ normal
        best_c, best_n = 0.0, 0
        for c in _direction_offsets(p, r, eps):
            cnt = _strip_count(p - c, r / 2.0, eps, curve.closed)
            if cnt > best_n:
                best_n, best_c = cnt, float(c)
        witnesses.append((Line(direction, best_c), best_n))
        best_value = max(best_value, best_n)
    return MultiplicityCertificate(
        value=best_value,
        witness_lines=witnesses,
        mode="exact_per_direction",
        directions_used=direction_budget,
        offsets_policy="vertex-projection-interval-midpoints",
    )


def comparability_report(curve: PolyCurve, r: float, lines: list) -> list:
    """Per-line M and M-tilde with the sandwich flag ``M/2 <= M~ <= M``.

    The sandwich is only guaranteed at the sup-over-lines level; per-line
    violations are reported, not raised.
    """
    if not lines:
        raise InvalidInputError("need at least one probe line")
    report = []
    for line in lines:
        m = strip_multiplicity(curve, line, r)
        mt = tilde_strip_multiplicity(curve, line, r)
        report.append({"line": line, "M": m, "M_tilde": mt, "ok": 0.5 * m <= mt <= m})
    return report


# ---------------------------------------------------------------------------
# canonical reparametrization


def _greedy_chain(points: np.ndarray, idx: np.ndarray, threshold: float) -> list[int]:
    """Greedy maximal subchain of idx with consecutive image distance >= threshold.

    Always contains idx[0]; ties break to the lowest index by construction.
    """
    chosen = [0]
    last = points[idx[0]]
    for k in range(1, idx.size):
        if np.linalg.norm(points[idx[k]] - last) >= threshold:
            chosen.append(k)
            last = points[idx[k]]
    return chosen


def canonical_reparametrize(curve: PolyCurve, scales: ScaleList) -> dict:
    """Assign circle angles to curve vertices scale by scale.

    At the coarsest scale a greedy maximal cyclic chain with image steps of
    at least ``r_1 / 8`` receives evenly spaced angles; each gap is then
    refined recursively at the next scale.  Returns the angle assignment and
    the realized moduli ``delta_k = 2 pi / (n_1 ... n_k)`` (using the largest
    branch count per level), which satisfy: parameter distance below
    ``delta_k`` forces image distance below ``r_k`` on the assigned points.
    """
    if not curve.closed:
        raise InvalidInputError("reparametrization needs a closed curve")
    pts = curve.vertices
    n = curve.n
    if float(np.max(np.abs(pts - pts[0]))) == 0.0:
        raise InvalidInputError("curve is constant")

    r1 = scales.radii[0]
    ring = np.arange(n)
    chain = _greedy_chain(pts, ring, r1 / 8.0)
    n1 = len(chain)
    if n1 < 3:
        raise InvalidInputError(
            "coarsest scale too large for this curve (fewer than 3 chain points)"
        )
    anchors = [ring[k] for k in chain]
    assignment = {int(v): 2.0 * math.pi * j / n1 for j, v in enumerate(anchors)}
    branch_max = [n1]

    # refine each gap at the remaining scales
    gaps = []
    for j in range(n1):
        a = anchors[j]
        b = anchors[(j + 1) % n1]
        lo = 2.0 * math.pi * j / n1
        hi = 2.0 * math.pi * (j + 1) / n1
        span = (b - a) % n
        inner = (a + np.arange(span + 1)) % n  # includes both endpoints
        gaps.append((inner, lo, hi))

    for level, rk in enumerate(scales.radii[1:], start=2):
        new_gaps = []
        level_max = 1
        for inner, lo, hi in gaps:
            if inner.size <= 2:
                new_gaps.append((inner, lo, hi))
                continue
            chain = _greedy_chain(pts, inner[:-1], rk / 8.0)
            sub = [inner[k] for k in chain] + [inner[-1]]
            nk = len(sub) - 1
            level_max = max(level_max, nk)
            for j in range(nk):
                ang = lo + (hi - lo) * j / nk
                assignment.setdefault(int(sub[j]), ang)
                a_pos = int(np.flatnonzero(inner == sub[j])[0])
                b_pos = int(np.flatnonzero(inner == sub[j + 1])[0]) if j + 1 < len(sub) else inner.size - 1
                new_gaps.append(
                    (inner[a_pos : b_pos + 1], ang, lo + (hi - lo) * (j + 1) / nk)
                )
        branch_max.append(level_max)
        gaps = new_gaps

    moduli = []
    prod = 1.0
    for rk, nk in zip(scales.radii, branch_max):
        prod *= nk
        moduli.append((rk, 2.0 * math.pi / prod))
    params = sorted((ang, v) for v, ang in assignment.items())
    return {"parameters": params, "modulus": moduli}


def check_reparametrization_modulus(curve: PolyCurve, result: dict) -> dict:
    """A-posteriori check: parameter gap below delta_k implies image gap below r_k.

    Returns, per scale, the worst image distance among assigned pairs with
    circular parameter distance below ``delta_k``.
    """
    params = result["parameters"]
    angles = np.array([a for a, _ in params])
    verts = curve.vertices[np.array([v for _, v in params])]
    d_ang = np.abs(angles[:, None] - angles[None, :])
    d_ang = np.minimum(d_ang, 2.0 * math.pi - d_ang)
    d_img = np.linalg.norm(verts[:, None, :] - verts[None, :, :], axis=2)
    out = {}
    for rk, delta in result["modulus"]:
        mask = d_ang < delta
        out[rk] = float(d_img[mask].max()) if mask.any() else 0.0
    return out
