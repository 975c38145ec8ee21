"""Deterministic test curves: circles, stars, combs, Koch snowflake prefixes.

Every builder is a pure function of its parameters, so fixture files written
by the CLI are byte-identical across runs.
"""

from __future__ import annotations

import math

import numpy as np

from .curves import PolyCurve, resample
from .errors import InvalidInputError


def circle(n: int = 256, radius: float = 1.0, center=(0.0, 0.0)) -> PolyCurve:
    """Regular n-gon inscribed in the circle."""
    th = 2.0 * math.pi * np.arange(n) / n
    pts = np.stack([np.cos(th), np.sin(th)], axis=1) * radius + np.asarray(center, float)
    return PolyCurve(pts, closed=True)


def ellipse(a: float = 1.0, b: float = 0.5, n: int = 256) -> PolyCurve:
    th = 2.0 * math.pi * np.arange(n) / n
    return PolyCurve(np.stack([a * np.cos(th), b * np.sin(th)], axis=1), closed=True)


def sawtooth(teeth: int = 8, amp: float = 0.2, length: float = 4.0) -> PolyCurve:
    """Open triangle wave on [0, length] with alternating peaks at +/- amp."""
    if teeth < 1:
        raise InvalidInputError("need at least one tooth")
    p = length / teeth
    xs = [0.0] + [p / 4.0 + j * p / 2.0 for j in range(2 * teeth)] + [length]
    ys = [0.0] + [amp if j % 2 == 0 else -amp for j in range(2 * teeth)] + [0.0]
    return PolyCurve(np.column_stack([xs, ys]), closed=False)


def koch_prefix(iterations: int = 3, side: float = 1.0) -> PolyCurve:
    """Koch snowflake stopped after the given number of subdivision rounds.

    Perimeter is exactly 3 * (4/3)**iterations * side.
    """
    if iterations < 0:
        raise InvalidInputError("iterations must be nonnegative")
    pts = np.array([[0.0, 0.0], [side, 0.0], [side / 2.0, side * math.sqrt(3) / 2.0]])
    for _ in range(iterations):
        a = pts
        b = np.roll(pts, -1, axis=0)
        d = b - a
        outward = np.stack([d[:, 1], -d[:, 0]], axis=1)  # right normal of a CCW loop
        p1 = a + d / 3.0
        tip = a + d / 2.0 + outward * (math.sqrt(3) / 6.0)
        p2 = a + 2.0 * d / 3.0
        pts = np.stack([a, p1, tip, p2], axis=1).reshape(-1, 2)
    return PolyCurve(pts, closed=True)


def comb(k: int = 4, r: float = 0.5) -> PolyCurve:
    """Closed comb silhouette with k teeth of height 3r and width r.

    Any horizontal strip cutting across the teeth is crossed by all 2k
    vertical tooth sides.
    """
    if k < 1:
        raise InvalidInputError("need at least one tooth")
    h = 3.0 * r
    w = r
    pitch = 2.0 * r
    width = (k - 1) * pitch + w
    pts = [(0.0, -r), (width, -r)]
    for j in range(k - 1, -1, -1):
        x0 = j * pitch
        pts += [(x0 + w, 0.0), (x0 + w, h), (x0, h), (x0, 0.0)]
    # drop the two redundant base-level corners at the ends
    cleaned = [pts[0], pts[1]]
    for q in pts[2:]:
        if abs(q[0] - width) < 1e-15 and abs(q[1]) < 1e-15:
            continue
        if abs(q[0]) < 1e-15 and abs(q[1]) < 1e-15:
            continue
        cleaned.append(q)
    return PolyCurve(np.asarray(cleaned), closed=True)


def figure_eight(n: int = 256) -> PolyCurve:
    """Gerono lemniscate with one transverse double point away from vertices."""
    t = 2.0 * math.pi * (np.arange(n) + 0.5) / n
    return PolyCurve(np.stack([np.cos(t), np.sin(t) * np.cos(t)], axis=1), closed=True)


def star(k: int = 5, r_in: float = 0.75, r_out: float = 1.3, n: int = 256) -> PolyCurve:
    """Embedded 2k-pointed star polygon, respaced to roughly n vertices."""
    th = math.pi * np.arange(2 * k) / k
    rad = np.where(np.arange(2 * k) % 2 == 0, r_out, r_in)
    corners = PolyCurve(np.stack([rad * np.cos(th), rad * np.sin(th)], axis=1))
    if n <= 2 * k:
        return corners
    return resample(corners, corners.length() / n)


def segment(length: float = 1.0) -> PolyCurve:
    return PolyCurve(np.array([[0.0, 0.0], [length, 0.0]]), closed=False)


def wedge_circles(k: int = 2, n_per: int = 256) -> list[PolyCurve]:
    """k unit circles tangent in a row; their union is a connected compact set."""
    if k < 1:
        raise InvalidInputError("need at least one circle")
    return [circle(n_per, 1.0, (2.0 * j, 0.0)) for j in range(k)]


def dips(depths, y_top: float = 2.5, pitch: float = 1.0, width: float = 0.3) -> PolyCurve:
    """Closed embedded curve hanging k narrow fingers from a top rail.

    Finger j descends to y = depths[j].  Useful for building strip-crossing
    configurations with prescribed per-finger depths.
    """
    depths = list(depths)
    if not depths:
        raise InvalidInputError("need at least one dip")
    if any(d >= y_top for d in depths):
        raise InvalidInputError("dips must descend below the top rail")
    pts = [(-pitch, y_top)]
    for j, d in enumerate(depths):
        xc = j * pitch
        pts += [
            (xc - width / 2.0, y_top),
            (xc - width / 2.0, d),
            (xc + width / 2.0, d),
            (xc + width / 2.0, y_top),
        ]
    xr = (len(depths) - 1) * pitch + pitch
    cap = y_top + pitch
    pts += [(xr, y_top), (xr, cap), (-pitch, cap)]
    return PolyCurve(np.asarray(pts), closed=True)


def spiral(turns: float = 3.0, gap: float = 0.3, n: int = 600) -> PolyCurve:
    """Open Archimedean spiral polyline with the given radial gap between arms."""
    a = gap / (2.0 * math.pi)
    th = np.linspace(0.0, 2.0 * math.pi * turns, n)
    r = a * th + gap / 2.0
    return PolyCurve(np.stack([r * np.cos(th), r * np.sin(th)], axis=1), closed=False)


CURVE_FIXTURES = {
    "circle": circle,
    "ellipse": ellipse,
    "sawtooth": sawtooth,
    "koch_prefix": koch_prefix,
    "comb": comb,
    "figure_eight": figure_eight,
    "star": star,
    "segment": segment,
}

# fixtures whose natural artifact is a raster of a compact set
RASTER_FIXTURES = {"segment", "wedge_circles"}
