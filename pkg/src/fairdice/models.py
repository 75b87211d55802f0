"""Closed-form landing-probability models for coins, prisms and boxes.

Two models are provided:

* the dynamic model for a tossed thick coin, ``P_edge(t) = 1 - (2/pi) acos(t / sqrt(1 + t^2))``
  where ``t`` is thickness over radius;
* the geometric model, where each face receives the fraction of the sphere
  covered by its central projection from the solid's centroid.

All solids are placed with their centroid at the origin and their axis along z.
"""

from __future__ import annotations

import math
from dataclasses import dataclass
from typing import Union

import numpy as np
from scipy.optimize import bisect

from .errors import DegenerateGeometryError, DomainError, NumericError, UnsupportedInputError

FOUR_PI = 4.0 * math.pi


@dataclass(frozen=True)
class CoinSpec:
    """Right circular cylinder; ``thickness`` is measured in the same unit as ``radius``."""

    thickness: float
    radius: float = 1.0

    def __post_init__(self):
        if not (math.isfinite(self.radius) and self.radius > 0):
            raise DomainError(f"coin radius must be positive, got {self.radius}")
        if not (math.isfinite(self.thickness) and self.thickness >= 0):
            raise DomainError(f"coin thickness must be non-negative, got {self.thickness}")

    @property
    def ratio(self) -> float:
        return self.thickness / self.radius


@dataclass(frozen=True)
class PrismSpec:
    """Right regular prism inscribed in a circle of ``circumradius``."""

    sides: int
    height: float
    circumradius: float = 1.0

    def __post_init__(self):
        if int(self.sides) != self.sides or self.sides < 3:
            raise DomainError(f"prism needs at least 3 sides, got {self.sides}")
        if not (math.isfinite(self.height) and self.height >= 0):
            raise DomainError(f"prism height must be non-negative, got {self.height}")
        if not (math.isfinite(self.circumradius) and self.circumradius > 0):
            raise DomainError(f"prism circumradius must be positive, got {self.circumradius}")

    @property
    def inradius(self) -> float:
        return self.circumradius * math.cos(math.pi / self.sides)


@dataclass(frozen=True)
class BoxSpec:
    a: float
    b: float
    c: float

    def __post_init__(self):
        for name in ("a", "b", "c"):
            v = getattr(self, name)
            if not (math.isfinite(v) and v > 0):
                raise DomainError(f"box edge {name} must be positive, got {v}")


@dataclass(frozen=True)
class BipyramidSpec:
    """Two regular pyramids glued base to base; ``apex_height`` is measured from the base plane."""

    sides: int
    apex_height: float
    circumradius: float = 1.0

    def __post_init__(self):
        if int(self.sides) != self.sides or self.sides < 3:
            raise DomainError(f"bipyramid needs at least 3 sides, got {self.sides}")
        if not (self.apex_height > 0 and self.circumradius > 0):
            raise DomainError("bipyramid dimensions must be positive")


@dataclass(frozen=True)
class SharpenedPrismSpec:
    """Prism whose end caps are replaced by pyramids of height ``tip_height``."""

    sides: int
    height: float
    tip_height: float
    circumradius: float = 1.0

    def __post_init__(self):
        if int(self.sides) != self.sides or self.sides < 3:
            raise DomainError(f"prism needs at least 3 sides, got {self.sides}")
        if not (self.height > 0 and self.tip_height > 0 and self.circumradius > 0):
            raise DomainError("sharpened prism dimensions must be positive")


Solid = Union[CoinSpec, PrismSpec, BoxSpec, BipyramidSpec, SharpenedPrismSpec]


@dataclass(frozen=True)
class FaceProbability:
    label: str
    kind: str
    probability: float


@dataclass(frozen=True)
class FaceDistribution:
    """Per-face landing probabilities under one model.

    ``kind`` is ``"end"`` for heads/tails faces of coins and prisms, ``"side"``
    for lateral faces (the coin edge is a single side face), ``"tip"`` for the
    redundant pyramid faces of a sharpened prism and ``"face"`` otherwise.
    """

    model: str
    entries: tuple

    def __post_init__(self):
        total = math.fsum(e.probability for e in self.entries)
        if abs(total - 1.0) > 1e-12:
            raise NumericError(f"face probabilities sum to {total!r}, not 1")
        for e in self.entries:
            if not 0.0 <= e.probability <= 1.0:
                raise NumericError(f"probability of face {e.label} is {e.probability!r}")

    @property
    def labels(self):
        return [e.label for e in self.entries]

    def probability(self, label: str) -> float:
        for e in self.entries:
            if e.label == label:
                return e.probability
        raise KeyError(label)

    def kind_probability(self, kind: str) -> float:
        return math.fsum(e.probability for e in self.entries if e.kind == kind)

    @property
    def end_probability(self) -> float:
        return self.kind_probability("end")

    @property
    def side_probability(self) -> float:
        return self.kind_probability("side")

    def as_dict(self) -> dict:
        return {e.label: e.probability for e in self.entries}


def _check_thickness(t):
    if not math.isfinite(t) or t < 0:
        raise DomainError(f"thickness ratio must be finite and non-negative, got {t}")


def dynamic_edge_probability(t: float) -> float:
    """Probability that a coin of thickness ratio ``t`` lands on its edge (dynamic model)."""
    _check_thickness(t)
    # acos(t / sqrt(1 + t^2)) == atan2(1, t), without the cancellation near acos(1)
    return 1.0 - (2.0 / math.pi) * math.atan2(1.0, t)


def fair_thickness_dynamic(n: int) -> float:
    """Thickness ratio at which the dynamic model gives the edge ``(n-2)/n`` and each end ``1/n``."""
    if int(n) != n or n < 3:
        raise DomainError(f"a fair die needs at least 3 faces, got {n}")
    return abs(math.cos(math.pi / n) / math.sin(math.pi / n))


def dynamic_face_distribution(coin: CoinSpec) -> FaceDistribution:
    p_edge = dynamic_edge_probability(coin.ratio)
    p_end = 0.5 * (1.0 - p_edge)
    return FaceDistribution("dynamic", (
        FaceProbability("top", "end", p_end),
        FaceProbability("bottom", "end", p_end),
        FaceProbability("edge", "side", p_edge),
    ))


# ---------------------------------------------------------------------------
# solid angles

def _newell_normal(v):
    nxt = np.roll(v, -1, axis=0)
    return np.array([
        np.sum((v[:, 1] - nxt[:, 1]) * (v[:, 2] + nxt[:, 2])),
        np.sum((v[:, 2] - nxt[:, 2]) * (v[:, 0] + nxt[:, 0])),
        np.sum((v[:, 0] - nxt[:, 0]) * (v[:, 1] + nxt[:, 1])),
    ])


def _segments_cross(p1, p2, q1, q2) -> bool:
    def orient(a, b, c):
        return (b[0] - a[0]) * (c[1] - a[1]) - (b[1] - a[1]) * (c[0] - a[0])

    d1, d2 = orient(q1, q2, p1), orient(q1, q2, p2)
    d3, d4 = orient(p1, p2, q1), orient(p1, p2, q2)
    if d1 * d2 < 0 and d3 * d4 < 0:
        return True

    def on_seg(a, b, c):
        return (min(a[0], b[0]) <= c[0] <= max(a[0], b[0])
                and min(a[1], b[1]) <= c[1] <= max(a[1], b[1]))

    scale = max(np.abs(np.concatenate([p1, p2, q1, q2])).max(), 1.0)
    eps = 1e-12 * scale * scale
    return ((abs(d1) <= eps and on_seg(q1, q2, p1)) or (abs(d2) <= eps and on_seg(q1, q2, p2))
            or (abs(d3) <= eps and on_seg(p1, p2, q1)) or (abs(d4) <= eps and on_seg(p1, p2, q2)))


def _check_simple(v2):
    k = len(v2)
    for i in range(k):
        for j in range(i + 1, k):
            if j == i + 1 or (i == 0 and j == k - 1):
                continue
            if _segments_cross(v2[i], v2[(i + 1) % k], v2[j], v2[(j + 1) % k]):
                raise UnsupportedInputError(f"polygon edges {i} and {j} intersect")


def triangle_solid_angle(a, b, c):
    """Signed solid angle of triangles ``(a, b, c)`` seen from the origin.

    Van Oosterom and Strackee's formula; accepts ``(3,)`` or ``(m, 3)`` arrays.
    Positive when ``a, b, c`` wind counterclockwise seen from the origin's far side.
    """
    a, b, c = (np.asarray(x, dtype=float) for x in (a, b, c))
    la, lb, lc = (np.linalg.norm(x, axis=-1) for x in (a, b, c))
    num = np.einsum("...i,...i->...", a, np.cross(b, c))
    den = (la * lb * lc + np.einsum("...i,...i->...", a, b) * lc
           + np.einsum("...i,...i->...", a, c) * lb + np.einsum("...i,...i->...", b, c) * la)
    return 2.0 * np.arctan2(num, den)


def solid_angle_of_polygon(vertices, apex=(0.0, 0.0, 0.0)) -> float:
    """Solid angle subtended by a planar simple polygon at ``apex``.

    The polygon is fan-triangulated from its first vertex and the signed
    triangle solid angles are summed, so non-convex simple polygons work too.
    The result is orientation independent and lies in ``(0, 2*pi)``.
    """
    v = np.asarray(vertices, dtype=float) - np.asarray(apex, dtype=float)
    if v.ndim != 2 or v.shape[1] != 3 or len(v) < 3:
        raise DomainError("polygon needs at least 3 vertices in 3D")
    rel = v - v[0]
    scale = np.abs(rel).max()
    if scale == 0:
        raise DegenerateGeometryError("polygon vertices coincide")
    normal = np.linalg.svd(rel - rel.mean(axis=0))[2][-1]
    if np.abs(rel @ normal).max() > 1e-9 * scale:
        raise UnsupportedInputError("polygon vertices are not coplanar")
    if abs(v[0] @ normal) <= 1e-12 * max(scale, np.abs(v[0]).max()):
        raise DegenerateGeometryError("apex lies on the polygon plane")
    u = rel[np.argmax(np.linalg.norm(rel, axis=1))]
    u = u / np.linalg.norm(u)
    w = np.cross(normal, u)
    _check_simple(np.column_stack([rel @ u, rel @ w]))
    if np.linalg.norm(_newell_normal(v)) <= 1e-14 * scale * scale:
        raise DegenerateGeometryError("polygon has zero area")

    omega = triangle_solid_angle(np.broadcast_to(v[0], v[1:-1].shape), v[1:-1], v[2:])
    return abs(math.fsum(omega))


# ---------------------------------------------------------------------------
# polyhedral faces, centroid at the origin, outward counterclockwise winding

def _ring(k, radius, z, phase=0.0):
    ang = phase + 2.0 * math.pi * np.arange(k) / k
    return np.column_stack([radius * np.cos(ang), radius * np.sin(ang), np.full(k, float(z))])


def polyhedron_faces(solid: Solid):
    """Return ``[(label, kind, vertices), ...]`` for a polyhedral solid.

    Vertex loops wind counterclockwise seen from outside.
    """
    if isinstance(solid, BoxSpec):
        half = np.array([solid.a, solid.b, solid.c]) / 2.0
        faces = []
        for axis, name in enumerate("xyz"):
            u, w = (axis + 1) % 3, (axis + 2) % 3
            for sign in (1, -1):
                corners = []
                for su, sw in ((1, 1), (-1, 1), (-1, -1), (1, -1)):
                    p = np.zeros(3)
                    p[axis] = sign * half[axis]
                    p[u] = su * half[u]
                    p[w] = sw * half[w] * sign
                    corners.append(p)
                faces.append((("+" if sign > 0 else "-") + name, "face", np.array(corners)))
        return faces
    if isinstance(solid, PrismSpec):
        k, r, h = solid.sides, solid.circumradius, solid.height
        top, bot = _ring(k, r, h / 2), _ring(k, r, -h / 2)
        faces = [("top", "end", top), ("bottom", "end", bot[::-1])]
        for i in range(k):
            j = (i + 1) % k
            faces.append((f"side{i}", "side", np.array([bot[i], bot[j], top[j], top[i]])))
        return faces
    if isinstance(solid, BipyramidSpec):
        k, r, a = solid.sides, solid.circumradius, solid.apex_height
        ring = _ring(k, r, 0.0)
        up, down = np.array([0.0, 0.0, a]), np.array([0.0, 0.0, -a])
        faces = []
        for i in range(k):
            j = (i + 1) % k
            faces.append((f"upper{i}", "face", np.array([ring[i], ring[j], up])))
            faces.append((f"lower{i}", "face", np.array([ring[j], ring[i], down])))
        return faces
    if isinstance(solid, SharpenedPrismSpec):
        k, r, h = solid.sides, solid.circumradius, solid.height
        top, bot = _ring(k, r, h / 2), _ring(k, r, -h / 2)
        up = np.array([0.0, 0.0, h / 2 + solid.tip_height])
        down = -up
        faces = []
        for i in range(k):
            j = (i + 1) % k
            faces.append((f"side{i}", "side", np.array([bot[i], bot[j], top[j], top[i]])))
        for i in range(k):
            j = (i + 1) % k
            faces.append((f"tip_top{i}", "tip", np.array([top[i], top[j], up])))
            faces.append((f"tip_bottom{i}", "tip", np.array([bot[j], bot[i], down])))
        return faces
    raise DomainError(f"not a polyhedral solid: {solid!r}")


def polyhedron_centroid(faces) -> np.ndarray:
    """Volume centroid of a closed polyhedron given by outward-wound faces."""
    vol = 0.0
    moment = np.zeros(3)
    for _, _, v in faces:
        a = v[0]
        for b, c in zip(v[1:-1], v[2:]):
            dv = np.dot(a, np.cross(b, c)) / 6.0
            vol += dv
            moment += dv * (a + b + c) / 4.0
    if vol <= 0:
        raise DegenerateGeometryError("polyhedron has no volume")
    return moment / vol


def face_solid_angles(solid: Solid, about=None):
    """Solid angle of every face of a polyhedral solid, seen from its centroid."""
    faces = polyhedron_faces(solid)
    center = polyhedron_centroid(faces) if about is None else np.asarray(about, dtype=float)
    return [(label, kind, solid_angle_of_polygon(v, center)) for label, kind, v in faces]


def _cylinder_distribution(radius, thickness):
    p_edge = thickness / math.sqrt(4.0 * radius * radius + thickness * thickness)
    p_end = 0.5 * (1.0 - p_edge)
    return FaceDistribution("geometric", (
        FaceProbability("top", "end", p_end),
        FaceProbability("bottom", "end", p_end),
        FaceProbability("edge", "side", p_edge),
    ))


def geometric_face_distribution(solid: Solid) -> FaceDistribution:
    """Face probabilities under the geometric (circumscribed sphere) model."""
    if isinstance(solid, CoinSpec):
        return _cylinder_distribution(solid.radius, solid.thickness)
    if isinstance(solid, PrismSpec) and solid.height == 0:
        # flat polygon: each side of the plane sees one end face
        entries = [FaceProbability("top", "end", 0.5), FaceProbability("bottom", "end", 0.5)]
        entries += [FaceProbability(f"side{i}", "side", 0.0) for i in range(solid.sides)]
        return FaceDistribution("geometric", tuple(entries))
    angles = face_solid_angles(solid)
    total = math.fsum(w for _, _, w in angles)
    return FaceDistribution("geometric", tuple(
        FaceProbability(label, kind, w / total) for label, kind, w in angles))


def fair_thickness_geometric(n: int, family: str = "cylinder") -> float:
    """Thickness (radius or circumradius 1) at which the sides take ``(n-2)/n`` in the geometric model.

    ``family`` is ``"cylinder"`` or ``"prism"``; a prism die of ``n`` faces has
    ``n - 2`` lateral faces.
    """
    if int(n) != n or n < 3:
        raise DomainError(f"a fair die needs at least 3 faces, got {n}")
    target = (n - 2) / n
    if family == "cylinder":
        return (n - 2) / math.sqrt(n - 1)
    if family != "prism":
        raise DomainError(f"unknown solid family {family!r}")
    sides = n - 2
    if sides < 3:
        raise DomainError(f"a prism die needs n >= 5 faces, got {n}")

    def excess(h):
        return geometric_face_distribution(PrismSpec(sides, h)).side_probability - target

    lo, hi = 0.0, 64.0
    if excess(lo) >= 0 or excess(hi) <= 0:
        raise NumericError(f"no fair height in [{lo}, {hi}] for n={n}")
    return bisect(excess, lo, hi, xtol=1e-12, rtol=4 * np.finfo(float).eps, maxiter=200)

