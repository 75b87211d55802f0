"""Sphere-model die design.

Points are spread over the unit sphere as a centroidal Voronoi tessellation
(Lloyd iteration), then a flat disc of equal area is planed around each point.
Voronoi regions come from the convex hull of the generators: hull facets are
the spherical Delaunay triangles and their outward normals are the Voronoi
vertices.
"""

from __future__ import annotations

import json
import math
from dataclasses import dataclass, field

import numpy as np
from scipy.spatial import ConvexHull
from scipy.spatial import QhullError

from .errors import (CentroidDisplacementError, DegenerateGeometryError, DomainError,
                     OverlapError)

MERGE_TOL = 1e-10


@dataclass
class SphericalLayout:
    points: np.ndarray
    regions: list
    areas: np.ndarray
    centroids: np.ndarray
    converged: bool = True
    iterations: int = 0
    energy_history: list = field(default_factory=list)
    moments: np.ndarray | None = None

    @property
    def n(self) -> int:
        return len(self.points)

    @property
    def area_spread(self) -> float:
        """Largest relative deviation of a region area from ``4*pi/n``."""
        target = 4.0 * math.pi / self.n
        return float(np.max(np.abs(self.areas - target)) / target)

    @property
    def max_centroid_offset(self) -> float:
        return float(np.max(np.linalg.norm(self.points - self.centroids, axis=1)))

    @property
    def energy(self) -> float:
        return cvt_energy(self.points, self.regions, self.areas, self.moments)


@dataclass
class CarvedDieSpec:
    layout: SphericalLayout
    face_fraction: float
    cap_angle: float
    face_areas: np.ndarray
    cap_volume: float
    volume: float
    centroid: np.ndarray
    centroid_displacement: float


def _unit(v):
    return v / np.linalg.norm(v, axis=-1, keepdims=True)


def _tangent_basis(p):
    a = np.array([1.0, 0.0, 0.0]) if abs(p[0]) < 0.9 else np.array([0.0, 1.0, 0.0])
    u = _unit(a - (a @ p) * p)
    return u, np.cross(p, u)


def _validate_points(points):
    p = np.asarray(points, dtype=float)
    if p.ndim != 2 or p.shape[1] != 3:
        raise DomainError("points must be an (n, 3) array")
    if len(p) < 2:
        raise DomainError(f"need at least 2 points, got {len(p)}")
    norms = np.linalg.norm(p, axis=1)
    if np.any(norms == 0):
        raise DegenerateGeometryError("zero vector given as a sphere point")
    p = p / norms[:, None]
    d = np.linalg.norm(p[:, None, :] - p[None, :, :], axis=2)
    d[np.diag_indices(len(p))] = np.inf
    if d.min() < 1e-12:
        i, j = np.unravel_index(np.argmin(d), d.shape)
        raise DegenerateGeometryError(f"points {min(i, j)} and {max(i, j)} coincide")
    return p


def _coplanar_regions(p):
    """Regions for generators lying on one circle: lunes meeting at the circle's poles."""
    centered = p - p.mean(axis=0)
    if len(p) == 2:
        d = p[0] - p[1]
        axis = np.cross(d, np.array([0.0, 0.0, 1.0]))
        if np.linalg.norm(axis) < 1e-8:
            axis = np.cross(d, np.array([1.0, 0.0, 0.0]))
    else:
        axis = np.linalg.svd(centered)[2][-1]
    axis = _unit(axis)
    u, w = _tangent_basis(axis)
    az = np.arctan2(p @ w, p @ u)
    order = np.argsort(az)
    regions = [None] * len(p)
    k = len(p)
    for rank, i in enumerate(order):
        lo = az[order[rank - 1]] if rank > 0 else az[order[-1]] - 2 * math.pi
        hi = az[order[(rank + 1) % k]] + (2 * math.pi if rank == k - 1 else 0.0)
        a_lo, a_hi = 0.5 * (lo + az[i]), 0.5 * (az[i] + hi)
        e_lo = math.cos(a_lo) * u + math.sin(a_lo) * w
        e_hi = math.cos(a_hi) * u + math.sin(a_hi) * w
        # counterclockwise seen from outside: lower meridian, south pole, upper meridian, north pole
        regions[i] = np.array([e_lo, -axis, e_hi, axis])
    return regions


def voronoi_regions(points):
    """Voronoi region (counterclockwise vertex loop) of each generator."""
    p = _validate_points(points)
    try:
        hull = ConvexHull(p)
    except QhullError:
        return _coplanar_regions(p)
    if len(hull.vertices) < len(p):
        raise DegenerateGeometryError("some generators are not hull vertices")
    # facet outward normal points at the empty cap's center: the circumcenter on the sphere
    vverts = _unit(hull.equations[:, :3])
    owner = hull.simplices.ravel()
    facet = np.repeat(np.arange(len(hull.simplices)), 3)

    # azimuth of each incident Voronoi vertex in a tangent frame at its generator
    pick = np.where(np.abs(p[:, 0]) < 0.9, 0, 1)
    ref = np.zeros_like(p)
    ref[np.arange(len(p)), pick] = 1.0
    u = _unit(ref - np.einsum("ij,ij->i", ref, p)[:, None] * p)
    w = np.cross(p, u)
    vv = vverts[facet]
    az = np.arctan2(np.einsum("ij,ij->i", vv, w[owner]), np.einsum("ij,ij->i", vv, u[owner]))
    order = np.lexsort((az, owner))
    owner, vv = owner[order], vv[order]

    bounds = np.searchsorted(owner, np.arange(len(p) + 1))
    regions = []
    for i in range(len(p)):
        loop = vv[bounds[i]:bounds[i + 1]]
        # symmetric inputs give coincident circumcenters from coplanar facets
        gap = np.linalg.norm(loop - np.roll(loop, 1, axis=0), axis=1)
        keep = gap > MERGE_TOL
        if not keep.any():
            keep[0] = True
        regions.append(loop[keep])
    return regions


def _cross(a, b):
    # np.cross has heavy per-call overhead on small arrays
    return np.column_stack([a[:, 1] * b[:, 2] - a[:, 2] * b[:, 1],
                            a[:, 2] * b[:, 0] - a[:, 0] * b[:, 2],
                            a[:, 0] * b[:, 1] - a[:, 1] * b[:, 0]])


def _dot(a, b):
    return np.einsum("ij,ij->i", a, b)


def region_stats(regions):
    """Areas and position-vector moments of many spherical polygons at once.

    The area is the spherical excess. The moment (surface integral of the
    position vector) gets, from every arc ``a -> b``, half the arc length times
    the unit normal of its great circle.
    """
    sizes = np.array([len(r) for r in regions])
    if np.any(sizes < 3):
        raise DomainError("a spherical polygon needs at least 3 vertices")
    v = _unit(np.concatenate([np.asarray(r, dtype=float) for r in regions]))
    starts = np.concatenate([[0], np.cumsum(sizes)[:-1]])
    local = np.arange(len(v)) - np.repeat(starts, sizes)
    base = np.repeat(starts, sizes)
    k = np.repeat(sizes, sizes)
    nxt = v[base + (local + 1) % k]
    prev = v[base + (local - 1) % k]

    t_prev = prev - _dot(prev, v)[:, None] * v
    t_next = nxt - _dot(nxt, v)[:, None] * v
    angles = np.mod(np.arctan2(_dot(v, _cross(t_next, t_prev)), _dot(t_next, t_prev)), 2.0 * math.pi)
    areas = np.add.reduceat(angles, starts) - (sizes - 2) * math.pi

    cr = _cross(v, nxt)
    s = np.linalg.norm(cr, axis=1)
    theta = np.arctan2(s, _dot(v, nxt))
    scale = np.divide(theta, s, out=np.zeros_like(s), where=s > 0)
    moments = 0.5 * np.add.reduceat(scale[:, None] * cr, starts, axis=0)
    return areas, moments


def region_area(region) -> float:
    """Area of a spherical polygon by spherical excess.

    Vertices must wind counterclockwise seen from outside the sphere; the
    region is the part on the left of each arc.
    """
    v = np.asarray(region, dtype=float)
    if v.ndim != 2 or len(v) < 3:
        raise DomainError("a spherical polygon needs at least 3 vertices")
    return float(region_stats([v])[0][0])


def region_moment(region) -> np.ndarray:
    """Surface integral of the position vector over a spherical polygon."""
    return region_stats([region])[1][0]


def _centroid_from_moment(m):
    norm = np.linalg.norm(m, axis=-1, keepdims=True)
    if np.any(norm < 1e-14):
        raise DegenerateGeometryError("region mean vector vanishes; centroid undefined")
    return m / norm


def region_centroid(region) -> np.ndarray:
    """Area centroid of a spherical polygon projected back onto the sphere."""
    if len(region) == 0:
        raise DomainError("empty region")
    return _centroid_from_moment(region_moment(region))


def cvt_energy(points, regions, areas=None, moments=None) -> float:
    """Sum over regions of the integrated squared chord distance to the generator.

    ``|x - p|^2 = 2 - 2 x.p`` on the unit sphere, so each region contributes
    ``2 * area - 2 * p . moment``.
    """
    if areas is None or moments is None:
        areas, moments = region_stats(regions)
    return float(math.fsum(2.0 * areas - 2.0 * _dot(np.asarray(points), moments)))


def spherical_voronoi(points) -> SphericalLayout:
    p = _validate_points(points)
    regions = voronoi_regions(p)
    areas, moments = region_stats(regions)
    return SphericalLayout(p, regions, areas, _centroid_from_moment(moments), moments=moments)


def fibonacci_points(n: int, seed=None, jitter: float = 0.0) -> np.ndarray:
    """Golden-spiral points, randomly rotated and jittered when ``seed`` is given."""
    i = np.arange(n) + 0.5
    z = 1.0 - 2.0 * i / n
    phi = math.pi * (3.0 - math.sqrt(5.0)) * i
    r = np.sqrt(1.0 - z * z)
    pts = np.column_stack([r * np.cos(phi), r * np.sin(phi), z])
    if seed is not None:
        rng = np.random.default_rng(seed)
        q, rr = np.linalg.qr(rng.standard_normal((3, 3)))
        q *= np.sign(np.diag(rr))
        pts = pts @ q.T
        if jitter > 0:
            pts = pts + jitter * rng.standard_normal(pts.shape)
    return _unit(pts)


def lloyd_step(points):
    layout = spherical_voronoi(points)
    return layout, layout.centroids


def cvt_optimize(n: int, seed: int = 0, tol: float = 1e-8, max_iter: int = 5000,
                 initial=None, jitter: float = 0.05) -> SphericalLayout:
    """Spherical centroidal Voronoi tessellation by Lloyd iteration.

    Starts from ``initial`` when given, else from a seeded jittered Fibonacci
    lattice. Stops once no generator moves more than ``tol``. Hitting
    ``max_iter`` is not an error: the returned layout has ``converged=False``.
    """
    if int(n) != n or n < 2:
        raise DomainError(f"need at least 2 points, got {n}")
    if not tol > 0:
        raise DomainError(f"tolerance must be positive, got {tol}")
    pts = (fibonacci_points(n, seed, jitter) if initial is None
           else _validate_points(initial))
    if len(pts) != n:
        raise DomainError(f"initial layout has {len(pts)} points, expected {n}")

    energies = []
    converged = False
    it = 0
    layout = spherical_voronoi(pts)
    while it < max_iter:
        energies.append(layout.energy)
        new = layout.centroids
        move = float(np.max(np.linalg.norm(new - layout.points, axis=1)))
        if move < tol:
            converged = True
            break
        layout = spherical_voronoi(new)
        it += 1
    if not converged:
        energies.append(layout.energy)
        converged = layout.max_centroid_offset < tol
    layout.converged = converged
    layout.iterations = it
    layout.energy_history = energies
    return layout


def cap_volume(theta: float) -> float:
    """Volume cut from the unit ball by a plane at angular radius ``theta``."""
    c = math.cos(theta)
    return math.pi / 3.0 * (2.0 - 3.0 * c + c ** 3)


def cap_centroid_distance(theta: float) -> float:
    """Distance from the ball center to the centroid of that cap."""
    h = 1.0 - math.cos(theta)
    return 3.0 * (2.0 - h) ** 2 / (4.0 * (3.0 - h))


def carve(layout: SphericalLayout, face_fraction: float,
          max_displacement: float | None = 0.01) -> CarvedDieSpec:
    """Plane an equal flat disc around every generator of ``layout``.

    Each disc has area ``face_fraction * 4*pi/n``. Designs whose center of
    gravity moves more than ``max_displacement`` (unit radius) are rejected;
    pass ``None`` to only report the displacement.
    """
    if not 0.0 < face_fraction < 1.0:
        raise DomainError(f"face fraction must lie in (0, 1), got {face_fraction}")
    p = layout.points
    n = len(p)
    sin2 = 4.0 * face_fraction / n
    if sin2 >= 1.0:
        raise OverlapError(f"face fraction {face_fraction} needs caps beyond a hemisphere")
    theta = math.asin(math.sqrt(sin2))

    cosang = np.clip(p @ p.T, -1.0, 1.0)
    np.fill_diagonal(cosang, -1.0)
    i, j = np.unravel_index(np.argmax(cosang), cosang.shape)
    closest = math.acos(cosang[i, j])
    if closest <= 2.0 * theta:
        pair = (int(min(i, j)), int(max(i, j)))
        raise OverlapError(
            f"caps {pair[0]} and {pair[1]} overlap: separation {closest:.6g} rad "
            f"<= twice the cap angle {theta:.6g} rad", pair)

    vc = cap_volume(theta)
    volume = 4.0 * math.pi / 3.0 - n * vc
    centroid = -vc * cap_centroid_distance(theta) * p.sum(axis=0) / volume
    disp = float(np.linalg.norm(centroid))
    if max_displacement is not None and disp > max_displacement:
        raise CentroidDisplacementError(
            f"carving moves the center of gravity by {disp:.3g} > {max_displacement}")
    return CarvedDieSpec(
        layout=layout, face_fraction=face_fraction, cap_angle=theta,
        face_areas=np.full(n, math.pi * sin2), cap_volume=vc, volume=volume,
        centroid=centroid, centroid_displacement=disp)


def layout_to_json(layout: SphericalLayout, carved: CarvedDieSpec | None = None) -> str:
    doc = {
        "points": layout.points.tolist(),
        "areas": layout.areas.tolist(),
        "area_spread": layout.area_spread,
        "cap_angle": None if carved is None else carved.cap_angle,
        "centroid_displacement": None if carved is None else carved.centroid_displacement,
        "converged": bool(layout.converged),
        "iterations": int(layout.iterations),
    }
    return json.dumps(doc, indent=2)


def layout_from_json(text: str) -> SphericalLayout:
    doc = json.loads(text)
    layout = spherical_voronoi(np.array(doc["points"], dtype=float))
    layout.converged = bool(doc.get("converged", True))
    layout.iterations = int(doc.get("iterations", 0))
    return layout
