"""Triangle meshes of die solids and their STL/OBJ export.

Generators take lengths in millimetres. Every mesh is closed, consistently
oriented with outward normals and has Euler characteristic 2.
"""

from __future__ import annotations

import math
import struct
from collections import Counter
from dataclasses import dataclass

import numpy as np

from .errors import DegenerateGeometryError, DomainError, NotWatertightError, OverlapError, ResolutionError
from .sphere_design import CarvedDieSpec

MIN_CYLINDER_SEGMENTS = 16
MIN_TRIANGLE_AREA = 1e-12
STL_HEADER = b"fairdice binary STL"


@dataclass
class TriangleMesh:
    vertices: np.ndarray
    triangles: np.ndarray

    def __post_init__(self):
        self.vertices = np.asarray(self.vertices, dtype=float).reshape(-1, 3)
        self.triangles = np.asarray(self.triangles, dtype=np.int64).reshape(-1, 3)

    @property
    def n_vertices(self) -> int:
        return len(self.vertices)

    @property
    def n_triangles(self) -> int:
        return len(self.triangles)

    def edges(self) -> np.ndarray:
        t = self.triangles
        e = np.concatenate([t[:, [0, 1]], t[:, [1, 2]], t[:, [2, 0]]])
        return np.unique(np.sort(e, axis=1), axis=0)

    @property
    def n_edges(self) -> int:
        return len(self.edges())

    def euler_characteristic(self) -> int:
        return self.n_vertices - self.n_edges + self.n_triangles

    def bad_edges(self):
        """Edges breaking closed, consistently oriented 2-manifold structure."""
        t = self.triangles
        directed = Counter(map(tuple, np.concatenate([t[:, [0, 1]], t[:, [1, 2]], t[:, [2, 0]]]).tolist()))
        bad = set()
        for (a, b), count in directed.items():
            if count != 1 or directed.get((b, a), 0) != 1:
                bad.add((min(a, b), max(a, b)))
        return sorted(bad)

    def is_watertight(self) -> bool:
        return len(self.triangles) > 0 and not self.bad_edges()

    def _corners(self):
        v = self.vertices
        t = self.triangles
        return v[t[:, 0]], v[t[:, 1]], v[t[:, 2]]

    def face_normals(self) -> np.ndarray:
        a, b, c = self._corners()
        n = np.cross(b - a, c - a)
        length = np.linalg.norm(n, axis=1, keepdims=True)
        return np.divide(n, length, out=np.zeros_like(n), where=length > 0)

    def triangle_areas(self) -> np.ndarray:
        a, b, c = self._corners()
        return 0.5 * np.linalg.norm(np.cross(b - a, c - a), axis=1)

    def signed_volume(self) -> float:
        a, b, c = self._corners()
        return float(np.einsum("ij,ij->i", a, np.cross(b, c)).sum() / 6.0)

    def centroid(self) -> np.ndarray:
        a, b, c = self._corners()
        dv = np.einsum("ij,ij->i", a, np.cross(b, c)) / 6.0
        return (dv[:, None] * (a + b + c) / 4.0).sum(axis=0) / dv.sum()

    def validate(self):
        bad = self.bad_edges()
        if bad or not len(self.triangles):
            raise NotWatertightError(f"mesh is not watertight: {len(bad)} bad edges", bad)
        chi = self.euler_characteristic()
        if chi != 2:
            raise NotWatertightError(f"Euler characteristic is {chi}, expected 2")
        if self.signed_volume() <= 0:
            raise DegenerateGeometryError("mesh is inside out or has no volume")
        small = np.flatnonzero(self.triangle_areas() <= MIN_TRIANGLE_AREA)
        if len(small):
            raise DegenerateGeometryError(f"degenerate triangles: {small[:10].tolist()}")


def _ring(k, radius, z):
    ang = 2.0 * math.pi * np.arange(k) / k
    return np.column_stack([radius * np.cos(ang), radius * np.sin(ang), np.full(k, float(z))])


def _check_sides(sides):
    if int(sides) != sides or sides < 3:
        raise DomainError(f"need at least 3 sides, got {sides}")


def _check_positive(**kw):
    for name, value in kw.items():
        if not (math.isfinite(value) and value > 0):
            raise DomainError(f"{name} must be positive, got {value}")


def _side_band(k, bottom, top):
    tris = []
    for i in range(k):
        j = (i + 1) % k
        tris.append((bottom + i, bottom + j, top + j))
        tris.append((bottom + i, top + j, top + i))
    return tris


def generate_prism(sides: int, height: float, circumradius: float,
                   sharpened: bool = False, tip_height: float = 0.0) -> TriangleMesh:
    """Regular prism centered at the origin with its axis along z.

    Flat ends are fanned from their first vertex. With ``sharpened`` and a
    positive ``tip_height`` each end becomes a pyramid (the sharpened pencil).
    """
    _check_sides(sides)
    _check_positive(height=height, circumradius=circumradius)
    if not (math.isfinite(tip_height) and tip_height >= 0):
        raise DomainError(f"tip height must be non-negative, got {tip_height}")
    k = sides
    verts = [_ring(k, circumradius, -height / 2), _ring(k, circumradius, height / 2)]
    tris = _side_band(k, 0, k)
    if sharpened and tip_height > 0:
        top_apex = 2 * k
        verts.append(np.array([[0.0, 0.0, height / 2 + tip_height],
                               [0.0, 0.0, -height / 2 - tip_height]]))
        for i in range(k):
            j = (i + 1) % k
            tris.append((k + i, k + j, top_apex))
            tris.append((j, i, top_apex + 1))
    else:
        for i in range(1, k - 1):
            tris.append((k, k + i, k + i + 1))
            tris.append((0, i + 1, i))
    return TriangleMesh(np.vstack(verts), tris)


def generate_bipyramid(sides: int, apex_height: float, circumradius: float) -> TriangleMesh:
    _check_sides(sides)
    _check_positive(apex_height=apex_height, circumradius=circumradius)
    k = sides
    verts = np.vstack([_ring(k, circumradius, 0.0),
                       [[0.0, 0.0, apex_height], [0.0, 0.0, -apex_height]]])
    tris = []
    for i in range(k):
        j = (i + 1) % k
        tris.append((i, j, k))
        tris.append((j, i, k + 1))
    return TriangleMesh(verts, tris)


def generate_cylinder(radius: float, height: float, segments: int = 64) -> TriangleMesh:
    """Faceted cylinder; end caps are fanned from a center vertex."""
    if int(segments) != segments or segments < MIN_CYLINDER_SEGMENTS:
        raise ResolutionError(f"cylinder needs at least {MIN_CYLINDER_SEGMENTS} segments, got {segments}")
    _check_positive(radius=radius, height=height)
    k = segments
    verts = np.vstack([_ring(k, radius, -height / 2), _ring(k, radius, height / 2),
                       [[0.0, 0.0, height / 2], [0.0, 0.0, -height / 2]]])
    tris = _side_band(k, 0, k)
    for i in range(k):
        j = (i + 1) % k
        tris.append((k + i, k + j, 2 * k))
        tris.append((j, i, 2 * k + 1))
    return TriangleMesh(verts, tris)


def icosphere(level: int) -> TriangleMesh:
    """Unit icosphere after ``level`` rounds of 4-to-1 subdivision."""
    t = (1.0 + math.sqrt(5.0)) / 2.0
    verts = [(-1, t, 0), (1, t, 0), (-1, -t, 0), (1, -t, 0), (0, -1, t), (0, 1, t),
             (0, -1, -t), (0, 1, -t), (t, 0, -1), (t, 0, 1), (-t, 0, -1), (-t, 0, 1)]
    verts = [np.array(v, dtype=float) / np.linalg.norm(v) for v in verts]
    faces = [(0, 11, 5), (0, 5, 1), (0, 1, 7), (0, 7, 10), (0, 10, 11), (1, 5, 9), (5, 11, 4),
             (11, 10, 2), (10, 7, 6), (7, 1, 8), (3, 9, 4), (3, 4, 2), (3, 2, 6), (3, 6, 8),
             (3, 8, 9), (4, 9, 5), (2, 4, 11), (6, 2, 10), (8, 6, 7), (9, 8, 1)]
    for _ in range(level):
        cache = {}

        def midpoint(a, b):
            key = (a, b) if a < b else (b, a)
            if key not in cache:
                m = verts[a] + verts[b]
                verts.append(m / np.linalg.norm(m))
                cache[key] = len(verts) - 1
            return cache[key]

        new = []
        for a, b, c in faces:
            ab, bc, ca = midpoint(a, b), midpoint(b, c), midpoint(c, a)
            new += [(a, ab, ca), (b, bc, ab), (c, ca, bc), (ab, bc, ca)]
        faces = new
    return TriangleMesh(np.array(verts), faces)


def generate_carved_sphere(spec: CarvedDieSpec, resolution: int = 5,
                           radius: float = 1.0) -> TriangleMesh:
    """Sphere of ``radius`` with a flat disc planed around every layout point.

    Icosphere vertices are pushed radially onto the carved solid's boundary,
    so vertices falling in a cap land exactly on its plane.
    """
    _check_positive(radius=radius)
    p = np.asarray(spec.layout.points, dtype=float)
    theta = spec.cap_angle
    cosang = np.clip(p @ p.T, -1.0, 1.0)
    np.fill_diagonal(cosang, -1.0)
    i, j = np.unravel_index(np.argmax(cosang), cosang.shape)
    if math.acos(cosang[i, j]) <= 2.0 * theta:
        raise OverlapError(f"caps {min(i, j)} and {max(i, j)} overlap", (int(min(i, j)), int(max(i, j))))
    sphere = icosphere(resolution)
    d = sphere.vertices
    proj = d @ p.T
    cos_t = math.cos(theta)
    with np.errstate(divide="ignore"):
        plane_r = np.where(proj > cos_t, cos_t / proj, np.inf)
    r = np.minimum(1.0, plane_r.min(axis=1))
    return TriangleMesh(radius * r[:, None] * d, sphere.triangles.copy())


def export_stl(mesh: TriangleMesh) -> bytes:
    """Binary little-endian STL."""
    bad = mesh.bad_edges()
    if bad or not mesh.n_triangles:
        raise NotWatertightError(f"refusing to export: {len(bad)} bad edges {bad[:20]}", bad)
    record = np.dtype([("normal", "<f4", 3), ("v", "<f4", (3, 3)), ("attr", "<u2")])
    data = np.zeros(mesh.n_triangles, dtype=record)
    data["normal"] = mesh.face_normals()
    data["v"] = mesh.vertices[mesh.triangles]
    header = STL_HEADER.ljust(80, b"\0")
    return header + struct.pack("<I", mesh.n_triangles) + data.tobytes()


def read_stl(blob: bytes):
    """Parse binary STL into ``(normals, triangles)`` float32 arrays of shape (F, 3) and (F, 3, 3)."""
    if len(blob) < 84:
        raise DomainError("STL data shorter than its header")
    (count,) = struct.unpack_from("<I", blob, 80)
    if len(blob) != 84 + 50 * count:
        raise DomainError(f"STL size {len(blob)} does not match {count} triangles")
    record = np.dtype([("normal", "<f4", 3), ("v", "<f4", (3, 3)), ("attr", "<u2")])
    data = np.frombuffer(blob, dtype=record, count=count, offset=84)
    return data["normal"].copy(), data["v"].copy()


def export_obj(mesh: TriangleMesh) -> str:
    bad = mesh.bad_edges()
    if bad or not mesh.n_triangles:
        raise NotWatertightError(f"refusing to export: {len(bad)} bad edges {bad[:20]}", bad)
    lines = [f"v {x:.17g} {y:.17g} {z:.17g}" for x, y, z in mesh.vertices]
    lines += [f"f {a + 1} {b + 1} {c + 1}" for a, b, c in mesh.triangles]
    return "\n".join(lines) + "\n"


def parse_obj(text: str) -> TriangleMesh:
    verts, tris = [], []
    for line in text.splitlines():
        parts = line.split()
        if not parts:
            continue
        if parts[0] == "v":
            verts.append([float(x) for x in parts[1:4]])
        elif parts[0] == "f":
            tris.append([int(x.split("/")[0]) - 1 for x in parts[1:4]])
    return TriangleMesh(np.array(verts), np.array(tris))
