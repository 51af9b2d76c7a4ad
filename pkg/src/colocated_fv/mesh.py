"""Triangular meshes with circumcenter geometry.

Every quantity the finite-volume operators need is computed once at
construction: circumcenters, outward edge normals, the distances ``d_sigma``
between neighbouring circumcenters, transmissibilities ``tau = |sigma| / d``
and the interpolation weights ``alpha``.

Conventions
-----------
* Indices are 0-based.
* Triangles are stored counterclockwise.
* Each edge has a first triangle ``K`` (``edge_k``) and, for interior edges, a
  second triangle ``L`` (``edge_l``); ``edge_l == -1`` on the boundary.
* ``edge_normals`` is the unit normal pointing out of ``K``.  The normal seen
  from ``L`` is its negative and is never stored.
* ``alpha`` holds ``alpha_{K,L} = d(x_L, x_sigma) / d(x_K, x_L)``; the
  complementary weight ``alpha_{L,K}`` is ``1 - alpha``.  Boundary edges carry
  ``alpha = 1``.
"""

from __future__ import annotations

from dataclasses import dataclass, field
from functools import cached_property

import numpy as np


class MeshError(ValueError):
    """Base class for mesh construction failures."""


class MeshParseError(MeshError):
    pass


class MeshTopologyError(MeshError):
    pass


class MeshGeometryError(MeshError):
    pass


# Angles at or above 90 - ANGLE_TOL degrees violate acuteness.
ANGLE_TOL_DEG = 1e-9


@dataclass(frozen=True)
class QualityReport:
    min_angle: float
    max_angle: float
    min_tau: float
    min_edge_ratio: float
    max_closure: float
    max_perp_deviation: float
    failures: list[str] = field(default_factory=list)

    @property
    def passed(self) -> bool:
        return not self.failures

    def summary(self) -> str:
        lines = [
            f"min angle (deg)       {self.min_angle:.6f}",
            f"max angle (deg)       {self.max_angle:.6f}",
            f"min tau               {self.min_tau:.6e}",
            f"min |sigma|/h         {self.min_edge_ratio:.6e}",
            f"closure residual      {self.max_closure:.3e}",
            f"perpendicularity dev  {self.max_perp_deviation:.3e}",
        ]
        lines += [f"FAIL: {f}" for f in self.failures]
        lines.append("status: " + ("ok" if self.passed else "invalid"))
        return "\n".join(lines)


def _frozen(a):
    a = np.ascontiguousarray(a)
    a.setflags(write=False)
    return a


@dataclass(frozen=True, eq=False)
class Mesh:
    vertices: np.ndarray  # (nv, 2)
    triangles: np.ndarray  # (nt, 3), counterclockwise
    tri_edges: np.ndarray  # (nt, 3), local edge j is opposite local vertex j
    tri_edge_sign: np.ndarray  # (nt, 3), +1 if the triangle is K of that edge
    areas: np.ndarray
    circumcenters: np.ndarray
    circumradii: np.ndarray
    edges: np.ndarray  # (ne, 2)
    edge_k: np.ndarray
    edge_l: np.ndarray
    edge_midpoints: np.ndarray
    edge_lengths: np.ndarray
    edge_normals: np.ndarray
    d_sigma: np.ndarray
    tau: np.ndarray
    alpha: np.ndarray
    interior_edges: np.ndarray
    boundary_edges: np.ndarray
    h: float

    @property
    def n_vertices(self) -> int:
        return len(self.vertices)

    @property
    def n_triangles(self) -> int:
        return len(self.triangles)

    @property
    def n_edges(self) -> int:
        return len(self.edges)

    @property
    def total_area(self) -> float:
        return float(self.areas.sum())

    @cached_property
    def quality(self) -> QualityReport:
        return validate(self)

    def tri_normals(self) -> np.ndarray:
        """Outward normals ``n_{K,sigma}`` per triangle and local edge, (nt, 3, 2)."""
        return self.edge_normals[self.tri_edges] * self.tri_edge_sign[..., None]

    def triangle_angles(self) -> np.ndarray:
        """Interior angles in degrees, (nt, 3); angle j sits at local vertex j."""
        p = self.vertices[self.triangles]
        out = np.empty((self.n_triangles, 3))
        for j in range(3):
            a = p[:, (j + 1) % 3] - p[:, j]
            b = p[:, (j + 2) % 3] - p[:, j]
            cos = (a * b).sum(1) / np.hypot(*a.T) / np.hypot(*b.T)
            out[:, j] = np.degrees(np.arccos(np.clip(cos, -1.0, 1.0)))
        return out


def _circumcenters(p):
    a, b, c = p[:, 0], p[:, 1], p[:, 2]
    ba = b - a
    ca = c - a
    d = 2.0 * (ba[:, 0] * ca[:, 1] - ba[:, 1] * ca[:, 0])
    nb = (ba**2).sum(1)
    nc = (ca**2).sum(1)
    ux = (ca[:, 1] * nb - ba[:, 1] * nc) / d
    uy = (ba[:, 0] * nc - ca[:, 0] * nb) / d
    off = np.column_stack([ux, uy])
    return a + off, np.hypot(ux, uy)


def from_arrays(vertices, triangles) -> Mesh:
    """Build a mesh from raw coordinates and 0-based connectivity.

    Triangles given clockwise are flipped.  Raises ``MeshGeometryError`` for
    degenerate triangles and ``MeshTopologyError`` for repeated triangles,
    edges shared by more than two triangles or inconsistent orientation.
    """
    vertices = np.asarray(vertices, dtype=float)
    triangles = np.array(triangles, dtype=np.int64)
    if vertices.ndim != 2 or vertices.shape[1] != 2:
        raise MeshGeometryError("vertices must have shape (n, 2)")
    if triangles.ndim != 2 or triangles.shape[1] != 3 or len(triangles) == 0:
        raise MeshTopologyError("triangles must have shape (n, 3) with n >= 1")
    if not np.all(np.isfinite(vertices)):
        raise MeshGeometryError("vertex coordinates must be finite")
    if triangles.min() < 0 or triangles.max() >= len(vertices):
        raise MeshTopologyError("triangle references an unknown vertex")
    if np.any(triangles[:, 0] == triangles[:, 1]) or np.any(
        triangles[:, 1] == triangles[:, 2]) or np.any(triangles[:, 0] == triangles[:, 2]):
        raise MeshTopologyError("triangle with repeated vertex")

    p = vertices[triangles]
    cross = ((p[:, 1, 0] - p[:, 0, 0]) * (p[:, 2, 1] - p[:, 0, 1])
             - (p[:, 1, 1] - p[:, 0, 1]) * (p[:, 2, 0] - p[:, 0, 0]))
    scale = np.maximum(np.abs(p - p[:, :1]).max(axis=(1, 2)), np.finfo(float).tiny)
    degenerate = np.abs(cross) <= 1e-14 * scale**2
    if degenerate.any():
        bad = np.flatnonzero(degenerate)[:5].tolist()
        raise MeshGeometryError(f"zero-area triangle(s) {bad}")
    flip = cross < 0
    triangles[flip] = triangles[flip][:, [0, 2, 1]]
    p = vertices[triangles]
    areas = 0.5 * np.abs(cross)

    keys = np.sort(triangles, axis=1)
    if len(np.unique(keys, axis=0)) != len(keys):
        raise MeshTopologyError("repeated triangle")

    nt = len(triangles)
    # local edge j joins local vertices j+1 -> j+2 (counterclockwise)
    directed = np.stack([triangles[:, [1, 2, 0]], triangles[:, [2, 0, 1]]], axis=-1)
    directed = directed.reshape(-1, 2)
    undirected = np.sort(directed, axis=1)
    edges, inverse, counts = np.unique(
        undirected, axis=0, return_inverse=True, return_counts=True)
    inverse = inverse.reshape(-1)
    if counts.max() > 2:
        raise MeshTopologyError("edge shared by more than two triangles")
    ne = len(edges)

    owner = np.repeat(np.arange(nt), 3)
    order = np.lexsort((owner, inverse))  # stable: lowest triangle first
    edge_k = np.empty(ne, dtype=np.int64)
    edge_l = np.full(ne, -1, dtype=np.int64)
    first = np.ones(len(order), dtype=bool)
    first[1:] = inverse[order][1:] != inverse[order][:-1]
    edge_k[inverse[order][first]] = owner[order][first]
    second = ~first
    edge_l[inverse[order][second]] = owner[order][second]

    # both triangles must traverse a shared edge in opposite directions
    same_dir = np.zeros(ne, dtype=bool)
    dir_start = directed[:, 0]
    kslot = np.empty(ne, dtype=np.int64)
    kslot[inverse[order][first]] = order[first]
    lslot = np.full(ne, -1, dtype=np.int64)
    lslot[inverse[order][second]] = order[second]
    shared = lslot >= 0
    same_dir[shared] = dir_start[kslot[shared]] == dir_start[lslot[shared]]
    if same_dir.any():
        raise MeshTopologyError("inconsistent orientation across a shared edge")

    tri_edges = inverse.reshape(nt, 3)
    tri_edge_sign = np.where(edge_k[tri_edges] == np.arange(nt)[:, None], 1, -1)

    centers, radii = _circumcenters(p)
    ev = vertices[edges]
    mid = 0.5 * (ev[:, 0] + ev[:, 1])
    tangent = ev[:, 1] - ev[:, 0]
    length = np.hypot(tangent[:, 0], tangent[:, 1])
    normal = np.column_stack([tangent[:, 1], -tangent[:, 0]]) / length[:, None]
    centroid_k = p[edge_k].mean(axis=1)
    flipn = ((mid - centroid_k) * normal).sum(1) < 0
    normal[flipn] *= -1.0

    interior = np.flatnonzero(edge_l >= 0)
    boundary = np.flatnonzero(edge_l < 0)
    d = np.empty(ne)
    alpha = np.ones(ne)
    xk = centers[edge_k]
    xl = centers[edge_l[interior]]
    d[interior] = np.hypot(*(xl - xk[interior]).T)
    d[boundary] = np.hypot(*(mid[boundary] - xk[boundary]).T)
    with np.errstate(divide="ignore", invalid="ignore"):
        alpha[interior] = np.hypot(*(xl - mid[interior]).T) / d[interior]
        tau = length / d

    return Mesh(
        vertices=_frozen(vertices),
        triangles=_frozen(triangles),
        tri_edges=_frozen(tri_edges),
        tri_edge_sign=_frozen(tri_edge_sign.astype(float)),
        areas=_frozen(areas),
        circumcenters=_frozen(centers),
        circumradii=_frozen(radii),
        edges=_frozen(edges),
        edge_k=_frozen(edge_k),
        edge_l=_frozen(edge_l),
        edge_midpoints=_frozen(mid),
        edge_lengths=_frozen(length),
        edge_normals=_frozen(normal),
        d_sigma=_frozen(d),
        tau=_frozen(tau),
        alpha=_frozen(alpha),
        interior_edges=_frozen(interior),
        boundary_edges=_frozen(boundary),
        h=float(radii.max()),
    )


def _data_lines(text):
    for raw in text.splitlines():
        line = raw.split("#", 1)[0].strip()
        if line:
            yield line


def _parse_table(text, what, ncols):
    lines = list(_data_lines(text))
    if not lines:
        raise MeshParseError(f"{what}: empty file")
    head = lines[0].split()
    try:
        n = int(head[0])
    except (ValueError, IndexError):
        raise MeshParseError(f"{what}: malformed header {lines[0]!r}") from None
    if len(lines) - 1 < n:
        raise MeshParseError(f"{what}: header declares {n} rows, found {len(lines) - 1}")
    rows = []
    for line in lines[1:n + 1]:
        parts = line.split()
        if len(parts) < ncols + 1:
            raise MeshParseError(f"{what}: malformed line {line!r}")
        rows.append(parts[:ncols + 1])
    return head, rows


def load_mesh(node_text: str, ele_text: str) -> Mesh:
    """Parse Triangle ``.node`` / ``.ele`` contents into a mesh.

    Extra attribute and boundary-marker columns are ignored.  The numbering
    base is taken from the first node index (Triangle writes 1-based files by
    default, 0-based is accepted too).
    """
    head, rows = _parse_table(node_text, ".node", 2)
    if len(head) > 1 and head[1] != "2":
        raise MeshParseError(".node: only 2D meshes are supported")
    try:
        ids = np.array([int(r[0]) for r in rows])
        xy = np.array([[float(r[1]), float(r[2])] for r in rows])
    except ValueError as exc:
        raise MeshParseError(f".node: {exc}") from None
    base = int(ids[0]) if len(ids) else 1
    if not np.array_equal(ids, np.arange(base, base + len(ids))):
        raise MeshParseError(".node: indices must be consecutive")

    head, rows = _parse_table(ele_text, ".ele", 3)
    if len(head) > 1 and head[1] != "3":
        raise MeshParseError(".ele: only 3-node triangles are supported")
    try:
        tris = np.array([[int(r[1]), int(r[2]), int(r[3])] for r in rows]) - base
    except ValueError as exc:
        raise MeshParseError(f".ele: {exc}") from None
    return from_arrays(xy, tris)


def read_triangle_files(node_path, ele_path) -> Mesh:
    with open(node_path) as fn, open(ele_path) as fe:
        return load_mesh(fn.read(), fe.read())


def build_equilateral_mesh(rows: int, cols: int, side: float = 1.0) -> Mesh:
    """Rhombus spanned by ``cols*side*(1, 0)`` and ``rows*side*(1/2, sqrt(3)/2)``.

    Each of the ``rows * cols`` parallelogram cells is cut into two
    equilateral triangles.
    """
    if rows < 1 or cols < 1:
        raise ValueError("rows and cols must be >= 1")
    if not side > 0:
        raise ValueError("side must be positive")
    i, j = np.meshgrid(np.arange(cols + 1), np.arange(rows + 1), indexing="xy")
    i = i.ravel()
    j = j.ravel()
    verts = side * np.column_stack([i + 0.5 * j, (np.sqrt(3.0) / 2.0) * j])

    def vid(ii, jj):
        return jj * (cols + 1) + ii

    ci, cj = np.meshgrid(np.arange(cols), np.arange(rows), indexing="xy")
    ci = ci.ravel()
    cj = cj.ravel()
    lower = np.column_stack([vid(ci, cj), vid(ci + 1, cj), vid(ci, cj + 1)])
    upper = np.column_stack([vid(ci + 1, cj), vid(ci + 1, cj + 1), vid(ci, cj + 1)])
    tris = np.empty((2 * len(ci), 3), dtype=np.int64)
    tris[0::2] = lower
    tris[1::2] = upper
    return from_arrays(verts, tris)


def refine_uniform(m: Mesh) -> Mesh:
    """Split every triangle into four similar children through edge midpoints."""
    nv = m.n_vertices
    verts = np.vstack([m.vertices, m.edge_midpoints])
    a, b, c = m.triangles.T
    # local edge j is opposite vertex j: m_bc = edge 0, m_ca = edge 1, m_ab = edge 2
    m_bc, m_ca, m_ab = (nv + m.tri_edges[:, j] for j in range(3))
    children = np.stack([
        np.column_stack([a, m_ab, m_ca]),
        np.column_stack([m_ab, b, m_bc]),
        np.column_stack([m_ca, m_bc, c]),
        np.column_stack([m_ab, m_bc, m_ca]),
    ], axis=1).reshape(-1, 3)
    return from_arrays(verts, children)


def is_uniform(m: Mesh, rtol: float = 1e-10) -> bool:
    """True when every triangle is equilateral with a common side length."""
    lengths = m.edge_lengths
    return bool(np.ptp(lengths) <= rtol * lengths.max())


def validate(m: Mesh, angle_tol: float = ANGLE_TOL_DEG) -> QualityReport:
    """Check acuteness, closure and circumcenter alignment.

    Problems are collected in ``failures`` instead of being raised.
    """
    failures = []
    angles = m.triangle_angles()
    obtuse = np.flatnonzero((angles >= 90.0 - angle_tol).any(axis=1))
    if len(obtuse):
        failures.append(
            f"{len(obtuse)} triangle(s) not strictly acute (max angle "
            f"{angles.max():.9f} deg), e.g. {obtuse[:5].tolist()}")

    n = m.tri_normals()
    closure = (m.edge_lengths[m.tri_edges][..., None] * n).sum(axis=1)
    perimeter = m.edge_lengths[m.tri_edges].sum(axis=1)
    rel_closure = np.hypot(*closure.T) / perimeter
    if rel_closure.max() > 1e-13:
        failures.append(f"closure residual {rel_closure.max():.3e} exceeds 1e-13")

    tangent = m.vertices[m.edges[:, 1]] - m.vertices[m.edges[:, 0]]
    tangent /= m.edge_lengths[:, None]
    dev_k = np.abs(((m.circumcenters[m.edge_k] - m.edge_midpoints) * tangent).sum(1))
    dev = dev_k
    if len(m.interior_edges):
        ie = m.interior_edges
        dev_l = np.abs(((m.circumcenters[m.edge_l[ie]] - m.edge_midpoints[ie])
                        * tangent[ie]).sum(1))
        dev = np.concatenate([dev_k, dev_l])
    if dev.max() > 1e-12 * m.h:
        failures.append(f"circumcenter off the edge bisector by {dev.max():.3e}")

    counts = np.bincount(m.tri_edges.ravel(), minlength=m.n_edges)
    if np.any(counts[m.boundary_edges] != 1) or np.any(counts[m.interior_edges] != 2):
        failures.append("edge/triangle adjacency is inconsistent")

    with np.errstate(invalid="ignore"):
        min_tau = float(np.min(m.tau))
    if not np.all(np.isfinite(m.tau)) or not np.all(m.d_sigma > 0):
        failures.append("degenerate circumcenter distance (d_sigma = 0)")

    return QualityReport(
        min_angle=float(angles.min()),
        max_angle=float(angles.max()),
        min_tau=min_tau,
        min_edge_ratio=float(m.edge_lengths.min() / m.h),
        max_closure=float(rel_closure.max()),
        max_perp_deviation=float(dev.max()),
        failures=failures,
    )
