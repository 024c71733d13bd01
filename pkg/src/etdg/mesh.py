"""Interval partitions and conforming triangulations.

Local edge ``m`` of a triangle (zero-based here) is the edge opposite vertex
``m`` and runs from vertex ``m+1`` to vertex ``m+2`` (mod 3), matching the
reference-element convention in :mod:`etdg.reference`.
"""

from dataclasses import dataclass

import numpy as np

from .errors import DomainError, MeshError

BOUNDARY_TAGS = ("dirichlet", "neumann", "inflow", "outflow")
INTERIOR = "interior"
PERIODIC = "periodic"

_MESH_HEADER = "etdg-mesh 1"


@dataclass(frozen=True)
class Mesh1D:
    """Uniform partition of ``[a, b]`` into ``n_cells`` cells of width ``h``."""

    a: float
    b: float
    n_cells: int
    periodic: bool = True

    @property
    def h(self):
        return (self.b - self.a) / self.n_cells

    @property
    def faces(self):
        """Cell boundaries ``x_{j+1/2}``, length ``n_cells + 1``."""
        x = self.a + self.h * np.arange(self.n_cells + 1)
        x[-1] = self.b
        return x

    @property
    def centers(self):
        return self.a + self.h * (np.arange(self.n_cells) + 0.5)


def uniform_interval_mesh(n, a=0.0, b=2 * np.pi, periodic=True):
    if n < 1:
        raise DomainError(f"need at least one cell, got {n}")
    if not b > a:
        raise DomainError(f"empty interval [{a}, {b}]")
    return Mesh1D(float(a), float(b), int(n), bool(periodic))


class Mesh2D:
    """Conforming triangulation with neighbour connectivity and affine maps.

    Parameters
    ----------
    vertices : (Nv, 2) array
    elements : (Ne, 3) int array
        Counterclockwise vertex triples.
    boundary : dict, optional
        ``{(a, b): tag}`` for boundary edges given by vertex pairs (either
        order). Tags are one of ``BOUNDARY_TAGS``.
    periodic_shifts : sequence of 2-vectors
        Translations identifying opposite boundary edges. Boundary edges
        matched by one of these shifts become periodic interior edges.
    default_tag : str, optional
        Tag for boundary edges absent from ``boundary``; if None such edges
        raise :class:`MeshError`.

    Attributes
    ----------
    neighbors : (Ne, 3) int
        Element across local edge ``m``, or -1 on the boundary.
    edge_map : (Ne, 3) int
        ``E(m, K)``: local index of the shared edge in the neighbour.
    neighbor_shift : (Ne, 3, 2)
        Translation taking the neighbour's coordinates next to this element
        (nonzero only across periodic edges).
    edge_tags : (Ne, 3) str
        ``"interior"``, ``"periodic"`` or a boundary tag.
    area, edge_length, normals, jacobian, det_jacobian
        Geometry; ``jacobian[K]`` is ``d xhat / d x``.
    """

    def __init__(self, vertices, elements, boundary=None, periodic_shifts=(),
                 default_tag=None):
        self.vertices = np.asarray(vertices, dtype=float)
        self.elements = np.asarray(elements, dtype=int)
        if self.elements.ndim != 2 or self.elements.shape[1] != 3:
            raise MeshError("elements must be an (Ne, 3) array")
        if self.elements.min() < 0 or self.elements.max() >= len(self.vertices):
            raise MeshError("element references a vertex that does not exist")
        self.boundary = {}
        for (a, b), tag in (boundary or {}).items():
            if tag not in BOUNDARY_TAGS:
                raise MeshError(f"unknown boundary tag {tag!r}")
            self.boundary[frozenset((int(a), int(b)))] = tag
        self.periodic_shifts = [np.asarray(s, dtype=float) for s in periodic_shifts]
        self.default_tag = default_tag
        self._build_geometry()
        self._build_connectivity()

    @property
    def n_elements(self):
        return len(self.elements)

    # -- construction ------------------------------------------------------

    def _build_geometry(self):
        p = self.vertices[self.elements]  # (Ne, 3, 2)
        v1, v2, v3 = p[:, 0], p[:, 1], p[:, 2]
        a = np.stack([v1 - v3, v2 - v3], axis=-1)  # columns: x = v3 + A xhat
        det_a = a[:, 0, 0] * a[:, 1, 1] - a[:, 0, 1] * a[:, 1, 0]
        bad = np.flatnonzero(det_a <= 0)
        if bad.size:
            raise MeshError(f"element {bad[0]} has non-positive signed area "
                            f"{0.5 * det_a[bad[0]]:g} (must be counterclockwise)")
        self.area = 0.5 * det_a
        self.affine = a
        self.origin = v3
        inv = np.empty_like(a)
        inv[:, 0, 0] = a[:, 1, 1]
        inv[:, 1, 1] = a[:, 0, 0]
        inv[:, 0, 1] = -a[:, 0, 1]
        inv[:, 1, 0] = -a[:, 1, 0]
        self.jacobian = inv / det_a[:, None, None]
        self.det_jacobian = 1.0 / det_a
        start = p[:, [1, 2, 0]]
        end = p[:, [2, 0, 1]]
        t = end - start
        self.edge_length = np.linalg.norm(t, axis=-1)
        self.normals = np.stack([t[..., 1], -t[..., 0]], axis=-1) / self.edge_length[..., None]
        self.edge_midpoints = 0.5 * (start + end)
        self.centroids = p.mean(axis=1)

    def _build_connectivity(self):
        ne = self.n_elements
        neighbors = -np.ones((ne, 3), dtype=int)
        edge_map = -np.ones((ne, 3), dtype=int)
        shift = np.zeros((ne, 3, 2))
        tags = np.full((ne, 3), INTERIOR, dtype="<U9")

        owners = {}
        for k, tri in enumerate(self.elements):
            for m in range(3):
                key = frozenset((tri[(m + 1) % 3], tri[(m + 2) % 3]))
                owners.setdefault(key, []).append((k, m))
        unmatched = []
        for key, own in owners.items():
            if len(own) > 2:
                raise MeshError(f"edge {sorted(key)} shared by {len(own)} elements "
                                f"(elements {[o[0] for o in own]})")
            if len(own) == 2:
                (k1, m1), (k2, m2) = own
                neighbors[k1, m1], edge_map[k1, m1] = k2, m2
                neighbors[k2, m2], edge_map[k2, m2] = k1, m1
            else:
                unmatched.append((key, own[0]))

        if self.periodic_shifts and unmatched:
            unmatched = self._match_periodic(unmatched, neighbors, edge_map, shift, tags)

        boundary_verts = set()
        for key, (k, m) in unmatched:
            boundary_verts.update(key)
            tag = self.boundary.get(key, self.default_tag)
            if tag is None:
                raise MeshError(f"boundary edge {sorted(key)} of element {k} has no tag")
            tags[k, m] = tag
        # hanging nodes: a boundary-edge vertex lying strictly inside another boundary edge
        self._check_hanging(unmatched)

        self.neighbors = neighbors
        self.edge_map = edge_map
        self.neighbor_shift = shift
        self.edge_tags = tags

    def _match_periodic(self, unmatched, neighbors, edge_map, shift, tags):
        scale = max(np.ptp(self.vertices, axis=0).max(), 1.0)
        tol = 1e-9 * scale

        def key_of(x):
            return tuple(np.round(np.asarray(x) / tol).astype(np.int64))

        by_mid = {}
        for idx, (_, (k, m)) in enumerate(unmatched):
            by_mid[key_of(self.edge_midpoints[k, m])] = idx
        paired = set()
        for idx, (_, (k, m)) in enumerate(unmatched):
            if idx in paired:
                continue
            mid = self.edge_midpoints[k, m]
            for s in self.periodic_shifts:
                for sign in (1.0, -1.0):
                    other = by_mid.get(key_of(mid + sign * s))
                    if other is None or other == idx or other in paired:
                        continue
                    _, (k2, m2) = unmatched[other]
                    if abs(self.edge_length[k, m] - self.edge_length[k2, m2]) > tol:
                        continue
                    neighbors[k, m], edge_map[k, m] = k2, m2
                    neighbors[k2, m2], edge_map[k2, m2] = k, m
                    # neighbour sits at mid + sign*s; bring it back
                    shift[k, m] = -sign * s
                    shift[k2, m2] = sign * s
                    tags[k, m] = tags[k2, m2] = PERIODIC
                    paired.update((idx, other))
                    break
                else:
                    continue
                break
        return [u for i, u in enumerate(unmatched) if i not in paired]

    def _check_hanging(self, unmatched):
        if not unmatched:
            return
        segs = np.array([[self.vertices[a], self.vertices[b]]
                         for (a, b) in (tuple(key) for key, _ in unmatched)])
        verts = {v for key, _ in unmatched for v in key}
        pts = self.vertices[sorted(verts)]
        for (p0, p1) in segs:
            d = p1 - p0
            L2 = d @ d
            s = (pts - p0) @ d / L2
            closest = p0 + s[:, None] * d
            dist = np.linalg.norm(pts - closest, axis=1)
            inside = (s > 1e-9) & (s < 1 - 1e-9) & (dist < 1e-9 * np.sqrt(L2))
            if inside.any():
                raise MeshError(f"hanging node at {pts[inside][0]} on edge "
                                f"{p0}-{p1} (nonconforming mesh)")

    # -- queries -------------------------------------------------------------

    @property
    def h_max(self):
        return float(self.edge_length.max())

    @property
    def h_min(self):
        return float(self.edge_length.min())

    @property
    def min_altitude(self):
        return float((2 * self.area / self.edge_length.max(axis=1)).min())

    def physical_points(self, ref_points):
        """Map reference points to every element: shape (Ne, npts, 2)."""
        ref_points = np.atleast_2d(ref_points)
        return self.origin[:, None, :] + np.einsum("kij,pj->kpi", self.affine, ref_points)

    def boundary_edges(self, tag=None):
        """List of ``(element, local_edge)`` with the given tag (any boundary tag if None)."""
        if tag is None:
            mask = np.isin(self.edge_tags, BOUNDARY_TAGS)
        else:
            mask = self.edge_tags == tag
        return [tuple(x) for x in np.argwhere(mask)]

    def is_periodic(self):
        return not np.isin(self.edge_tags, BOUNDARY_TAGS).any()

    def total_area(self):
        return float(self.area.sum())

    def permuted(self, perm):
        """Same mesh with element ``i`` of the result equal to element ``perm[i]``."""
        inv_tags = {tuple(sorted(k)): v for k, v in self.boundary.items()}
        return Mesh2D(self.vertices, self.elements[np.asarray(perm)], inv_tags,
                      self.periodic_shifts, self.default_tag)

    def __repr__(self):
        return (f"Mesh2D(n_elements={self.n_elements}, n_vertices={len(self.vertices)}, "
                f"h_max={self.h_max:.4g})")


# ---------------------------------------------------------------------------
# Generators

def structured_rect_mesh(nx, ny, domain=((0.0, 2 * np.pi), (0.0, 2 * np.pi)),
                         periodic=False, tag="neumann"):
    """Rectangle split into ``nx*ny`` cells, each cut along its
    lower-left to upper-right diagonal.
    """
    if nx < 1 or ny < 1:
        raise DomainError(f"need nx, ny >= 1, got {nx}, {ny}")
    (x0, x1), (y0, y1) = domain
    if not (x1 > x0 and y1 > y0):
        raise DomainError(f"degenerate domain {domain}")
    xs = np.linspace(x0, x1, nx + 1)
    ys = np.linspace(y0, y1, ny + 1)
    X, Y = np.meshgrid(xs, ys, indexing="ij")
    verts = np.column_stack([X.ravel(), Y.ravel()])

    def vid(i, j):
        return i * (ny + 1) + j

    tris = []
    for i in range(nx):
        for j in range(ny):
            p00, p10, p11, p01 = vid(i, j), vid(i + 1, j), vid(i + 1, j + 1), vid(i, j + 1)
            tris.append((p00, p10, p11))
            tris.append((p00, p11, p01))
    shifts = [(x1 - x0, 0.0), (0.0, y1 - y0)] if periodic else ()
    return Mesh2D(verts, np.array(tris), periodic_shifts=shifts,
                  default_tag=None if periodic else tag)


def refine_uniform(mesh):
    """Split every triangle into four by joining its edge midpoints."""
    verts = [tuple(v) for v in mesh.vertices]
    mids = {}

    def midpoint(a, b):
        key = (min(a, b), max(a, b))
        if key not in mids:
            mids[key] = len(verts)
            verts.append(tuple(0.5 * (mesh.vertices[a] + mesh.vertices[b])))
        return mids[key]

    tris = []
    for v1, v2, v3 in mesh.elements:
        m1 = midpoint(v2, v3)
        m2 = midpoint(v3, v1)
        m3 = midpoint(v1, v2)
        tris += [(v1, m3, m2), (m3, v2, m1), (m2, m1, v3), (m1, m2, m3)]

    boundary = {}
    for key, tag in mesh.boundary.items():
        a, b = sorted(key)
        m = mids.get((a, b))
        if m is None:
            continue
        boundary[(a, m)] = tag
        boundary[(m, b)] = tag
    return Mesh2D(np.array(verts), np.array(tris), boundary,
                  mesh.periodic_shifts, mesh.default_tag)


def disk_mesh(radius=8.0, n_rings=4, tag="neumann"):
    """Polygonal disk triangulated ring by ring around the centre.

    Ring ``r`` carries ``6 r`` equally spaced vertices, so element sizes are
    roughly uniform (``radius / n_rings``).
    """
    if n_rings < 1 or radius <= 0:
        raise DomainError("need n_rings >= 1 and radius > 0")
    verts = [(0.0, 0.0)]
    rings = [[0]]
    for r in range(1, n_rings + 1):
        ids = []
        for i in range(6 * r):
            ang = 2 * np.pi * i / (6 * r)
            verts.append((radius * r / n_rings * np.cos(ang), radius * r / n_rings * np.sin(ang)))
            ids.append(len(verts) - 1)
        rings.append(ids)
    verts = np.array(verts)
    tris = []
    for r in range(1, n_rings + 1):
        inner, outer = rings[r - 1], rings[r]
        ni, no = len(inner), len(outer)
        # merge the two rings by angle
        i = j = 0
        ang_in = [2 * np.pi * t / ni for t in range(ni)] if r > 1 else [0.0]
        ang_out = [2 * np.pi * t / no for t in range(no)]
        while i < (ni if r > 1 else 0) or j < no:
            a_next_in = ang_in[(i + 1) % ni] + (2 * np.pi if i + 1 >= ni else 0) if r > 1 else np.inf
            a_next_out = ang_out[(j + 1) % no] + (2 * np.pi if j + 1 >= no else 0)
            if r > 1 and i < ni and (j >= no or a_next_in < a_next_out - 1e-12):
                tris.append((inner[i % ni], outer[j % no], inner[(i + 1) % ni]))
                i += 1
            else:
                tris.append((inner[i % ni] if r > 1 else inner[0], outer[j % no], outer[(j + 1) % no]))
                j += 1
    tris = np.array(tris)
    # orient counterclockwise
    p = verts[tris]
    signed = ((p[:, 1, 0] - p[:, 0, 0]) * (p[:, 2, 1] - p[:, 0, 1])
              - (p[:, 1, 1] - p[:, 0, 1]) * (p[:, 2, 0] - p[:, 0, 0]))
    flip = signed < 0
    tris[flip] = tris[flip][:, [0, 2, 1]]
    outer = rings[-1]
    boundary = {(outer[i], outer[(i + 1) % len(outer)]): tag for i in range(len(outer))}
    return Mesh2D(verts, tris, boundary)


# ---------------------------------------------------------------------------
# Text format

def load_mesh(path):
    """Read a mesh in the ``etdg-mesh 1`` text format."""
    with open(path) as fh:
        lines = [ln.strip() for ln in fh]
    lines = [ln for ln in lines if ln and not ln.startswith("#")]
    pos = 0

    def take():
        nonlocal pos
        if pos >= len(lines):
            raise MeshError(f"{path}: unexpected end of file")
        pos += 1
        return lines[pos - 1]

    if take() != _MESH_HEADER:
        raise MeshError(f"{path}: missing '{_MESH_HEADER}' header")

    def section(name):
        head = take().split()
        if len(head) != 2 or head[0] != name:
            raise MeshError(f"{path}: expected '{name} <count>', got {' '.join(head)!r}")
        return int(head[1])

    try:
        nv = section("vertices")
        verts = np.array([[float(t) for t in take().split()] for _ in range(nv)]).reshape(nv, 2)
        ne = section("elements")
        elems = np.array([[int(t) for t in take().split()] for _ in range(ne)]).reshape(ne, 3)
        nb = section("boundary")
        boundary = {}
        for _ in range(nb):
            a, b, tag = take().split()
            boundary[(int(a), int(b))] = tag
    except ValueError as exc:
        raise MeshError(f"{path}: malformed line {pos}: {exc}") from exc
    return Mesh2D(verts, elems, boundary)


def save_mesh(mesh, path):
    if mesh.periodic_shifts:
        raise MeshError("periodic meshes cannot be written to the mesh format")
    out = [_MESH_HEADER, f"vertices {len(mesh.vertices)}"]
    out += [f"{x:.17g} {y:.17g}" for x, y in mesh.vertices]
    out.append(f"elements {mesh.n_elements}")
    out += [f"{a} {b} {c}" for a, b, c in mesh.elements]
    edges = []
    for k, m in mesh.boundary_edges():
        tri = mesh.elements[k]
        edges.append((tri[(m + 1) % 3], tri[(m + 2) % 3], mesh.edge_tags[k, m]))
    out.append(f"boundary {len(edges)}")
    out += [f"{a} {b} {t}" for a, b, t in edges]
    with open(path, "w") as fh:
        fh.write("\n".join(out) + "\n")
