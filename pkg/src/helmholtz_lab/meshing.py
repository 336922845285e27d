"""Meshes: 1D intervals and structured 2D triangulations of polygons.

Meshes carry full edge topology (adjacent elements, a fixed unit normal
pointing out of the first adjacent element, length, boundary tag), since
the discontinuous methods assemble exclusively on the mesh skeleton.
"""

import math
from collections import namedtuple
from dataclasses import dataclass, field

import numpy as np

__all__ = [
    "Polygon",
    "Mesh",
    "Edge",
    "unit_interval",
    "unit_square",
    "l_shape",
    "uniform_interval_mesh",
    "triangulate",
    "geometric_refine",
    "n_lambda",
    "mesh_to_text",
    "mesh_from_text",
    "save_mesh",
    "load_mesh",
    "mesh_from_arrays",
    "validate_mesh",
]

Edge = namedtuple("Edge", ["index", "nodes", "elems", "normal", "length", "tag"])


@dataclass(frozen=True)
class Polygon:
    """Domain description: vertex loop plus one tag per side.

    Sides run from vertices[i] to vertices[i+1] (cyclically); for the 1D
    interval the two "sides" are the endpoints.
    """

    name: str
    dim: int
    vertices: tuple
    side_tags: tuple

    def side_count(self):
        return len(self.side_tags)


def unit_interval():
    return Polygon(
        name="interval",
        dim=1,
        vertices=((0.0,), (1.0,)),
        side_tags=("left", "right"),
    )


def unit_square():
    return Polygon(
        name="square",
        dim=2,
        vertices=((0.0, 0.0), (1.0, 0.0), (1.0, 1.0), (0.0, 1.0)),
        side_tags=("robin", "robin", "robin", "robin"),
    )


def l_shape(neumann_gamma=False):
    """L-shaped domain (-1,1)^2 minus [0,1]x[-1,0], reentrant corner at 0.

    With neumann_gamma=True the two sides meeting at the origin are
    tagged "neumann" and the remaining boundary "robin".
    """
    gamma = "neumann" if neumann_gamma else "robin"
    return Polygon(
        name="lshape",
        dim=2,
        vertices=(
            (-1.0, -1.0),
            (0.0, -1.0),
            (0.0, 0.0),
            (1.0, 0.0),
            (1.0, 1.0),
            (-1.0, 1.0),
        ),
        side_tags=("robin", gamma, gamma, "robin", "robin", "robin"),
    )


class Mesh:
    """Simplicial mesh with explicit skeleton topology.

    nodes:     (nv,) in 1D, (nv, 2) in 2D
    elements:  (ne, 2) or (ne, 3) int, counterclockwise in 2D
    Edge normals point out of edge_elems[:, 0]; boundary edges have
    edge_elems[:, 1] == -1.  h is the max element diameter, shape_reg the
    max ratio diameter/inradius over elements (2D).
    """

    def __init__(self, dim, nodes, elements, edge_tags=None, domain_name=""):
        self.dim = int(dim)
        self.nodes = np.asarray(nodes, dtype=float)
        self.elements = np.asarray(elements, dtype=np.int64)
        self.domain_name = domain_name
        self._cache = {}
        self._build_edges()
        if edge_tags:
            self._apply_tags(edge_tags)
        self._metrics()

    # -- topology ------------------------------------------------------

    def _build_edges(self):
        if self.dim == 1:
            self._build_edges_1d()
        else:
            self._build_edges_2d()

    def _build_edges_1d(self):
        ne = len(self.elements)
        counts = np.zeros(len(self.nodes), dtype=int)
        for a, b in self.elements:
            counts[a] += 1
            counts[b] += 1
        left_of = -np.ones(len(self.nodes), dtype=np.int64)
        right_of = -np.ones(len(self.nodes), dtype=np.int64)
        for ei, (a, b) in enumerate(self.elements):
            right_of[a] = ei  # element to the right of node a
            left_of[b] = ei
        edge_nodes, edge_elems, normals, tags = [], [], [], []
        for v in range(len(self.nodes)):
            if counts[v] == 0:
                continue
            plus = left_of[v] if left_of[v] >= 0 else right_of[v]
            minus = right_of[v] if left_of[v] >= 0 else -1
            if plus == minus:
                minus = -1
            edge_nodes.append((v, v))
            edge_elems.append((plus, minus if minus != plus else -1))
            # outward from the plus element: +1 at its right end, -1 at left
            sign = 1.0 if left_of[v] == plus and left_of[v] >= 0 else -1.0
            normals.append((sign,))
            tags.append(None)
        self.edge_nodes = np.array(edge_nodes, dtype=np.int64)
        self.edge_elems = np.array(edge_elems, dtype=np.int64)
        self.edge_normals = np.array(normals, dtype=float)
        self.edge_lengths = np.ones(len(edge_nodes))  # point measure
        self.edge_tags = tags
        self.boundary_mask = self.edge_elems[:, 1] == -1

    def _build_edges_2d(self):
        tri = self.elements
        ne = len(tri)
        directed = np.concatenate(
            [tri[:, [0, 1]], tri[:, [1, 2]], tri[:, [2, 0]]], axis=0
        )
        owner = np.tile(np.arange(ne, dtype=np.int64), 3)
        key = np.sort(directed, axis=1)
        order = np.lexsort((key[:, 1], key[:, 0]))
        key_s = key[order]
        dir_s = directed[order]
        own_s = owner[order]
        new_edge = np.ones(len(key_s), dtype=bool)
        new_edge[1:] = np.any(key_s[1:] != key_s[:-1], axis=1)
        first_ids = np.flatnonzero(new_edge)
        n_edges = len(first_ids)
        run_len = np.diff(np.append(first_ids, len(key_s)))
        if np.any(run_len > 2):
            raise ValueError("non-manifold edge: shared by more than two elements")
        edge_nodes = dir_s[first_ids]
        plus = own_s[first_ids]
        minus = -np.ones(n_edges, dtype=np.int64)
        has_two = run_len == 2
        minus[has_two] = own_s[first_ids[has_two] + 1]
        # conformity: the second appearance must be the reversed pair
        second_dir = dir_s[first_ids[has_two] + 1]
        if np.any(second_dir[:, 0] != edge_nodes[has_two][:, 1]) or np.any(
            second_dir[:, 1] != edge_nodes[has_two][:, 0]
        ):
            raise ValueError("inconsistent element orientation across an edge")
        t = self.nodes[edge_nodes[:, 1]] - self.nodes[edge_nodes[:, 0]]
        lengths = np.hypot(t[:, 0], t[:, 1])
        if np.any(lengths <= 0):
            raise ValueError("degenerate edge")
        normals = np.column_stack([t[:, 1], -t[:, 0]]) / lengths[:, None]
        self.edge_nodes = edge_nodes
        self.edge_elems = np.column_stack([plus, minus])
        self.edge_normals = normals
        self.edge_lengths = lengths
        self.edge_tags = [None] * n_edges
        self.boundary_mask = minus == -1

    def _apply_tags(self, tags):
        """tags: iterable of (i, j, tag) with unordered node pair."""
        lookup = {}
        for idx in np.flatnonzero(self.boundary_mask):
            a, b = self.edge_nodes[idx]
            lookup[frozenset((int(a), int(b)))] = idx
        for i, j, tag in tags:
            idx = lookup.get(frozenset((int(i), int(j))))
            if idx is None:
                raise ValueError(f"tagged pair ({i}, {j}) is not a boundary edge")
            self.edge_tags[idx] = tag

    def _metrics(self):
        if self.dim == 1:
            lengths = np.abs(
                self.nodes[self.elements[:, 1]] - self.nodes[self.elements[:, 0]]
            )
            self.h = float(np.max(lengths))
            self.h_min = float(np.min(lengths))
            self.shape_reg = 1.0
            return
        pts = self.nodes[self.elements]  # (ne, 3, 2)
        a = np.linalg.norm(pts[:, 1] - pts[:, 0], axis=1)
        b = np.linalg.norm(pts[:, 2] - pts[:, 1], axis=1)
        c = np.linalg.norm(pts[:, 0] - pts[:, 2], axis=1)
        diam = np.maximum(a, np.maximum(b, c))
        area = self.areas()
        if np.any(area <= 0):
            raise ValueError("element with non-positive area (orientation?)")
        inradius = 2.0 * area / (a + b + c)
        self.h = float(np.max(diam))
        self.h_min = float(np.min(diam))
        self.shape_reg = float(np.max(diam / inradius))

    # -- geometry caches ------------------------------------------------

    def areas(self):
        if "areas" not in self._cache:
            if self.dim == 1:
                self._cache["areas"] = np.abs(
                    self.nodes[self.elements[:, 1]] - self.nodes[self.elements[:, 0]]
                )
            else:
                p = self.nodes[self.elements]
                d1 = p[:, 1] - p[:, 0]
                d2 = p[:, 2] - p[:, 0]
                self._cache["areas"] = 0.5 * (
                    d1[:, 0] * d2[:, 1] - d1[:, 1] * d2[:, 0]
                )
        return self._cache["areas"]

    def jacobians(self):
        """Affine maps x = v0 + J xi per element (2D)."""
        if "jac" not in self._cache:
            p = self.nodes[self.elements]
            jac = np.stack([p[:, 1] - p[:, 0], p[:, 2] - p[:, 0]], axis=2)
            self._cache["jac"] = jac  # (ne, 2, 2), columns are edge vectors
        return self._cache["jac"]

    def inv_jacobians_t(self):
        if "invjt" not in self._cache:
            jac = self.jacobians()
            det = jac[:, 0, 0] * jac[:, 1, 1] - jac[:, 0, 1] * jac[:, 1, 0]
            inv = np.empty_like(jac)
            inv[:, 0, 0] = jac[:, 1, 1]
            inv[:, 0, 1] = -jac[:, 1, 0]
            inv[:, 1, 0] = -jac[:, 0, 1]
            inv[:, 1, 1] = jac[:, 0, 0]
            self._cache["invjt"] = inv / det[:, None, None]
        return self._cache["invjt"]

    def centroids(self):
        if "centroids" not in self._cache:
            self._cache["centroids"] = self.nodes[self.elements].mean(axis=1)
        return self._cache["centroids"]

    def diameters(self):
        if "diam" not in self._cache:
            if self.dim == 1:
                self._cache["diam"] = self.areas().copy()
            else:
                p = self.nodes[self.elements]
                a = np.linalg.norm(p[:, 1] - p[:, 0], axis=1)
                b = np.linalg.norm(p[:, 2] - p[:, 1], axis=1)
                c = np.linalg.norm(p[:, 0] - p[:, 2], axis=1)
                self._cache["diam"] = np.maximum(a, np.maximum(b, c))
        return self._cache["diam"]

    # -- edge views ------------------------------------------------------

    def _edge_view(self, idx):
        return Edge(
            index=int(idx),
            nodes=tuple(int(v) for v in self.edge_nodes[idx]),
            elems=tuple(int(e) for e in self.edge_elems[idx]),
            normal=self.edge_normals[idx],
            length=float(self.edge_lengths[idx]),
            tag=self.edge_tags[idx],
        )

    def interior_edges(self):
        return [self._edge_view(i) for i in np.flatnonzero(~self.boundary_mask)]

    def boundary_edges(self):
        return [self._edge_view(i) for i in np.flatnonzero(self.boundary_mask)]

    @property
    def n_elements(self):
        return len(self.elements)

    @property
    def n_nodes(self):
        return len(self.nodes)


def mesh_from_arrays(dim, nodes, elements, edge_tags=None, domain_name=""):
    """Build a Mesh from raw arrays; edge_tags as (i, j, tag) triples."""
    return Mesh(dim, nodes, elements, edge_tags=edge_tags, domain_name=domain_name)


def uniform_interval_mesh(n):
    """n equal elements on (0, 1); endpoints tagged left/right."""
    if n < 1:
        raise ValueError("need at least one element")
    nodes = np.linspace(0.0, 1.0, n + 1)
    elements = np.column_stack([np.arange(n), np.arange(1, n + 1)])
    mesh = Mesh(1, nodes, elements, domain_name="interval")
    _tag_interval_ends(mesh)
    return mesh


def _tag_interval_ends(mesh):
    xmin = mesh.nodes.min()
    xmax = mesh.nodes.max()
    for idx in np.flatnonzero(mesh.boundary_mask):
        v = mesh.edge_nodes[idx, 0]
        mesh.edge_tags[idx] = "left" if mesh.nodes[v] == xmin else "right"


def _point_in_polygon(points, verts):
    """Even-odd ray casting, vectorized over points."""
    x = points[:, 0]
    y = points[:, 1]
    inside = np.zeros(len(points), dtype=bool)
    nv = len(verts)
    for i in range(nv):
        x1, y1 = verts[i]
        x2, y2 = verts[(i + 1) % nv]
        crosses = (y1 > y) != (y2 > y)
        with np.errstate(divide="ignore", invalid="ignore"):
            xint = x1 + (y - y1) * (x2 - x1) / (y2 - y1)
        inside ^= crosses & (x < np.where(crosses, xint, np.inf))
    return inside


def triangulate(domain, target_h):
    """Structured conforming triangulation of a built-in polygon.

    target_h is the grid pitch of the underlying square lattice (each
    kept cell is split into two right triangles); the actual max element
    diameter is sqrt(2) * pitch and is recorded on the mesh.
    """
    if domain.dim == 1:
        return uniform_interval_mesh(max(1, int(math.ceil(1.0 / target_h))))
    if target_h <= 0:
        raise ValueError("target_h must be positive")
    verts = np.asarray(domain.vertices, dtype=float)
    xmin, ymin = verts.min(axis=0)
    xmax, ymax = verts.max(axis=0)
    extent = max(xmax - xmin, ymax - ymin)
    n = max(1, int(math.ceil(extent / target_h - 1e-12)))
    pitch = extent / n
    # polygon vertices must land on lattice nodes for an exact boundary
    for _ in range(n + 4):
        offs = (verts - np.array([xmin, ymin])) / pitch
        if np.allclose(offs, np.round(offs), atol=1e-9):
            break
        n += 1
        pitch = extent / n
    else:
        raise ValueError("target_h incompatible with the polygon vertices")
    nx = int(round((xmax - xmin) / pitch))
    ny = int(round((ymax - ymin) / pitch))
    xs = xmin + pitch * np.arange(nx + 1)
    ys = ymin + pitch * np.arange(ny + 1)
    gx, gy = np.meshgrid(np.arange(nx), np.arange(ny), indexing="ij")
    cx = xmin + pitch * (gx.ravel() + 0.5)
    cy = ymin + pitch * (gy.ravel() + 0.5)
    keep = _point_in_polygon(np.column_stack([cx, cy]), verts)
    ci = gx.ravel()[keep]
    cj = gy.ravel()[keep]
    if len(ci) == 0:
        raise ValueError("no cells inside the polygon at this target_h")

    def node_id(i, j):
        return i * (ny + 1) + j

    v00 = node_id(ci, cj)
    v10 = node_id(ci + 1, cj)
    v11 = node_id(ci + 1, cj + 1)
    v01 = node_id(ci, cj + 1)
    tris = np.concatenate(
        [
            np.column_stack([v00, v10, v11]),
            np.column_stack([v00, v11, v01]),
        ],
        axis=0,
    )
    used = np.unique(tris)
    remap = -np.ones((nx + 1) * (ny + 1), dtype=np.int64)
    remap[used] = np.arange(len(used))
    tris = remap[tris]
    gxx, gyy = np.meshgrid(xs, ys, indexing="ij")
    nodes = np.column_stack([gxx.ravel()[used], gyy.ravel()[used]])
    mesh = Mesh(2, nodes, tris, domain_name=domain.name)
    _tag_from_polygon(mesh, domain)
    return mesh


def _tag_from_polygon(mesh, domain):
    """Assign each boundary edge the tag of the polygon side containing it."""
    verts = np.asarray(domain.vertices, dtype=float)
    nv = len(verts)
    for idx in np.flatnonzero(mesh.boundary_mask):
        a, b = mesh.edge_nodes[idx]
        mid = 0.5 * (mesh.nodes[a] + mesh.nodes[b])
        tag = None
        for s in range(nv):
            p = verts[s]
            q = verts[(s + 1) % nv]
            d = q - p
            ll = float(np.dot(d, d))
            t = float(np.dot(mid - p, d)) / ll
            if -1e-12 <= t <= 1.0 + 1e-12:
                off = mid - (p + t * d)
                if float(np.dot(off, off)) <= (1e-9 * math.sqrt(ll)) ** 2:
                    tag = domain.side_tags[s]
                    break
        if tag is None:
            raise ValueError("boundary edge not on any polygon side")
        mesh.edge_tags[idx] = tag


def geometric_refine(mesh, corners, sigma, layers):
    """Geometric grading toward the listed corner points.

    Every element touching a corner is replaced by a fan of similar
    triangles: scaled copies of its far edge at radii sigma^j, j=1..L,
    leaving the innermost triangle of size ~sigma^L.  Neighboring fans
    subdivide their shared edge identically, so the result is conforming
    without any closure step.  In 1D the corner element is split at
    sigma^j * h0.
    """
    if not 0.0 < sigma < 1.0:
        raise ValueError("sigma must be in (0, 1)")
    if layers < 1:
        raise ValueError("need at least one layer")
    if mesh.dim == 1:
        return _geometric_refine_1d(mesh, corners, sigma, layers)
    return _geometric_refine_2d(mesh, corners, sigma, layers)


def _corner_node(mesh, corner):
    pts = np.atleast_1d(np.asarray(corner, dtype=float))
    if mesh.dim == 1:
        dist = np.abs(mesh.nodes - pts[0])
    else:
        dist = np.linalg.norm(mesh.nodes - pts[None, :], axis=1)
    idx = int(np.argmin(dist))
    if dist[idx] > 1e-9:
        raise ValueError(f"corner {corner} is not a mesh node")
    return idx


def _boundary_tag_triples(mesh):
    out = []
    for idx in np.flatnonzero(mesh.boundary_mask):
        tag = mesh.edge_tags[idx]
        if tag is not None:
            a, b = mesh.edge_nodes[idx]
            out.append((int(a), int(b), tag, mesh.nodes[a].copy(), mesh.nodes[b].copy()))
    return out


def _geometric_refine_1d(mesh, corners, sigma, layers):
    coords = list(mesh.nodes)
    breakpoints = set(float(x) for x in coords)
    for corner in corners:
        ci = _corner_node(mesh, corner)
        cx = float(mesh.nodes[ci])
        # the element incident to the corner
        incident = [
            (a, b)
            for a, b in mesh.elements
            if a == ci or b == ci
        ]
        if not incident:
            continue
        a, b = incident[0]
        other = float(mesh.nodes[b if a == ci else a])
        for j in range(1, layers + 1):
            breakpoints.add(cx + (sigma ** j) * (other - cx))
    nodes = np.array(sorted(breakpoints))
    elements = np.column_stack([np.arange(len(nodes) - 1), np.arange(1, len(nodes))])
    out = Mesh(1, nodes, elements, domain_name=mesh.domain_name)
    # endpoint tags carry over by position
    old_tags = {}
    for idx in np.flatnonzero(mesh.boundary_mask):
        old_tags[float(mesh.nodes[mesh.edge_nodes[idx, 0]])] = mesh.edge_tags[idx]
    for idx in np.flatnonzero(out.boundary_mask):
        x = float(out.nodes[out.edge_nodes[idx, 0]])
        out.edge_tags[idx] = old_tags.get(x)
    return out


def _geometric_refine_2d(mesh, corners, sigma, layers):
    corner_ids = {_corner_node(mesh, c) for c in corners}
    node_list = [tuple(p) for p in mesh.nodes]
    node_index = {p: i for i, p in enumerate(node_list)}

    def get_node(p):
        key = (float(p[0]), float(p[1]))
        if key not in node_index:
            node_index[key] = len(node_list)
            node_list.append(key)
        return node_index[key]

    new_elements = []
    for tri in mesh.elements:
        touching = [v for v in tri if v in corner_ids]
        if not touching:
            new_elements.append(tuple(int(v) for v in tri))
            continue
        c = touching[0]  # structured meshes: one corner per element
        rolled = list(tri)
        while rolled[0] != c:
            rolled = rolled[1:] + rolled[:1]
        _, a, b = rolled
        pc = mesh.nodes[c]
        pa = mesh.nodes[a]
        pb = mesh.nodes[b]
        ring_a = [int(a)] + [
            get_node(pc + (sigma ** j) * (pa - pc)) for j in range(1, layers + 1)
        ]
        ring_b = [int(b)] + [
            get_node(pc + (sigma ** j) * (pb - pc)) for j in range(1, layers + 1)
        ]
        new_elements.append((int(c), ring_a[layers], ring_b[layers]))
        for j in range(layers, 0, -1):
            # trapezoid between radii sigma^j and sigma^(j-1)
            new_elements.append((ring_a[j], ring_a[j - 1], ring_b[j - 1]))
            new_elements.append((ring_a[j], ring_b[j - 1], ring_b[j]))
    nodes = np.array(node_list, dtype=float)
    out = Mesh(2, nodes, np.array(new_elements, dtype=np.int64), domain_name=mesh.domain_name)
    _retag_from_parent(out, mesh)
    return out


def _retag_from_parent(mesh, parent):
    """Tag boundary edges of a refined mesh from the parent boundary."""
    segs = _boundary_tag_triples(parent)
    for idx in np.flatnonzero(mesh.boundary_mask):
        a, b = mesh.edge_nodes[idx]
        mid = 0.5 * (mesh.nodes[a] + mesh.nodes[b])
        for _, _, tag, p, q in segs:
            d = q - p
            ll = float(np.dot(d, d))
            t = float(np.dot(mid - p, d)) / ll
            if -1e-12 <= t <= 1.0 + 1e-12:
                off = mid - (p + t * d)
                if float(np.dot(off, off)) <= 1e-18 + 1e-12 * ll:
                    mesh.edge_tags[idx] = tag
                    break


def n_lambda(ndof, k, dim):
    """Degrees of freedom per wavelength: 2 pi N / k in 1D and
    2 pi sqrt(N) / k in 2D (per-direction count)."""
    if dim == 1:
        return 2.0 * math.pi * ndof / k
    if dim == 2:
        return 2.0 * math.pi * math.sqrt(ndof) / k
    raise ValueError(f"unsupported dim {dim}")


def mesh_to_text(mesh):
    """Plain text form: header, node lines, element lines, edge tag lines.

    Floats are written with repr so a write/read cycle is bit-exact.
    """
    lines = [f"{mesh.dim} {mesh.n_nodes} {mesh.n_elements}"]
    if mesh.dim == 1:
        for x in mesh.nodes:
            lines.append(repr(float(x)))
    else:
        for x, y in mesh.nodes:
            lines.append(f"{float(x)!r} {float(y)!r}")
    for elem in mesh.elements:
        lines.append(" ".join(str(int(v)) for v in elem))
    tagged = []
    for idx in np.flatnonzero(mesh.boundary_mask):
        if mesh.edge_tags[idx] is not None:
            a, b = (int(v) for v in mesh.edge_nodes[idx])
            tagged.append((min(a, b), max(a, b), mesh.edge_tags[idx]))
    for a, b, tag in sorted(tagged):
        lines.append(f"edge {a} {b} {tag}")
    return "\n".join(lines) + "\n"


def mesh_from_text(text):
    lines = [ln for ln in text.splitlines() if ln.strip()]
    dim, nn, ne = (int(tok) for tok in lines[0].split())
    pos = 1
    nodes = []
    for i in range(nn):
        nodes.append([float(tok) for tok in lines[pos + i].split()])
    pos += nn
    elements = []
    for i in range(ne):
        elements.append([int(tok) for tok in lines[pos + i].split()])
    pos += ne
    tags = []
    for ln in lines[pos:]:
        toks = ln.split()
        if toks[0] != "edge":
            raise ValueError(f"unexpected line in mesh file: {ln!r}")
        tags.append((int(toks[1]), int(toks[2]), toks[3]))
    nodes = np.array(nodes, dtype=float)
    if dim == 1:
        nodes = nodes.ravel()
    return Mesh(dim, nodes, np.array(elements, dtype=np.int64), edge_tags=tags)


def save_mesh(mesh, path):
    with open(path, "w") as fh:
        fh.write(mesh_to_text(mesh))


def load_mesh(path):
    with open(path) as fh:
        return mesh_from_text(fh.read())


def validate_mesh(mesh, max_shape_reg=None):
    """Conformity and orientation checks; raises on violation.

    Shape regularity is only enforced when max_shape_reg is given:
    structured meshes stay below 5, while strongly graded corner fans
    (sigma << 1) are legitimately anisotropic.
    """
    if mesh.dim == 1:
        lengths = mesh.nodes[mesh.elements[:, 1]] - mesh.nodes[mesh.elements[:, 0]]
        if np.any(lengths <= 0):
            raise ValueError("1D elements must be ascending")
        if np.sum(mesh.boundary_mask) != 2:
            raise ValueError("interval mesh must have exactly two boundary nodes")
        return True
    if np.any(mesh.areas() <= 0):
        raise ValueError("non-positive element area")
    # every element edge accounted for exactly once
    counts = np.where(mesh.boundary_mask, 1, 2)
    if counts.sum() != 3 * mesh.n_elements:
        raise ValueError("edge bookkeeping does not cover all element sides")
    # normals are unit and point out of the plus element
    nrm = np.linalg.norm(mesh.edge_normals, axis=1)
    if not np.allclose(nrm, 1.0, atol=1e-12):
        raise ValueError("non-unit edge normal")
    mids = 0.5 * (mesh.nodes[mesh.edge_nodes[:, 0]] + mesh.nodes[mesh.edge_nodes[:, 1]])
    cplus = mesh.centroids()[mesh.edge_elems[:, 0]]
    if np.any(np.sum((mids - cplus) * mesh.edge_normals, axis=1) <= 0):
        raise ValueError("edge normal does not point out of its plus element")
    if max_shape_reg is not None and mesh.shape_reg > max_shape_reg:
        raise ValueError(
            f"shape regularity {mesh.shape_reg:.2f} exceeds {max_shape_reg}"
        )
    return True
