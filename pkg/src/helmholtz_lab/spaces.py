"""Discrete function spaces over interval and triangle meshes.

Four families are provided: the conforming hierarchical polynomial space
of elementwise degree p, the 1D nodally exact space whose shape functions
solve the homogeneous equation on each element, partition-of-unity spaces
with wave enrichment attached to mesh nodes, and discontinuous Trefftz
spaces carrying plane waves or generalized harmonic polynomials on each
element.

All spaces expose the same small surface: `kind`, `mesh`, `ndof`,
`conforming`, `element_dofs(ei)` and `eval_basis(ei, pts)`.  Basis values
come back as an (npts, nloc) array and gradients as (npts, nloc, dim).
"""

import math
from dataclasses import dataclass, field

import numpy as np

from .numerics import bessel_j

_REF_GRAD_LAM = np.array([[-1.0, -1.0], [1.0, 0.0], [0.0, 1.0]])
_LOCAL_EDGES = ((0, 1), (1, 2), (0, 2))


def _legendre_table(x, nmax):
    """Legendre polynomials P_0..P_nmax and first two derivatives at x.

    Returns three arrays of shape (nmax+1,) + x.shape, built from the
    three-term recurrence and its differentiated forms.
    """
    x = np.asarray(x, dtype=float)
    shape = (nmax + 1,) + x.shape
    vals = np.zeros(shape)
    der1 = np.zeros(shape)
    der2 = np.zeros(shape)
    vals[0] = 1.0
    if nmax >= 1:
        vals[1] = x
        der1[1] = 1.0
    for n in range(1, nmax):
        vals[n + 1] = ((2 * n + 1) * x * vals[n] - n * vals[n - 1]) / (n + 1)
        der1[n + 1] = ((2 * n + 1) * (vals[n] + x * der1[n]) - n * der1[n - 1]) / (n + 1)
        der2[n + 1] = ((2 * n + 1) * (2 * der1[n] + x * der2[n]) - n * der2[n - 1]) / (n + 1)
    return vals, der1, der2


def integrated_legendre(t, q):
    """Integrated Legendre function N_q(t) = (P_q - P_{q-2}) / sqrt(2(2q-1)).

    Vanishes at t = -1 and t = 1 for every q >= 2; these are the interior
    modes of the hierarchical 1D element and the edge traces in 2D.
    """
    if q < 2:
        raise ValueError("integrated Legendre modes start at q=2")
    vals, _, _ = _legendre_table(t, q)
    return (vals[q] - vals[q - 2]) / math.sqrt(2.0 * (2 * q - 1))


def _edge_kernel_coeff(q):
    # N_q(xi) = lam_a lam_b K_{q-2}(xi) on the edge, with
    # K_{q-2} = c_q P'_{q-1} and lam_a lam_b = (1 - xi^2)/4 there.
    return -2.0 * math.sqrt(2.0) * math.sqrt(2.0 * q - 1.0) / ((q - 1.0) * q)


def _h1_local_dim_2d(p):
    return 3 + 3 * (p - 1) + (p - 1) * (p - 2) // 2


def _shape_functions_2d(p, lam, grad_lam, signs):
    """Hierarchical triangle shape functions from barycentric data.

    `lam` has shape (npts, 3), `grad_lam` (3, 2) holds the constant
    barycentric gradients, and `signs` is the per-mode orientation vector
    of length nloc (vertices and bubbles carry +1).
    """
    npts = lam.shape[0]
    nloc = _h1_local_dim_2d(p)
    vals = np.zeros((npts, nloc))
    grads = np.zeros((npts, nloc, 2))
    for v in range(3):
        vals[:, v] = lam[:, v]
        grads[:, v, :] = grad_lam[v]
    pos = 3
    if p >= 2:
        for a, b in _LOCAL_EDGES:
            xi = lam[:, b] - lam[:, a]
            _, der1, der2 = _legendre_table(xi, p - 1)
            prod = lam[:, a] * lam[:, b]
            dprod = np.outer(lam[:, b], grad_lam[a]) + np.outer(lam[:, a], grad_lam[b])
            dxi = grad_lam[b] - grad_lam[a]
            for q in range(2, p + 1):
                c = _edge_kernel_coeff(q)
                kern = c * der1[q - 1]
                dkern = c * der2[q - 1]
                s = signs[pos]
                vals[:, pos] = s * prod * kern
                grads[:, pos, :] = s * (
                    dprod * kern[:, None] + np.outer(prod * dkern, dxi)
                )
                pos += 1
    if p >= 3:
        eta1 = lam[:, 1] - lam[:, 0]
        eta2 = 2.0 * lam[:, 2] - 1.0
        p1, d1, _ = _legendre_table(eta1, p - 3)
        p2, d2, _ = _legendre_table(eta2, p - 3)
        bub = lam[:, 0] * lam[:, 1] * lam[:, 2]
        dbub = (
            np.outer(lam[:, 1] * lam[:, 2], grad_lam[0])
            + np.outer(lam[:, 0] * lam[:, 2], grad_lam[1])
            + np.outer(lam[:, 0] * lam[:, 1], grad_lam[2])
        )
        deta1 = grad_lam[1] - grad_lam[0]
        deta2 = 2.0 * grad_lam[2]
        for i in range(p - 2):
            for j in range(p - 2 - i):
                f = p1[i] * p2[j]
                df = np.outer(d1[i] * p2[j], deta1) + np.outer(p1[i] * d2[j], deta2)
                vals[:, pos] = bub * f
                grads[:, pos, :] = dbub * f[:, None] + bub[:, None] * df
                pos += 1
    return vals, grads


class H1Space:
    """Conforming hierarchical polynomial space of elementwise degree p.

    Vertex hat functions plus integrated-Legendre edge modes (degree 2..p)
    plus interior bubbles.  Edge-mode orientation is fixed by global node
    index order, so shared modes agree across neighboring elements.
    """

    kind = "h1_polynomial"
    conforming = True

    def __init__(self, mesh, p):
        self.mesh = mesh
        self.p = int(p)
        if mesh.dim == 1:
            self.nloc = p + 1
            self.ndof = mesh.n_nodes + mesh.n_elements * (p - 1)
        else:
            self.nloc = _h1_local_dim_2d(p)
            self._edge_index = {
                (min(a, b), max(a, b)): i
                for i, (a, b) in enumerate(mesh.edge_nodes)
            }
            n_edges = len(mesh.edge_nodes)
            n_bub = (p - 1) * (p - 2) // 2
            self.ndof = mesh.n_nodes + n_edges * (p - 1) + mesh.n_elements * n_bub
            self._edge_dof_base = mesh.n_nodes
            self._bubble_dof_base = mesh.n_nodes + n_edges * (p - 1)
        self._dofs = None
        self._signs = None

    # -- connectivity ---------------------------------------------------

    def element_dofs(self, ei):
        return self.dof_matrix()[ei]

    def dof_matrix(self):
        """Global DOF indices per element, shape (n_elements, nloc)."""
        if self._dofs is not None:
            return self._dofs
        mesh, p = self.mesh, self.p
        ne = mesh.n_elements
        dofs = np.empty((ne, self.nloc), dtype=np.int64)
        if mesh.dim == 1:
            dofs[:, :2] = mesh.elements
            for q in range(2, p + 1):
                dofs[:, q] = mesh.n_nodes + np.arange(ne) * (p - 1) + (q - 2)
        else:
            dofs[:, :3] = mesh.elements
            pos = 3
            if p >= 2:
                for a, b in _LOCAL_EDGES:
                    ga = mesh.elements[:, a]
                    gb = mesh.elements[:, b]
                    eidx = np.array(
                        [
                            self._edge_index[(min(x, y), max(x, y))]
                            for x, y in zip(ga, gb)
                        ],
                        dtype=np.int64,
                    )
                    for q in range(2, p + 1):
                        dofs[:, pos] = self._edge_dof_base + eidx * (p - 1) + (q - 2)
                        pos += 1
            n_bub = (p - 1) * (p - 2) // 2
            if n_bub:
                base = self._bubble_dof_base + np.arange(ne) * n_bub
                for b in range(n_bub):
                    dofs[:, pos + b] = base + b
        self._dofs = dofs
        return dofs

    def orientation_signs(self):
        """Per-element mode signs, shape (n_elements, nloc).

        An edge mode of degree q picks up (-1)^q when the local traversal
        of the edge runs against the global index order.
        """
        if self._signs is not None:
            return self._signs
        mesh, p = self.mesh, self.p
        signs = np.ones((mesh.n_elements, self.nloc))
        if mesh.dim == 2 and p >= 2:
            pos = 3
            for a, b in _LOCAL_EDGES:
                reversed_ = mesh.elements[:, a] > mesh.elements[:, b]
                for q in range(2, p + 1):
                    if q % 2 == 1:
                        signs[reversed_, pos] = -1.0
                    pos += 1
        self._signs = signs
        return signs

    # -- evaluation ------------------------------------------------------

    def _barycentric(self, ei, pts):
        mesh = self.mesh
        v0 = mesh.nodes[mesh.elements[ei, 0]]
        inv_jt = mesh.inv_jacobians_t()[ei]
        ref = (pts - v0) @ inv_jt
        lam = np.empty((pts.shape[0], 3))
        lam[:, 0] = 1.0 - ref[:, 0] - ref[:, 1]
        lam[:, 1] = ref[:, 0]
        lam[:, 2] = ref[:, 1]
        grad_lam = _REF_GRAD_LAM @ inv_jt.T
        return lam, grad_lam

    def eval_basis(self, ei, pts):
        pts = np.asarray(pts, dtype=float)
        if self.mesh.dim == 1:
            return self._eval_basis_1d(ei, pts)
        lam, grad_lam = self._barycentric(ei, pts)
        return _shape_functions_2d(self.p, lam, grad_lam, self.orientation_signs()[ei])

    def _eval_basis_1d(self, ei, pts):
        mesh, p = self.mesh, self.p
        n0, n1 = mesh.elements[ei]
        x0, x1 = mesh.nodes[n0], mesh.nodes[n1]
        h = x1 - x0
        xi = (pts - x0) / h
        npts = pts.shape[0]
        vals = np.zeros((npts, p + 1))
        grads = np.zeros((npts, p + 1, 1))
        vals[:, 0] = 1.0 - xi
        vals[:, 1] = xi
        grads[:, 0, 0] = -1.0 / h
        grads[:, 1, 0] = 1.0 / h
        if p >= 2:
            t = 2.0 * xi - 1.0
            tab, der1, _ = _legendre_table(t, p)
            for q in range(2, p + 1):
                scale = math.sqrt(2.0 * (2 * q - 1))
                vals[:, q] = (tab[q] - tab[q - 2]) / scale
                grads[:, q, 0] = 2.0 / h * (der1[q] - der1[q - 2]) / scale
        return vals, grads

    def reference_tables(self, ref_pts):
        """Shape values and reference gradients at reference points.

        2D fast path for assembly: the returned gradients are with respect
        to reference coordinates for a canonically oriented element; the
        caller applies per-element Jacobians and `orientation_signs`.
        """
        if self.mesh.dim != 1 and ref_pts.shape[1] == 2:
            lam = np.column_stack(
                [1.0 - ref_pts[:, 0] - ref_pts[:, 1], ref_pts[:, 0], ref_pts[:, 1]]
            )
            unit = np.ones(self.nloc)
            return _shape_functions_2d(self.p, lam, _REF_GRAD_LAM, unit)
        raise ValueError("reference tables are a 2D facility")


class NodallyExact1D:
    """1D space whose hat-like shape functions solve -u'' - k^2 u = 0.

    On each element the two shape functions are sin(k(x_r - x))/sin(k h)
    and sin(k(x - x_l))/sin(k h); they interpolate nodal values exactly
    and make the Galerkin solution of the model problem nodally exact.
    Requires kh < pi on every element so sin(kh) stays away from zero.
    """

    kind = "nodally_exact_1d"
    conforming = True

    def __init__(self, mesh, k):
        if mesh.dim != 1:
            raise ValueError("nodally exact space is one dimensional")
        self.mesh = mesh
        self.k = float(k)
        lengths = np.abs(np.diff(np.sort(mesh.nodes)))
        if np.max(self.k * lengths) >= math.pi:
            raise ValueError("nodally exact space requires k*h < pi per element")
        self.ndof = mesh.n_nodes
        self.nloc = 2

    def element_dofs(self, ei):
        return self.mesh.elements[ei]

    def eval_basis(self, ei, pts):
        pts = np.asarray(pts, dtype=float)
        mesh, k = self.mesh, self.k
        n0, n1 = mesh.elements[ei]
        x0, x1 = mesh.nodes[n0], mesh.nodes[n1]
        s = math.sin(k * (x1 - x0))
        npts = pts.shape[0]
        vals = np.empty((npts, 2))
        grads = np.empty((npts, 2, 1))
        vals[:, 0] = np.sin(k * (x1 - pts)) / s
        vals[:, 1] = np.sin(k * (pts - x0)) / s
        grads[:, 0, 0] = -k * np.cos(k * (x1 - pts)) / s
        grads[:, 1, 0] = k * np.cos(k * (pts - x0)) / s
        return vals, grads


# -- wave bases ----------------------------------------------------------


@dataclass(frozen=True)
class PlaneWaveBasis:
    """p plane waves of wavenumber k with equispaced directions."""

    k: float
    p: int

    def __post_init__(self):
        if self.p < 1:
            raise ValueError("need at least one plane wave")

    @property
    def dim(self):
        return self.p

    @property
    def directions(self):
        angles = 2.0 * math.pi * np.arange(self.p) / self.p
        return np.column_stack([np.cos(angles), np.sin(angles)])

    def eval(self, y):
        """Values and gradients of e^{ik w_n . y} at displacements y."""
        y = np.asarray(y, dtype=float)
        phase = np.exp(1j * self.k * (y @ self.directions.T))
        grads = 1j * self.k * phase[:, :, None] * self.directions[None, :, :]
        return phase, grads


@dataclass(frozen=True)
class GhpBasis:
    """Generalized harmonic polynomials J_|n|(kr) e^{i n phi}, |n| <= p."""

    k: float
    p: int

    def __post_init__(self):
        if self.p < 0:
            raise ValueError("maximal mode order must be nonnegative")

    @property
    def dim(self):
        return 2 * self.p + 1

    @property
    def modes(self):
        return np.arange(-self.p, self.p + 1)

    def eval(self, y):
        """Values and gradients of the circular wave modes at displacements y.

        The radial derivative uses J'_n = (J_{n-1} - J_{n+1})/2; at the
        center the values reduce to the n=0 Kronecker limit and only the
        |n| = 1 modes carry a nonzero gradient, (k/2)(1, i sign n).
        """
        y = np.asarray(y, dtype=float)
        k, p = self.k, self.p
        r = np.hypot(y[:, 0], y[:, 1])
        phi = np.arctan2(y[:, 1], y[:, 0])
        origin = r < 1e-13
        r_safe = np.where(origin, 1.0, r)
        # J_0 .. J_{p+1} at kr, plus J_{-1} = -J_1 for the n=0 derivative
        jn = np.stack([bessel_j(m, k * r_safe) for m in range(p + 2)])
        npts = y.shape[0]
        vals = np.empty((npts, 2 * p + 1), dtype=complex)
        grads = np.empty((npts, 2 * p + 1, 2), dtype=complex)
        cos_phi, sin_phi = np.cos(phi), np.sin(phi)
        for idx, n in enumerate(range(-p, p + 1)):
            m = abs(n)
            ang = np.exp(1j * n * phi)
            jm = jn[m]
            lower = -jn[1] if m == 0 else jn[m - 1]
            dj = 0.5 * (lower - jn[m + 1])
            dr = k * dj * ang
            dphi_over_r = 1j * n * jm * ang / r_safe
            vals[:, idx] = jm * ang
            grads[:, idx, 0] = cos_phi * dr - sin_phi * dphi_over_r
            grads[:, idx, 1] = sin_phi * dr + cos_phi * dphi_over_r
            if np.any(origin):
                vals[origin, idx] = 1.0 if n == 0 else 0.0
                gx = gy = 0.0
                if m == 1:
                    gx = 0.5 * k
                    gy = 0.5j * k * np.sign(n)
                grads[origin, idx, 0] = gx
                grads[origin, idx, 1] = gy
        return vals, grads


class PumSpace:
    """Partition-of-unity space: hat functions times shifted wave enrichment.

    Global basis functions are phi_i(x) * b_m(x - x_i) for every mesh node
    x_i and enrichment function b_m, giving ndof = n_nodes * enrichment dim.
    Conforming because the hats are.
    """

    kind = "pum"
    conforming = True

    def __init__(self, mesh, k, enrichment):
        if mesh.dim != 2:
            raise ValueError("partition-of-unity space needs a 2D mesh")
        if enrichment.dim < 2:
            raise ValueError("enrichment must have dimension at least 2")
        if abs(enrichment.k - float(k)) > 1e-12 * max(1.0, abs(k)):
            raise ValueError("enrichment wavenumber differs from the space's k")
        self.mesh = mesh
        self.k = float(k)
        self.enrichment = enrichment
        self.nloc = 3 * enrichment.dim
        self.ndof = mesh.n_nodes * enrichment.dim

    def element_dofs(self, ei):
        m = self.enrichment.dim
        verts = self.mesh.elements[ei]
        return (verts[:, None] * m + np.arange(m)[None, :]).ravel()

    def eval_basis(self, ei, pts):
        pts = np.asarray(pts, dtype=float)
        mesh = self.mesh
        m = self.enrichment.dim
        verts = mesh.elements[ei]
        v0 = mesh.nodes[verts[0]]
        inv_jt = mesh.inv_jacobians_t()[ei]
        ref = (pts - v0) @ inv_jt
        lam = np.column_stack([1.0 - ref[:, 0] - ref[:, 1], ref[:, 0], ref[:, 1]])
        grad_lam = _REF_GRAD_LAM @ inv_jt.T
        npts = pts.shape[0]
        vals = np.empty((npts, self.nloc), dtype=complex)
        grads = np.empty((npts, self.nloc, 2), dtype=complex)
        for v in range(3):
            bvals, bgrads = self.enrichment.eval(pts - mesh.nodes[verts[v]])
            sl = slice(v * m, (v + 1) * m)
            vals[:, sl] = lam[:, v, None] * bvals
            grads[:, sl, :] = (
                bvals[:, :, None] * grad_lam[v][None, None, :]
                + lam[:, v, None, None] * bgrads
            )
        return vals, grads


class TrefftzSpace:
    """Discontinuous space with an independent wave basis per element.

    Each element carries a copy of the local basis centered at its
    centroid, which keeps phases and Bessel arguments small.
    """

    conforming = False

    def __init__(self, mesh, k, local):
        if mesh.dim != 2:
            raise ValueError("Trefftz spaces need a 2D mesh")
        if abs(local.k - float(k)) > 1e-12 * max(1.0, abs(k)):
            raise ValueError("local basis wavenumber differs from the space's k")
        self.mesh = mesh
        self.k = float(k)
        self.local = local
        self.kind = (
            "trefftz_pw" if isinstance(local, PlaneWaveBasis) else "trefftz_ghp"
        )
        self.nloc = local.dim
        self.ndof = mesh.n_elements * local.dim

    def element_dofs(self, ei):
        m = self.nloc
        return np.arange(ei * m, (ei + 1) * m)

    def eval_basis(self, ei, pts):
        pts = np.asarray(pts, dtype=float)
        center = self.mesh.centroids()[ei]
        return self.local.eval(pts - center)


# -- factories -----------------------------------------------------------


def h1_space(mesh, p):
    """Conforming degree-p space; p <= 4 in 1D, p <= 10 in 2D."""
    p = int(p)
    cap = 4 if mesh.dim == 1 else 10
    if p < 1 or p > cap:
        raise ValueError(f"degree p={p} unsupported in {mesh.dim}D (1..{cap})")
    return H1Space(mesh, p)


def nodally_exact_space_1d(mesh, k):
    return NodallyExact1D(mesh, k)


def pum_space(mesh, k, enrichment):
    return PumSpace(mesh, k, enrichment)


def trefftz_space(mesh, k, local):
    return TrefftzSpace(mesh, k, local)


def evaluate(space, coeffs, point, element_hint):
    """Value and gradient of a discrete function at one point.

    The point must lie inside (or on the boundary of) the hinted element.
    """
    coeffs = np.asarray(coeffs)
    if coeffs.shape[0] != space.ndof:
        raise ValueError("coefficient vector length does not match space")
    point = np.asarray(point, dtype=float)
    mesh = space.mesh
    ei = int(element_hint)
    tol = 1e-10
    if mesh.dim == 1:
        pts = np.atleast_1d(point.ravel()[0] if point.ndim else float(point))
        n0, n1 = mesh.elements[ei]
        x0, x1 = mesh.nodes[n0], mesh.nodes[n1]
        slack = tol * (x1 - x0)
        if not (x0 - slack <= pts[0] <= x1 + slack):
            raise ValueError("point lies outside the hinted element")
    else:
        pts = point.reshape(1, 2)
        v0 = mesh.nodes[mesh.elements[ei, 0]]
        ref = (pts - v0) @ mesh.inv_jacobians_t()[ei]
        lam = np.array([1.0 - ref[0, 0] - ref[0, 1], ref[0, 0], ref[0, 1]])
        if np.min(lam) < -tol:
            raise ValueError("point lies outside the hinted element")
    vals, grads = space.eval_basis(ei, pts)
    c = coeffs[space.element_dofs(ei)]
    value = vals[0] @ c
    gradient = c @ grads[0]
    return value, gradient


def near_unity_element(enrichment):
    """Coefficients making the enrichment reproduce 1 to second order.

    Returns c with sum_m c_m b_m(y) = 1 + O((k|y|)^2) near y = 0.  For GHP
    this is the J_0 mode alone; for plane waves the construction pairs
    opposite (even p) or nearly opposite (odd p) directions to cancel the
    first-order phase.
    """
    if isinstance(enrichment, GhpBasis):
        c = np.zeros(enrichment.dim)
        c[enrichment.p] = 1.0  # the n = 0 mode
        return c
    p = enrichment.p
    if p < 2:
        raise ValueError("near-unity construction needs p >= 2 plane waves")
    c = np.zeros(p)
    if p % 2 == 0:
        c[0] = 0.5
        c[p // 2] = 0.5
    else:
        m = (p - 1) // 2
        gamma = math.cos(math.pi / p)
        c[0] = gamma / (1.0 + gamma)
        c[m] = c[m + 1] = 0.5 / (1.0 + gamma)
    return c


def near_unity_deficit(space, samples_per_elem=10, rng=None):
    """Max deviation of the near-unity PUM function from 1 over the mesh.

    Builds the global function sum_i phi_i(x) psi(x - x_i) with the
    coefficients from `near_unity_element` and samples it at random
    interior points of every element.
    """
    if space.kind != "pum":
        raise ValueError("near-unity deficit is a PUM diagnostic")
    c = near_unity_element(space.enrichment)
    coeffs = np.tile(c, space.mesh.n_nodes).astype(complex)
    mesh = space.mesh
    if rng is None:
        rng = np.random.default_rng(0)
    worst = 0.0
    for ei in range(mesh.n_elements):
        bary = rng.dirichlet(np.ones(3), size=samples_per_elem)
        pts = bary @ mesh.nodes[mesh.elements[ei]]
        vals, _ = space.eval_basis(ei, pts)
        psi = vals @ coeffs[space.element_dofs(ei)]
        worst = max(worst, float(np.max(np.abs(1.0 - psi))))
    return worst
