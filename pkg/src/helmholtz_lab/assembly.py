"""Assembly of sesquilinear forms, load vectors and the linear algebra.

Every matrix follows one convention: forms are linear in the first
(trial) argument and conjugate-linear in the second (test) argument, and
A[i, j] = form(b_j, b_i), so x^H A x is the quadratic form of x.

The Galerkin matrix, the L2 mass matrix and the (1,k) Gram matrix are all
built from one set of shared parts (stiffness, mass, boundary mass), so
matrix-level identities between them hold to roundoff rather than to
quadrature accuracy.
"""

import math
from dataclasses import dataclass, field
from functools import lru_cache

import numpy as np
import scipy.linalg
import scipy.sparse
import scipy.sparse.linalg

from .numerics import gauss_interval, oscillatory_degree, quad_triangle

_DENSE_LIMIT = 2000


@dataclass(frozen=True)
class QuadPolicy:
    """Quadrature enrichment for oscillatory integrands.

    Degrees grow linearly in k*h so that products of plane waves are
    integrated to near machine precision even on coarse meshes (kh ~ 4).
    Polynomial integrands (plain H1 assembly) ignore the enrichment.
    """

    volume_factor: float = 3.0
    volume_offset: int = 12
    edge_factor: float = 3.0
    edge_offset: int = 8


_DEFAULT_POLICY = QuadPolicy()


@dataclass
class ComplexSystem:
    """An assembled complex linear system plus companion matrices.

    `free` lists the unconstrained DOF indices when Dirichlet elimination
    applies (None means all DOFs are free); `mass` is the plain L2 mass
    matrix on the same DOF set, kept for the Garding-identity checks.
    """

    A: object
    rhs: np.ndarray
    gram: object = None
    mass: object = None
    free: object = None
    meta: dict = field(default_factory=dict)

    @property
    def ndof(self):
        return self.rhs.shape[0]


@dataclass
class SolveResult:
    x: np.ndarray
    residual: float
    strategy: str


@dataclass(frozen=True)
class FluxParams:
    """DG flux parameters; each entry is a scalar or per-edge array."""

    alpha: object
    beta: object
    delta: object

    def on_edge(self, idx):
        return (
            _flux_value(self.alpha, idx),
            _flux_value(self.beta, idx),
            _flux_value(self.delta, idx),
        )


def _flux_value(v, idx):
    if np.isscalar(v):
        return float(v)
    return float(np.asarray(v)[idx])


def uwvf_fluxes():
    """The ultra weak variational formulation: alpha = beta = delta = 1/2."""
    return FluxParams(alpha=0.5, beta=0.5, delta=0.5)


def hmp_fluxes(space, a=1.0, eps=0.01):
    """p-version fluxes alpha ~ p/(kh log p) with declared default constants."""
    k = space.k
    p_eff = space.nloc
    h_e = np.asarray(space.mesh.edge_lengths, dtype=float)
    lg = math.log(p_eff + 1.0)
    alpha = a * p_eff / (k * h_e * lg)
    beta = k * h_e * lg / p_eff
    delta = np.minimum(0.5 - eps, k * h_e * lg / p_eff)
    return FluxParams(alpha=alpha, beta=beta, delta=delta)


def h_version_fluxes(space, a=1.0, beta=0.5, delta=0.25):
    """h-version fluxes with alpha = a/(kh) on every edge."""
    h_e = np.asarray(space.mesh.edge_lengths, dtype=float)
    return FluxParams(alpha=a / (space.k * h_e), beta=beta, delta=delta)


# -- quadrature helpers ----------------------------------------------------


@lru_cache(maxsize=64)
def _triangle_rule(degree):
    rule = quad_triangle(degree)
    return rule.points, rule.weights


def _volume_degree(space, k, policy):
    base = 2 * getattr(space, "p", 1) + 2
    if space.kind == "h1_polynomial":
        return min(base, 40)
    if space.kind == "nodally_exact_1d":
        return min(oscillatory_degree(base, k, space.mesh.h,
                                      policy.volume_factor, policy.volume_offset), 40)
    # wave-enriched 2D spaces: phases up to ~2k * diameter per element
    base = 6
    return min(oscillatory_degree(base, k, space.mesh.h,
                                  policy.volume_factor, policy.volume_offset), 40)


def edge_rule(k, length, base=4, policy=None):
    """Points and weights on [0,1] resolving wave products on one edge."""
    policy = policy or _DEFAULT_POLICY
    deg = oscillatory_degree(base, k, length, policy.edge_factor, policy.edge_offset)
    n = min(64, max(2, (deg + 1) // 2 + 1))
    rule = gauss_interval(n)
    return rule.points, rule.weights


def _interval_rule(degree):
    n = min(64, max(2, (degree + 1) // 2 + 1))
    rule = gauss_interval(n)
    return rule.points, rule.weights


# -- conforming volume/boundary parts ---------------------------------------


def _accumulate(triplets, dofs, local):
    rows, cols, vals = triplets
    L = dofs.shape[0]
    rows.append(np.repeat(dofs, L))
    cols.append(np.tile(dofs, L))
    vals.append(local.ravel())


def _to_matrix(triplets, n, force_dense):
    rows, cols, vals = triplets
    if not rows:
        data = np.zeros(0, dtype=complex)
        mat = scipy.sparse.coo_matrix((data, (np.zeros(0, int), np.zeros(0, int))),
                                      shape=(n, n))
    else:
        mat = scipy.sparse.coo_matrix(
            (np.concatenate(vals),
             (np.concatenate(rows), np.concatenate(cols))),
            shape=(n, n),
        )
    if force_dense:
        return mat.toarray()
    return mat.tocsr()


def _h1_fast_parts(space, policy):
    """Vectorized stiffness/mass for 2D polynomial spaces on affine meshes."""
    mesh = space.mesh
    deg = _volume_degree(space, 0.0, policy)
    ref, w = _triangle_rule(deg)
    vals, grads = space.reference_tables(ref)
    m_ref = np.einsum("q,ql,qm->lm", w, vals, vals)
    g_ref = np.einsum("q,qlr,qms->lrms", w, grads, grads)
    dofs = space.dof_matrix()
    signs = space.orientation_signs()
    det = 2.0 * mesh.areas()
    inv_jt = mesh.inv_jacobians_t()
    ne, L = dofs.shape
    n = space.ndof
    chunk = max(1, 4_000_000 // (L * L))
    srows, scols, svals, mvals = [], [], [], []
    for lo in range(0, ne, chunk):
        hi = min(ne, lo + chunk)
        c = np.einsum("edr,eds->ers", inv_jt[lo:hi], inv_jt[lo:hi])
        s_loc = det[lo:hi, None, None] * np.einsum("lrms,ers->elm", g_ref, c)
        m_loc = det[lo:hi, None, None] * m_ref[None, :, :]
        ss = signs[lo:hi, :, None] * signs[lo:hi, None, :]
        s_loc *= ss
        m_loc *= ss
        d = dofs[lo:hi]
        srows.append(np.repeat(d, L, axis=1).ravel())
        scols.append(np.tile(d, (1, L)).ravel())
        svals.append(s_loc.ravel())
        mvals.append(m_loc.ravel())
    force_dense = n <= _DENSE_LIMIT
    stiff = _to_matrix((srows, scols, svals), n, force_dense)
    mass = _to_matrix((srows, scols, mvals), n, force_dense)
    return stiff, mass


def _element_volume_rule(space, ei, k, policy):
    """Physical quadrature points and weights for one element."""
    mesh = space.mesh
    deg = _volume_degree(space, k, policy)
    if mesh.dim == 1:
        t, w = _interval_rule(deg)
        x0, x1 = np.sort(mesh.nodes[mesh.elements[ei]])
        return x0 + (x1 - x0) * t, (x1 - x0) * w
    ref, w = _triangle_rule(deg)
    v0 = mesh.nodes[mesh.elements[ei, 0]]
    jac = mesh.jacobians()[ei]
    pts = v0 + ref @ jac.T
    return pts, 2.0 * mesh.areas()[ei] * w


def _generic_parts(space, k, policy):
    """Elementwise stiffness and mass for any space kind."""
    mesh = space.mesh
    n = space.ndof
    force_dense = n <= _DENSE_LIMIT
    st = ([], [], [])
    ms = ([], [], [])
    for ei in range(mesh.n_elements):
        pts, w = _element_volume_rule(space, ei, k, policy)
        vals, grads = space.eval_basis(ei, pts)
        s_loc = np.einsum("q,qld,qmd->lm", w, np.conj(grads), grads)
        m_loc = np.einsum("q,ql,qm->lm", w, np.conj(vals), vals)
        dofs = space.element_dofs(ei)
        _accumulate((st[0], st[1], st[2]), dofs, s_loc)
        _accumulate((ms[0], ms[1], ms[2]), dofs, m_loc)
    return _to_matrix(st, n, force_dense), _to_matrix(ms, n, force_dense)


def _conforming_parts(space, k, policy):
    if space.mesh.dim == 2 and space.kind == "h1_polynomial":
        return _h1_fast_parts(space, policy)
    return _generic_parts(space, k, policy)


def _edge_points(mesh, edge, t):
    a = mesh.nodes[edge.nodes[0]]
    b = mesh.nodes[edge.nodes[1]]
    return a[None, :] + t[:, None] * (b - a)[None, :]


def _boundary_mass(space, k, tags, policy):
    """Boundary mass matrix over edges whose tag lies in `tags`."""
    mesh = space.mesh
    n = space.ndof
    tri = ([], [], [])
    for edge in mesh.boundary_edges():
        if edge.tag not in tags:
            continue
        ei = edge.elems[0]
        dofs = space.element_dofs(ei)
        if mesh.dim == 1:
            x = mesh.nodes[edge.nodes[0]]
            vals, _ = space.eval_basis(ei, np.array([x]))
            loc = np.conj(vals[0])[:, None] * vals[0][None, :]
        else:
            t, w = edge_rule(k, edge.length, base=_edge_base(space), policy=policy)
            pts = _edge_points(mesh, edge, t)
            vals, _ = space.eval_basis(ei, pts)
            loc = np.einsum("q,ql,qm->lm", edge.length * w, np.conj(vals), vals)
        _accumulate(tri, dofs, loc)
    return _to_matrix(tri, n, n <= _DENSE_LIMIT)


def _edge_base(space):
    return 2 * getattr(space, "p", 1) + 2 if space.kind == "h1_polynomial" else 4


def _volume_load(space, f, k, policy):
    rhs = np.zeros(space.ndof, dtype=complex)
    if f is None:
        return rhs
    fv = f if callable(f) else (lambda pts, c=complex(f): np.full(pts.shape[0], c))
    mesh = space.mesh
    for ei in range(mesh.n_elements):
        pts, w = _element_volume_rule(space, ei, k, policy)
        vals, _ = space.eval_basis(ei, pts)
        rhs[space.element_dofs(ei)] += np.einsum(
            "q,ql->l", w * np.asarray(fv(pts), dtype=complex), np.conj(vals)
        )
    return rhs


def _boundary_load(space, g, k, tags, policy):
    rhs = np.zeros(space.ndof, dtype=complex)
    if g is None:
        return rhs
    mesh = space.mesh
    for edge in mesh.boundary_edges():
        if edge.tag not in tags:
            continue
        ei = edge.elems[0]
        dofs = space.element_dofs(ei)
        if mesh.dim == 1:
            x = mesh.nodes[edge.nodes[0]]
            vals, _ = space.eval_basis(ei, np.array([x]))
            rhs[dofs] += complex(np.asarray(g(np.array([x])))[0]) * np.conj(vals[0])
        else:
            t, w = edge_rule(k, edge.length, base=_edge_base(space), policy=policy)
            pts = _edge_points(mesh, edge, t)
            vals, _ = space.eval_basis(ei, pts)
            gv = np.asarray(g(pts), dtype=complex)
            rhs[dofs] += np.einsum("q,ql->l", edge.length * w * gv, np.conj(vals))
    return rhs


def _dirichlet_dofs(space, tags):
    """Global DOFs supported on boundary edges with the given tags."""
    mesh = space.mesh
    fixed = set()
    for edge in mesh.boundary_edges():
        if edge.tag not in tags:
            continue
        if mesh.dim == 1:
            node = int(edge.nodes[0])
            if space.kind == "pum":
                m = space.enrichment.dim
                fixed.update(range(node * m, (node + 1) * m))
            else:
                fixed.add(node)
        else:
            a, b = int(edge.nodes[0]), int(edge.nodes[1])
            if space.kind == "pum":
                m = space.enrichment.dim
                for v in (a, b):
                    fixed.update(range(v * m, (v + 1) * m))
            else:
                fixed.update((a, b))
                p = getattr(space, "p", 1)
                if p >= 2:
                    base = mesh.n_nodes + edge.index * (p - 1)
                    fixed.update(range(base, base + p - 1))
    return np.array(sorted(fixed), dtype=np.int64)


def assemble_galerkin(space, k, f=None, g=None, bc=None, robin_sign=1.0,
                      policy=None):
    """Galerkin matrix and load of the Robin/mixed Helmholtz problem.

    A = stiffness - k^2 mass + robin_sign * ik * (boundary mass on Robin
    edges); rhs_i = (f, b_i) + (g, b_i) over Robin edges.  `bc` maps edge
    tags to 'robin', 'neumann' or 'dirichlet'; tags absent from the map
    default to 'robin'.  Dirichlet parts (homogeneous) are recorded as
    eliminated DOFs in `free` and resolved at solve time.
    """
    if not space.conforming:
        raise ValueError("assemble_galerkin needs a conforming space")
    policy = policy or _DEFAULT_POLICY
    k = float(k)
    bc = bc or {}
    mesh = space.mesh
    present = {e.tag for e in mesh.boundary_edges()}
    robin_tags = {t for t in present if bc.get(t, "robin") == "robin"}
    dirichlet_tags = {t for t in present if bc.get(t) == "dirichlet"}
    stiff, mass = _conforming_parts(space, k, policy)
    bd = _boundary_mass(space, k, robin_tags, policy)
    A = stiff - k**2 * mass + robin_sign * 1j * k * bd
    rhs = _volume_load(space, f, k, policy) + _boundary_load(
        space, g, k, robin_tags, policy
    )
    free = None
    if dirichlet_tags:
        fixed = _dirichlet_dofs(space, dirichlet_tags)
        keep = np.ones(space.ndof, dtype=bool)
        keep[fixed] = False
        free = np.flatnonzero(keep)
    meta = {
        "method": "galerkin",
        "k": k,
        "h": mesh.h,
        "p": getattr(space, "p", 1),
        "robin_sign": float(robin_sign),
        "boundary_mass": bd,
    }
    return ComplexSystem(A=A, rhs=rhs, mass=mass, free=free, meta=meta)


def assemble_gram_1k(space, k, policy=None):
    """Gram matrix of the weighted norm k^2 ||u||^2 + ||grad u||^2."""
    policy = policy or _DEFAULT_POLICY
    k = float(k)
    if space.conforming:
        stiff, mass = _conforming_parts(space, k, policy)
    else:
        stiff, mass = _generic_parts(space, k, policy)
    return stiff + k**2 * mass


def project_rhs_1k(space, k, value_fn, grad_fn, policy=None):
    """Load vector of the (1,k) inner product against a target function.

    rhs_i = k^2 (u, b_i) + (grad u, grad b_i); used for best-approximation
    studies via the normal equations with the (1,k) Gram matrix.
    """
    policy = policy or _DEFAULT_POLICY
    k = float(k)
    rhs = np.zeros(space.ndof, dtype=complex)
    mesh = space.mesh
    for ei in range(mesh.n_elements):
        pts, w = _element_volume_rule(space, ei, k, policy)
        vals, grads = space.eval_basis(ei, pts)
        uv = np.asarray(value_fn(pts), dtype=complex)
        ug = np.asarray(grad_fn(pts), dtype=complex)
        rhs[space.element_dofs(ei)] += k**2 * np.einsum(
            "q,ql->l", w * uv, np.conj(vals)
        ) + np.einsum("q,qd,qld->l", w, ug, np.conj(grads))
    return rhs


# -- skeleton assembly for Trefftz methods -----------------------------------


def _require_trefftz(space):
    if space.kind not in ("trefftz_pw", "trefftz_ghp"):
        raise ValueError("this assembly path needs a Trefftz space")


def _edge_traces(space, edge, t):
    """Both-side values and plus-normal derivatives at edge points."""
    mesh = space.mesh
    pts = _edge_points(mesh, edge, t)
    out = []
    for ei in edge.elems:
        if ei < 0:
            break
        vals, grads = space.eval_basis(ei, pts)
        out.append((space.element_dofs(ei), vals, grads @ edge.normal))
    return out


def assemble_least_squares(space, k, g, w1=None, w2=None, policy=None):
    """Normal equations of the least squares functional on a Trefftz space.

    J(v) sums w1^2 ||[v]||^2 + w2^2 ||[dv/dn]||^2 over interior edges and
    w2^2 ||g - (dv/dn + ikv)||^2 over boundary edges.  Defaults w1 = k,
    w2 = 1.  meta['g_norm2'] carries the weighted ||g||^2 so the
    functional can be reconstructed from the algebra.
    """
    _require_trefftz(space)
    policy = policy or _DEFAULT_POLICY
    k = float(k)
    w1 = k if w1 is None else float(w1)
    w2 = 1.0 if w2 is None else float(w2)
    mesh = space.mesh
    n = space.ndof
    A = np.zeros((n, n), dtype=complex)
    rhs = np.zeros(n, dtype=complex)
    g_norm2 = 0.0
    for edge in mesh.interior_edges():
        t, w = edge_rule(k, edge.length, policy=policy)
        ds = edge.length * w
        (dp, vp, gp), (dm, vm, gm) = _edge_traces(space, edge, t)
        dofs = np.concatenate([dp, dm])
        jump_v = np.hstack([vp, -vm])
        jump_g = np.hstack([gp, -gm])
        loc = w1**2 * np.einsum("q,ql,qm->lm", ds, np.conj(jump_v), jump_v)
        loc += w2**2 * np.einsum("q,ql,qm->lm", ds, np.conj(jump_g), jump_g)
        A[np.ix_(dofs, dofs)] += loc
    for edge in mesh.boundary_edges():
        t, w = edge_rule(k, edge.length, policy=policy)
        ds = edge.length * w
        ((dofs, vals, gn),) = _edge_traces(space, edge, t)
        imp = gn + 1j * k * vals
        A[np.ix_(dofs, dofs)] += w2**2 * np.einsum(
            "q,ql,qm->lm", ds, np.conj(imp), imp
        )
        pts = _edge_points(mesh, edge, t)
        gv = np.asarray(g(pts), dtype=complex)
        rhs[dofs] += w2**2 * np.einsum("q,ql->l", ds * gv, np.conj(imp))
        g_norm2 += w2**2 * float(np.sum(ds * np.abs(gv) ** 2))
    meta = {
        "method": "least_squares",
        "k": k,
        "h": mesh.h,
        "p": space.nloc,
        "w1": w1,
        "w2": w2,
        "g_norm2": g_norm2,
    }
    return ComplexSystem(A=A, rhs=rhs, meta=meta)


def assemble_pwdg(space, k, g, flux, policy=None):
    """Skeleton form of the plane-wave DG method on a Trefftz space.

    Interior edges carry the average/jump consistency terms plus the
    (i/k) beta gradient-jump and ik alpha trace-jump penalties; boundary
    edges carry the impedance terms weighted by delta.  The right-hand
    side is (i/k) delta (g, dv/dn) + (1-delta)(g, v) over boundary edges.
    """
    _require_trefftz(space)
    policy = policy or _DEFAULT_POLICY
    k = float(k)
    mesh = space.mesh
    n = space.ndof
    A = np.zeros((n, n), dtype=complex)
    rhs = np.zeros(n, dtype=complex)
    for edge in mesh.interior_edges():
        alpha, beta, _ = flux.on_edge(edge.index)
        if alpha <= 0 or beta <= 0:
            raise ValueError("flux parameters alpha, beta must be positive")
        t, w = edge_rule(k, edge.length, policy=policy)
        ds = edge.length * w
        traces = _edge_traces(space, edge, t)
        for s, (dofs_s, v_s, gn_s) in zip((1.0, -1.0), traces):
            for d_t, (dofs_t, v_t, gn_t) in zip((1.0, -1.0), traces):
                loc = 0.5 * d_t * np.einsum("q,qm,ql->lm", ds, v_s, np.conj(gn_t))
                loc += (1j / k) * beta * s * d_t * np.einsum(
                    "q,qm,ql->lm", ds, gn_s, np.conj(gn_t)
                )
                loc -= 0.5 * d_t * np.einsum("q,qm,ql->lm", ds, gn_s, np.conj(v_t))
                loc += 1j * k * alpha * s * d_t * np.einsum(
                    "q,qm,ql->lm", ds, v_s, np.conj(v_t)
                )
                A[np.ix_(dofs_t, dofs_s)] += loc
    for edge in mesh.boundary_edges():
        _, _, delta = flux.on_edge(edge.index)
        if not 0.0 < delta < 1.0:
            raise ValueError("flux parameter delta must lie in (0,1)")
        t, w = edge_rule(k, edge.length, policy=policy)
        ds = edge.length * w
        ((dofs, vals, gn),) = _edge_traces(space, edge, t)
        loc = (1.0 - delta) * np.einsum("q,qm,ql->lm", ds, vals, np.conj(gn))
        loc += (1j / k) * delta * np.einsum("q,qm,ql->lm", ds, gn, np.conj(gn))
        loc -= delta * np.einsum("q,qm,ql->lm", ds, gn, np.conj(vals))
        loc += 1j * k * (1.0 - delta) * np.einsum(
            "q,qm,ql->lm", ds, vals, np.conj(vals)
        )
        A[np.ix_(dofs, dofs)] += loc
        pts = _edge_points(mesh, edge, t)
        gv = np.asarray(g(pts), dtype=complex)
        rhs[dofs] += (1j / k) * delta * np.einsum("q,ql->l", ds * gv, np.conj(gn))
        rhs[dofs] += (1.0 - delta) * np.einsum("q,ql->l", ds * gv, np.conj(vals))
    meta = {"method": "pwdg", "k": k, "h": mesh.h, "p": space.nloc, "flux": flux}
    return ComplexSystem(A=A, rhs=rhs, meta=meta)


# -- linear algebra ----------------------------------------------------------


def _reduce(system):
    A, rhs = system.A, system.rhs
    if system.free is None:
        return A, rhs
    free = system.free
    if scipy.sparse.issparse(A):
        return A.tocsr()[free][:, free], rhs[free]
    return A[np.ix_(free, free)], rhs[free]


def solve(system, strategy="sparse_lu", svd_cutoff=1e-12):
    """Solve the assembled system; returns the solution and its residual.

    Strategies: 'sparse_lu' (default), 'dense_lu', and 'truncated_svd'
    which zeroes singular values below svd_cutoff * sigma_max and returns
    the minimum-norm least-squares solution (the rescue path for badly
    conditioned Trefftz bases).
    """
    A, rhs = _reduce(system)
    nred = rhs.shape[0]
    if A.shape != (nred, nred):
        raise ValueError("system matrix and right-hand side sizes disagree")
    if strategy == "sparse_lu":
        # COLAMD keeps the fill-in of the hierarchic high-order patterns
        # moderate; minimum-degree orderings blow up on them.
        lu = scipy.sparse.linalg.splu(
            scipy.sparse.csc_matrix(A), permc_spec="COLAMD"
        )
        x = lu.solve(rhs)
    elif strategy == "dense_lu":
        dense = A.toarray() if scipy.sparse.issparse(A) else np.asarray(A)
        x = scipy.linalg.solve(dense, rhs)
    elif strategy == "truncated_svd":
        if scipy.sparse.issparse(A):
            if max(A.shape) > 2 * _DENSE_LIMIT:
                raise ValueError("truncated_svd requires dense assembly")
            A = A.toarray()
        u, s, vh = np.linalg.svd(np.asarray(A))
        keep = s > svd_cutoff * s[0]
        inv = np.zeros_like(s)
        inv[keep] = 1.0 / s[keep]
        x = vh.conj().T @ (inv * (u.conj().T @ rhs))
    else:
        raise ValueError(f"unknown solve strategy '{strategy}'")
    if not np.all(np.isfinite(x)):
        raise np.linalg.LinAlgError("solver produced non-finite values")
    denom = np.linalg.norm(rhs)
    residual = float(np.linalg.norm(A @ x - rhs) / (denom if denom > 0 else 1.0))
    if system.free is not None:
        full = np.zeros(system.ndof, dtype=complex)
        full[system.free] = x
        x = full
    return SolveResult(x=x, residual=residual, strategy=strategy)


def infsup_probe(b_matrix, gram):
    """Discrete inf-sup constant sigma_min(L^-1 B L^-H) with gram = L L^H.

    This is the modulus-based constant; the Cholesky factorization fails
    loudly when the Gram matrix is not positive definite.
    """
    B = b_matrix.toarray() if scipy.sparse.issparse(b_matrix) else np.asarray(b_matrix)
    M = gram.toarray() if scipy.sparse.issparse(gram) else np.asarray(gram)
    n = B.shape[0]
    if n > _DENSE_LIMIT:
        raise ValueError("inf-sup probe is restricted to dense-size systems")
    M = 0.5 * (M + M.conj().T)
    L = np.linalg.cholesky(M)
    tmp = scipy.linalg.solve_triangular(L, B, lower=True)
    white = scipy.linalg.solve_triangular(L, tmp.conj().T, lower=True).conj().T
    return float(np.linalg.svd(white, compute_uv=False)[-1])


def dump_system(system, path):
    """Write a dense system as text: N, then rows of re,im pairs."""
    A = system.A.toarray() if scipy.sparse.issparse(system.A) else np.asarray(system.A)
    n = A.shape[0]
    lines = [str(n)]
    for i in range(n):
        lines.append(" ".join(f"{float(z.real)!r},{float(z.imag)!r}" for z in A[i]))
    with open(path, "w") as fh:
        fh.write("\n".join(lines) + "\n")
