"""Norms, error functionals, and convergence-rate fitting.

Shared post-processing for all solver drivers: relative errors in L2,
H1-seminorm, and the wavenumber-weighted (1,k) norm against analytic
solutions, the mesh-skeleton DG norms whose squares realize the imaginary
part of the discontinuous Galerkin quadratic form, the least squares
functional by direct edge quadrature, and log-log slope fits used to read
convergence rates off error series.
"""

import math
from dataclasses import dataclass

import numpy as np

from .assembly import _edge_traces, _interval_rule, _triangle_rule, edge_rule
from .numerics import oscillatory_degree


@dataclass
class ErrorReport:
    """Collected error measures for one discrete solve.

    Fields that a given method does not produce stay None: dg_norm and
    dg_plus_norm are filled by DG runs, j_value by least squares runs,
    nodal_max by 1D nodally exact runs.
    """

    h1_semi_rel: float = None
    l2_rel: float = None
    norm_1k_rel: float = None
    dg_norm: float = None
    dg_plus_norm: float = None
    j_value: float = None
    nodal_max: float = None
    dofs: int = 0
    n_lambda: float = 0.0
    k: float = 0.0
    h: float = 0.0
    p: int = 0
    method: str = ""


# -- error quadrature --------------------------------------------------------


def _error_degree(space, k):
    """Quadrature degree for error integrals: resolves both the discrete
    basis and the oscillation of the exact solution at wavenumber k."""
    if space.kind in ("h1_polynomial", "nodally_exact_1d"):
        base = 2 * getattr(space, "p", 1) + 4
    else:
        base = 2 * min(space.nloc, 12) + 4
    return min(oscillatory_degree(base, k, space.mesh.h, 3.0, 2), 40)


def _element_rule(mesh, ei, deg):
    if mesh.dim == 1:
        t, w = _interval_rule(deg)
        x0, x1 = np.sort(mesh.nodes[mesh.elements[ei]])
        return x0 + (x1 - x0) * t, (x1 - x0) * w
    ref, w = _triangle_rule(deg)
    v0 = mesh.nodes[mesh.elements[ei, 0]]
    pts = v0 + ref @ mesh.jacobians()[ei].T
    return pts, 2.0 * mesh.areas()[ei] * w


def _apply_exclusion(pts, w, radius, center, safe_point):
    """Zero the weights of points inside the excluded disk.

    The excluded points are also moved to `safe_point` before the exact
    solution is evaluated, so singular formulas never see r ~ 0.
    """
    r2 = ((pts - center) ** 2).sum(axis=-1)
    mask = r2 < radius * radius
    if not mask.any():
        return pts, w
    w = np.where(mask, 0.0, w)
    pts = pts.copy()
    pts[mask] = safe_point
    return pts, w


def _generic_error_sums(space, coeffs, exact_value, exact_grad, deg,
                        radius, center):
    mesh = space.mesh
    num_l2 = den_l2 = num_h1 = den_h1 = 0.0
    for ei in range(mesh.n_elements):
        pts, w = _element_rule(mesh, ei, deg)
        if radius > 0.0 and mesh.dim == 2:
            pts, w = _apply_exclusion(pts, w, radius, center,
                                      mesh.centroids()[ei])
        vals, grads = space.eval_basis(ei, pts)
        c = coeffs[space.element_dofs(ei)]
        u_n = vals @ c
        g_n = np.einsum("qld,l->qd", grads.astype(complex), c)
        u_e = np.asarray(exact_value(pts), dtype=complex)
        g_e = np.asarray(exact_grad(pts), dtype=complex).reshape(len(w), -1)
        num_l2 += float(w @ np.abs(u_e - u_n) ** 2)
        den_l2 += float(w @ np.abs(u_e) ** 2)
        num_h1 += float(w @ (np.abs(g_e - g_n) ** 2).sum(axis=1))
        den_h1 += float(w @ (np.abs(g_e) ** 2).sum(axis=1))
    return num_l2, den_l2, num_h1, den_h1


def _h1_fast_error_sums(space, coeffs, exact_value, exact_grad, deg,
                        radius, center):
    """Chunked reference-table error sums for 2D polynomial spaces."""
    mesh = space.mesh
    ref, w = _triangle_rule(deg)
    vals_ref, grads_ref = space.reference_tables(ref)
    dofs = space.dof_matrix()
    signs = space.orientation_signs()
    v0 = mesh.nodes[mesh.elements[:, 0]]
    jac = mesh.jacobians()
    inv_jt = mesh.inv_jacobians_t()
    det = 2.0 * mesh.areas()
    centroids = mesh.centroids() if radius > 0.0 else None
    ne, nloc = dofs.shape
    nq = ref.shape[0]
    chunk = max(1, 2_000_000 // max(1, nq * nloc))
    num_l2 = den_l2 = num_h1 = den_h1 = 0.0
    for lo in range(0, ne, chunk):
        hi = min(ne, lo + chunk)
        c = coeffs[dofs[lo:hi]] * signs[lo:hi]
        u_n = np.einsum("ql,el->eq", vals_ref, c)
        g_n = np.einsum("qlr,edr,el->eqd", grads_ref, inv_jt[lo:hi], c)
        pts = v0[lo:hi, None, :] + np.einsum("qr,edr->eqd", ref, jac[lo:hi])
        wdet = det[lo:hi, None] * w[None, :]
        if radius > 0.0:
            flat_p = pts.reshape(-1, 2)
            flat_w = wdet.reshape(-1)
            safe = np.repeat(centroids[lo:hi], nq, axis=0)
            r2 = ((flat_p - center) ** 2).sum(axis=1)
            mask = r2 < radius * radius
            if mask.any():
                flat_w = np.where(mask, 0.0, flat_w)
                flat_p = flat_p.copy()
                flat_p[mask] = safe[mask]
            pts = flat_p.reshape(hi - lo, nq, 2)
            wdet = flat_w.reshape(hi - lo, nq)
        flat = pts.reshape(-1, 2)
        u_e = np.asarray(exact_value(flat), dtype=complex).reshape(hi - lo, nq)
        g_e = np.asarray(exact_grad(flat), dtype=complex).reshape(hi - lo, nq, 2)
        num_l2 += float(np.sum(wdet * np.abs(u_e - u_n) ** 2))
        den_l2 += float(np.sum(wdet * np.abs(u_e) ** 2))
        num_h1 += float(np.sum(wdet * (np.abs(g_e - g_n) ** 2).sum(axis=2)))
        den_h1 += float(np.sum(wdet * (np.abs(g_e) ** 2).sum(axis=2)))
    return num_l2, den_l2, num_h1, den_h1


def _rel(num, den):
    num = max(num, 0.0)
    if den <= 0.0:
        return math.sqrt(num)
    return math.sqrt(num / den)


def relative_errors(space, coeffs, exact_value, exact_grad, k,
                    exclude_radius=0.0, exclude_center=(0.0, 0.0),
                    degree=None):
    """Relative L2, H1-seminorm, and (1,k)-norm errors vs an exact solution.

    exact_value maps an array of points to complex values, exact_grad to
    complex gradients (analytic, not differenced).  Relative norms divide
    by the exact solution's norm computed with the same quadrature.  A
    positive exclude_radius drops quadrature points inside the disk around
    exclude_center; used for solutions whose gradient is singular there.

    Returns (h1_semi_rel, l2_rel, norm_1k_rel).
    """
    coeffs = np.asarray(coeffs, dtype=complex)
    deg = _error_degree(space, k) if degree is None else int(degree)
    center = np.asarray(exclude_center, dtype=float)
    if space.mesh.dim == 2 and space.kind == "h1_polynomial":
        sums = _h1_fast_error_sums(space, coeffs, exact_value, exact_grad,
                                   deg, exclude_radius, center)
    else:
        sums = _generic_error_sums(space, coeffs, exact_value, exact_grad,
                                   deg, exclude_radius, center)
    num_l2, den_l2, num_h1, den_h1 = sums
    kk = float(k) ** 2
    return (
        _rel(num_h1, den_h1),
        _rel(num_l2, den_l2),
        _rel(kk * num_l2 + num_h1, kk * den_l2 + den_h1),
    )


def nodal_max_error(space, coeffs, exact_value):
    """Largest |u_N - u| over the mesh nodes."""
    mesh = space.mesh
    coeffs = np.asarray(coeffs, dtype=complex)
    vals = np.zeros(mesh.n_nodes, dtype=complex)
    for ei in range(mesh.n_elements):
        nd = mesh.elements[ei]
        pts = np.asarray(mesh.nodes[nd], dtype=float)
        bv, _ = space.eval_basis(ei, pts)
        vals[nd] = bv @ coeffs[space.element_dofs(ei)]
    exact = np.asarray(exact_value(mesh.nodes), dtype=complex)
    return float(np.max(np.abs(vals - exact)))


# -- skeleton DG norms --------------------------------------------------------


def _check_flux(alpha, beta, delta):
    if alpha <= 0.0 or beta <= 0.0:
        raise ValueError("flux parameters alpha and beta must be positive")
    if not 0.0 < delta < 1.0:
        raise ValueError("flux parameter delta must lie in (0, 1)")


def _dg_square(space, coeffs, flux, k, plus, policy,
               exact_value=None, exact_grad=None):
    """Squared skeleton norm of u_N, or of (exact - u_N) when callbacks
    for the exact value and gradient are supplied."""
    mesh = space.mesh
    if mesh.dim != 2:
        raise ValueError("DG norms are defined on 2D meshes")
    coeffs = np.asarray(coeffs, dtype=complex)
    k = float(k)
    total = 0.0
    for edge in mesh.interior_edges():
        alpha, beta, delta = flux.on_edge(edge.index)
        _check_flux(alpha, beta, delta)
        t, w = edge_rule(k, edge.length, policy=policy)
        ds = edge.length * w
        (dp, vp, gp), (dm, vm, gm) = _edge_traces(space, edge, t)
        u_p = vp @ coeffs[dp]
        u_m = vm @ coeffs[dm]
        gn_p = gp @ coeffs[dp]
        gn_m = gm @ coeffs[dm]
        if exact_value is not None:
            pts = _trace_points(mesh, edge, t)
            u_e = np.asarray(exact_value(pts), dtype=complex)
            gn_e = np.asarray(exact_grad(pts), dtype=complex) @ edge.normal
            u_p, u_m = u_e - u_p, u_e - u_m
            gn_p, gn_m = gn_e - gn_p, gn_e - gn_m
        total += beta / k * float(ds @ np.abs(gn_p - gn_m) ** 2)
        total += k * alpha * float(ds @ np.abs(u_p - u_m) ** 2)
        if plus:
            avg2 = np.abs(0.5 * (u_p + u_m)) ** 2
            total += (k / beta + 1.0 / (k * alpha)) * float(ds @ avg2)
    for edge in mesh.boundary_edges():
        alpha, beta, delta = flux.on_edge(edge.index)
        _check_flux(alpha, beta, delta)
        t, w = edge_rule(k, edge.length, policy=policy)
        ds = edge.length * w
        ((dp, vp, gp),) = _edge_traces(space, edge, t)
        u = vp @ coeffs[dp]
        gn = gp @ coeffs[dp]
        if exact_value is not None:
            pts = _trace_points(mesh, edge, t)
            u = np.asarray(exact_value(pts), dtype=complex) - u
            gn = np.asarray(exact_grad(pts), dtype=complex) @ edge.normal - gn
        total += delta / k * float(ds @ np.abs(gn) ** 2)
        total += k * (1.0 - delta) * float(ds @ np.abs(u) ** 2)
        if plus:
            total += k / delta * float(ds @ np.abs(u) ** 2)
    return total


def _trace_points(mesh, edge, t):
    a = mesh.nodes[edge.nodes[0]]
    b = mesh.nodes[edge.nodes[1]]
    return a[None, :] + t[:, None] * (b - a)[None, :]


def dg_norm(space, coeffs, flux, k, policy=None):
    """Skeleton DG norm of a piecewise discrete function.

    Interior edges contribute (beta/k)||[grad u]||^2 + k alpha ||[u]||^2,
    boundary edges (delta/k)||du/dn||^2 + k(1-delta)||u||^2.  On Trefftz
    spaces the square equals Im A_N(u, u) of the assembled DG form.
    """
    return math.sqrt(max(_dg_square(space, coeffs, flux, k, False, policy), 0.0))


def dg_plus_norm(space, coeffs, flux, k, policy=None):
    """Augmented DG norm adding mean-value and boundary-trace terms.

    On top of the DG norm: k||beta^{-1/2}{u}||^2 and (1/k)||alpha^{-1/2}{u}||^2
    on interior edges and k||delta^{-1/2} u||^2 on boundary edges, with {u}
    the two-sided average.
    """
    return math.sqrt(max(_dg_square(space, coeffs, flux, k, True, policy), 0.0))


def dg_error_norm(space, coeffs, flux, k, exact_value, exact_grad,
                  policy=None, plus=False):
    """Skeleton DG norm of the error (exact - u_N).

    The exact solution's traces enter through the analytic value and
    gradient callbacks; its interior jumps vanish, so the interior terms
    reduce to the discrete jumps while boundary terms see the true residual
    traces.
    """
    sq = _dg_square(space, coeffs, flux, k, plus, policy,
                    exact_value=exact_value, exact_grad=exact_grad)
    return math.sqrt(max(sq, 0.0))


# -- least squares functional -------------------------------------------------


def j_functional(space, coeffs, k, g, w1=None, w2=None, policy=None):
    """Least squares functional evaluated by direct edge quadrature.

    J(v) = sum_int w1^2 ||[v]||^2 + w2^2 ||[dv/dn]||^2
         + sum_bnd w2^2 ||dv/dn + ikv - g||^2, defaults w1 = k, w2 = 1.
    Cross-checks the assembled normal-equation algebra.
    """
    mesh = space.mesh
    coeffs = np.asarray(coeffs, dtype=complex)
    k = float(k)
    w1 = k if w1 is None else float(w1)
    w2 = 1.0 if w2 is None else float(w2)
    total = 0.0
    for edge in mesh.interior_edges():
        t, w = edge_rule(k, edge.length, policy=policy)
        ds = edge.length * w
        (dp, vp, gp), (dm, vm, gm) = _edge_traces(space, edge, t)
        jump_v = vp @ coeffs[dp] - vm @ coeffs[dm]
        jump_g = gp @ coeffs[dp] - gm @ coeffs[dm]
        total += w1**2 * float(ds @ np.abs(jump_v) ** 2)
        total += w2**2 * float(ds @ np.abs(jump_g) ** 2)
    for edge in mesh.boundary_edges():
        t, w = edge_rule(k, edge.length, policy=policy)
        ds = edge.length * w
        ((dp, vp, gp),) = _edge_traces(space, edge, t)
        u = vp @ coeffs[dp]
        gn = gp @ coeffs[dp]
        gv = np.asarray(g(_trace_points(mesh, edge, t)), dtype=complex)
        total += w2**2 * float(ds @ np.abs(gn + 1j * k * u - gv) ** 2)
    return total


# -- rate fitting -------------------------------------------------------------


def fit_rate(series, window=4):
    """Least squares slope of log(error) vs log(x) over the trailing window.

    series is a sequence of (x, error) pairs with positive entries; the fit
    uses the last `window` points (all of them if fewer, minimum 3).
    Returns (slope, intercept, r_squared).
    """
    pairs = [(float(x), float(e)) for x, e in series]
    if len(pairs) < 3:
        raise ValueError("rate fit needs at least 3 points")
    if any(x <= 0.0 or e <= 0.0 for x, e in pairs):
        raise ValueError("rate fit needs positive abscissae and errors")
    tail = pairs[-max(3, int(window)):]
    lx = np.log([x for x, _ in tail])
    le = np.log([e for _, e in tail])
    slope, intercept = np.polyfit(lx, le, 1)
    resid = le - (slope * lx + intercept)
    ss_res = float(resid @ resid)
    centered = le - le.mean()
    ss_tot = float(centered @ centered)
    r2 = 1.0 if ss_tot < 1e-30 else 1.0 - ss_res / ss_tot
    return float(slope), float(intercept), float(r2)
