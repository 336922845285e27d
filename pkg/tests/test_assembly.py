"""Assembled forms and linear algebra against hand-computed oracles."""

import math

import numpy as np
import pytest
import scipy.sparse

from helmholtz_lab.assembly import (
    ComplexSystem,
    FluxParams,
    assemble_galerkin,
    assemble_gram_1k,
    assemble_least_squares,
    assemble_pwdg,
    dump_system,
    h_version_fluxes,
    hmp_fluxes,
    infsup_probe,
    solve,
    uwvf_fluxes,
)
from helmholtz_lab.meshing import (
    triangulate,
    uniform_interval_mesh,
    unit_square,
)
from helmholtz_lab.spaces import (
    GhpBasis,
    PlaneWaveBasis,
    h1_space,
    nodally_exact_space_1d,
    pum_space,
    trefftz_space,
)


def dense(a):
    return a.toarray() if scipy.sparse.issparse(a) else np.asarray(a)


class TestGalerkin1D:
    def test_hand_element_matrix(self):
        mesh = uniform_interval_mesh(1)
        space = h1_space(mesh, 1)
        system = assemble_galerkin(
            space, 1.0, bc={"left": "dirichlet", "right": "robin"}
        )
        expect = (
            np.array([[1.0, -1.0], [-1.0, 1.0]])
            - np.array([[1 / 3, 1 / 6], [1 / 6, 1 / 3]])
            + 1j * np.array([[0.0, 0.0], [0.0, 1.0]])
        )
        np.testing.assert_allclose(dense(system.A), expect, atol=1e-14)
        np.testing.assert_array_equal(system.free, [1])

    def test_zero_data_zero_rhs(self):
        mesh = uniform_interval_mesh(4)
        space = h1_space(mesh, 2)
        system = assemble_galerkin(space, 3.0, f=None, g=None)
        np.testing.assert_array_equal(system.rhs, 0.0)

    def test_constant_source_rhs(self):
        # (1, hat_i) = h for interior hats on a uniform mesh
        mesh = uniform_interval_mesh(4)
        space = h1_space(mesh, 1)
        system = assemble_galerkin(space, 2.0, f=1.0)
        np.testing.assert_allclose(system.rhs[1:4].real, 0.25, atol=1e-14)
        np.testing.assert_allclose(system.rhs[0].real, 0.125, atol=1e-14)

    def test_symmetric_after_removing_boundary_term(self):
        mesh = uniform_interval_mesh(5)
        space = h1_space(mesh, 3)
        k = 4.0
        system = assemble_galerkin(space, k)
        core = dense(system.A) - 1j * k * dense(system.meta["boundary_mass"])
        np.testing.assert_allclose(core, core.T, atol=1e-12)
        np.testing.assert_allclose(core.imag, 0.0, atol=1e-13)

    def test_robin_sign_flips_boundary_term(self):
        mesh = uniform_interval_mesh(3)
        space = h1_space(mesh, 1)
        plus = assemble_galerkin(space, 2.0, robin_sign=1.0)
        minus = assemble_galerkin(space, 2.0, robin_sign=-1.0)
        diff = dense(plus.A) - dense(minus.A)
        np.testing.assert_allclose(
            diff, 2j * 2.0 * dense(plus.meta["boundary_mass"]), atol=1e-14
        )


class TestGram:
    def test_constant_function_norm(self):
        mesh = uniform_interval_mesh(4)
        space = h1_space(mesh, 1)
        gram = assemble_gram_1k(space, 2.0)
        u = np.ones(space.ndof, dtype=complex)
        assert (u.conj() @ dense(gram) @ u).real == pytest.approx(4.0, abs=1e-13)

    def test_plane_wave_energy(self):
        # on each element k^2 |b|^2 + |grad b|^2 = 2 k^2, so diagonal
        # entries equal 2 k^2 |K|
        mesh = triangulate(unit_square(), 0.5)
        k = 6.0
        space = trefftz_space(mesh, k, PlaneWaveBasis(k=k, p=3))
        gram = dense(assemble_gram_1k(space, k))
        diag = np.diag(gram).real
        expect = 2 * k**2 * np.repeat(mesh.areas(), 3)
        np.testing.assert_allclose(diag, expect, rtol=1e-12)

    def test_positive_definite(self):
        mesh = triangulate(unit_square(), 0.5)
        for space in (
            h1_space(mesh, 3),
            pum_space(mesh, 3.0, PlaneWaveBasis(k=3.0, p=4)),
        ):
            gram = dense(assemble_gram_1k(space, 3.0))
            np.testing.assert_allclose(gram, gram.conj().T, atol=1e-11)
            np.linalg.cholesky(0.5 * (gram + gram.conj().T))


class TestGardingIdentity:
    @pytest.mark.parametrize("kind", ["h1_1d", "h1_2d", "ne_1d", "pum"])
    def test_matrix_identity(self, kind):
        k = 5.0
        if kind == "h1_1d":
            space = h1_space(uniform_interval_mesh(8), 3)
        elif kind == "h1_2d":
            space = h1_space(triangulate(unit_square(), 0.5), 2)
        elif kind == "ne_1d":
            space = nodally_exact_space_1d(uniform_interval_mesh(12), k)
        else:
            space = pum_space(
                triangulate(unit_square(), 0.5), k, PlaneWaveBasis(k=k, p=3)
            )
        system = assemble_galerkin(space, k)
        gram = assemble_gram_1k(space, k)
        rng = np.random.default_rng(42)
        a, mass, m1k = dense(system.A), dense(system.mass), dense(gram)
        for _ in range(10):
            u = rng.standard_normal(space.ndof) + 1j * rng.standard_normal(space.ndof)
            lhs = (u.conj() @ a @ u).real + 2 * k**2 * (u.conj() @ mass @ u).real
            rhs = (u.conj() @ m1k @ u).real
            assert lhs == pytest.approx(rhs, rel=1e-12)


class TestBoundaryEnergyIdentity:
    def check(self, space, k, g, bc=None):
        system = assemble_galerkin(space, k, f=None, g=g, bc=bc)
        x = solve(system, strategy="dense_lu").x
        bd = dense(system.meta["boundary_mass"])
        lhs = k * (x.conj() @ bd @ x).real
        # Im (g, u_N) on the Robin boundary equals Im(x^H rhs_g) with our
        # conjugation convention: rhs_i = (g, b_i) so x^H rhs = (g, u_N)
        rhs_val = np.imag(np.vdot(x, system.rhs))
        assert lhs == pytest.approx(rhs_val, rel=1e-10)

    def test_1d_model(self):
        mesh = uniform_interval_mesh(30)
        space = h1_space(mesh, 2)
        k = 9.0
        g = lambda x: np.full(x.shape[0], 2.0 - 1.3j)
        self.check(space, k, g, bc={"left": "dirichlet", "right": "robin"})

    def test_2d_square(self):
        mesh = triangulate(unit_square(), 0.25)
        space = h1_space(mesh, 2)
        k = 4.0
        d = np.array([1.0, -1.0]) / math.sqrt(2.0)

        def g(pts):
            return np.exp(1j * k * (pts @ d))

        self.check(space, k, g)


class TestLeastSquares:
    def test_hermitian_psd(self):
        mesh = triangulate(unit_square(), 0.5)
        k = 5.0
        space = trefftz_space(mesh, k, PlaneWaveBasis(k=k, p=5))
        g = lambda pts: np.exp(1j * k * pts[:, 0])
        system = assemble_least_squares(space, k, g)
        A = system.A
        np.testing.assert_allclose(A, A.conj().T, atol=1e-10)
        w = np.linalg.eigvalsh(0.5 * (A + A.conj().T))
        assert w.min() > -1e-10 * w.max()

    def test_single_element_reproduces_mode(self):
        mesh = triangulate(unit_square(), 1.0)
        # restrict to one triangle so there are no interior edges
        from helmholtz_lab.meshing import mesh_from_arrays

        single = mesh_from_arrays(2, mesh.nodes[:3], np.array([[0, 2, 1]]))
        k = 4.0
        basis = PlaneWaveBasis(k=k, p=5)
        space = trefftz_space(single, k, basis)
        w0 = basis.directions[0]
        c0 = single.centroids()[0]

        # impedance data of the first basis mode, dn b0 + ik b0, with the
        # normal recovered from whichever edge the points lie on
        def g_impedance(pts):
            out = np.empty(pts.shape[0], dtype=complex)
            val = np.exp(1j * k * ((pts - c0) @ w0))
            for edge in single.boundary_edges():
                a = single.nodes[edge.nodes[0]]
                b = single.nodes[edge.nodes[1]]
                t = b - a
                t = t / np.linalg.norm(t)
                rel = pts - a
                on_edge = np.abs(rel[:, 0] * t[1] - rel[:, 1] * t[0]) < 1e-9
                dn = 1j * k * (w0 @ edge.normal) * val
                out[on_edge] = dn[on_edge] + 1j * k * val[on_edge]
            return out

        system = assemble_least_squares(space, k, g_impedance)
        res = solve(system, strategy="truncated_svd")
        x = res.x
        expect = np.zeros(space.ndof, dtype=complex)
        expect[0] = 1.0
        np.testing.assert_allclose(x, expect, atol=1e-7)
        j_val = (x.conj() @ system.A @ x).real - 2 * np.real(
            np.vdot(x, system.rhs)
        ) + system.meta["g_norm2"]
        assert abs(j_val) < 1e-12 * system.meta["g_norm2"]

    def test_doubling_data_doubles_solution(self):
        mesh = triangulate(unit_square(), 0.5)
        k = 3.0
        space = trefftz_space(mesh, k, PlaneWaveBasis(k=k, p=4))
        g1 = lambda pts: np.exp(1j * k * pts[:, 1])
        g2 = lambda pts: 2.0 * np.exp(1j * k * pts[:, 1])
        x1 = solve(assemble_least_squares(space, k, g1), "truncated_svd").x
        x2 = solve(assemble_least_squares(space, k, g2), "truncated_svd").x
        np.testing.assert_allclose(x2, 2.0 * x1, atol=1e-8 * np.abs(x1).max())


class TestPwdg:
    def test_flux_presets(self):
        mesh = triangulate(unit_square(), 0.5)
        k = 4.0
        space = trefftz_space(mesh, k, PlaneWaveBasis(k=k, p=5))
        uwvf = uwvf_fluxes()
        assert uwvf.on_edge(0) == (0.5, 0.5, 0.5)
        hmp = hmp_fluxes(space)
        e0 = mesh.interior_edges()[0].index
        h_e = mesh.edge_lengths[e0]
        lg = math.log(space.nloc + 1.0)
        assert hmp.on_edge(e0)[0] == pytest.approx(space.nloc / (k * h_e * lg))
        assert hmp.on_edge(e0)[1] == pytest.approx(k * h_e * lg / space.nloc)
        assert hmp.on_edge(e0)[2] <= 0.49
        hv = h_version_fluxes(space, a=2.0)
        assert hv.on_edge(e0)[0] == pytest.approx(2.0 / (k * h_e))

    def test_invalid_flux_rejected(self):
        mesh = triangulate(unit_square(), 0.5)
        k = 4.0
        space = trefftz_space(mesh, k, PlaneWaveBasis(k=k, p=3))
        g = lambda pts: np.zeros(pts.shape[0], dtype=complex)
        with pytest.raises(ValueError):
            assemble_pwdg(space, k, g, FluxParams(alpha=-1.0, beta=0.5, delta=0.5))
        with pytest.raises(ValueError):
            assemble_pwdg(space, k, g, FluxParams(alpha=0.5, beta=0.5, delta=1.5))

    def test_im_quadratic_form_positive(self):
        mesh = triangulate(unit_square(), 0.5)
        k = 6.0
        space = trefftz_space(mesh, k, PlaneWaveBasis(k=k, p=4))
        g = lambda pts: np.zeros(pts.shape[0], dtype=complex)
        system = assemble_pwdg(space, k, g, uwvf_fluxes())
        rng = np.random.default_rng(3)
        for _ in range(5):
            v = rng.standard_normal(space.ndof) + 1j * rng.standard_normal(space.ndof)
            q = np.imag(v.conj() @ system.A @ v)
            assert q > 0

    def test_zero_data_zero_solution(self):
        mesh = triangulate(unit_square(), 0.5)
        k = 5.0
        space = trefftz_space(mesh, k, GhpBasis(k=k, p=3))
        g = lambda pts: np.zeros(pts.shape[0], dtype=complex)
        system = assemble_pwdg(space, k, g, uwvf_fluxes())
        x = solve(system, strategy="truncated_svd").x
        np.testing.assert_allclose(x, 0.0, atol=1e-12)


class TestSolve:
    def test_identity(self):
        rhs = np.array([1.0 + 2j, -0.5j, 3.0])
        system = ComplexSystem(A=np.eye(3, dtype=complex), rhs=rhs)
        res = solve(system, strategy="dense_lu")
        np.testing.assert_allclose(res.x, rhs)
        assert res.residual < 1e-15

    def test_hand_2x2(self):
        A = np.array([[1.0, 1j], [-1j, 2.0]])
        system = ComplexSystem(A=A, rhs=np.array([1.0, 0.0], dtype=complex))
        for strat in ("sparse_lu", "dense_lu", "truncated_svd"):
            res = solve(system, strategy=strat)
            np.testing.assert_allclose(res.x, [2.0, 1j], atol=1e-12)

    def test_dirichlet_reduction(self):
        mesh = uniform_interval_mesh(6)
        space = h1_space(mesh, 1)
        k = 2.0
        g = lambda x: np.full(x.shape[0], 1.0 + 0j)
        system = assemble_galerkin(
            space, k, f=1.0, g=g, bc={"left": "dirichlet", "right": "robin"}
        )
        res = solve(system, strategy="sparse_lu")
        assert res.x[0] == 0.0
        assert res.residual < 1e-10
        assert res.x.shape == (space.ndof,)

    def test_truncated_svd_minimum_norm(self):
        A = np.diag([1.0, 1e-16]).astype(complex)
        system = ComplexSystem(A=A, rhs=np.array([2.0, 1.0], dtype=complex))
        res = solve(system, strategy="truncated_svd", svd_cutoff=1e-12)
        np.testing.assert_allclose(res.x, [2.0, 0.0], atol=1e-12)

    def test_dimension_mismatch(self):
        system = ComplexSystem(A=np.eye(3, dtype=complex), rhs=np.zeros(2, complex))
        with pytest.raises(ValueError):
            solve(system, "dense_lu")

    def test_unknown_strategy(self):
        system = ComplexSystem(A=np.eye(2, dtype=complex), rhs=np.zeros(2, complex))
        with pytest.raises(ValueError):
            solve(system, "magic")

    def test_sparse_matches_dense(self):
        mesh = triangulate(unit_square(), 0.25)
        space = h1_space(mesh, 2)
        k = 5.0
        g = lambda pts: np.exp(1j * k * pts[:, 0])
        system = assemble_galerkin(space, k, g=g)
        xs = solve(system, "sparse_lu").x
        xd = solve(system, "dense_lu").x
        np.testing.assert_allclose(xs, xd, atol=1e-10 * np.abs(xd).max())


class TestInfsupProbe:
    def test_whitened_identity(self):
        rng = np.random.default_rng(0)
        n = 12
        raw = rng.standard_normal((n, n)) + 1j * rng.standard_normal((n, n))
        M = raw @ raw.conj().T + n * np.eye(n)
        assert infsup_probe(M, M) == pytest.approx(1.0, rel=1e-12)
        assert infsup_probe(2.0 * M, M) == pytest.approx(2.0, rel=1e-12)

    def test_rejects_indefinite_gram(self):
        M = np.diag([1.0, -1.0]).astype(complex)
        with pytest.raises(np.linalg.LinAlgError):
            infsup_probe(np.eye(2, dtype=complex), M)

    def test_1d_model_decay(self):
        # the discrete inf-sup constant of the model problem decays with k
        vals = []
        for k in (4.0, 16.0):
            n = int(round(k / 0.25))  # fixed kh = 0.25
            mesh = uniform_interval_mesh(max(8, n))
            space = h1_space(mesh, 1)
            system = assemble_galerkin(
                space, k, bc={"left": "dirichlet", "right": "robin"}
            )
            gram = assemble_gram_1k(space, k)
            free = system.free
            a = dense(system.A)[np.ix_(free, free)]
            m = dense(gram)[np.ix_(free, free)]
            vals.append(infsup_probe(a, m))
        assert vals[1] < 0.5 * vals[0]


class TestDump:
    def test_round_trip(self, tmp_path):
        A = np.array([[1.0 + 2j, 0.0], [3.5, -1j]])
        system = ComplexSystem(A=A, rhs=np.zeros(2, dtype=complex))
        path = tmp_path / "system.txt"
        dump_system(system, path)
        lines = path.read_text().strip().splitlines()
        assert lines[0] == "2"
        row0 = [tuple(map(float, pair.split(","))) for pair in lines[1].split()]
        assert row0 == [(1.0, 2.0), (0.0, 0.0)]


class TestDeterminism:
    def test_assembly_bitwise_stable(self):
        mesh = triangulate(unit_square(), 0.5)
        k = 7.0
        space = trefftz_space(mesh, k, PlaneWaveBasis(k=k, p=4))
        g = lambda pts: np.exp(1j * k * pts[:, 0])
        s1 = assemble_pwdg(space, k, g, uwvf_fluxes())
        s2 = assemble_pwdg(space, k, g, uwvf_fluxes())
        assert np.array_equal(s1.A, s2.A)
        assert np.array_equal(s1.rhs, s2.rhs)
