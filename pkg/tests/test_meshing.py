"""Mesh construction, topology, grading and the text round trip."""

import math

import numpy as np
import pytest

from helmholtz_lab.meshing import (
    geometric_refine,
    l_shape,
    load_mesh,
    mesh_from_arrays,
    mesh_from_text,
    mesh_to_text,
    n_lambda,
    save_mesh,
    triangulate,
    uniform_interval_mesh,
    unit_interval,
    unit_square,
    validate_mesh,
)


class TestInterval:
    def test_uniform(self):
        mesh = uniform_interval_mesh(4)
        assert mesh.n_nodes == 5
        assert mesh.n_elements == 4
        assert mesh.h == pytest.approx(0.25)
        assert validate_mesh(mesh)

    def test_end_tags(self):
        mesh = uniform_interval_mesh(3)
        tags = {mesh.edge_tags[i] for i in np.flatnonzero(mesh.boundary_mask)}
        assert tags == {"left", "right"}

    def test_boundary_normals(self):
        mesh = uniform_interval_mesh(3)
        for edge in mesh.boundary_edges():
            x = mesh.nodes[edge.nodes[0]]
            want = -1.0 if x == 0.0 else 1.0
            assert edge.normal[0] == want
            assert edge.elems[1] == -1

    def test_interior_edges_are_nodes(self):
        mesh = uniform_interval_mesh(5)
        inner = mesh.interior_edges()
        assert len(inner) == 4
        for edge in inner:
            assert edge.elems[0] >= 0 and edge.elems[1] >= 0


class TestTriangulate:
    def test_square_single_cell(self):
        mesh = triangulate(unit_square(), 1.0)
        assert mesh.n_elements == 2
        assert mesh.n_nodes == 4
        assert validate_mesh(mesh, max_shape_reg=5.0)

    def test_square_half(self):
        mesh = triangulate(unit_square(), 0.5)
        assert mesh.n_elements == 8
        assert np.sum(mesh.areas()) == pytest.approx(1.0, abs=1e-14)

    def test_lshape_counts_and_area(self):
        mesh = triangulate(l_shape(), 0.5)
        assert mesh.n_elements == 24
        assert np.sum(mesh.areas()) == pytest.approx(3.0, abs=1e-13)
        assert validate_mesh(mesh, max_shape_reg=5.0)

    def test_lshape_neumann_tags(self):
        mesh = triangulate(l_shape(neumann_gamma=True), 0.25)
        neumann_len = 0.0
        robin_len = 0.0
        for edge in mesh.boundary_edges():
            if edge.tag == "neumann":
                neumann_len += edge.length
            elif edge.tag == "robin":
                robin_len += edge.length
            else:
                raise AssertionError("untagged boundary edge")
        # the two sides meeting at the origin have total length 2
        assert neumann_len == pytest.approx(2.0, abs=1e-12)
        assert robin_len == pytest.approx(6.0, abs=1e-12)
        # neumann edges really lie on {y=0, 0<=x<=1} or {x=0, -1<=y<=0}
        for edge in mesh.boundary_edges():
            if edge.tag != "neumann":
                continue
            a = mesh.nodes[edge.nodes[0]]
            b = mesh.nodes[edge.nodes[1]]
            on_top = abs(a[1]) < 1e-12 and abs(b[1]) < 1e-12
            on_left = abs(a[0]) < 1e-12 and abs(b[0]) < 1e-12
            assert on_top or on_left

    def test_boundary_length_square(self):
        mesh = triangulate(unit_square(), 0.25)
        total = sum(e.length for e in mesh.boundary_edges())
        assert total == pytest.approx(4.0, abs=1e-12)

    def test_normals_outward(self):
        mesh = triangulate(unit_square(), 0.5)
        assert validate_mesh(mesh)
        for edge in mesh.boundary_edges():
            mid = 0.5 * (mesh.nodes[edge.nodes[0]] + mesh.nodes[edge.nodes[1]])
            # outward normal on the unit square boundary points away from center
            assert np.dot(edge.normal, mid - np.array([0.5, 0.5])) > 0

    def test_interior_edge_has_two_elements(self):
        mesh = triangulate(unit_square(), 0.5)
        for edge in mesh.interior_edges():
            assert edge.elems[1] >= 0
            assert edge.tag is None

    def test_refuses_bad_pitch(self):
        with pytest.raises(ValueError):
            triangulate(unit_square(), -0.5)


class TestGeometricRefine:
    def test_interval_knots(self):
        # single element (0, 1) graded toward 0: nodes at sigma^j
        mesh = uniform_interval_mesh(1)
        out = geometric_refine(mesh, [0.0], 0.5, 3)
        assert np.allclose(np.sort(out.nodes), [0.0, 0.125, 0.25, 0.5, 1.0])
        tags = {out.edge_tags[i] for i in np.flatnonzero(out.boundary_mask)}
        assert tags == {"left", "right"}

    def test_lshape_grading(self):
        coarse = triangulate(l_shape(neumann_gamma=True), 0.5)
        fine = geometric_refine(coarse, [(0.0, 0.0)], 0.125, 10)
        assert validate_mesh(fine)
        assert fine.h_min <= 0.125**10 * coarse.h
        # total area preserved
        assert np.sum(fine.areas()) == pytest.approx(3.0, abs=1e-12)
        # boundary tags survive refinement
        neumann_len = sum(
            e.length for e in fine.boundary_edges() if e.tag == "neumann"
        )
        assert neumann_len == pytest.approx(2.0, abs=1e-12)

    def test_layer_count(self):
        coarse = triangulate(unit_square(), 0.5)
        fine = geometric_refine(coarse, [(0.0, 0.0)], 0.5, 4)
        assert validate_mesh(fine)
        # each corner triangle becomes 1 + 2L elements
        assert fine.n_elements == coarse.n_elements - 2 + 2 * (1 + 2 * 4)

    def test_rejects_non_node_corner(self):
        mesh = triangulate(unit_square(), 0.5)
        with pytest.raises(ValueError):
            geometric_refine(mesh, [(0.31, 0.12)], 0.5, 2)

    def test_rejects_bad_sigma(self):
        mesh = triangulate(unit_square(), 0.5)
        with pytest.raises(ValueError):
            geometric_refine(mesh, [(0.0, 0.0)], 1.5, 2)


class TestNLambda:
    def test_1d(self):
        assert n_lambda(100, 10.0, 1) == pytest.approx(2 * math.pi * 100 / 10)

    def test_2d(self):
        assert n_lambda(400, 10.0, 2) == pytest.approx(2 * math.pi * 20 / 10)

    def test_bad_dim(self):
        with pytest.raises(ValueError):
            n_lambda(10, 1.0, 3)


class TestTextRoundTrip:
    def test_square_bit_exact(self, tmp_path):
        mesh = triangulate(unit_square(), 1.0 / 3.0)
        text1 = mesh_to_text(mesh)
        mesh2 = mesh_from_text(text1)
        text2 = mesh_to_text(mesh2)
        assert text1 == text2
        assert mesh2.n_elements == mesh.n_elements
        np.testing.assert_array_equal(mesh.nodes, mesh2.nodes)

    def test_interval_round_trip(self, tmp_path):
        mesh = geometric_refine(uniform_interval_mesh(3), [0.0], 0.5, 2)
        p = tmp_path / "m.txt"
        save_mesh(mesh, p)
        mesh2 = load_mesh(p)
        assert mesh_to_text(mesh2) == mesh_to_text(mesh)

    def test_header_and_layout(self):
        mesh = triangulate(unit_square(), 1.0)
        lines = mesh_to_text(mesh).splitlines()
        assert lines[0] == "2 4 2"
        assert len(lines[1].split()) == 2  # node line "x y"
        # element lines are 0-based ints
        toks = lines[1 + 4].split()
        assert all(t.isdigit() for t in toks)
        # tag lines
        assert lines[-1].startswith("edge ")

    def test_tags_survive(self):
        mesh = triangulate(l_shape(neumann_gamma=True), 0.5)
        mesh2 = mesh_from_text(mesh_to_text(mesh))
        n1 = sum(e.length for e in mesh.boundary_edges() if e.tag == "neumann")
        n2 = sum(e.length for e in mesh2.boundary_edges() if e.tag == "neumann")
        assert n1 == pytest.approx(n2, abs=1e-15)


class TestValidator:
    def test_flags_bad_orientation(self):
        nodes = np.array([[0.0, 0.0], [1.0, 0.0], [0.0, 1.0]])
        elements = np.array([[0, 2, 1]])  # clockwise
        with pytest.raises(ValueError):
            mesh_from_arrays(2, nodes, elements)

    def test_flags_nonmanifold(self):
        # three triangles sharing the edge (0, 1)
        nodes = np.array(
            [[0.0, 0.0], [1.0, 0.0], [0.5, 1.0], [0.5, -1.0], [1.5, 0.5]]
        )
        elements = np.array([[0, 1, 2], [1, 0, 3], [0, 1, 4]])
        with pytest.raises(ValueError):
            mesh_from_arrays(2, nodes, elements)

    def test_shape_reg_structured(self):
        mesh = triangulate(unit_square(), 0.25)
        # right isoceles triangle: diameter/inradius = 2 + 2*sqrt(2) ~ 4.83
        assert mesh.shape_reg == pytest.approx(2.0 + 2.0 * math.sqrt(2.0), rel=1e-12)
        assert validate_mesh(mesh, max_shape_reg=5.0)

    def test_graded_fan_allowed_without_bound(self):
        coarse = triangulate(unit_square(), 0.5)
        fine = geometric_refine(coarse, [(0.0, 0.0)], 0.125, 6)
        assert validate_mesh(fine)
        with pytest.raises(ValueError):
            validate_mesh(fine, max_shape_reg=5.0)
