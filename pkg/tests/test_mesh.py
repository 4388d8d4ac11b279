"""Mesh generators, invariants, and file round-trips."""

import math

import numpy as np
import pytest

from rdgdm.exceptions import MeshParseError, MeshValidationError
from rdgdm.mesh import (
    build_mesh,
    cartesian_grid,
    generate_family,
    load_mesh,
    mesh_diameter,
    save_mesh,
    validate_mesh,
)


class TestGenerators:
    def test_cartesian_level0_size(self):
        m = generate_family("cartesian", 0)
        assert m.n_cells == 64
        assert m.n_faces == 144
        assert m.h_m == pytest.approx(math.sqrt(2.0) / 8.0, abs=1e-15)

    def test_triangular_level0_matches_benchmark_h(self):
        m = generate_family("triangular", 0)
        assert m.h_m == 0.125

    def test_triangular_h_column(self):
        # benchmark column: 0.125, 0.0625, 0.03125, 0.015625
        for level, h in enumerate((0.125, 0.0625, 0.03125, 0.015625)):
            assert generate_family("triangular", level).h_m == h

    @pytest.mark.parametrize("family", ["cartesian", "triangular", "hexagonal"])
    def test_invariants_levels_0_to_4(self, family):
        for level in range(5):
            m = generate_family(family, level)
            validate_mesh(m)  # closure, positivity, incidence, loops
            assert abs(m.cell_area.sum() - 1.0) <= 1e-12
            interior = ~m.boundary_flags
            assert np.all(m.face_cells[interior, 1] >= 0)
            assert np.all(m.face_cells[m.boundary_flags, 1] == -1)

    @pytest.mark.parametrize("family", ["cartesian", "triangular", "hexagonal"])
    def test_refinement_halves_h(self, family):
        hs = [generate_family(family, level).h_m for level in range(4)]
        for coarse, fine in zip(hs, hs[1:]):
            ratio = fine / coarse
            if family == "cartesian":
                assert abs(ratio - 0.5) <= 1e-12
            else:
                assert 0.45 <= ratio <= 0.55

    def test_hexagonal_has_many_sided_cells(self):
        m = generate_family("hexagonal", 1)
        assert max(len(c) for c in m.cells) == 6

    def test_closure_identity_hexagonal(self):
        m = generate_family("hexagonal", 1)
        for k in range(m.n_cells):
            f = m.cell_faces[k]
            resid = (m.face_length[f][:, None] * m.outward_normals(k)).sum(axis=0)
            assert np.abs(resid).max() <= 1e-12 * m.face_length[f].sum()

    def test_unit_normals(self):
        m = generate_family("hexagonal", 0)
        lens = np.hypot(m.face_normal[:, 0], m.face_normal[:, 1])
        assert np.abs(lens - 1.0).max() <= 1e-12

    def test_negative_level_rejected(self):
        with pytest.raises(ValueError):
            generate_family("cartesian", -1)

    def test_unknown_family_rejected(self):
        with pytest.raises(ValueError):
            generate_family("voronoi", 0)


class TestDiameter:
    def test_single_cell_diagonal(self):
        assert mesh_diameter(cartesian_grid(1)) == pytest.approx(
            math.sqrt(2.0), abs=1e-15
        )

    def test_cartesian_level0(self):
        assert mesh_diameter(generate_family("cartesian", 0)) == pytest.approx(
            math.sqrt(2.0) / 8.0, abs=1e-15
        )

    def test_triangular_level0(self):
        assert mesh_diameter(generate_family("triangular", 0)) == 0.125


class TestBuildValidation:
    def test_missing_vertex_reference(self):
        with pytest.raises(MeshValidationError, match="missing vertex"):
            build_mesh([(0, 0), (1, 0), (1, 1)], [[0, 1, 5]])

    def test_face_shared_three_times(self):
        verts = [(0, 0), (1, 0), (0, 1), (1, 1), (-1, 0.5)]
        cells = [[0, 1, 2], [1, 3, 2], [0, 2, 4], [0, 1, 2]]
        with pytest.raises(MeshValidationError, match="more than two"):
            build_mesh(verts, cells)

    def test_clockwise_cell_rejected(self):
        with pytest.raises(MeshValidationError, match="nonpositive area"):
            build_mesh([(0, 0), (1, 0), (1, 1)], [[0, 2, 1]])


class TestFileIO:
    def test_round_trip_cartesian(self, tmp_path):
        m = generate_family("cartesian", 0)
        path = tmp_path / "mesh.txt"
        save_mesh(m, path)
        m2 = load_mesh(path)
        assert np.array_equal(m.vertices, m2.vertices)
        assert np.array_equal(m.faces, m2.faces)
        assert np.array_equal(m.face_cells, m2.face_cells)

    def test_round_trip_hexagonal_bit_identical(self, tmp_path):
        m = generate_family("hexagonal", 1)
        path = tmp_path / "mesh.txt"
        save_mesh(m, path)
        m2 = load_mesh(path)
        assert np.array_equal(m.vertices, m2.vertices)
        assert all(np.array_equal(a, b) for a, b in zip(m.cells, m2.cells))

    def test_hand_written_unit_square(self, tmp_path):
        path = tmp_path / "one.txt"
        path.write_text(
            "# one cell\nvertices\n0 0 0\n1 1 0\n2 1 1\n3 0 1\ncells\n0 0 1 2 3\n"
        )
        m = load_mesh(path)
        assert m.n_cells == 1
        assert m.cell_area[0] == pytest.approx(1.0, abs=1e-15)
        assert m.boundary_flags.sum() == 4

    def test_parse_error_carries_line_number(self, tmp_path):
        path = tmp_path / "bad.txt"
        path.write_text("vertices\n0 0 0\n1 oops 0\n")
        with pytest.raises(MeshParseError, match="line 3"):
            load_mesh(path)

    def test_cell_referencing_missing_vertex(self, tmp_path):
        path = tmp_path / "bad.txt"
        path.write_text("vertices\n0 0 0\n1 1 0\n2 1 1\ncells\n0 0 1 7\n")
        with pytest.raises(MeshValidationError, match="missing vertex"):
            load_mesh(path)

    def test_data_before_header_rejected(self, tmp_path):
        path = tmp_path / "bad.txt"
        path.write_text("0 0 0\n")
        with pytest.raises(MeshParseError, match="line 1"):
            load_mesh(path)
