import io
import math

import numpy as np
import pytest

from sexpde import MeshError, build_rect_mesh


def test_single_cell():
    mesh = build_rect_mesh(1, 1, 1.0, 1.0)
    assert mesh.n_nodes == 4
    assert mesh.n_triangles == 2
    assert abs(mesh.signed_areas().sum() - 1.0) < 1e-12


def test_counts_and_h():
    mesh = build_rect_mesh(2, 2, 1.0, 1.0)
    assert mesh.n_nodes == 9
    assert mesh.n_triangles == 8
    assert abs(mesh.h - math.sqrt(2) / 2) < 1e-15

    mesh = build_rect_mesh(3, 2, 1.5, 1.0)
    assert mesh.n_nodes == 12
    assert mesh.n_triangles == 12
    assert abs(mesh.h - math.sqrt(0.5 ** 2 + 0.5 ** 2)) < 1e-15


def test_orientation_and_area():
    for nx, ny, L1, L2 in ((5, 3, 2.0, 0.5), (7, 7, 1.0, 1.0)):
        mesh = build_rect_mesh(nx, ny, L1, L2)
        areas = mesh.signed_areas()
        assert np.all(areas > 0)
        assert abs(areas.sum() - L1 * L2) <= 1e-12 * L1 * L2


def test_row_major_nodes():
    mesh = build_rect_mesh(4, 2, 1.0, 1.0)
    # node (i, j) has index j * (nx + 1) + i
    assert np.allclose(mesh.nodes[5 * 1 + 3], (0.75, 0.5))
    assert len(mesh.boundary_nodes()) == 12
    assert len(mesh.boundary_edges()) == 2 * (4 + 2)


def test_invalid_sizes():
    with pytest.raises(MeshError):
        build_rect_mesh(0, 1)
    with pytest.raises(MeshError):
        build_rect_mesh(2, -1)
    with pytest.raises(MeshError):
        build_rect_mesh(2, 2, 0.0, 1.0)
    # errors are tagged with the module that raised them
    with pytest.raises(ValueError, match=r'^\[mesh\]'):
        build_rect_mesh(1.5, 2)


def test_dump():
    mesh = build_rect_mesh(1, 1, 2.0, 1.0)
    out = io.StringIO()
    mesh.dump(out)
    lines = out.getvalue().splitlines()
    assert lines[0] == 'node 0 0 0'
    assert lines[1] == 'node 1 2 0'
    assert lines[4] == 'triangle 0 0 1 3'
    assert lines[5] == 'triangle 1 0 3 2'
    assert len(lines) == 6
