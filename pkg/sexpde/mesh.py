"""Structured triangulations of a rectangle."""

import logging

import numpy as np

from .exceptions import MeshError


__all__ = ('Mesh', 'build_rect_mesh',)

log = logging.getLogger(__name__)


class Mesh(object):
    """A triangulation of ``[0, L1] x [0, L2]``.

    ``nodes`` is an ``(n, 2)`` array of coordinates in row-major order (the
    node at grid position ``(i, j)`` has index ``j * (nx + 1) + i``), and
    ``triangles`` an ``(m, 3)`` array of counter-clockwise node indices.
    """

    def __init__(self, nx, ny, L1, L2, nodes, triangles):
        self.nx = nx
        self.ny = ny
        self.L1 = L1
        self.L2 = L2
        self.nodes = nodes
        self.triangles = triangles

    @property
    def n_nodes(self):
        return self.nodes.shape[0]

    @property
    def n_triangles(self):
        return self.triangles.shape[0]

    def corners(self):
        """Return the ``(m, 3, 2)`` array of triangle vertex coordinates."""
        return self.nodes[self.triangles]

    def signed_areas(self):
        p = self.corners()
        e1 = p[:, 1] - p[:, 0]
        e2 = p[:, 2] - p[:, 0]
        return 0.5 * (e1[:, 0] * e2[:, 1] - e1[:, 1] * e2[:, 0])

    @property
    def h(self):
        """Maximal edge length over all triangles."""
        p = self.corners()
        edges = np.stack([p[:, 1] - p[:, 0], p[:, 2] - p[:, 1],
                          p[:, 0] - p[:, 2]], axis=1)
        return float(np.sqrt((edges ** 2).sum(axis=2)).max())

    def boundary_nodes(self):
        x, y = self.nodes[:, 0], self.nodes[:, 1]
        tol = 1e-12 * max(self.L1, self.L2)
        on_boundary = ((x <= tol) | (x >= self.L1 - tol) |
                       (y <= tol) | (y >= self.L2 - tol))
        return np.flatnonzero(on_boundary)

    def boundary_edges(self):
        """Return the ``(k, 2)`` node pairs of edges lying on the boundary.

        On the structured grid these are the cell sides along the four
        sides of the rectangle.
        """
        nx, ny = self.nx, self.ny

        def index(i, j):
            return j * (nx + 1) + i

        edges = []
        for i in range(nx):
            edges.append((index(i, 0), index(i + 1, 0)))
            edges.append((index(i + 1, ny), index(i, ny)))
        for j in range(ny):
            edges.append((index(nx, j), index(nx, j + 1)))
            edges.append((index(0, j + 1), index(0, j)))
        return np.array(edges, dtype=np.int64)

    def dump(self, stream):
        """Write a plain-text listing, one record per line.

        Nodes come first as ``node <index> <x> <y>``, then triangles as
        ``triangle <index> <a> <b> <c>``.
        """
        for k, (x, y) in enumerate(self.nodes):
            stream.write('node %d %.17g %.17g\n' % (k, x, y))
        for k, (a, b, c) in enumerate(self.triangles):
            stream.write('triangle %d %d %d %d\n' % (k, a, b, c))

    def __repr__(self):
        return '<Mesh %dx%d on [0, %g] x [0, %g], h=%g>' % (
            self.nx, self.ny, self.L1, self.L2, self.h)


def build_rect_mesh(nx, ny, L1=1.0, L2=1.0):
    """Split an ``nx`` by ``ny`` grid of cells into triangles.

    Every cell is cut along its south-west to north-east diagonal, giving
    two counter-clockwise triangles per cell.
    """
    if int(nx) != nx or int(ny) != ny or nx < 1 or ny < 1:
        raise MeshError('subdivisions must be positive integers, got %r x %r'
                        % (nx, ny))
    if not (L1 > 0 and L2 > 0):
        raise MeshError('side lengths must be positive, got %r x %r'
                        % (L1, L2))
    nx, ny = int(nx), int(ny)

    xs = np.linspace(0.0, L1, nx + 1)
    ys = np.linspace(0.0, L2, ny + 1)
    X, Y = np.meshgrid(xs, ys)
    nodes = np.column_stack([X.ravel(), Y.ravel()])

    i, j = np.meshgrid(np.arange(nx), np.arange(ny))
    i, j = i.ravel(), j.ravel()
    sw = j * (nx + 1) + i
    se = sw + 1
    nw = sw + (nx + 1)
    ne = nw + 1
    lower = np.column_stack([sw, se, ne])
    upper = np.column_stack([sw, ne, nw])
    triangles = np.empty((2 * nx * ny, 3), dtype=np.int64)
    triangles[0::2] = lower
    triangles[1::2] = upper

    mesh = Mesh(nx, ny, float(L1), float(L2), nodes, triangles)
    log.debug('built %r', mesh)
    return mesh
