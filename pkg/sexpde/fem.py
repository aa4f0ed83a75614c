"""P1 finite element operators on a triangulated rectangle.

The discrete Laplacian-type operator is never formed explicitly: ``A_h``
is the map ``v -> M^{-1}(-K v) + shift * v`` where ``M`` is the mass and
``K`` the stiffness matrix of the bilinear form

    a(u, v) = int D grad u . grad v + int (q . grad u) v [+ int_bdry alpha0 u v]

Dirichlet boundaries are handled by removing the boundary nodes; nodal
vectors then only hold the free (interior) degrees of freedom.
"""

import logging
import threading
from dataclasses import dataclass

import numpy as np
from scipy import sparse
from scipy.sparse import linalg as splinalg

from .exceptions import EllipticityError, FactorizationError


__all__ = (
    'BoundaryKind', 'OperatorCoefficients', 'FemOperators',
    'assemble_operators', 'load_vector', 'l2_project', 'project_field',
    'apply_Ah',
    'functional_phi1', 'functional_phi2',
)

log = logging.getLogger(__name__)


class BoundaryKind(object):
    NEUMANN = 'neumann'
    DIRICHLET = 'dirichlet'
    ROBIN = 'robin'

    choices = (NEUMANN, DIRICHLET, ROBIN)


@dataclass(frozen=True)
class OperatorCoefficients:
    """Constant coefficients of the second order operator.

    ``D`` is the 2x2 diffusion tensor, ``q_adv`` the advection velocity,
    ``alpha0`` the Robin coefficient (ignored for other boundaries) and
    ``shift`` a real number added to the operator, so that
    ``A_h = -M^{-1}K + shift``. ``c1`` is the ellipticity constant the
    tensor has to satisfy.
    """
    D: tuple = ((1.0, 0.0), (0.0, 1.0))
    q_adv: tuple = (0.0, 0.0)
    alpha0: float = 0.0
    shift: float = 0.0
    c1: float = 1e-12

    @classmethod
    def isotropic(cls, diffusion, **kwargs):
        return cls(D=((diffusion, 0.0), (0.0, diffusion)), **kwargs)

    @property
    def tensor(self):
        return np.asarray(self.D, dtype=float).reshape(2, 2)

    @property
    def velocity(self):
        return np.asarray(self.q_adv, dtype=float).reshape(2)

    def check_ellipticity(self):
        if not self.c1 > 0:
            raise EllipticityError('ellipticity constant c1 must be positive,'
                                   ' got %r' % self.c1)
        D = self.tensor
        smallest = np.linalg.eigvalsh(0.5 * (D + D.T)).min()
        if smallest < self.c1:
            raise EllipticityError(
                'diffusion tensor violates xi.D.xi >= c1 |xi|^2: smallest '
                'eigenvalue %g < c1 = %g' % (smallest, self.c1))


# 3-point rule with interior points; exact for quadratics.
QUAD_BARY = np.array([[2.0 / 3, 1.0 / 6, 1.0 / 6],
                      [1.0 / 6, 2.0 / 3, 1.0 / 6],
                      [1.0 / 6, 1.0 / 6, 2.0 / 3]])
QUAD_WEIGHTS = np.array([1.0 / 3, 1.0 / 3, 1.0 / 3])

_LOCAL_MASS = np.array([[2.0, 1.0, 1.0],
                        [1.0, 2.0, 1.0],
                        [1.0, 1.0, 2.0]]) / 12.0


def _element_geometry(mesh):
    """Areas and barycentric gradients, shapes ``(m,)`` and ``(m, 3, 2)``."""
    p = mesh.corners()
    x, y = p[:, :, 0], p[:, :, 1]
    area = mesh.signed_areas()
    b = np.stack([y[:, 1] - y[:, 2], y[:, 2] - y[:, 0], y[:, 0] - y[:, 1]],
                 axis=1)
    c = np.stack([x[:, 2] - x[:, 1], x[:, 0] - x[:, 2], x[:, 1] - x[:, 0]],
                 axis=1)
    grads = np.stack([b, c], axis=2) / (2.0 * area)[:, None, None]
    return area, grads


def _scatter(triangles, local, n):
    rows = np.repeat(triangles, 3, axis=1).ravel()
    cols = np.tile(triangles, (1, 3)).ravel()
    return sparse.coo_matrix((local.ravel(), (rows, cols)),
                             shape=(n, n)).tocsr()


class FemOperators(object):
    """Assembled mass and stiffness matrices plus a mass factorization.

    Instances are immutable after construction and may be shared between
    threads. Each thread factorizes the mass matrix on first use and keeps
    its own factor, so concurrent solves never share solver state.
    """

    def __init__(self, mesh, coeffs, bc, mass, stiffness, free, integrals,
                 lumped=False):
        self.mesh = mesh
        self.coeffs = coeffs
        self.bc = bc
        self.mass = mass
        self.stiffness = stiffness
        self.free = free
        self.integrals = integrals
        self.lumped = lumped
        self._local = threading.local()
        self._cache_lock = threading.Lock()
        self._mode_cache = {}
        self._check_factorization(self.mass_factorization)

    shift = property(lambda s: s.coeffs.shift)
    dim = property(lambda s: s.free.shape[0])

    @property
    def points(self):
        """Coordinates of the free nodes, in nodal-vector order."""
        return self.mesh.nodes[self.free]

    @property
    def mass_factorization(self):
        lu = getattr(self._local, 'lu', None)
        if lu is None:
            try:
                lu = splinalg.splu(
                    self.mass.tocsc(), permc_spec='MMD_AT_PLUS_A',
                    diag_pivot_thresh=0.0, options={'SymmetricMode': True})
            except RuntimeError as e:
                raise FactorizationError(
                    'mass matrix factorization failed (degenerate mesh?): %s'
                    % e)
            self._local.lu = lu
        return lu

    def _check_factorization(self, lu):
        pivots = lu.U.diagonal()
        if not np.all(pivots > 0):
            raise FactorizationError(
                'mass matrix is not positive definite: smallest pivot %g'
                % pivots.min())

    def solve_mass(self, b):
        return self.mass_factorization.solve(np.asarray(b, dtype=float))

    def expand(self, v):
        """Return ``v`` as values on every mesh node (zero on removed ones)."""
        if self.dim == self.mesh.n_nodes:
            return np.asarray(v)
        full = np.zeros((self.mesh.n_nodes,) + np.shape(v)[1:])
        full[self.free] = v
        return full

    def mass_norm(self, v):
        return float(np.sqrt(v @ (self.mass @ v)))

    def cached(self, key, factory):
        """Return ``factory()`` computed once per key for these operators."""
        with self._cache_lock:
            if key not in self._mode_cache:
                self._mode_cache[key] = factory()
            return self._mode_cache[key]

    def __repr__(self):
        return '<FemOperators %s, %d dofs, shift=%g%s>' % (
            self.bc, self.dim, self.shift, self.lumped and ', lumped' or '')


def assemble_operators(mesh, coeffs, bc=BoundaryKind.NEUMANN, lumped=False):
    """Assemble ``M`` and ``K`` with exact constant-coefficient P1 integrals.

    ``K[k, l] = a(phi_l, phi_k)``. With ``lumped`` the mass matrix is
    replaced by its diagonal row-sum approximation.
    """
    if bc not in BoundaryKind.choices:
        raise ValueError('Invalid boundary kind: %s' % bc)
    coeffs.check_ellipticity()

    area, grads = _element_geometry(mesh)
    n = mesh.n_nodes
    D = coeffs.tensor
    q = coeffs.velocity

    local_k = area[:, None, None] * np.einsum('mki,ij,mlj->mkl',
                                              grads, D, grads)
    if np.any(q != 0):
        # int (q . grad phi_l) phi_k = (q . grad phi_l) |T| / 3
        flux = grads @ q
        local_k += (area / 3.0)[:, None, None] * flux[:, None, :]
    if lumped:
        local_m = np.zeros((mesh.n_triangles, 3, 3))
        local_m[:, [0, 1, 2], [0, 1, 2]] = (area / 3.0)[:, None]
    else:
        local_m = area[:, None, None] * _LOCAL_MASS

    M = _scatter(mesh.triangles, local_m, n)
    K = _scatter(mesh.triangles, local_k, n)

    if bc == BoundaryKind.ROBIN and coeffs.alpha0 != 0:
        edges = mesh.boundary_edges()
        p = mesh.nodes[edges]
        length = np.sqrt(((p[:, 1] - p[:, 0]) ** 2).sum(axis=1))
        local_e = (coeffs.alpha0 * length / 6.0)[:, None, None] * \
            np.array([[2.0, 1.0], [1.0, 2.0]])
        rows = np.repeat(edges, 2, axis=1).ravel()
        cols = np.tile(edges, (1, 2)).ravel()
        K = K + sparse.coo_matrix((local_e.ravel(), (rows, cols)),
                                  shape=(n, n)).tocsr()

    M = (0.5 * (M + M.T)).tocsr()
    symmetric = not np.any(q != 0) and np.array_equal(D, D.T)
    if symmetric:
        K = (0.5 * (K + K.T)).tocsr()

    # int phi_k, taken before boundary rows are dropped
    integrals = np.asarray(M.sum(axis=0)).ravel()
    if bc == BoundaryKind.DIRICHLET:
        free = np.setdiff1d(np.arange(n), mesh.boundary_nodes())
        M = M[free][:, free].tocsr()
        K = K[free][:, free].tocsr()
    else:
        free = np.arange(n)

    ops = FemOperators(mesh, coeffs, bc, M, K, free, integrals[free],
                       lumped=lumped)
    log.debug('assembled %r on %r', ops, mesh)
    return ops


def _loads(ops, values):
    """Scatter quadrature values ``(m, 3[, c])`` into free-node loads."""
    mesh = ops.mesh
    area = np.abs(mesh.signed_areas())
    values = np.asarray(values, dtype=float)
    extra = values.shape[2:]
    # b_T[k] = |T| sum_q w_q f(x_q) lambda_k(x_q)
    weights = QUAD_WEIGHTS[:, None] * QUAD_BARY
    local = np.einsum('m,qk,mq...->mk...', area, weights, values)
    b = np.zeros((mesh.n_nodes,) + extra)
    np.add.at(b, mesh.triangles.ravel(), local.reshape((-1,) + extra))
    return b[ops.free]


def quadrature_points(mesh):
    """Physical quadrature points, shape ``(m, 3, 2)``."""
    return np.einsum('qk,mkd->mqd', QUAD_BARY, mesh.corners())


def load_vector(ops, f):
    """``b_k = int f phi_k`` for a pointwise ``f(x, y)``.

    ``f`` may return one value per point or a row of values per point, in
    which case one load column per value is returned.
    """
    pts = quadrature_points(ops.mesh)
    m = pts.shape[0]
    values = np.asarray(f(pts[:, :, 0].ravel(), pts[:, :, 1].ravel()),
                        dtype=float)
    values = values.reshape((m, 3) + values.shape[1:])
    return _loads(ops, values)


def l2_project(ops, f):
    """Return the nodal vector of the L2 projection ``P_h f``."""
    b = load_vector(ops, f)
    return ops.solve_mass(b)


def project_field(ops, g, v):
    """L2-project ``x -> g(points, v_h(x))`` for a nodal vector ``v``.

    ``g`` receives an ``(k, 2)`` array of points and the values of the P1
    function ``v`` at those points.
    """
    mesh = ops.mesh
    full = ops.expand(v)
    vq = np.einsum('qk,mk->mq', QUAD_BARY, full[mesh.triangles])
    pts = quadrature_points(mesh)
    m = pts.shape[0]
    values = np.asarray(g(pts.reshape(-1, 2), vq.ravel()), dtype=float)
    return ops.solve_mass(_loads(ops, values.reshape(m, 3)))


def apply_Ah(ops, v):
    """Return ``A_h v``, the solution ``w`` of ``M w = -K v + shift M v``."""
    v = np.asarray(v, dtype=float)
    if v.shape[0] != ops.dim:
        raise ValueError('vector has %d entries, operators have %d dofs'
                         % (v.shape[0], ops.dim))
    w = ops.solve_mass(-(ops.stiffness @ v))
    if ops.shift:
        w = w + ops.shift * v
    return w


def _check_dim(ops, v):
    if np.shape(v)[0] != ops.dim:
        raise ValueError('vector has %d entries, operators have %d dofs'
                         % (np.shape(v)[0], ops.dim))


def functional_phi1(ops, v):
    """``int v`` over the domain."""
    _check_dim(ops, v)
    return float(ops.integrals @ v)


def functional_phi2(ops, v):
    """``||v||^2`` in L2."""
    _check_dim(ops, v)
    return float(v @ (ops.mass @ v))
