"""Monte Carlo weak and strong error measurement and rate fitting.

Realizations are independent tasks: each one rebuilds its noise from
``(seed, realization)`` and returns a scalar, and results are always
combined in realization order. A study therefore produces the same
numbers whatever the number of worker threads.
"""

import logging
import math
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass, field

import numpy as np
from scipy import stats
from scipy.sparse import linalg as splinalg

from .exceptions import RateFitError
from .fem import assemble_operators, functional_phi1, functional_phi2
from .integrator import RunConfig, operator_action, simulate
from .matfunc import KrylovConfig, expm_action, phi1_action
from .mesh import build_rect_mesh
from .model import InitialValue, linear2d
from .noise import (
    CovarianceSpectrum, NoiseStream, build_spectrum, default_n_max,
    project_modes,
)
from .reference import (
    GalerkinModes, OuMode, OuModes, exact_mean_phi1, exact_modes,
    exact_second_moment, exact_variance, ou_step, simulate_exact_field,
)
from .reports import ConvergenceReport


__all__ = (
    'NoiseSettings', 'Discretization', 'WeakErrorConfig', 'PointResult',
    'discretize', 'weak_error', 'strong_error', 'converge_time',
    'converge_space', 'strong_study', 'fit_rate', 'selftest',
)

log = logging.getLogger(__name__)


FUNCTIONALS = ('phi1', 'phi2')
REFERENCES = ('control-variate', 'monte-carlo', 'closed-form')
TARGETS = ('auto', 'exact', 'galerkin')


@dataclass(frozen=True)
class NoiseSettings:
    beta: float = 1.0
    delta: float = 0.001
    q00: float = 0.0
    n_max: int = None       # None: as many modes as the mesh has nodes


class Discretization(object):
    """Everything a run needs at one spatial resolution."""

    def __init__(self, mesh, ops, basis, spectrum, E):
        self.mesh = mesh
        self.ops = ops
        self.basis = basis
        self.spectrum = spectrum
        self.E = E

    h = property(lambda s: s.mesh.h)


def discretize(problem, nx, noise, ny=None, L1=1.0, L2=1.0, lumped=False):
    mesh = build_rect_mesh(nx, ny or nx, L1, L2)
    ops = assemble_operators(mesh, problem.coeffs, problem.bc, lumped=lumped)
    n_max = noise.n_max or default_n_max(mesh)
    spectrum = build_spectrum(noise.beta, noise.delta, n_max, noise.q00,
                              L1, L2)
    E = project_modes(spectrum.basis, spectrum, ops)
    return Discretization(mesh, ops, spectrum.basis, spectrum, E)


@dataclass(frozen=True)
class WeakErrorConfig:
    """A weak (or strong) convergence study.

    ``nx`` is the fixed mesh of a time study and ``dt`` the fixed step of a
    space study; ``dt_ladder`` and ``nx_ladder`` are the resolutions
    swept. ``synthesis`` selects how the exact field of a strong study is
    put on the nodes: through the projected modes (``projected``) or by
    evaluating the eigenfunctions (``direct``). ``target`` is the solution
    weak errors are taken against (see ``weak_error``); ``auto`` means the
    exact solution in time studies and the Galerkin solution with the same
    time step in space studies.
    """
    problem: object
    seed: int
    functional: str = 'phi2'
    realizations: int = 200
    reference: str = 'control-variate'
    target: str = 'auto'
    T: float = 1.0
    nx: int = 32
    dt: float = 1.0 / 64
    dt_ladder: tuple = ()
    nx_ladder: tuple = ()
    noise: NoiseSettings = NoiseSettings()
    krylov: KrylovConfig = KrylovConfig()
    L1: float = 1.0
    L2: float = 1.0
    lumped: bool = False
    tail_tolerance: float = 0.05
    synthesis: str = 'auto'
    threads: int = 1
    config_echo: tuple = field(default=(), compare=False)

    def __post_init__(self):
        if self.functional not in FUNCTIONALS:
            raise ValueError('functional must be one of %s, got %r'
                             % (', '.join(FUNCTIONALS), self.functional))
        if self.reference not in REFERENCES:
            raise ValueError('reference must be one of %s, got %r'
                             % (', '.join(REFERENCES), self.reference))
        if self.target not in TARGETS:
            raise ValueError('target must be one of %s, got %r'
                             % (', '.join(TARGETS), self.target))
        if self.realizations < 2:
            raise ValueError('need at least 2 realizations, got %r'
                             % self.realizations)
        for name, ladder in (('dt_ladder', self.dt_ladder),
                             ('nx_ladder', self.nx_ladder)):
            steps = np.diff(np.asarray(ladder, dtype=float))
            if len(ladder) > 1 and not (np.all(steps > 0) or
                                        np.all(steps < 0)):
                raise ValueError('%s must be strictly monotone, got %r'
                                 % (name, ladder))


@dataclass(frozen=True)
class PointResult:
    error: float
    mc_std_error: float


def _steps(T, dt):
    M = int(round(T / dt))
    if M < 1 or abs(M * dt - T) > 1e-12 * T:
        raise ValueError('T = %r is not an integer multiple of dt = %r'
                         % (T, dt))
    return M


def _map_realizations(fn, R, threads):
    """``[fn(0), ..., fn(R-1)]``, in realization order."""
    if threads <= 1:
        return [fn(r) for r in range(R)]
    with ThreadPoolExecutor(max_workers=threads) as pool:
        return list(pool.map(fn, range(R)))


def _mean_and_std_error(values):
    values = np.asarray(values, dtype=float)
    R = values.shape[0]
    mean = math.fsum(values) / R
    if np.all(values == values[0]):
        return float(values[0]), 0.0
    var = math.fsum((values - mean) ** 2) / (R - 1)
    return mean, math.sqrt(var / R)


def _require_benchmark(problem):
    if not problem.is_linear_benchmark:
        raise ValueError('%r has no closed-form reference; exact solutions '
                         'exist for the linear additive benchmark only'
                         % problem)


def _ou_modes(cfg, disc):
    p = cfg.problem
    x0 = p.X0.spectral_coefficients(disc.basis)
    return OuModes.build(disc.basis, disc.spectrum, p.diffusivity,
                         p.reaction, x0, p.coeffs.shift)


def _phi(name, ops, x):
    if name == 'phi1':
        return functional_phi1(ops, x)
    return functional_phi2(ops, x)


def _phi_spectral(name, basis, coefficients):
    if name == 'phi1':
        return float(coefficients[0] * basis.integrals()[0])
    return math.fsum(coefficients ** 2)


def _reference_process(cfg, disc, run, target):
    """The process ``weak_error`` compares against.

    Returns its closed-form expectation of the functional and a callable
    giving the spectral coefficients of realization ``r`` on the deviates
    the scheme uses.
    """
    p = cfg.problem
    stream = NoiseStream(cfg.seed)
    modes = _ou_modes(cfg, disc)
    if target == 'galerkin':
        galerkin = GalerkinModes(modes, p.reaction)
        if cfg.functional == 'phi1':
            expected = galerkin.mean_phi1(run)
        else:
            expected = galerkin.second_moment(run)
        return expected, lambda r: galerkin.coefficients(stream, r, run)
    if target != 'exact':
        raise ValueError('target must be one of %s, got %r'
                         % (', '.join(TARGETS[1:]), target))
    if cfg.functional == 'phi1':
        expected = exact_mean_phi1(modes.x0, cfg.T, disc.basis, p.reaction,
                                   p.coeffs.shift)
    else:
        expected = exact_second_moment(
            modes.x0, disc.spectrum, cfg.T, p.diffusivity, p.reaction,
            p.coeffs.shift, tail_tolerance=cfg.tail_tolerance)
    return expected, lambda r: exact_modes(stream, r, run, modes)


def _control_variate(values, controls, expected):
    """Mean of ``values`` corrected by ``controls`` of known mean.

    The coefficient is the least-squares slope of ``values`` on
    ``controls``; it is 0 when the controls do not vary.
    """
    values = np.asarray(values, dtype=float)
    controls = np.asarray(controls, dtype=float)
    R = values.shape[0]
    centred = controls - math.fsum(controls) / R
    spread = math.fsum(centred ** 2)
    slope = spread > 0 and math.fsum(centred * values) / spread or 0.0
    return values - slope * (controls - expected), slope


def weak_error(cfg, nx, dt, disc=None, target='exact'):
    """``|E Phi(X_M^h) - E Phi(X(T))|`` at one resolution.

    ``target`` is the solution compared against: the exact one
    (``exact``) or the spectral Galerkin solution stepped with the same
    ``dt`` (``galerkin``). ``cfg.reference`` picks the estimator: the
    plain sample mean against the closed form (``closed-form``), the mean
    difference from the target on shared deviates (``monte-carlo``), or
    the sample mean with the target as a control variate
    (``control-variate``).

    Any failing realization fails the whole point.
    """
    p = cfg.problem
    _require_benchmark(p)
    disc = disc or discretize(p, nx, cfg.noise, L1=cfg.L1, L2=cfg.L2,
                              lumped=cfg.lumped)
    run = RunConfig.for_horizon(cfg.T, _steps(cfg.T, dt), krylov=cfg.krylov,
                                record='none')
    stream = NoiseStream(cfg.seed)
    expected, reference = _reference_process(cfg, disc, run, target)

    def numerical(r):
        state, _ = simulate(p, disc.ops, disc.basis, disc.spectrum, disc.E,
                            stream, r, run)
        return _phi(cfg.functional, disc.ops, state.x)

    def paired(r):
        return numerical(r), _phi_spectral(cfg.functional, disc.basis,
                                           reference(r))

    if cfg.reference == 'closed-form':
        values = _map_realizations(numerical, cfg.realizations, cfg.threads)
        mean, se = _mean_and_std_error(values)
        error = abs(mean - expected)
    else:
        pairs = np.array(_map_realizations(paired, cfg.realizations,
                                           cfg.threads))
        if cfg.reference == 'monte-carlo':
            mean, se = _mean_and_std_error(pairs[:, 0] - pairs[:, 1])
            error = abs(mean)
        else:
            adjusted, slope = _control_variate(pairs[:, 0], pairs[:, 1],
                                               expected)
            mean, se = _mean_and_std_error(adjusted)
            error = abs(mean - expected)
            log.debug('control variate slope %.4f', slope)
    log.debug('weak error h=%g dt=%g against %s: %.6g +- %.2g', disc.h, dt,
              target, error, se)
    return PointResult(error, se)


def strong_error(cfg, nx, dt, synthesis='projected', disc=None):
    """``(E ||X_M^h - X(T)||_M^2)^{1/2}`` with shared random numbers."""
    p = cfg.problem
    _require_benchmark(p)
    disc = disc or discretize(p, nx, cfg.noise, L1=cfg.L1, L2=cfg.L2,
                              lumped=cfg.lumped)
    run = RunConfig.for_horizon(cfg.T, _steps(cfg.T, dt), krylov=cfg.krylov,
                                record='none')
    stream = NoiseStream(cfg.seed)
    modes = _ou_modes(cfg, disc)
    if synthesis == 'projected':
        where = dict(E=disc.E)
    elif synthesis == 'direct':
        where = dict(points=disc.ops.points)
    else:
        raise ValueError('synthesis must be projected or direct, got %r'
                         % synthesis)

    def squared(r):
        state, _ = simulate(p, disc.ops, disc.basis, disc.spectrum, disc.E,
                            stream, r, run)
        exact = simulate_exact_field(stream, r, run, modes, **where)
        return disc.ops.mass_norm(state.x - exact) ** 2

    values = _map_realizations(squared, cfg.realizations, cfg.threads)
    mean, se = _mean_and_std_error(values)
    error = math.sqrt(mean)
    se = error > 0 and se / (2 * error) or 0.0
    log.debug('strong error h=%g dt=%g: %.6g +- %.2g', disc.h, dt, error, se)
    return PointResult(error, se)


def fit_rate(points):
    """Least-squares slope of ``log error`` against ``log resolution``.

    ``points`` is a sequence of ``(resolution, error)`` pairs. Returns the
    slope and its standard error.
    """
    points = list(points)
    if len(points) < 2:
        raise RateFitError('need at least 2 points to fit a rate, got %d'
                           % len(points))
    x = np.array([p[0] for p in points], dtype=float)
    y = np.array([p[1] for p in points], dtype=float)
    if np.any(x <= 0) or np.any(y <= 0):
        raise RateFitError('resolutions and errors must be positive')
    if np.all(x == x[0]):
        raise RateFitError('all points share the resolution %g' % x[0])
    fit = stats.linregress(np.log(x), np.log(y))
    return float(fit.slope), float(fit.stderr)


def _report(study, rows, resolution, cfg):
    resolved = [r for r in rows if r['error'] > 3 * r['mc_std_error']]
    if len(resolved) < len(rows):
        log.warning('%s: %d of %d points are not resolved above 3 MC '
                    'standard errors', study, len(rows) - len(resolved),
                    len(rows))
    if len(resolved) < 2:
        rate, rate_se = None, None
        log.warning('%s: rate undefined, fewer than 2 resolved points',
                    study)
    else:
        rate, rate_se = fit_rate([(r[resolution], r['error'])
                                  for r in resolved])
        if len(resolved) == 2:
            # a line through two points has no residuals
            rate_se = None
        log.info('%s: fitted rate %.4f +- %s', study, rate,
                 rate_se is None and 'undefined' or '%.4f' % rate_se)
    return ConvergenceReport(study, rows, rate, rate_se, cfg.config_echo)


def _row(study, functional, disc, dt, cfg, point):
    return {'study': study, 'functional': functional, 'h': disc.h, 'dt': dt,
            'T': cfg.T, 'realizations': cfg.realizations,
            'error': point.error, 'mc_std_error': point.mc_std_error}


def _check_ladder(name, ladder):
    if len(ladder) < 4:
        raise ValueError('%s needs at least 4 resolutions, got %d'
                         % (name, len(ladder)))


def converge_time(cfg):
    """Weak errors over ``cfg.dt_ladder`` on the fixed ``cfg.nx`` mesh."""
    _check_ladder('dt_ladder', cfg.dt_ladder)
    target = cfg.target == 'auto' and 'exact' or cfg.target
    if target == 'galerkin':
        raise ValueError('a time study against the galerkin solution '
                         'stepped with the same dt has no time error')
    p = cfg.problem
    disc = discretize(p, cfg.nx, cfg.noise, L1=cfg.L1, L2=cfg.L2,
                      lumped=cfg.lumped)
    rows = []
    for dt in cfg.dt_ladder:
        log.info('time study: dt=%g on h=%g', dt, disc.h)
        point = weak_error(cfg, cfg.nx, dt, disc=disc, target=target)
        rows.append(_row('time', cfg.functional, disc, dt, cfg, point))
    return _report('time', rows, 'dt', cfg)


def converge_space(cfg):
    """Weak errors over ``cfg.nx_ladder`` at the fixed step ``cfg.dt``."""
    _check_ladder('nx_ladder', cfg.nx_ladder)
    target = cfg.target == 'auto' and 'galerkin' or cfg.target
    rows = []
    for nx in cfg.nx_ladder:
        disc = discretize(cfg.problem, nx, cfg.noise, L1=cfg.L1, L2=cfg.L2,
                          lumped=cfg.lumped)
        log.info('space study: h=%g at dt=%g against %s', disc.h, cfg.dt,
                 target)
        point = weak_error(cfg, nx, cfg.dt, disc=disc, target=target)
        rows.append(_row('space', cfg.functional, disc, cfg.dt, cfg, point))
    return _report('space', rows, 'h', cfg)


def strong_study(cfg, axis='space'):
    """Strong errors over the ``nx`` ladder (``axis='space'``) or the ``dt``
    ladder (``axis='time'``)."""
    synthesis = cfg.synthesis
    if synthesis == 'auto':
        synthesis = axis == 'space' and 'direct' or 'projected'
    study = 'strong-%s' % axis
    rows = []
    if axis == 'space':
        _check_ladder('nx_ladder', cfg.nx_ladder)
        for nx in cfg.nx_ladder:
            disc = discretize(cfg.problem, nx, cfg.noise, L1=cfg.L1,
                              L2=cfg.L2, lumped=cfg.lumped)
            point = strong_error(cfg, nx, cfg.dt, synthesis, disc=disc)
            rows.append(_row(study, 'strong', disc, cfg.dt, cfg, point))
        return _report(study, rows, 'h', cfg)
    elif axis == 'time':
        _check_ladder('dt_ladder', cfg.dt_ladder)
        disc = discretize(cfg.problem, cfg.nx, cfg.noise, L1=cfg.L1,
                          L2=cfg.L2, lumped=cfg.lumped)
        for dt in cfg.dt_ladder:
            point = strong_error(cfg, cfg.nx, dt, synthesis, disc=disc)
            rows.append(_row(study, 'strong', disc, dt, cfg, point))
        return _report(study, rows, 'dt', cfg)
    raise ValueError('axis must be space or time, got %r' % axis)


def _relative(a, b):
    return float(np.linalg.norm(a - b) / max(np.linalg.norm(b), 1e-300))


def selftest(seed=0, nx=8):
    """Property checks on a small benchmark discretization.

    Returns rows ``check, value, limit, passed`` ready for a
    ``SelftestTable``.
    """
    rng = np.random.default_rng(seed)
    problem = linear2d()
    disc = discretize(problem, nx, NoiseSettings())
    ops = disc.ops
    A = operator_action(ops)
    krylov = KrylovConfig(tol=1e-10).krylov_only()
    v = rng.standard_normal(ops.dim)
    t, s = 0.05, 0.03
    rows = []

    def check(name, value, limit, passed=None):
        if passed is None:
            passed = value <= limit
        rows.append({'check': name, 'value': value, 'limit': limit,
                     'passed': bool(passed)})
        log.info('selftest %s: %.3g (limit %.3g) %s', name, value, limit,
                 passed and 'pass' or 'FAIL')

    lhs = expm_action(A, v, t, krylov)
    rhs = v + t * A(phi1_action(A, v, t, krylov))
    check('phi1 identity', _relative(lhs, rhs), 1e-7)

    joint = expm_action(A, v, s + t, krylov)
    split = expm_action(A, expm_action(A, v, t, krylov), s, krylov)
    check('semigroup', _relative(split, joint), 1e-8)

    pivots = ops.mass_factorization.U.diagonal()
    asymmetry = splinalg.norm(ops.mass - ops.mass.T, np.inf)
    check('mass SPD', float(pivots.min()), 0.0,
          passed=pivots.min() > 0 and asymmetry == 0)

    ones = np.ones(ops.dim)
    kernel = (np.linalg.norm(ops.stiffness @ ones, np.inf) /
              splinalg.norm(ops.stiffness, np.inf))
    check('neumann kernel', float(kernel), 1e-12)

    # sample variance of one exact OU mode against its closed form
    mode = OuMode(1, 1, k=0.1 * 2 * np.pi ** 2 + 0.5, q=0.5)
    stream = NoiseStream(seed)
    R, M, dt = 4000, 8, 1.0 / 8
    samples = np.empty(R)
    for r in range(R):
        x = 0.0
        for m in range(M):
            x = ou_step(x, mode, dt, stream.gaussian(r, 0, m))
        samples[r] = x
    variance = exact_variance(mode, M * dt)
    deviation = abs(np.var(samples, ddof=1) / variance - 1.0)
    check('OU variance', float(deviation), 3 * math.sqrt(2.0 / (R - 1)))

    # without noise and drift the scheme is exact whatever the step
    deterministic = linear2d(reaction=0.0, X0=InitialValue.mode(1, 1))
    zero = CovarianceSpectrum.zero(disc.basis)
    finals = []
    for M_steps in (1, 64):
        run = RunConfig.for_horizon(1.0, M_steps, record='none')
        state, _ = simulate(deterministic, ops, disc.basis, zero, disc.E,
                            stream, 0, run)
        finals.append(state.x)
    check('deterministic limit', _relative(finals[1], finals[0]), 1e-7)
    return rows
