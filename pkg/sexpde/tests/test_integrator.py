import math

import numpy as np
import pytest

from sexpde import (
    CovarianceSpectrum, InitialValue, KrylovConfig, MatAction,
    Multiplicative, NoiseStream, NonFiniteStateError, OuModes, RunConfig,
    SchemeState, expm_action, exact_variance, linear2d, simulate,
)
from sexpde.experiments import NoiseSettings, discretize
from sexpde.integrator import snapshot_rows, step
from sexpde.model import SpdeProblem


def setup(problem=None, nx=4):
    problem = problem or linear2d(X0=InitialValue.smooth())
    return problem, discretize(problem, nx, NoiseSettings())


def test_step_semigroup():
    p, disc = setup(linear2d(reaction=0.0))
    ops = disc.ops
    x = np.random.default_rng(1).standard_normal(ops.dim)
    cfg = RunConfig(0.1, 1)
    out = step(SchemeState(0, 0.1, x), p, ops, np.zeros(ops.dim), cfg)
    A = MatAction.from_operators(ops)
    assert np.allclose(out.x, expm_action(A, x, 0.1), rtol=1e-12)
    assert out.m == 1 and out.t == 0.1


def test_step_euler_limit():
    # A_h = 0: the scheme reduces to x + dt c + w
    p, disc = setup(SpdeProblem(linear2d().coeffs, 'neumann',
                                lambda pts, u: np.full_like(u, 3.0),
                                linear2d().diffusion, InitialValue.zero(),
                                1.0))
    ops = disc.ops
    zero = MatAction(lambda v: np.zeros_like(v), ops.dim)
    x = np.ones(ops.dim)
    w = np.linspace(0.0, 1.0, ops.dim)
    out = step(SchemeState(0, 0.25, x), p, ops, w, RunConfig(0.25, 1), zero)
    assert np.allclose(out.x, x + 0.25 * 3.0 + w, rtol=1e-13)


def test_fused_exponential():
    p, disc = setup(linear2d(reaction=0.0))
    ops = disc.ops
    rng = np.random.default_rng(2)
    x, w = rng.standard_normal((2, ops.dim))
    cfg = RunConfig(0.05, 1, krylov=KrylovConfig(tol=1e-10).krylov_only())
    fused = step(SchemeState(0, 0.05, x), p, ops, w, cfg).x
    A = MatAction.from_operators(ops)
    separate = (expm_action(A, x, 0.05, cfg.krylov) +
                expm_action(A, w, 0.05, cfg.krylov))
    assert np.linalg.norm(fused - separate) <= \
        10 * 1e-10 * np.linalg.norm(separate) + 1e-14


def test_simulate_zero_steps():
    p, disc = setup()
    cfg = RunConfig(0.1, 0)
    state, snapshots = simulate(p, disc.ops, disc.basis, disc.spectrum,
                                disc.E, NoiseStream(0), 0, cfg)
    assert np.array_equal(state.x, p.X0.nodal(disc.ops, disc.E, disc.basis))
    assert [s.m for s in snapshots] == [0]


def test_simulate_deterministic():
    p, disc = setup()
    cfg = RunConfig.for_horizon(1.0, 16)
    runs = [simulate(p, disc.ops, disc.basis, disc.spectrum, disc.E,
                     NoiseStream(42), 3, cfg)[0].x for _ in range(2)]
    assert np.array_equal(runs[0], runs[1])
    other = simulate(p, disc.ops, disc.basis, disc.spectrum, disc.E,
                     NoiseStream(42), 4, cfg)[0].x
    assert not np.array_equal(runs[0], other)


def test_deterministic_limit_exact():
    p, disc = setup(linear2d(reaction=0.0, X0=InitialValue.mode(1, 1)), 8)
    zero = CovarianceSpectrum.zero(disc.basis)
    x0 = p.X0.nodal(disc.ops, disc.E, disc.basis)
    expected = expm_action(MatAction.from_operators(disc.ops), x0, 1.0)
    for M in (1, 64):
        state, _ = simulate(p, disc.ops, disc.basis, zero, disc.E,
                            NoiseStream(0), 0, RunConfig.for_horizon(1.0, M))
        assert np.linalg.norm(state.x - expected) <= \
            1e-7 * np.linalg.norm(expected)


def test_additive_equals_unit_multiplicative():
    base = linear2d(X0=InitialValue.smooth())
    unit = SpdeProblem(base.coeffs, base.bc, base.drift,
                       Multiplicative(lambda pts, u: np.ones_like(u)),
                       base.X0, base.T)
    _, disc = setup(base)
    cfg = RunConfig.for_horizon(0.5, 8)
    a = simulate(base, disc.ops, disc.basis, disc.spectrum, disc.E,
                 NoiseStream(9), 1, cfg)[0].x
    b = simulate(unit, disc.ops, disc.basis, disc.spectrum, disc.E,
                 NoiseStream(9), 1, cfg)[0].x
    assert np.array_equal(a, b)


def test_snapshots():
    p, disc = setup()
    cfg = RunConfig.for_horizon(1.0, 8, record=4)
    state, snapshots = simulate(p, disc.ops, disc.basis, disc.spectrum,
                                disc.E, NoiseStream(0), 0, cfg)
    assert [s.m for s in snapshots] == [0, 4, 8]
    assert snapshots[-1] is state
    rows = list(snapshot_rows(snapshots[-1:], disc.ops))
    assert len(rows) == disc.mesh.n_nodes
    assert rows[0]['step'] == 8 and rows[0]['time'] == 1.0
    assert cfg.keeps(8) and not cfg.keeps(3)
    assert RunConfig(0.1, 3).keeps(3)
    assert not RunConfig(0.1, 3).keeps(0)


def test_nonfinite_state():
    blowup = SpdeProblem(linear2d().coeffs, 'neumann',
                         lambda pts, u: np.exp(np.exp(np.abs(u) + 6.0)),
                         linear2d().diffusion, InitialValue.smooth(), 1.0)
    _, disc = setup(blowup)
    with pytest.raises(NonFiniteStateError) as e:
        simulate(blowup, disc.ops, disc.basis, disc.spectrum, disc.E,
                 NoiseStream(0), 5, RunConfig.for_horizon(1.0, 4))
    assert e.value.realization == 5
    assert e.value.step is not None


def test_run_config():
    cfg = RunConfig.for_horizon(1.0, 3)
    assert cfg.M_steps == 3
    assert math.isclose(cfg.T, 1.0)
    cfg.check_horizon(1.0)
    with pytest.raises(ValueError):
        cfg.check_horizon(1.1)
    with pytest.raises(ValueError):
        RunConfig(0.0, 1)
    with pytest.raises(ValueError):
        RunConfig(0.1, 1, record='sometimes')
    with pytest.raises(ValueError):
        RunConfig.for_horizon(1.0, 0)


def test_mean_square_bound():
    p, disc = setup(nx=8)
    x0 = p.X0.spectral_coefficients(disc.basis)
    modes = OuModes.build(disc.basis, disc.spectrum, 0.1, 0.5, x0)
    bound = math.fsum(modes.q / (2 * modes.k)) + math.fsum(x0 ** 2)
    cfg = RunConfig.for_horizon(1.0, 16, record=1)
    stream = NoiseStream(12)
    R = 100
    squares = np.empty((R, 17))
    for r in range(R):
        _, states = simulate(p, disc.ops, disc.basis, disc.spectrum, disc.E,
                             stream, r, cfg)
        squares[r] = [disc.ops.mass_norm(s.x) ** 2 for s in states]
    mean = squares.mean(axis=0)
    se = squares.std(axis=0, ddof=1) / math.sqrt(R)
    assert np.all(mean <= bound + 3 * se)
    # the noise does feed the field
    assert mean[-1] > 0.5 * math.fsum(exact_variance(modes, 1.0))
