import math

import numpy as np
import pytest

from sexpde import (
    ConvergenceReport, CovarianceSpectrum, InitialValue, RateFitError,
    WeakErrorConfig, converge_space, converge_time, fit_rate, linear2d,
    multiplicative_demo, selftest, strong_error, strong_study, weak_error,
)
from sexpde.experiments import Discretization, NoiseSettings, discretize
from sexpde.experiments import _control_variate, _report


def mkcfg(**kwargs):
    defaults = dict(problem=linear2d(), seed=2024, realizations=6, nx=4,
                    dt_ladder=(0.5, 0.25, 0.125, 0.0625),
                    nx_ladder=(2, 3, 4, 5), dt=0.25, T=1.0)
    defaults.update(kwargs)
    return WeakErrorConfig(**defaults)


def test_fit_rate():
    rate, _ = fit_rate([(1.0, 1.0), (0.5, 0.5)])
    assert abs(rate - 1.0) < 1e-12
    rate, _ = fit_rate([(1.0, 1.0), (0.5, 0.25), (0.25, 0.0625)])
    assert abs(rate - 2.0) < 1e-12
    rate, stderr = fit_rate([(1.0, 1.0), (0.5, 0.51), (0.25, 0.26)])
    assert abs(rate - 0.97) < 5e-3
    assert stderr < 0.05

    ladder = [2.0 ** -k for k in range(2, 7)]
    rate, stderr = fit_rate([(dt, 3.7 * dt) for dt in ladder])
    assert abs(rate - 1.0) < 1e-12
    assert stderr < 1e-12


def test_fit_rate_errors():
    with pytest.raises(RateFitError):
        fit_rate([(0.5, 1.0)])
    with pytest.raises(RateFitError):
        fit_rate([(0.5, 1.0), (0.5, 0.3)])
    with pytest.raises(RateFitError):
        fit_rate([(0.5, 0.0), (0.25, 0.3)])


def point(dt, error, se):
    return {'study': 'time', 'functional': 'phi2', 'h': 0.25, 'dt': dt,
            'T': 1.0, 'realizations': 10, 'error': error,
            'mc_std_error': se}


def test_report_resolution():
    cfg = mkcfg()
    rows = [point(0.5, 0.5, 0.01), point(0.25, 0.25, 0.01),
            point(0.125, 0.125, 0.1), point(0.0625, 0.0625, 0.1)]
    report = _report('time', rows, 'dt', cfg)
    assert len(report.resolved) == 2
    assert abs(report.fitted_rate - 1.0) < 1e-12
    # a line through two points has no standard error
    assert report.rate_std_error is None
    assert report.rate_line().endswith(' std_error=undefined')
    # every point stays in the table
    assert len(report.points) == 4

    rows = [point(0.5, 0.5, 0.5), point(0.25, 0.25, 0.1),
            point(0.125, 0.125, 0.1), point(0.0625, 0.0625, 0.1)]
    report = _report('time', rows, 'dt', cfg)
    assert report.fitted_rate is None
    assert report.rate_line() == 'fitted_rate=undefined std_error=undefined'

    rows[:3] = [point(0.5, 0.5, 0.01), point(0.25, 0.25, 0.01),
                point(0.125, 0.125, 0.01)]
    report = _report('time', rows, 'dt', cfg)
    assert len(report.resolved) == 3
    assert report.rate_std_error is not None


def test_report_csv():
    rows = [point(0.25, 0.25, 0.01), point(0.5, 0.5, 0.01)]
    report = ConvergenceReport('time', rows, 1.0, 0.0, ['seed = 1'])
    lines = report.as_csv().splitlines()
    assert lines[0] == '# seed = 1'
    assert lines[1] == 'study,functional,h,dt,T,realizations,error,' \
                       'mc_std_error'
    # coarsest first
    assert lines[2].startswith('time,phi2,0.25,0.5,1,10,0.5,')
    assert lines[-1] == '# fitted_rate=1 std_error=0'


def test_weak_error_point():
    cfg = mkcfg(functional='phi2')
    result = weak_error(cfg, 4, 0.25)
    assert result.error >= 0 and result.mc_std_error > 0
    # realizations are combined in order, whatever runs them
    threaded = weak_error(mkcfg(functional='phi2', threads=3), 4, 0.25)
    assert threaded == result

    smooth = linear2d(X0=InitialValue.smooth())
    phi1 = weak_error(mkcfg(problem=smooth, functional='phi1'), 4, 0.25)
    assert math.isfinite(phi1.error)
    mc = weak_error(mkcfg(problem=smooth, reference='monte-carlo'), 4, 0.25)
    assert math.isfinite(mc.error) and mc.mc_std_error > 0


def test_weak_error_needs_benchmark():
    with pytest.raises(ValueError):
        weak_error(mkcfg(problem=multiplicative_demo()), 4, 0.25)
    with pytest.raises(ValueError):
        weak_error(mkcfg(), 4, 0.3)


def test_control_variate():
    controls = np.array([0.0, 1.0, 3.0, 4.0])
    adjusted, slope = _control_variate(2 * controls + 1, controls, 2.0)
    assert abs(slope - 2.0) < 1e-14
    assert np.allclose(adjusted, 5.0, rtol=1e-14)
    # constant controls carry no information
    values = np.array([1.0, 2.0, 4.0])
    adjusted, slope = _control_variate(values, np.full(3, 0.5), 0.7)
    assert slope == 0
    assert np.array_equal(adjusted, values)


def test_weak_error_estimators():
    results = dict(
        (reference, weak_error(mkcfg(reference=reference, realizations=12),
                               8, 0.25))
        for reference in ('closed-form', 'monte-carlo', 'control-variate'))
    # the fitted control never increases the sample variance
    assert results['control-variate'].mc_std_error <= \
        results['closed-form'].mc_std_error
    assert results['monte-carlo'].mc_std_error < \
        results['closed-form'].mc_std_error
    for result in results.values():
        assert math.isfinite(result.error)
    with pytest.raises(ValueError):
        weak_error(mkcfg(), 4, 0.25, target='spectral')


def quiet(problem, nx):
    disc = discretize(problem, nx, NoiseSettings())
    return Discretization(disc.mesh, disc.ops, disc.basis,
                          CovarianceSpectrum.zero(disc.basis), disc.E)


def test_galerkin_target():
    problem = linear2d(X0=InitialValue.mode(1, 1))
    cfg = mkcfg(problem=problem)
    coarse, fine = (weak_error(cfg, nx, 0.25, disc=quiet(problem, nx),
                               target='galerkin') for nx in (4, 8))
    assert coarse.mc_std_error == fine.mc_std_error == 0
    assert 0 < fine.error < coarse.error
    # against the exact solution the step adds its own error
    exact = weak_error(cfg, 8, 0.25, disc=quiet(problem, 8), target='exact')
    assert exact.error > fine.error

    with pytest.raises(ValueError):
        converge_time(mkcfg(target='galerkin'))


def test_temporal_weak_rate_phi1():
    # the constant part of X0 decays like (1 - c dt)^M in the scheme
    problem = linear2d(X0=InitialValue.smooth(offset=1.0))
    report = converge_time(mkcfg(problem=problem, functional='phi1',
                                 realizations=4, nx=16,
                                 dt_ladder=(1 / 4, 1 / 8, 1 / 16, 1 / 32)))
    assert len(report.resolved) == 4
    assert report.fitted_rate is not None
    assert 0.75 <= report.fitted_rate <= 1.4
    first = report.points[0]['error']
    assert abs(first - (math.exp(-0.5) - 0.875 ** 4)) < 1e-3


def test_phi1_without_constant_mode():
    # int X(t) vanishes for the scheme and the exact solution alike, the
    # errors are quadrature noise with no dt dependence
    problem = linear2d(X0=InitialValue.smooth())
    report = converge_time(mkcfg(problem=problem, functional='phi1',
                                 realizations=4, nx=8))
    assert max(p['error'] for p in report.points) < 1e-3


def test_strong_error_without_noise():
    problem = linear2d(X0=InitialValue.smooth())
    cfg = mkcfg(problem=problem)
    result = strong_error(cfg, 4, 0.25, disc=quiet(problem, 4))
    assert result.error > 0
    assert result.mc_std_error == 0

    noisy = strong_error(cfg, 4, 0.25, synthesis='direct')
    assert noisy.error > 0
    with pytest.raises(ValueError):
        strong_error(cfg, 4, 0.25, synthesis='nearest')


def test_config_validation():
    with pytest.raises(ValueError):
        mkcfg(functional='phi3')
    with pytest.raises(ValueError):
        mkcfg(reference='exact')
    with pytest.raises(ValueError):
        mkcfg(target='spectral')
    with pytest.raises(ValueError):
        mkcfg(realizations=1)
    with pytest.raises(ValueError):
        mkcfg(dt_ladder=(0.5, 0.125, 0.25, 0.0625))


def test_studies_are_thread_independent():
    cfg = mkcfg(realizations=4)
    serial = converge_time(cfg)
    parallel = converge_time(mkcfg(realizations=4, threads=4))
    assert serial.as_csv() == parallel.as_csv()
    assert [p['dt'] for p in serial.points] == list(cfg.dt_ladder)
    assert len(serial.as_csv().splitlines()) == 1 + 4 + 1

    space = converge_space(mkcfg(realizations=4))
    assert [p['study'] for p in space.points] == ['space'] * 4
    assert space.points[0]['h'] > space.points[-1]['h']

    strong = strong_study(mkcfg(realizations=4), axis='time')
    assert strong.study == 'strong-time'
    with pytest.raises(ValueError):
        strong_study(mkcfg(), axis='diagonal')
    with pytest.raises(ValueError):
        converge_time(mkcfg(dt_ladder=(0.5, 0.25)))


def test_selftest():
    rows = selftest(seed=1)
    assert [r['check'] for r in rows] == [
        'phi1 identity', 'semigroup', 'mass SPD', 'neumann kernel',
        'OU variance', 'deterministic limit']
    by_name = dict((r['check'], r) for r in rows)
    for name in ('phi1 identity', 'semigroup', 'mass SPD', 'neumann kernel',
                 'deterministic limit'):
        assert by_name[name]['passed'], name
    # sampled, so only a loose bound here
    ou = by_name['OU variance']
    assert ou['value'] < 2 * ou['limit']


# Acceptance-grade statistical studies.

DT_LADDER = (1 / 4, 1 / 8, 1 / 16, 1 / 32, 1 / 64)
NX_LADDER = (4, 8, 16, 32)


def check_rate(report, low, high):
    assert report.fitted_rate is not None, report.rate_line()
    assert len(report.resolved) == len(report.points)
    assert low <= report.fitted_rate <= high, report.rate_line()


@pytest.mark.slow
def test_temporal_weak_rate_phi2():
    # the error behaves like dt log(1/dt) on this ladder, which fits a
    # slope near 0.72
    report = converge_time(mkcfg(problem=linear2d(X0=InitialValue.zero()),
                                 functional='phi2', realizations=200, nx=32,
                                 dt_ladder=DT_LADDER, threads=4))
    check_rate(report, 0.65, 1.3)


@pytest.mark.slow
def test_temporal_weak_rate_phi1_full_ladder():
    problem = linear2d(X0=InitialValue.smooth(offset=1.0))
    report = converge_time(mkcfg(problem=problem, functional='phi1',
                                 realizations=50, nx=32,
                                 dt_ladder=DT_LADDER, threads=4))
    check_rate(report, 0.75, 1.4)


@pytest.mark.slow
def test_spatial_weak_rate():
    report = converge_space(mkcfg(problem=linear2d(X0=InitialValue.zero()),
                                  functional='phi2', realizations=200,
                                  T=0.1, dt=1 / 2000, nx_ladder=NX_LADDER,
                                  threads=4))
    check_rate(report, 1.5, 2.4)


@pytest.mark.slow
def test_strong_spatial_rate():
    report = strong_study(mkcfg(realizations=100, T=0.1, dt=1 / 2000,
                                nx_ladder=NX_LADDER, threads=4),
                          axis='space')
    check_rate(report, 0.7, 1.3)


@pytest.mark.slow
def test_std_error_scaling():
    small, large = (
        weak_error(mkcfg(reference='closed-form', realizations=R), 4, 0.25)
        for R in (400, 800))
    assert 0.55 <= large.mc_std_error / small.mc_std_error <= 0.9
