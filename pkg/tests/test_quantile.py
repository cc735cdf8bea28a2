'''
Test CDFs, quantiles, the inversion identity and the smoothing decomposition
'''

import numpy as np
import sciris as sc
import supsim as ss
import pytest

sc.options(backend='agg') # Turn off interactive plots

unit = ss.Grid(0, 1, 2**12+1)


def ok(string):
    ''' Print out a successful test nicely '''
    return sc.printgreen(f'✓ {string}\n')


def test_cdf_quantile():
    sc.heading('Testing CDFs and quantiles...')

    F = ss.cdf(ss.tabulate('uniform', unit))
    assert np.allclose(F([-1, 0, 0.3, 1, 2]), [0, 0, 0.3, 1, 1], atol=1e-12)
    assert np.isclose(ss.quantile(F, 0.3), 0.3, atol=1e-10)
    ok('The uniform CDF is the identity on [0, 1]')

    lap = ss.tabulate('laplace')
    assert abs(ss.quantile(lap, 0.75) - np.log(2)) < 1e-4
    assert abs(ss.quantile(lap, 0.5)) < 1e-4
    ok('Laplace quartile is log 2 and median is 0')

    tilted = ss.tabulate('tilted:1', unit) # F(x) = x + (x² − x)/2
    q = ss.quantile(tilted, 0.5)
    assert np.isclose(q + (q**2 - q)/2, 0.5, atol=1e-6)
    ok(f'Median of the tilted density is {q:0.6f}')

    for p in [lap, ss.tabulate('sine:0.3', unit), ss.tabulate('tilted:-1', unit)]:
        G = ss.cdf(p)
        for tau in [0.1, 0.37, 0.5, 0.93]:
            assert abs(G(ss.quantile(G, tau)) - tau) < 1e-12, f'{p.label}, τ={tau}'
    ok('Quantiles invert the CDF evaluation exactly')

    with pytest.raises(ss.InvalidInputError):
        ss.quantile(F, 1.0)
    with pytest.raises(ss.InvalidInputError):
        ss.cdf(ss.GridFunction(unit, unit.x - 0.5))

    assert np.isclose(ss.quantile_rate(45_000, 1), ss.n_over_log_n(45_000)**(-2/3))
    return F


def test_histogram_quantiles():
    sc.heading('Testing vectorized histogram quantiles...')
    J = 4
    post = ss.fit(ss.sample('lipschitz-sine', 1000, seed=1), J)
    W = ss.sample_weights(post, 50, seed=2)
    draws = ss.sample_posterior(post, 50, seed=2, grid=ss.Grid(0, 1, 2**10+1))
    for tau in [0.05, 0.5, 0.9]:
        fast = ss.histogram_quantiles(W, J, tau)
        slow = ss.posterior_quantiles(draws, tau)
        assert np.allclose(fast, slow, rtol=0, atol=1e-9)
    ok('Vectorized quantiles equal the per-draw quantiles')

    # A bin with no mass is skipped
    w = np.array([[0.5, 0.0, 0.5, 0.0]])
    assert np.isclose(ss.histogram_quantiles(w, 2, 0.75)[0], 0.625)
    return fast


def test_inversion_identity():
    sc.heading('Testing the quantile inversion identity...')
    p0 = ss.tabulate('uniform', unit)
    for name in ['tilted:0.5', 'tilted:-1', 'sine:0.3']:
        p = ss.tabulate(name, unit)
        for tau in [0.2, 0.5, 0.7]:
            residual, info = ss.inversion_identity_check(p, p0, tau, full_output=True)
            assert residual < 1e-6, f'{name}, τ={tau}: residual {residual}'
            assert min(info.q, info.q0) - 1e-12 <= info.q_star <= max(info.q, info.q0) + 1e-12
    ok('q − q0 = −[F(q0) − τ]/p(q*) holds with q* between the quantiles')

    gap = ss.GridFunction.piecewise_constant(unit, [0, 0.25, 0.5, 1], [2, 0, 1])
    with pytest.raises(ss.DegenerateDensityError):
        ss.inversion_identity_check(gap, p0, 0.45)
    return residual


def test_bias_decomposition():
    sc.heading('Testing the three-term smoothing decomposition...')
    grid = ss.Grid(-10, 10, 2**14+1)
    p0 = ss.tabulate('gaussian', grid)
    p = ss.tabulate('laplace', grid)
    for b in [0.4, 0.2, 0.1]:
        (T1, T2, T3), extra = ss.bias_decomposition(p, p0, tau=0.3, b=b, alpha=1, full_output=True)
        assert extra.telescoping < 1e-12
        assert abs(T1) <= extra.bound
    ok('T1 + T2 + T3 = F(q0) − F0(q0) and |T1| ≤ D·b^(α+1)')

    with pytest.raises(ss.PreconditionError):
        ss.bias_decomposition(p, p0, tau=0.3, b=0.1, K='gaussian', alpha=1)
    with pytest.raises(ss.InvalidInputError):
        ss.bias_decomposition(p, p0, tau=0.3, b=0)
    return extra


def test_guards_and_reports():
    sc.heading('Testing positivity guards and quantile reports...')
    assert np.isclose(ss.positivity_guard(ss.tabulate('uniform', unit), 0.5), 1)
    gap = ss.GridFunction.piecewise_constant(unit, [0, 0.25, 0.5, 1], [2, 0, 1])
    with pytest.raises(ss.DegenerateDensityError):
        ss.positivity_guard(gap, 0.5)
    with pytest.raises(ss.DegenerateDensityError):
        ss.positivity_guard(ss.tabulate('uniform', unit), 0.5, r=2)
    ok('The guard passes the uniform density and rejects a density that vanishes near its median')

    report = ss.quantile_report(ss.tabulate('tilted:0.5', unit), ss.tabulate('uniform', unit), 0.5)
    assert np.isclose(report.q0, 0.5) and report.p_at_star_lb > 0
    assert np.isclose(report.F_gap, 0.0625, atol=1e-8) # F(½) = 7/16 for the tilted density
    assert set(report.to_dict()) == {'tau', 'q_hat', 'q0', 'F_gap', 'p_at_star_lb'}
    return report


def test_sup_ball_inclusion():
    sc.heading('Testing that sup-norm balls sit inside quantile balls...')
    n = 2**14
    post = ss.fit(ss.sample('lipschitz-sine', n, seed=3), ss.choose_J(n, 1))
    draws = ss.sample_posterior(post, 200, seed=4)
    p0 = ss.tabulate('lipschitz-sine', draws[0].grid)
    eps = ss.sup_rate(n, 1)
    out = ss.sup_ball_inclusion_check(draws, p0, 0.5, M=3, eps=eps, M_prime=3)
    assert out.n_in_ball > 0
    assert out.violations == 0
    ok(f'{out.n_in_ball} of {out.n_draws} draws lie in the sup ball, none outside the quantile ball')
    return out


if __name__ == '__main__':

    with sc.timer():
        F      = test_cdf_quantile()
        fast   = test_histogram_quantiles()
        resid  = test_inversion_identity()
        extra  = test_bias_decomposition()
        report = test_guards_and_reports()
        out    = test_sup_ball_inclusion()
