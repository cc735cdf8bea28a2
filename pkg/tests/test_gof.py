'''
Test the goodness-of-fit statistic, its McDiarmid calibration and the
Monte Carlo error studies
'''

import numpy as np
import sciris as sc
import supsim as ss
import pytest

sc.options(backend='agg') # Turn off interactive plots


def ok(string):
    ''' Print out a successful test nicely '''
    return sc.printgreen(f'✓ {string}\n')


def make_cfg(r='sup', J=3, M0=3.0, eps=0.1, kernel='haar'):
    return ss.TestConfig(r, ss.make_operator(kernel, J), M0=M0, eps_nr=eps)


def test_statistic():
    sc.heading('Testing the test statistic...')

    p0 = ss.tabulate('uniform', ss.Grid(0, 1, 2**10+1))
    samples = np.array([0.1, 0.3, 0.4, 0.45, 0.6, 0.7, 0.8, 0.9]) # Counts (1, 3, 2, 2)
    assert np.isclose(ss.statistic(samples, p0, make_cfg('sup', J=2)), 0.5)
    assert np.isclose(ss.statistic(samples, p0, make_cfg('L1', J=2)), 0.25)
    ok('Counts (1,3,2,2) under the uniform null give T_sup = 0.5 and T_L1 = 0.25')

    cfg = make_cfg('sup', J=2, M0=2, eps=0.2)
    report = ss.run_test(samples, p0, cfg)
    assert report.threshold == 0.4 and report.reject
    assert np.isclose(report.statistic, 0.5)
    assert np.isclose(report.h_value, 0.25) # K_J(p0) = p0 for the uniform density
    assert set(report.to_dict()) == {'statistic', 'threshold', 'reject', 'h_value', 'mcdiarmid_bound_at_threshold', 'gap'}
    ok('The report rejects when T exceeds M0·ε')

    with pytest.raises(ss.InvalidInputError):
        make_cfg('L2')
    with pytest.raises(ss.InvalidInputError):
        make_cfg(M0=0)

    return report


def test_mcdiarmid():
    sc.heading('Testing the McDiarmid bound...')
    assert np.isclose(ss.mcdiarmid_bound(100, 0.1, 1.0), 2*np.exp(-0.5))
    assert np.isclose(ss.mcdiarmid_bound(400, 0.1, 2.0), 2*np.exp(-0.5))
    assert ss.mcdiarmid_bound(10_000, 0.2, 1.0) < 1e-80
    with pytest.raises(ss.InvalidInputError):
        ss.mcdiarmid_bound(100, 0, 1.0)
    ok('2exp(−n t²/(2‖Φ‖₁²)) evaluates correctly')

    assert ss.type_two_bound(100, -0.1, 1.0) == 2.0
    bounds = [ss.type_two_bound(n, 0.2, 1.0) for n in [100, 1000, 10_000]]
    assert np.all(np.diff(bounds) < 0)
    with pytest.raises(ss.InvalidInputError):
        ss.type_two_bound(100, 0.1, 1.0, alpha=1.5)
    ok('The type-II bound decreases in n and is trivial without a gap')
    return bounds


def test_concentration():
    sc.heading('Testing concentration of h around its mean...')
    cfg = make_cfg('L1', J=3)
    df = ss.concentration_tail('uniform', cfg, n=500, reps=2000, seed=1)
    assert np.all(df.empirical <= df.bound + 3*df.mc_sigma + 1e-12)
    assert np.all(np.diff(df.empirical) <= 0)
    ok(f'Empirical tails stay under the McDiarmid bound at {len(df)} deviations')
    return df


def test_expectation_cap():
    sc.heading('Testing the expectation cap...')
    p0 = ss.tabulate('laplace')
    rows = []
    for J in range(2, 7):
        cfg = make_cfg('L1', J=J, kernel='gaussian')
        mean, cap = ss.expectation_bound_check(p0, cfg, reps=50, seed=2, n=1000)
        assert mean <= cap, f'J={J}: mean h {mean} exceeds the cap {cap}'
        rows.append([J, mean, cap])
    assert np.all(np.diff(np.array(rows)[:, 2]) > 0)
    ok('E h stays below L√(2^J/n) for J = 2..6')

    with pytest.raises(ss.InvalidInputError):
        ss.expectation_cap(p0, ss.make_operator('gaussian', 2), 1000, s=1)

    return rows


def test_error_rates():
    sc.heading('Testing type-I and type-II error rates...')
    cfg = ss.make_test_config('uniform', 'haar', J=3, eps_nr=ss.sup_rate(1000, 1), M0=3)
    type_one, type_two = ss.error_rates('uniform', 'sine:0.8', cfg, reps=200, seed=3, n=1000)
    assert type_one <= 0.05
    assert type_two <= 0.1
    ok(f'Type I {type_one:0.3f}, type II {type_two:0.3f}')

    auto = ss.make_test_config('uniform', 'haar', J=3, eps_nr=0.1)
    assert auto.M0 == 1.0 # No bias for the uniform null, so the floor applies
    return type_one, type_two


def test_separation():
    sc.heading('Testing the separation study...')
    cfg = make_cfg('sup', J=3, M0=3, eps=0.1)
    df, best = ss.separation_study(cfg, multipliers=(1.5, 3), reps=100, seed=4, n=1000)
    assert list(df.columns) == ['multiplier', 'c', 'distance', 'type_two']
    assert np.allclose(df.c, [0.45, 0.9])
    assert df.type_two.iloc[-1] <= 0.05
    assert np.all(np.diff(df.type_two) <= 0)
    assert best in [1.5, 3]
    ok(f'Type II errors {df.type_two.tolist()}; smallest multiplier reaching 5% is {best}')
    return df


def test_custom_nulls():
    sc.heading('Testing nulls outside the catalog...')
    ramp = ss.DensitySpec('ramp', alpha=1, pdf=lambda x: 2*x, domain=(0, 1))
    mean, cap = ss.expectation_bound_check(ramp, make_cfg('L1', J=3), reps=30, seed=5, n=1000, serial=True)
    assert 0 < mean <= cap
    cfg = ss.make_test_config(ramp, 'haar', J=3, eps_nr=ss.sup_rate(1000, 1), M0=3)
    type_one, type_two = ss.error_rates(ramp, 'uniform', cfg, reps=50, seed=6, n=1000, serial=True)
    assert type_one <= 0.05 and type_two == 0
    ok(f'A custom DensitySpec null works (type I {type_one:0.2f}, type II {type_two:0.2f})')

    bare = ss.GridFunction(ss.Grid(0, 1, 1025), np.ones(1025))
    with pytest.raises(ss.InvalidInputError):
        ss.expectation_bound_check(bare, make_cfg('L1', J=3), reps=2)
    tabulated = ss.tabulate('uniform', ss.Grid(0, 1, 1025))
    df = ss.concentration_tail(tabulated, make_cfg('L1', J=3), n=200, reps=20, seed=7, serial=True)
    assert len(df) == 10
    ok('A tabulated null needs a catalog label to draw data from')

    cfg = make_cfg('sup', J=3, M0=3, eps=0.1)
    serial = ss.error_rates('uniform', 'sine:0.5', cfg, reps=40, seed=8, n=500, serial=True)
    parallel = ss.error_rates('uniform', 'sine:0.5', cfg, reps=40, seed=8, n=500, serial=False)
    assert serial == parallel
    ok('Serial and parallel replications give identical error rates')
    return serial


if __name__ == '__main__':

    with sc.timer():
        report = test_statistic()
        bounds = test_mcdiarmid()
        tail   = test_concentration()
        rows   = test_expectation_cap()
        rates  = test_error_rates()
        sep    = test_separation()
        custom = test_custom_nulls()
