"""
Test other things not covered in other tests: options, utilities and the
command-line interface.
"""

import numpy as np
import pandas as pd
import sciris as sc
import supsim as ss
from supsim import cli
import pytest

sc.options(backend='agg') # Turn off interactive plots

def ok(string, newline=True):
    ''' Print out a successful test nicely '''
    return sc.printgreen(f'✓ {string}' + '\n'*newline)


def test_options(tmp_path):
    sc.heading('Testing options...')

    d = ss.options.to_dict()
    assert isinstance(d, dict), 'Expected a dict'
    assert d['npts'] == 2**14 + 1
    ok('Options to_dict() works')

    with ss.options.context(verbose=0, warnings='error'):
        assert ss.options.verbose == 0
        with pytest.raises(RuntimeWarning):
            ss.utils.warn('Converted to an error')
    assert ss.options.warnings == d['warnings']
    ok('Options as context works and is undone on exit')

    with pytest.raises(sc.KeyNotFoundError):
        ss.options(not_an_option=1)
    with pytest.raises(ValueError):
        ss.options(warnings='shout')

    ss.options.disp()
    filename = tmp_path/'tmp_settings.json'
    ss.options.save(filename)
    assert filename.exists(), 'Did not write file to disk'
    ss.options.load(filename)
    ok('Options load() and save() work')

    return sc.dcp(ss.options)


def test_seeds_and_hashes():
    sc.heading('Testing seeds and hashes...')

    s1 = ss.derive_seed(2024, 3, 17)
    assert s1 == ss.derive_seed(2024, 3, 17)
    assert 0 <= s1 < 2**63
    keys = [(i, r) for i in range(8) for r in range(50)]
    seeds = ss.derive_seeds(2024, keys)
    assert len(set(seeds)) == len(keys)
    assert ss.derive_seed(2025, 3, 17) != s1 and ss.derive_seed(2024, 17, 3) != s1
    ok(f'{len(seeds)} derived seeds are distinct and reproducible')

    # Same as "git hash-object"
    assert ss.git_hash('') == 'e69de29bb2d1d6434b8b29ae775ad8c2e48c5391'
    assert ss.git_hash('hello\n') == 'ce013625030ba8dba906f756967f9e9ca394464a'
    assert ss.git_hash(b'hello\n') == ss.git_hash('hello\n')
    ok('Content hashes match git')

    assert np.isclose(ss.n_over_log_n(np.e**2), np.e**2/2)
    return seeds


def test_kernel_sum():
    sc.heading('Testing the compiled kernel sum...')
    rng = np.random.default_rng(1)
    x = np.linspace(-3, 3, 301)
    centers = rng.normal(size=7)
    weights = rng.dirichlet(np.ones(7))
    scales = rng.uniform(0.2, 1.5, size=7)
    u = (x[:, None] - centers[None, :])/scales[None, :]
    gauss = (weights*np.exp(-0.5*u**2)/(np.sqrt(2*np.pi)*scales)).sum(axis=1)
    lap = (weights*0.5*np.exp(-np.abs(u))/scales).sum(axis=1)
    kinds = ss.defaults.kernel_kinds
    assert np.allclose(ss.kernel_sum(x, centers, weights, scales, kinds['gaussian']), gauss, rtol=1e-12, atol=1e-15)
    assert np.allclose(ss.kernel_sum(x, centers, weights, scales, kinds['laplace']), lap, rtol=1e-12, atol=1e-15)
    ok('Gaussian and Laplace kernel sums match direct evaluation')
    return gauss


def test_cli_fits(tmp_path):
    sc.heading('Testing the fit commands...')

    out = tmp_path/'hist'
    code = cli.main(['fit-histogram', '--n', '1000', '--draws', '5', '--npts', '1025', '--seed', '1', '--out-dir', str(out), '--verbose', '0'])
    assert code == 0
    p_hat = cli.read_function(out/'bayes_mean.csv')
    assert abs(p_hat.integral() - 1) < 1e-10
    summary = sc.loadjson(out/'fit_histogram.json')
    assert summary['J'] == ss.choose_J(1000, 1) and sum(summary['counts']) == 1000
    assert len(list((out/'draws').glob('*.csv'))) == 5
    ok(f'fit-histogram wrote the Bayes mean, 5 draws and a summary (sup error {summary["sup_error"]:0.3f})')

    code = cli.main(['quantile', '--draws', str(out/'draws'), '--tau', '0.5', '--out-dir', str(out), '--verbose', '0'])
    assert code == 0
    qs = pd.read_csv(out/'quantiles.csv')
    assert len(qs) == 5 and qs['quantile'].between(0, 1).all()
    ok('quantile read the draws back')

    out = tmp_path/'dpm'
    code = cli.main(['fit-dpm', '--n', '200', '--iters', '200', '--burnin', '50', '--thin', '2', '--npts', '1025', '--out-dir', str(out), '--verbose', '0'])
    assert code == 0
    summary = sc.loadjson(out/'fit_dpm.json')
    assert summary['n_draws'] == 75 and summary['sup'] <= 0.5 + 1e-9
    assert len(summary['diagnostics']['cluster_trace']) == 200
    ok('fit-dpm wrote the Bayes estimator and chain diagnostics')

    return summary


def test_cli_checks(tmp_path):
    sc.heading('Testing the test and check commands...')

    code = cli.main(['test-gof', '--null', 'uniform', '--data-from', 'sine:0.8', '--n', '1000', '--J', '3', '--M0', '3', '--out-dir', str(tmp_path), '--verbose', '0'])
    assert code == 0
    report = sc.loadjson(tmp_path/'test_gof.json')
    assert report['reject'] and report['statistic'] > report['threshold']
    ok(f'test-gof rejected the uniform null for a sine alternative (T = {report["statistic"]:0.3f})')

    code = cli.main(['lemma1-check', '--p', 'laplace', '--h', 'gaussian', '--beta', '2', '--deltas', '1e-2,1e-3', '--out-dir', str(tmp_path), '--verbose', '0'])
    assert code == 0
    df = pd.read_csv(tmp_path/'lemma1_check.csv')
    assert list(df.columns) == ['delta', 'l2sq', 'ratio']
    assert abs(df.ratio.iloc[-1] - 1) < 0.1
    ok('lemma1-check wrote its table')

    code = cli.main(['fit-histogram', '--truth', 'not-a-density', '--out-dir', str(tmp_path)])
    assert code == 2
    code = cli.main(['test-gof', '--n', '100', '--r', 'sup', '--eps', '-1', '--out-dir', str(tmp_path)])
    assert code == 2
    ok('Invalid input exits with code 2')

    return report


def test_cli_data(tmp_path):
    sc.heading('Testing the commands on data files...')

    samples = ss.sample('lipschitz-sine', 800, seed=11)
    datafile = tmp_path/'obs.csv'
    pd.DataFrame(dict(x=samples.values)).to_csv(datafile, index=False)
    out = tmp_path/'hist'
    code = cli.main(['fit-histogram', '--data', str(datafile), '--J', '3', '--npts', '1025', '--out-dir', str(out), '--verbose', '0'])
    assert code == 0
    summary = sc.loadjson(out/'fit_histogram.json')
    direct = ss.fit(samples, 3)
    assert summary['n'] == 800 and summary['counts'] == direct.counts.tolist()
    assert 'sup_error' not in summary # No truth to compare with
    p_hat = cli.read_function(out/'bayes_mean.csv')
    assert np.allclose(p_hat.values, ss.bayes_mean(direct, p_hat.grid).values)
    code = cli.main(['fit-histogram', '--data', str(datafile), '--alpha', '1', '--truth', 'lipschitz-sine', '--npts', '1025', '--out-dir', str(out), '--verbose', '0'])
    summary = sc.loadjson(out/'fit_histogram.json')
    assert code == 0 and summary['J'] == ss.choose_J(800, 1) and summary['sup_error'] > 0
    ok('fit-histogram fits the observations of a CSV file')

    bare = tmp_path/'bare.csv' # One column, no header
    pd.Series(ss.sample('sine:0.8', 1000, seed=12).values).to_csv(bare, header=False, index=False)
    assert len(cli.read_samples(bare)) == 1000
    code = cli.main(['test-gof', '--data', str(bare), '--null', 'uniform', '--J', '3', '--M0', '3', '--out-dir', str(tmp_path), '--verbose', '0'])
    report = sc.loadjson(tmp_path/'test_gof.json')
    assert code == 0 and report['n'] == 1000 and report['reject']
    code = cli.main(['test-gof', '--data', str(bare), '--r', 'l1', '--J', '3', '--M0', '3', '--out-dir', str(tmp_path), '--verbose', '0'])
    assert code == 0 and sc.loadjson(tmp_path/'test_gof.json')['r'] == 'L1'
    ok('test-gof tests the observations of a headerless CSV file')

    mixture = tmp_path/'mixture.csv'
    draws = ss.sample('laplace-2atom', 150, seed=13).values
    pd.DataFrame(dict(x=draws)).to_csv(mixture, index=False)
    out = tmp_path/'dpm'
    code = cli.main(['fit-dpm', '--data', str(mixture), '--iters', '150', '--burnin', '50', '--thin', '2', '--npts', '2049', '--out-dir', str(out), '--verbose', '0'])
    assert code == 0
    summary = sc.loadjson(out/'fit_dpm.json')
    assert summary['n'] == 150 and summary['n_draws'] == 50
    assert abs(summary['mass'] - 1) < 0.01 and 'sup_error' not in summary
    grid = cli.read_function(out/'bayes_estimator.csv').grid
    assert grid.lo < draws.min() and grid.hi > draws.max()
    ok('fit-dpm fits the observations of a CSV file on a grid covering them')

    (tmp_path/'two.csv').write_text('a,b\n0.1,0.2\n')
    assert cli.main(['fit-histogram', '--data', str(tmp_path/'two.csv'), '--out-dir', str(tmp_path)]) == 2
    pd.DataFrame(dict(x=[0.5, 1.5])).to_csv(tmp_path/'outside.csv', index=False)
    assert cli.main(['fit-histogram', '--data', str(tmp_path/'outside.csv'), '--out-dir', str(tmp_path)]) == 2
    assert cli.main(['test-gof', '--data', str(bare), '--data-from', 'uniform', '--out-dir', str(tmp_path)]) == 2
    ok('Unusable data files exit with code 2')

    return report


def test_cli_rate_study(tmp_path):
    sc.heading('Testing the rate-study command...')

    def write_config(name, **kwargs):
        cfg = dict(model='histogram', n_list=[2**8, 2**10], reps=2, grid_npts=1025)
        cfg.update(kwargs)
        path = tmp_path/name
        sc.savejson(path, cfg)
        return str(path)

    good = write_config('good.json', assertions=dict(slope_range=[-10, 10]))
    code = cli.main(['rate-study', '--config', good, '--serial', '--format', 'csv', 'json', 'svg', 'gnuplot', '--out-dir', str(tmp_path/'good'), '--verbose', '0'])
    assert code == 0
    for ext in ['csv', 'json', 'svg', 'dat', 'gp']:
        assert (tmp_path/'good'/f'histogram-sup.{ext}').exists()
    ok('A passing study exits with code 0 and writes every format')

    bad = write_config('bad.json', assertions=dict(slope_range=[5, 10]))
    assert cli.main(['rate-study', '--config', bad, '--serial', '--out-dir', str(tmp_path/'bad'), '--verbose', '0']) == 1
    ok('A failed assertion exits with code 1')

    invalid = write_config('invalid.json', reps=0)
    assert cli.main(['rate-study', '--config', invalid, '--out-dir', str(tmp_path/'invalid')]) == 2
    ok('An invalid configuration exits with code 2')

    with pytest.raises(SystemExit):
        cli.main(['no-such-command'])

    return code


if __name__ == '__main__':

    tmp = sc.path(sc.thisdir())/'temp_other'
    tmp.mkdir(exist_ok=True)
    with sc.timer():
        opts    = test_options(tmp)
        seeds   = test_seeds_and_hashes()
        gauss   = test_kernel_sum()
        summary = test_cli_fits(tmp)
        report  = test_cli_checks(tmp)
        data    = test_cli_data(tmp)
        code    = test_cli_rate_study(tmp)
