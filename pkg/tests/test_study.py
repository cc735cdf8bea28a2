'''
Test rate studies: running, slope fits, assertions and every output format
'''

import numpy as np
import sciris as sc
import xml.etree.ElementTree as ET
import supsim as ss
import pytest

sc.options(backend='agg') # Turn off interactive plots

svg_ns = '{http://www.w3.org/2000/svg}'


def ok(string):
    ''' Print out a successful test nicely '''
    return sc.printgreen(f'✓ {string}\n')


def test_records_and_fits():
    sc.heading('Testing records and slope fits...')

    records = []
    for n in [2**10, 2**12, 2**14]:
        for r in range(3):
            err = 2*ss.n_over_log_n(n)**(-1/3)*(1 + 0.01*r)
            records.append(ss.RateRecord(n=n, replication=r, sup_error=err, l1_error=err/2, seed=r))
    fit = ss.fit_slope(records, target=-1/3)
    assert np.isclose(fit.slope, -1/3, atol=1e-10)
    assert fit.stderr < 1e-10
    assert np.isclose(fit.predict(2**12), np.mean([r.sup_error for r in records if r.n == 2**12]))
    ok(f'Exact power-law errors give slope {fit.slope:0.6f}')

    logged = [ss.RateRecord(n=r.n, replication=r.replication, sup_error=r.sup_error*np.log(r.n)**2, l1_error=r.l1_error) for r in records]
    fit = ss.fit_slope(logged, log_factor_power=2)
    assert np.isclose(fit.slope, -1/3, atol=1e-10)
    ok('A (log n)² factor is divided out before fitting')

    assert list(records[0].to_dict().keys()) == ss.defaults.result_cols
    with pytest.raises(ss.InvalidInputError):
        ss.RateRecord(n=100, replication=0, sup_error=-1, l1_error=0)
    with pytest.raises(ss.FitError):
        ss.fit_slope(records[:3])
    with pytest.raises(ss.FitError):
        ss.SlopeFit(-0.3, 0, stderr=-1)

    cfg = ss.make_config('histogram')
    assert np.isclose(ss.target_exponent(cfg), -1/3)
    assert np.isclose(ss.target_exponent(ss.make_config('dpm-laplace')), -3/8)
    assert np.isclose(ss.target_exponent(ss.make_config('histogram', kind='quantile', tau=0.5)), -2/3)
    ok('Target exponents are −1/3, −3/8 and −2/3')

    return fit


def test_small_study(tmp_path):
    sc.heading('Testing a small study and its outputs...')

    cfg = ss.make_config('test', reps=3, assertions=dict(slope_range=[-10, 10]))
    study = ss.RateStudy(cfg).run(serial=True, verbose=0)
    assert len(study.records) == 9
    assert [(r.n, r.replication) for r in study.records] == sorted((r.n, r.replication) for r in study.records)
    assert all(r.wall_time_ms == 0 for r in study.records)
    assert study.assertions.slope_range
    assert len(study.summary()) == 3
    ok(f'Study ran: {study}')

    with pytest.raises(RuntimeError):
        study.run()
    with pytest.raises(ss.InvalidInputError):
        study.emit('pdf', out_dir=tmp_path)

    study['assertions'] = dict(slope_range=[0, 1], decreasing=True)
    checks = ss.check_assertions(study)
    assert not checks.slope_range
    ok('An impossible slope range fails its assertion')

    paths = study.emit(['csv', 'json', 'svg', 'gnuplot'], out_dir=tmp_path/'serial')
    assert len(paths) == 5 and all(p.exists() for p in paths)
    csvfile, jsonfile, svgfile = paths[:3]

    # The same configuration run in parallel gives byte-identical records
    parallel = ss.RateStudy(cfg).run(serial=False, verbose=0)
    [csvfile2] = parallel.emit('csv', out_dir=tmp_path/'parallel')
    assert csvfile.read_bytes() == csvfile2.read_bytes()
    ok('Serial and parallel runs write identical CSV files')

    loaded = ss.load_records(csvfile)
    assert [r.to_dict() for r in loaded] == [r.to_dict() for r in study.records]
    assert all(r.quantile_error is None for r in loaded)
    out = sc.loadjson(jsonfile)
    refit = ss.fit_slope(loaded, column=out['fit']['column'])
    assert abs(refit.slope - out['fit']['slope']) < 1e-12
    assert out['csv_hash'] == ss.git_hash(csvfile.read_bytes())
    assert out['config']['n_list'] == cfg['n_list']
    ok('Records and slopes can be recovered from the CSV and JSON outputs')

    tree = ET.parse(svgfile)
    groups = {g.get('id'):g for g in tree.iter(f'{svg_ns}g')}
    markers = list(groups['records'].iter(f'{svg_ns}use'))
    lines = list(groups['fit'].iter(f'{svg_ns}path'))
    assert len(markers) == len(study.records)
    assert len(lines) == 1
    ok(f'The SVG has {len(markers)} markers and one fitted line')

    script = (tmp_path/'serial'/f'{study.label}.gp').read_text()
    assert 'set logscale xy' in script
    rows = (tmp_path/'serial'/f'{study.label}.dat').read_text().strip().split('\n')
    assert len(rows) == len(study.records)

    return study


def test_quantile_study():
    sc.heading('Testing a quantile rate study...')
    cfg = ss.make_config('test', kind='quantile', tau=0.5, truth='uniform', reps=3, n_draws=50)
    assert cfg['study_id'] == 'histogram-quantile'
    records, fit = ss.run_quantile_rate_study(cfg, serial=True, verbose=0)
    q = np.array([r.quantile_error for r in records])
    assert np.all(q >= 0) and np.all(q < 0.1)
    assert fit.column == 'quantile_error'
    assert np.isclose(fit.target_exponent, -2/3)
    ok(f'Posterior medians of the uniform median are within {q.max():0.4f} of ½')

    with pytest.raises(ss.ConfigError):
        ss.run_quantile_rate_study(ss.make_config('dpm-laplace'))
    return fit


def test_histogram_rate():
    sc.heading('Testing the histogram sup-norm rate...')
    cfg = ss.make_config('histogram', assertions=dict(slope_range=[-0.43, -0.23]))
    study = ss.RateStudy(cfg).run(verbose=0)
    assert study.assertions.slope_range, f'Slope {study.fit.slope:0.3f} outside [-0.43, -0.23]'
    ok(f'Histogram slope {study.fit.slope:0.3f} (target −1/3)')
    return study


def test_quantile_rate():
    sc.heading('Testing the posterior-median quantile rate...')
    cfg = ss.make_config('histogram', kind='quantile', tau=0.5, truth='tilted:0.5', n_list=[2**k for k in range(8, 15)],
                         reps=200, assertions=dict(slope_range=[-0.82, -0.52]))
    study = ss.RateStudy(cfg).run(verbose=0)
    assert study.fit.column == 'quantile_error'
    assert study.assertions.slope_range, f'Slope {study.fit.slope:0.3f} outside [-0.82, -0.52]'
    ok(f'Median quantile slope {study.fit.slope:0.3f} (target −2/3)')
    return study


def test_frozen_resolution():
    sc.heading('Testing a study with the resolution held fixed...')
    adaptive = ss.RateStudy(ss.make_config('test', reps=8)).run(serial=True, verbose=0)
    frozen = ss.RateStudy(ss.make_config('test', reps=8, freeze_J=1)).run(serial=True, verbose=0)
    errors = np.array([r.sup_error for r in frozen.records])
    assert np.all(errors >= 0.25 - 1e-9) # Two bins cannot follow 1 + ½sin(2πx) closer than this
    assert frozen.fit.slope > -0.15
    assert frozen.fit.slope > adaptive.fit.slope
    ok(f'With J fixed the slope flattens to {frozen.fit.slope:0.3f} (adaptive J: {adaptive.fit.slope:0.3f})')
    return frozen


def test_dpm_rate():
    sc.heading('Testing the Laplace mixture rate...')
    cfg = ss.make_config('dpm-laplace', iters=1000, burnin=250, thin=3, assertions=dict(decreasing=True))
    study = ss.RateStudy(cfg).run(verbose=0)
    means = study.summary()['sup_error']['mean'].values
    assert study.assertions.decreasing, f'Mean sup errors do not decrease: {means}'
    ok(f'Mean sup errors {np.round(means, 4)} decrease over n = {cfg["n_list"]}')
    return study


if __name__ == '__main__':

    with sc.timer():
        fit    = test_records_and_fits()
        study  = test_small_study(sc.path(sc.thisdir())/'temp_study')
        qfit   = test_quantile_study()
        hist   = test_histogram_rate()
        qrate  = test_quantile_rate()
        frozen = test_frozen_resolution()
        dpm    = test_dpm_rate()
