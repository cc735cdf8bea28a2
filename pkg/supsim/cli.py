'''
Command-line interface. Run ``supsim --help`` for the list of commands; every
command takes --seed, --out-dir, --format and --verbose.

Exit codes: 0 on success (for rate studies, when every configured assertion
passes), 1 when an assertion fails, 2 for invalid input or configuration.
'''

import importlib
import sys
import argparse
import numpy as np
import pandas as pd
import sciris as sc
from . import version as ssv
from . import utils as ssu
from . import base as ssb
from . import density as ssdn
from . import histogram as sshi
from . import dpm as ssdp
from . import gof as ssg
from . import fourier as ssf
ssq = importlib.import_module('.quantile', __package__) # The submodule, not the quantile() function re-exported by __init__
from . import parameters as sspar
from . import study as sss
from .settings import options as sso


__all__ = ['main', 'make_parser', 'write_function', 'read_function', 'read_samples']


#%% Helpers

def write_function(gf, filename):
    ''' Write a GridFunction as a CSV with columns x, value, left, right '''
    df = pd.DataFrame(dict(x=gf.grid.x, value=gf.values, left=gf.left, right=gf.right))
    df.to_csv(filename, index=False, lineterminator='\n')
    return filename


def read_function(filename):
    ''' Read a GridFunction written by write_function(); the x column must be a uniform grid '''
    df = pd.read_csv(filename)
    x = df.x.values
    grid = ssdn.Grid(x[0], x[-1], len(x))
    if not np.allclose(grid.x, x, rtol=0, atol=1e-9*grid.length):
        errormsg = f'The x column of {filename} is not a uniform grid'
        raise ssb.InvalidInputError(errormsg)
    left = df.left.values if 'left' in df else None
    right = df.right.values if 'right' in df else None
    return ssdn.GridFunction(grid, df.value.values, left=left, right=right, label=sc.path(filename).stem)


def read_samples(filename):
    '''
    Read observations from a CSV: the column "x" if present, otherwise the only
    column (a header line is optional).
    '''
    filename = sc.path(filename)
    df = pd.read_csv(filename)
    if 'x' in df:
        values = df.x.values
    elif df.shape[1] == 1:
        try:
            float(df.columns[0]) # No header: the first line is an observation
            df = pd.read_csv(filename, header=None)
        except ValueError:
            pass
        values = df.iloc[:, 0].values
    else:
        errormsg = f'{filename} has columns {sc.strjoin(df.columns)}; expected a column "x" or a single column'
        raise ssb.InvalidInputError(errormsg)
    try:
        values = np.asarray(values, dtype=float)
    except ValueError as E:
        errormsg = f'The observations in {filename} are not all numbers'
        raise ssb.InvalidInputError(errormsg) from E
    if not values.size or not np.all(np.isfinite(values)):
        errormsg = f'{filename} must contain at least one observation, all finite'
        raise ssb.InvalidInputError(errormsg)
    return ssdn.SampleSet(values, source=filename.stem)


def _floats(text):
    ''' Parse "1e-2,1e-3" (or a single number) into a list of floats '''
    try:
        return [float(v) for v in text.split(',') if v.strip()]
    except ValueError:
        errormsg = f'Expected comma-separated numbers, not "{text}"'
        raise argparse.ArgumentTypeError(errormsg) from None


def _out_dir(args):
    out_dir = sc.path(args.out_dir)
    out_dir.mkdir(parents=True, exist_ok=True)
    return out_dir


def _seed(args, default=0):
    return default if args.seed is None else args.seed


def _save_summary(args, stem, summary):
    path = _out_dir(args)/f'{stem}.json'
    sc.savejson(path, summary, indent=2)
    ssu.log(f'Wrote {path}', verbose=args.verbose)
    return path


def _load_data(args, default_truth, seed):
    '''
    The observations of --data, or a sample of size --n from the catalog
    density --truth; returns the samples and the truth (None for a data file
    without --truth)
    '''
    if args.data is not None:
        return read_samples(args.data), args.truth
    truth = default_truth if args.truth is None else args.truth
    return ssdn.sample(truth, args.n, ssu.derive_seed(seed, 0)), truth


def _errors(p_hat, truth):
    if truth is None:
        return {}
    p0 = ssdn.tabulate(truth, p_hat.grid)
    return dict(sup_error=ssdn.norm(p_hat - p0, 'sup'), l1_error=ssdn.norm(p_hat - p0, 'L1'))


#%% Commands

def rate_study(args):
    ''' Run a rate study from a JSON or YAML configuration '''
    cfg = sspar.load_config(args.config)
    if args.seed is not None:
        cfg['master_seed'] = args.seed
        cfg.validate()
    study = sss.RateStudy(cfg).run(verbose=args.verbose, serial=args.serial or None)
    paths = study.emit(args.format or ['csv', 'json'], out_dir=args.out_dir)
    for path in paths:
        ssu.log(f'Wrote {path}', verbose=args.verbose)
    failed = [k for k, v in study.assertions.items() if not v]
    if failed:
        print(f'Assertions failed: {sc.strjoin(failed)} (slope {study.fit.slope:0.4f})')
        return 1
    return 0


def fit_histogram(args):
    ''' Fit the histogram posterior to a data file or to a sample from a catalog density '''
    seed = _seed(args)
    samples, truth = _load_data(args, 'lipschitz-sine', seed)
    n = len(samples)
    J = sshi.choose_J(n, args.alpha) if args.J is None else args.J
    post = sshi.fit(samples, J)
    p_hat = sshi.bayes_mean(post, ssdn.Grid(0, 1, args.npts))
    out_dir = _out_dir(args)
    write_function(p_hat, out_dir/'bayes_mean.csv')
    if args.draws:
        draw_dir = out_dir/'draws'
        draw_dir.mkdir(exist_ok=True)
        for d, draw in enumerate(sshi.sample_posterior(post, args.draws, ssu.derive_seed(seed, 1), grid=p_hat.grid)):
            write_function(draw, draw_dir/f'draw_{d:04d}.csv')
    summary = dict(data=args.data, truth=truth, n=n, J=J, seed=seed, counts=post.counts.tolist(),
                   sup_rate=sshi.sup_rate(n, args.alpha), **_errors(p_hat, truth))
    _save_summary(args, 'fit_histogram', summary)
    return 0


def fit_dpm(args):
    ''' Run the blocked Gibbs sampler on a data file or on a sample from a catalog density '''
    seed = _seed(args)
    spec = ssdp.DPMixtureSpec(args.kernel, alpha_mass=args.alpha_mass, a=args.a)
    samples, truth = _load_data(args, 'laplace-2atom', seed)
    draws, state = ssdp.fit_gibbs(samples, spec, iters=args.iters, burnin=args.burnin, thin=args.thin,
                                  seed=ssu.derive_seed(seed, 1), return_state=True, verbose=args.verbose)
    if truth is not None and ssdn.get_density(truth).support == 'real':
        grid = ssdn.Grid(*ssdn.get_density(truth).domain, args.npts)
    else:
        grid = spec.default_grid(args.npts, data=samples)
    p_hat = ssdp.bayes_estimator(draws, args.kernel, grid)
    write_function(p_hat, _out_dir(args)/'bayes_estimator.csv')
    summary = dict(data=args.data, truth=truth, n=len(samples), seed=seed, n_draws=len(draws),
                   diagnostics=state.diagnostics(), sup=p_hat.sup(), mass=p_hat.integral())
    if truth is not None and ssdn.get_density(truth).support == 'real':
        summary.update(_errors(p_hat, truth))
    _save_summary(args, 'fit_dpm', summary)
    return 0


def test_gof(args):
    ''' Test a data file, or a sample from a catalog density, against a null density '''
    seed = _seed(args)
    if args.data is not None and args.data_from is not None:
        errormsg = 'Give either --data or --data-from, not both'
        raise ssb.InvalidInputError(errormsg)
    if args.data is not None:
        samples = read_samples(args.data)
        data_from = args.data
    else:
        data_from = args.null if args.data_from is None else args.data_from
        samples = ssdn.sample(data_from, args.n, ssu.derive_seed(seed, 0))
    n = len(samples)
    p0 = ssdn.tabulate(args.null, ssdn.Grid(*ssdn.get_density(args.null).domain, args.npts))
    eps = sshi.sup_rate(n, 1.0) if args.eps is None else args.eps
    cfg = ssg.make_test_config(p0, args.kernel, args.J, eps, r=args.r, M0=args.M0)
    report = ssg.run_test(samples, p0, cfg)
    summary = sc.mergedicts(dict(null=args.null, data_from=data_from, n=n, J=args.J, r=cfg.r, M0=cfg.M0), report.to_dict())
    print(f'{"Reject" if report.reject else "Accept"}: T = {report.statistic:0.4f}, threshold = {report.threshold:0.4f}')
    _save_summary(args, 'test_gof', summary)
    return 0


def quantile(args):
    ''' τ-quantiles of every tabulated draw in a directory '''
    files = sorted(sc.path(args.draws).glob('*.csv'))
    if not files:
        errormsg = f'No CSV draws found in {args.draws}'
        raise ssb.InvalidInputError(errormsg)
    draws = [read_function(f) for f in files]
    qs = ssq.posterior_quantiles(draws, args.tau)
    out_dir = _out_dir(args)
    df = pd.DataFrame(dict(draw=[f.name for f in files], quantile=qs))
    df.to_csv(out_dir/'quantiles.csv', index=False, lineterminator='\n')
    summary = dict(tau=args.tau, n_draws=len(qs), median=float(np.median(qs)), mean=float(qs.mean()), std=float(qs.std()),
                   low=float(np.quantile(qs, 0.025)), high=float(np.quantile(qs, 0.975)))
    _save_summary(args, 'quantile_summary', summary)
    return 0


def lemma1_check(args):
    ''' Compare the scaled L2 smoothing bias with its small-bandwidth limit '''
    deltas = [d for chunk in args.deltas for d in chunk] if args.deltas else None
    df = ssf.lemma1_limit_check(args.density, args.kernel, args.beta, deltas=deltas)
    out_dir = _out_dir(args)
    df.to_csv(out_dir/'lemma1_check.csv', index=False, lineterminator='\n')
    _save_summary(args, 'lemma1_check', dict(density=args.density, kernel=args.kernel, beta=args.beta, **df.attrs))
    if args.verbose:
        print(df.to_string(index=False))
    return 0


#%% Parser

def make_parser():
    ''' Build the argument parser with one subcommand per operation '''
    common = argparse.ArgumentParser(add_help=False)
    common.add_argument('--seed', type=int, default=None, help='Master seed')
    common.add_argument('--out-dir', default='.', help='Output folder (created if needed)')
    common.add_argument('--format', nargs='+', choices=['csv', 'json', 'svg', 'gnuplot'], default=None, help='Output formats of rate studies')
    common.add_argument('--verbose', type=int, default=None, help='Verbosity (default ss.options.verbose)')
    common.add_argument('--npts', type=int, default=None, help='Working grid size')

    parser = argparse.ArgumentParser(prog='supsim', description='Sup-norm Bayesian density estimation studies')
    parser.add_argument('--version', action='version', version=f'supsim {ssv.__version__}')
    sub = parser.add_subparsers(dest='command', required=True)

    p = sub.add_parser('rate-study', parents=[common], help=rate_study.__doc__)
    p.add_argument('--config', required=True, help='JSON or YAML configuration')
    p.add_argument('--serial', action='store_true', help='Run replications in this process')
    p.set_defaults(func=rate_study)

    p = sub.add_parser('fit-histogram', parents=[common], help=fit_histogram.__doc__)
    p.add_argument('--data', default=None, help='CSV of observations in [0,1] (column "x" or a single column)')
    p.add_argument('--truth', default=None, help='Catalog density to sample from, or to compare a data fit with (default lipschitz-sine without --data)')
    p.add_argument('--n', type=int, default=4096, help='Sample size without --data')
    p.add_argument('--alpha', type=float, default=1.0)
    p.add_argument('--J', type=int, default=None, help='Resolution (default from n and alpha)')
    p.add_argument('--draws', type=int, default=0, help='Number of posterior draws to write')
    p.set_defaults(func=fit_histogram)

    p = sub.add_parser('fit-dpm', parents=[common], help=fit_dpm.__doc__)
    p.add_argument('--data', default=None, help='CSV of observations (column "x" or a single column)')
    p.add_argument('--truth', default=None, help='Catalog density to sample from, or to compare a data fit with (default laplace-2atom without --data)')
    p.add_argument('--n', type=int, default=500, help='Sample size without --data')
    p.add_argument('--kernel', default='laplace', choices=['laplace', 'gaussian'])
    p.add_argument('--alpha-mass', type=float, default=1.0)
    p.add_argument('--a', type=float, default=1.0)
    p.add_argument('--iters', type=int, default=None)
    p.add_argument('--burnin', type=int, default=None)
    p.add_argument('--thin', type=int, default=None)
    p.set_defaults(func=fit_dpm)

    p = sub.add_parser('test-gof', parents=[common], help=test_gof.__doc__)
    p.add_argument('--null', default='uniform')
    p.add_argument('--data', default=None, help='CSV of observations (column "x" or a single column)')
    p.add_argument('--data-from', default=None, help='Catalog density generating the data without --data (default the null)')
    p.add_argument('--n', type=int, default=1000, help='Sample size without --data')
    p.add_argument('--kernel', default='haar')
    p.add_argument('--J', type=int, default=3)
    p.add_argument('--r', default='sup', type=str.lower, choices=['sup', 'l1'])
    p.add_argument('--eps', type=float, default=None, help='Rate (default the α=1 sup-norm rate at n)')
    p.add_argument('--M0', type=float, default=None)
    p.set_defaults(func=test_gof)

    p = sub.add_parser('quantile', parents=[common], help=quantile.__doc__)
    p.add_argument('--draws', required=True, help='Folder of draws written by fit-histogram --draws')
    p.add_argument('--tau', type=float, default=0.5)
    p.set_defaults(func=quantile)

    p = sub.add_parser('lemma1-check', parents=[common], help=lemma1_check.__doc__)
    p.add_argument('--density', '--p', dest='density', default='laplace')
    p.add_argument('--kernel', '--h', dest='kernel', default='gaussian')
    p.add_argument('--beta', type=float, default=2.0)
    p.add_argument('--deltas', type=_floats, nargs='*', default=None, help='Bandwidths, space- or comma-separated')
    p.set_defaults(func=lemma1_check)

    return parser


def main(argv=None):
    ''' Entry point of the supsim command; returns the exit code '''
    parser = make_parser()
    args = parser.parse_args(argv)
    if args.verbose is None:
        args.verbose = sso.verbose
    if args.npts is None:
        args.npts = sso.npts
    try:
        return args.func(args)
    except (ValueError, KeyError, FileNotFoundError) as E:
        print(f'supsim {args.command}: {E}', file=sys.stderr)
        return 2


if __name__ == '__main__':
    sys.exit(main())
