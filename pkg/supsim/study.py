'''
Monte Carlo rate studies: run replications over a list of sample sizes, fit
log-log slopes against the theoretical exponents, and write the results.
'''

import importlib
import numpy as np
import pandas as pd
import sciris as sc
import pylab as pl
import scipy.stats as sps
from . import utils as ssu
from . import defaults as ssd
from . import base as ssb
from . import density as ssdn
from . import histogram as sshi
from . import dpm as ssdp
ssq = importlib.import_module('.quantile', __package__) # The submodule, not the quantile() function re-exported by __init__
from . import parameters as sspar
from .settings import options as sso


__all__ = ['RateRecord', 'SlopeFit', 'RateStudy', 'target_exponent', 'fit_slope', 'run_rate_study',
           'run_quantile_rate_study', 'emit', 'load_records', 'check_assertions']


#%% Records and fits

class RateRecord(sc.prettyobj):
    ''' Errors of the Bayes estimator for one (n, replication) pair '''

    def __init__(self, n, replication, sup_error, l1_error, quantile_error=None, seed=None, wall_time_ms=0.0, study_id=None):
        for key, val in dict(sup_error=sup_error, l1_error=l1_error, quantile_error=quantile_error).items():
            if val is not None and not val >= 0:
                errormsg = f'Record errors must be nonnegative, not {key}={val}'
                raise ssb.InvalidInputError(errormsg)
        self.study_id       = study_id
        self.n              = int(n)
        self.replication    = int(replication)
        self.sup_error      = float(sup_error)
        self.l1_error       = float(l1_error)
        self.quantile_error = None if quantile_error is None else float(quantile_error)
        self.seed           = None if seed is None else int(seed)
        self.wall_time_ms   = float(wall_time_ms)
        return

    def to_dict(self):
        return {k:getattr(self, k) for k in ssd.result_cols}


class SlopeFit(sc.prettyobj):
    '''
    Least-squares fit of log(mean error) against log(n/log n), after dividing
    out the slowly varying factor (log n)^log_factor_power.

    Args:
        slope (float): fitted exponent
        intercept (float): fitted intercept
        stderr (float): standard error of the slope
        target_exponent (float): the exponent predicted by the theory
        column (str): which error was fitted
        log_factor_power (float): exponent of the log factor divided out before fitting
    '''

    def __init__(self, slope, intercept, stderr, target_exponent=None, column='sup_error', log_factor_power=0.0):
        if not stderr >= 0:
            errormsg = f'The standard error of a slope cannot be negative ({stderr})'
            raise ssb.FitError(errormsg)
        self.slope = float(slope)
        self.intercept = float(intercept)
        self.stderr = float(stderr)
        self.target_exponent = None if target_exponent is None else float(target_exponent)
        self.column = column
        self.log_factor_power = float(log_factor_power)
        return

    def to_dict(self):
        return dict(slope=self.slope, intercept=self.intercept, stderr=self.stderr,
                    target_exponent=self.target_exponent, column=self.column, log_factor_power=self.log_factor_power)

    def predict(self, n):
        ''' Fitted mean error at sample size n '''
        n = np.asarray(n, dtype=float)
        return np.exp(self.intercept)*ssu.n_over_log_n(n)**self.slope*np.log(n)**self.log_factor_power


def target_exponent(cfg):
    ''' Exponent of n/log n predicted for the configured study '''
    alpha = cfg['alpha']
    if cfg['kind'] == 'quantile':
        return -(alpha + 1)/(2*alpha + 1)
    if cfg['model'] == 'dpm-laplace':
        return -3/8
    return -alpha/(2*alpha + 1)


def _as_df(records):
    if isinstance(records, pd.DataFrame):
        return records
    if isinstance(records, RateStudy):
        return records.to_df()
    rows = [r.to_dict() for r in records]
    if not rows:
        errormsg = 'No records to work with'
        raise ssb.InvalidInputError(errormsg)
    return pd.DataFrame(rows, columns=ssd.result_cols)


def fit_slope(records, target=None, column='sup_error', log_factor_power=0.0):
    '''
    Regress log of the per-n mean error on log(n/log n).

    Args:
        records (list/DataFrame): RateRecords or their table
        target (float): exponent to store alongside the fit
        column (str): error column to fit
        log_factor_power (float): the error is divided by (log n)^log_factor_power before fitting

    **Example**::

        fit = ss.fit_slope(ss.load_records('histogram-sup.csv'), target=-1/3)
    '''
    df = _as_df(records)
    means = df.groupby('n')[column].mean().sort_index()
    if len(means) < 2:
        errormsg = f'A slope needs at least two distinct sample sizes, not {len(means)}'
        raise ssb.FitError(errormsg)
    if not np.all(means.values > 0):
        errormsg = f'Mean {column} must be positive to take logs:\n{means}'
        raise ssb.FitError(errormsg)
    n = means.index.values.astype(float)
    x = np.log(ssu.n_over_log_n(n))
    y = np.log(means.values) - log_factor_power*np.log(np.log(n))
    res = sps.linregress(x, y)
    stderr = res.stderr if np.isfinite(res.stderr) else 0.0
    return SlopeFit(res.slope, res.intercept, stderr, target_exponent=target, column=column, log_factor_power=log_factor_power)


#%% Replication workers

def _histogram_task(cfg, n, samples):
    J = cfg['freeze_J'] if cfg['freeze_J'] is not None else sshi.choose_J(n, cfg['alpha'])
    post = sshi.fit(samples, J)
    p_hat = sshi.bayes_mean(post, ssdn.Grid(0, 1, cfg['grid_npts']))
    p0 = ssdn.tabulate(cfg['truth'], p_hat.grid)
    return post, p_hat, p0


def _dpm_task(cfg, samples, seed):
    truth = ssdn.get_density(cfg['truth'])
    grid = ssdn.Grid(*truth.domain, cfg['grid_npts'])
    spec = ssdp.DPMixtureSpec('laplace', alpha_mass=cfg['alpha_mass'], a=cfg['a'])
    draws = ssdp.fit_gibbs(samples, spec, iters=cfg['iters'], burnin=cfg['burnin'], thin=cfg['thin'], seed=seed)
    p_hat = ssdp.bayes_estimator(draws, 'laplace', grid)
    p0 = ssdn.tabulate(truth, grid)
    return p_hat, p0


def run_task(cfg, n, replication, seed):
    '''
    One replication: sample from the truth, fit the model, and measure the
    errors of the Bayes estimator (and of the posterior-median quantile for
    quantile studies). Rarely called directly.
    '''
    T = sc.timer()
    samples = ssdn.sample(cfg['truth'], n, seed)
    chain_seed = ssu.derive_seed(seed, 1)
    quantile_error = None
    if cfg['model'] == 'histogram':
        post, p_hat, p0 = _histogram_task(cfg, n, samples)
        if cfg['kind'] == 'quantile':
            weights = sshi.sample_weights(post, cfg['n_draws'], chain_seed)
            q_draws = ssq.histogram_quantiles(weights, post.J, cfg['tau'])
            q0 = ssq.quantile(ssq.cdf(p0), cfg['tau'])
            quantile_error = abs(float(np.median(q_draws)) - q0)
    else:
        p_hat, p0 = _dpm_task(cfg, samples, chain_seed)
    diff = p_hat - p0
    wall_time = T.toc(output=True)*1000 if cfg['record_wall_time'] else 0.0
    record = RateRecord(n=n, replication=replication, sup_error=ssdn.norm(diff, 'sup'), l1_error=ssdn.norm(diff, 'L1'),
                        quantile_error=quantile_error, seed=seed, wall_time_ms=wall_time, study_id=cfg['study_id'])
    return record


#%% The study class

class RateStudy(ssb.ParsObj):
    '''
    A Monte Carlo rate study: reps replications at every n in n_list, one
    worker per (n, replication) pair.

    Args:
        cfg (dict): a RateStudyConfig, or a dict of overrides passed to ss.make_config()
        label (str): the name of the study (default cfg['study_id'])
        kwargs (dict): further overrides of the configuration

    **Example**::

        study = ss.RateStudy(ss.make_config('test'))
        study.run()
        study.brief()
        study.emit(['csv', 'svg'], out_dir='results')
    '''

    def __init__(self, cfg=None, label=None, **kwargs):
        if not isinstance(cfg, sspar.RateStudyConfig):
            cfg = sc.mergedicts(cfg, kwargs)
            model = cfg.pop('model', 'histogram')
            cfg = sspar.make_config(model, **cfg)
        elif kwargs:
            cfg = sspar.RateStudyConfig(sc.mergedicts(cfg, kwargs, _copy=True)).validate()
        super().__init__(cfg)
        self.label = label if label is not None else cfg['study_id']
        self.records = None
        self.fit = None
        self.assertions = None
        self.already_run = False
        ssu.set_metadata(self)
        return

    def _brief(self):
        string = f'RateStudy("{self.label}", model={self["model"]}, kind={self["kind"]}, truth={self["truth"]}'
        if self.fit is not None:
            string += f'; slope={self.fit.slope:0.3f} vs target {self.fit.target_exponent:0.3f}'
        else:
            string += '; not run'
        return string + ')'

    @property
    def column(self):
        return 'quantile_error' if self['kind'] == 'quantile' else 'sup_error'

    def seeds(self):
        ''' Seeds of all tasks, keyed by (index of n, replication) and checked for collisions '''
        keys = [(i, r) for i in range(len(self['n_list'])) for r in range(self['reps'])]
        return dict(zip(keys, ssu.derive_seeds(self['master_seed'], keys)))

    def tasks(self):
        ''' Keyword arguments of every replication, in (n, replication) order '''
        seeds = self.seeds()
        return [dict(n=int(n), replication=r, seed=seeds[(i, r)])
                for i, n in enumerate(self['n_list']) for r in range(self['reps'])]

    def guard(self):
        ''' Refuse quantile studies where the truth is not bounded below around its quantile '''
        if self['kind'] == 'quantile':
            p0 = ssdn.tabulate(self['truth'], ssdn.Grid(0, 1, self['grid_npts']))
            return ssq.positivity_guard(p0, self['tau'])
        return None

    def run(self, verbose=None, serial=None, **kwargs):
        '''
        Run every replication, then fit the slope and check the assertions.

        Args:
            verbose (int): 0 silent, 1 summary, 2 one heading per sample size
            serial (bool): run in this process rather than with sc.parallelize (default ss.options.serial)
            kwargs (dict): passed to sc.parallelize
        '''
        if self.already_run:
            errormsg = 'Cannot re-run an already run study; please recreate it'
            raise RuntimeError(errormsg)
        T = sc.timer()
        verbose = sso.verbose if verbose is None else verbose
        serial = sso.serial if serial is None else serial
        self.guard()
        cfg = dict(self.pars)
        tasks = self.tasks()
        if verbose:
            print(f'Running study "{self.label}": {len(self["n_list"])} sample sizes × {self["reps"]} replications')

        if serial:
            records = []
            for t, task in enumerate(tasks):
                if verbose >= 2 and task['replication'] == 0:
                    sc.heading(f'  n = {task["n"]} ({T.toc(output=True):0.2f} s)')
                records.append(run_task(cfg, **task))
                if verbose >= 2:
                    sc.progressbar(t + 1, len(tasks), label='  Replications ', length=20)
        else:
            records = sc.parallelize(run_task, iterkwargs=tasks, kwargs=dict(cfg=cfg), ncpus=sso.n_workers, **kwargs)

        self.records = sorted(records, key=lambda r: (r.n, r.replication))
        self.fit = fit_slope(self.records, target=target_exponent(self.pars), column=self.column, log_factor_power=self['log_factor_power'])
        self.assertions = check_assertions(self)
        self.already_run = True
        if verbose:
            print(f'  Slope {self.fit.slope:0.3f} ± {self.fit.stderr:0.3f} (target {self.fit.target_exponent:0.3f})')
            print(f'Study "{self.label}" finished after {T.toc(output=True):0.1f} s')
        return self

    def _check_run(self):
        if not self.already_run:
            errormsg = 'Please run the study first'
            raise RuntimeError(errormsg)
        return

    def to_df(self):
        ''' All records as a dataframe with the standard result columns '''
        self._check_run()
        return _as_df(self.records)

    def summary(self):
        ''' Mean and standard deviation of each error at every n '''
        df = self.to_df()
        cols = ['sup_error', 'l1_error'] + (['quantile_error'] if self['kind'] == 'quantile' else [])
        return df.groupby('n')[cols].agg(['mean', 'std'])

    def plot(self, column=None, fig_args=None, do_show=False, filename=None):
        '''
        Log-log scatter of every record's error against n/log n, with the fitted line.

        Args:
            column (str): error column (default the fitted one)
            fig_args (dict): passed to pl.figure()
            do_show (bool): whether to show the figure
            filename (str): if given, save the figure there
        '''
        self._check_run()
        column = self.column if column is None else column
        fig_args = sc.mergedicts(dict(figsize=(7, 5)), fig_args)
        df = self.to_df()
        x = ssu.n_over_log_n(df.n.values.astype(float))
        fig = pl.figure(**fig_args)
        ax = fig.add_subplot(111)
        ax.plot(x, df[column].values, linestyle='none', marker='o', ms=4, alpha=0.5, gid='records', label='replications')
        fit = self.fit if column == self.fit.column else fit_slope(df, column=column, log_factor_power=self['log_factor_power'])
        nfit = np.unique(df.n.values.astype(float))
        xfit = ssu.n_over_log_n(nfit)
        yfit = fit.predict(nfit)
        ax.plot(xfit, yfit, lw=2, color='k', gid='fit', label=f'slope {fit.slope:0.3f}')
        ax.set_xscale('log')
        ax.set_yscale('log')
        ax.set_xlabel('n / log n')
        ax.set_ylabel(column.replace('_', ' '))
        ax.set_title(self.label)
        ax.legend()
        if filename is not None:
            metadata = {'Date': None} if str(filename).endswith('.svg') else None
            fig.savefig(filename, dpi=sso.dpi, metadata=metadata)
        if do_show:
            pl.show()
        return fig

    def emit(self, formats='csv', out_dir='.'):
        ''' Write the results; see ss.emit() '''
        self._check_run()
        return emit(self, formats=formats, out_dir=out_dir)


#%% Study runners

def run_rate_study(cfg, verbose=None, **kwargs):
    '''
    Run a rate study and return its records and slope fit.

    **Example**::

        records, fit = ss.run_rate_study(ss.make_config('histogram', reps=20))
    '''
    study = RateStudy(cfg).run(verbose=verbose, **kwargs)
    return study.records, study.fit


def run_quantile_rate_study(cfg, verbose=None, **kwargs):
    '''
    Run a quantile rate study: the error of the posterior median of the
    τ-quantile, fitted against the single-quantile exponent −(α+1)/(2α+1).
    Refuses truths that are not bounded below near the quantile.
    '''
    cfg = sspar.RateStudyConfig(sc.mergedicts(cfg, dict(kind='quantile'), _copy=True)).validate()
    study = RateStudy(cfg).run(verbose=verbose, **kwargs)
    return study.records, study.fit


def check_assertions(study):
    ''' Evaluate the assertions block of the configuration; returns an objdict of name:passed '''
    out = sc.objdict()
    assertions = study['assertions'] or {}
    if 'slope_range' in assertions:
        lo, hi = assertions['slope_range']
        out.slope_range = bool(lo <= study.fit.slope <= hi)
    if assertions.get('decreasing'):
        means = _as_df(study.records).groupby('n')[study.column].mean().sort_index().values
        out.decreasing = bool(np.all(np.diff(means) < 0))
    return out


#%% Output

def _gnuplot_script(study, datafile, svgfile):
    fit = study.fit
    script = f'''# Rate study "{study.label}"
set terminal svg size 700,500
set output '{svgfile}'
set logscale xy
set xlabel 'n / log n'
set ylabel '{fit.column}'
plot '{datafile}' using 2:3 with points pt 7 title 'replications', \\
     '{datafile}' using 2:4 with lines lw 2 lc rgb 'black' title 'slope {fit.slope:0.3f}'
'''
    return script


def emit(study, formats='csv', out_dir='.'):
    '''
    Write the results of a run study.

    Formats:
        csv:     one row per record, columns study_id,n,replication,sup_error,l1_error,quantile_error,seed,wall_time_ms
        json:    configuration, fit, metadata and the git-style hash of the CSV bytes
        svg:     log-log scatter of the records with the fitted line
        gnuplot: a data file plus a script producing the same plot

    Returns:
        List of written paths
    '''
    formats = sc.tolist(formats)
    for fmt in formats:
        if fmt not in ssd.formats:
            errormsg = f'Output format "{fmt}" not understood; choices are {sc.strjoin(ssd.formats)}'
            raise ssb.InvalidInputError(errormsg)
    if not study.records:
        errormsg = 'Cannot emit a study without records'
        raise ssb.InvalidInputError(errormsg)
    out_dir = sc.path(out_dir)
    out_dir.mkdir(parents=True, exist_ok=True)
    stem = sc.sanitizefilename(str(study.label))
    csv_text = study.to_df().to_csv(index=False, lineterminator='\n')
    paths = []

    if 'csv' in formats:
        path = out_dir/f'{stem}.csv'
        with open(path, 'w') as f:
            f.write(csv_text)
        paths.append(path)

    if 'json' in formats:
        path = out_dir/f'{stem}.json'
        metadata = dict(created=str(study.created), version=study.version, git_info=study.git_info)
        out = dict(config=dict(study.pars), fit=study.fit.to_dict(), assertions=dict(study.assertions),
                   csv_hash=ssu.git_hash(csv_text), metadata=metadata)
        sc.savejson(path, out, indent=2)
        paths.append(path)

    if 'svg' in formats:
        path = out_dir/f'{stem}.svg'
        fig = study.plot(filename=path)
        pl.close(fig)
        paths.append(path)

    if 'gnuplot' in formats:
        df = study.to_df()
        datapath = out_dir/f'{stem}.dat'
        data = pd.DataFrame(dict(n=df.n, n_over_log_n=ssu.n_over_log_n(df.n.values.astype(float)), error=df[study.column], fitted=study.fit.predict(df.n.values)))
        data.to_csv(datapath, sep=' ', index=False, header=False)
        scriptpath = out_dir/f'{stem}.gp'
        with open(scriptpath, 'w') as f:
            f.write(_gnuplot_script(study, f'{stem}.dat', f'{stem}_gnuplot.svg'))
        paths += [datapath, scriptpath]

    return paths


def load_records(filename):
    ''' Read records back from an emitted CSV file '''
    df = pd.read_csv(filename)
    missing = set(ssd.result_cols) - set(df.columns)
    if missing:
        errormsg = f'File {filename} is not a rate-study CSV; missing columns {sc.strjoin(missing)}'
        raise ssb.InvalidInputError(errormsg)
    records = []
    for row in df.to_dict('records'):
        q = row['quantile_error']
        study_id = row['study_id'] if isinstance(row['study_id'], str) else None
        records.append(RateRecord(n=row['n'], replication=row['replication'], sup_error=row['sup_error'], l1_error=row['l1_error'],
                                  quantile_error=None if pd.isna(q) else q, seed=row['seed'], wall_time_ms=row['wall_time_ms'],
                                  study_id=study_id))
    return records
