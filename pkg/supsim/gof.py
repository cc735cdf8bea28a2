'''
Goodness-of-fit test of a simple null p0 based on the distance between the
projection estimator and p0, with its McDiarmid calibration and Monte Carlo
error studies.
'''

import numpy as np
import pandas as pd
import sciris as sc
from . import utils as ssu
from . import base as ssb
from . import density as ssdn
from . import operators as ssop
from .settings import options as sso


__all__ = ['TestConfig', 'TestReport', 'make_test_config', 'statistic', 'mcdiarmid_bound', 'run_test',
           'expectation_cap', 'expectation_bound_check', 'error_rates', 'concentration_tail',
           'type_two_bound', 'separation_study']


class TestConfig(ssb.FlexPretty):
    '''
    Configuration of the test: reject when ‖p̂ₙ − p0‖_r > M0·eps_nr.

    Args:
        r (str): "L1" or "sup"
        operator (ApproxOperator): the operator K_J defining the estimator
        M0 (float): threshold multiplier
        eps_nr (float): the rate ε_{n,r}
        phi_l1 (float): ‖Φ‖₁ of the dominating kernel (computed from the operator if None)
    '''

    __test__ = False # Not a pytest class

    def __init__(self, r, operator, M0, eps_nr, phi_l1=None):
        self.r = ssdn._parse_which(r)
        if self.r == 'L2':
            errormsg = 'The test uses the L1 or the sup norm, not L2'
            raise ssb.InvalidInputError(errormsg)
        if phi_l1 is None:
            phi_l1 = ssop.dominating(operator, verify=False).l1_norm
        for key, val in dict(M0=M0, eps_nr=eps_nr, phi_l1=phi_l1).items():
            if not val > 0:
                errormsg = f'{key} must be positive, not {val}'
                raise ssb.InvalidInputError(errormsg)
        self.operator = operator
        self.M0 = float(M0)
        self.eps_nr = float(eps_nr)
        self.phi_l1 = float(phi_l1)
        return

    def _brief(self):
        return f'TestConfig(r={self.r}, {self.operator.brief(output=True)}, threshold={self.threshold:0.4f})'

    @property
    def J(self):
        return self.operator.j

    @property
    def threshold(self):
        return self.M0*self.eps_nr


class TestReport(sc.prettyobj):
    ''' Outcome of one test: the statistic, the threshold, the decision and the quantities behind the type-I bound '''

    __test__ = False

    def __init__(self, statistic, threshold, h_value, mcdiarmid_bound_at_threshold, gap=None):
        self.statistic = float(statistic)
        self.threshold = float(threshold)
        self.reject = bool(self.statistic > self.threshold)
        self.h_value = float(h_value)
        self.mcdiarmid_bound_at_threshold = float(mcdiarmid_bound_at_threshold)
        self.gap = gap
        return

    def to_dict(self):
        return dict(statistic=self.statistic, threshold=self.threshold, reject=self.reject, h_value=self.h_value,
                    mcdiarmid_bound_at_threshold=self.mcdiarmid_bound_at_threshold, gap=self.gap)


def _as_grid_density(p0, grid=None):
    if isinstance(p0, ssdn.GridFunction):
        return p0
    spec = ssdn.get_density(p0)
    return ssdn.tabulate(spec, grid if grid is not None else ssdn.Grid(*spec.domain))


def make_test_config(p0, kernel, J, eps_nr, r='sup', M0=None):
    '''
    Build a TestConfig; by default M0 = 2·C0, where C0·eps_nr is the measured
    bias ‖K_J(p0) − p0‖_r.

    **Example**::

        cfg = ss.make_test_config('uniform', 'haar', J=3, eps_nr=0.1)
    '''
    op = ssop.make_operator(kernel, J)
    if M0 is None:
        p0 = _as_grid_density(p0)
        C0 = ssop.bias(p0, op, r)/eps_nr
        M0 = max(2*C0, 1.0)
    return TestConfig(r, op, M0, eps_nr)


def statistic(samples, p0, cfg):
    ''' T_{n,r} = ‖p̂ₙ − p0‖_r, with p̂ₙ the estimator of cfg.operator on the grid of p0 '''
    p_hat = ssop.estimator(samples, cfg.operator, grid=p0.grid)
    return ssdn.norm(p_hat - p0, cfg.r)


def mcdiarmid_bound(n, t, phi_l1):
    '''
    McDiarmid's bound 2exp(−n t²/(2‖Φ‖₁²)) on P(|h − E h| ≥ t), from bounded
    differences c_i = 2‖Φ‖₁/n.
    '''
    if not t > 0:
        errormsg = f'The deviation t must be positive, not {t}'
        raise ssb.InvalidInputError(errormsg)
    return float(2*np.exp(-n*t**2/(2*phi_l1**2)))


def expectation_cap(p0, op, n, s=2.0):
    '''
    The cap L√(2^J/n) on E‖p̂ₙ − K_J(p0)‖₁, with
    L = √(2/(s−1)) ‖Φ²‖^{1/2}_{L¹(μ_s)} ‖p0‖^{1/2}_{L¹(μ_s)}.
    '''
    if not s > 1:
        errormsg = f'The weight exponent must exceed 1, not {s}'
        raise ssb.InvalidInputError(errormsg)
    dom = ssop.dominating(op, verify=False)
    L = np.sqrt(2/(s - 1))*np.sqrt(dom.weighted_sq_norm(s))*np.sqrt(ssdn.weighted_l1_norm(p0, s))
    return float(L*np.sqrt(2.0**op.j/n))


def run_test(samples, p0, cfg, smoothed=None):
    '''
    Run the test. The report carries h = ‖p̂ₙ − K_J(p0)‖₁ and the McDiarmid bound
    at the gap between the threshold and the bias plus the expectation cap of h
    (2 when that gap is not positive).

    Args:
        samples (SampleSet): the data
        p0 (GridFunction): the null density
        cfg (TestConfig): the test configuration
        smoothed (GridFunction): precomputed K_J(p0), to reuse across replications
    '''
    n = len(samples)
    op = cfg.operator
    p_hat = ssop.estimator(samples, op, grid=p0.grid)
    if smoothed is None:
        smoothed = ssop.smooth(p0, op)
    T = ssdn.norm(p_hat - p0, cfg.r)
    h = ssdn.norm(p_hat - smoothed, 'L1')
    bias = ssdn.norm(smoothed - p0, cfg.r)
    gap = cfg.threshold - bias - expectation_cap(p0, op, n)
    bound = mcdiarmid_bound(n, gap, cfg.phi_l1) if gap > 0 else 2.0
    return TestReport(T, cfg.threshold, h, bound, gap=float(gap))


def _sampler(p0):
    '''
    The density that draws data under the null: p0 itself when it is a catalog
    name or a DensitySpec, otherwise the catalog entry named by its label
    '''
    if not isinstance(p0, ssdn.GridFunction):
        return ssdn.get_density(p0)
    try:
        return ssdn.get_density(p0.label)
    except (KeyError, ssb.InvalidInputError):
        errormsg = f'Cannot draw data under the tabulated null "{p0.label}"; pass a catalog name or a DensitySpec instead'
        raise ssb.InvalidInputError(errormsg) from None


def _map_seeds(func, seeds, serial=None, **kwargs):
    '''
    Apply func(chunk, **kwargs) to contiguous chunks of seeds, in this process or
    with sc.parallelize; the flattened results follow the order of the seeds.
    '''
    serial = sso.serial if serial is None else serial
    n_chunks = min(len(seeds), max(1, int(sso.n_workers)))
    if serial or n_chunks < 2:
        return func(seeds, **kwargs)
    bounds = np.linspace(0, len(seeds), n_chunks + 1).astype(int)
    chunks = [seeds[a:b] for a, b in zip(bounds[:-1], bounds[1:])]
    results = sc.parallelize(func, iterarg=chunks, kwargs=kwargs, ncpus=n_chunks)
    return [value for chunk in results for value in chunk]


def _h_chunk(seeds, spec, p0, op, n, smoothed):
    ''' h = ‖p̂ₙ − K_J(p0)‖₁ for samples of size n drawn from spec '''
    out = []
    for s in seeds:
        p_hat = ssop.estimator(ssdn.sample(spec, n, s), op, grid=p0.grid)
        out.append(ssdn.norm(p_hat - smoothed, 'L1'))
    return out


def _reject_chunk(seeds, spec0, spec1, p0, cfg, n, smoothed):
    ''' Test decisions under spec0 and spec1, with the same seed for both '''
    out = []
    for s in seeds:
        reject0 = run_test(ssdn.sample(spec0, n, s), p0, cfg, smoothed=smoothed).reject
        reject1 = run_test(ssdn.sample(spec1, n, s), p0, cfg, smoothed=smoothed).reject
        out.append((reject0, reject1))
    return out


def _h_values(spec, p0, op, n, reps, seed, serial=None):
    ''' h over seeded replications under spec '''
    smoothed = ssop.smooth(p0, op)
    seeds = ssu.derive_seeds(seed, [(i,) for i in range(reps)])
    h = _map_seeds(_h_chunk, seeds, serial=serial, spec=spec, p0=p0, op=op, n=n, smoothed=smoothed)
    return np.array(h, dtype=float)


def expectation_bound_check(p0, cfg, reps=100, seed=0, n=1000, s=2.0, grid=None, serial=None):
    '''
    Compare the Monte Carlo mean of h with the cap L√(2^J/n).

    Args:
        p0 (str/DensitySpec/GridFunction): the null; a GridFunction must carry the label of a catalog density
        serial (bool): run the replications in this process (default ss.options.serial)

    Returns:
        (mean of h, cap)
    '''
    spec0 = _sampler(p0)
    p0 = _as_grid_density(p0, grid)
    h = _h_values(spec0, p0, cfg.operator, n, reps, seed, serial=serial)
    return float(h.mean()), expectation_cap(p0, cfg.operator, n, s=s)


def error_rates(p0, p1, cfg, reps=200, seed=0, n=1000, grid=None, serial=None):
    '''
    Empirical type-I (rejection under p0) and type-II (acceptance under p1)
    error rates; replication i uses the same seed under both densities.
    '''
    spec0 = _sampler(p0)
    spec1 = _sampler(p1)
    p0_grid = _as_grid_density(p0, grid)
    smoothed = ssop.smooth(p0_grid, cfg.operator)
    seeds = ssu.derive_seeds(seed, [(i,) for i in range(reps)])
    rejects = np.array(_map_seeds(_reject_chunk, seeds, serial=serial, spec0=spec0, spec1=spec1, p0=p0_grid,
                                  cfg=cfg, n=n, smoothed=smoothed), dtype=bool).reshape(reps, 2)
    return float(rejects[:, 0].mean()), float(1 - rejects[:, 1].mean())


def concentration_tail(p0, cfg, n=500, reps=2000, seed=0, t_grid=None, grid=None, serial=None):
    '''
    Empirical tail P(|h − mean h| ≥ t) against McDiarmid's bound.

    Returns:
        DataFrame with columns t, empirical, bound, mc_sigma
    '''
    t_grid = np.linspace(0.005, 0.15, 10) if t_grid is None else np.asarray(t_grid, dtype=float)
    spec0 = _sampler(p0)
    p0 = _as_grid_density(p0, grid)
    h = _h_values(spec0, p0, cfg.operator, n, reps, seed, serial=serial)
    dev = np.abs(h - h.mean())
    empirical = np.array([np.mean(dev >= t) for t in t_grid])
    df = pd.DataFrame(dict(
        t         = t_grid,
        empirical = empirical,
        bound     = [mcdiarmid_bound(n, t, cfg.phi_l1) for t in t_grid],
        mc_sigma  = np.sqrt(empirical*(1 - empirical)/reps),
    ))
    return df


def type_two_bound(n, gap, phi_l1, alpha=0.5):
    ''' The exponential type-II bound 2exp(−α²·gap²·n/‖Φ‖₁²) for a separation gap beyond the threshold '''
    if not 0 < alpha < 1:
        errormsg = f'alpha must be in (0,1), not {alpha}'
        raise ssb.InvalidInputError(errormsg)
    if gap <= 0:
        return 2.0
    return float(2*np.exp(-alpha**2*gap**2*n/phi_l1**2))


def separation_study(cfg, multipliers=(2, 4, 8), reps=200, seed=0, n=1000, target=0.05, grid=None, serial=None):
    '''
    Type-II error against the uniform null as the alternative 1 + c·sin(2πx)
    moves away, with c chosen so that the r-distance is M times the threshold.

    Returns:
        (DataFrame with columns multiplier, c, distance, type_two; smallest multiplier reaching target or nan)
    '''
    rows = []
    for M in multipliers:
        distance = M*cfg.threshold
        c = distance if cfg.r == 'sup' else distance*np.pi/2 # ‖c·sin(2πx)‖₁ = 2|c|/π
        if c > 1:
            ssu.warn(f'Multiplier {M} needs c = {c:0.3f} > 1; capping the alternative at c = 1')
            c = 1.0
        _, type_two = error_rates('uniform', f'sine:{c:.12g}', cfg, reps=reps, seed=seed, n=n, grid=grid, serial=serial)
        rows.append(dict(multiplier=M, c=c, distance=distance, type_two=type_two))
    df = pd.DataFrame(rows)
    hits = df.multiplier[df.type_two <= target]
    best = float(hits.min()) if len(hits) else np.nan
    return df, best
