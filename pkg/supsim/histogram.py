'''
The conjugate histogram posterior: a Dirichlet(1, ..., 1) prior on the weights
of a dyadic histogram on [0,1], updated with bin counts.
'''

import numpy as np
import sciris as sc
from . import utils as ssu
from . import defaults as ssd
from . import base as ssb
from . import density as ssdn
from . import operators as ssop
from .settings import options as sso


__all__ = ['DyadicPartition', 'HistogramPosterior', 'fit', 'update', 'bayes_mean', 'sample_weights',
           'sample_posterior', 'choose_J', 'sup_rate', 'posterior_supnorm_mass', 'prior_kl_ball_mass',
           'calibrate_radius', 'bayes_risk_bound']


#%% Partitions and posteriors

class DyadicPartition(ssb.FlexPretty):
    '''
    The partition of [0,1] into 2^J bins [0,2^-J], (2^-J, 2·2^-J], ..., closed on the right.

    Args:
        J (int): the resolution level
    '''

    def __init__(self, J):
        if not sc.isnumber(J) or int(J) != J or J < 0:
            errormsg = f'The partition level must be a nonnegative integer, not {J}'
            raise ssb.InvalidInputError(errormsg)
        self.J = int(J)
        return

    def _brief(self):
        return f'DyadicPartition(J={self.J}, bins={self.nbins})'

    @property
    def nbins(self):
        return 2**self.J

    @property
    def edges(self):
        return np.linspace(0, 1, self.nbins + 1)

    def index(self, x):
        ''' Zero-based bin index of each point '''
        return ssop.dyadic_index(x, self.J)

    def grid(self, grid=None):
        '''
        A working grid on [0,1] whose nodes include every bin edge; a grid that
        does not line up with the edges is replaced by the nearest finer one.
        '''
        if grid is not None and grid.lo == 0 and grid.hi == 1 and (grid.m - 1) % self.nbins == 0:
            return grid
        base = sso.npts - 1 if grid is None else grid.m - 1
        power = max(self.J, int(np.ceil(np.log2(max(base, 1)))))
        return ssdn.Grid(0, 1, 2**power + 1)


class HistogramPosterior(ssb.FlexPretty):
    '''
    Dirichlet posterior over histogram weights.

    Args:
        partition (DyadicPartition): the bins
        counts (array): number of observations in each bin
    '''

    def __init__(self, partition, counts):
        counts = np.array(counts, dtype=np.int64)
        if counts.shape != (partition.nbins,):
            errormsg = f'Expected {partition.nbins} counts for J={partition.J}, not shape {counts.shape}'
            raise ssb.InvalidInputError(errormsg)
        if np.any(counts < 0):
            errormsg = 'Bin counts must be nonnegative'
            raise ssb.InvalidInputError(errormsg)
        counts.flags.writeable = False
        self.partition = partition
        self.counts = counts
        return

    def _brief(self):
        return f'HistogramPosterior(J={self.J}, n={self.n})'

    @property
    def J(self):
        return self.partition.J

    @property
    def n(self):
        return int(self.counts.sum())

    @property
    def dirichlet(self):
        ''' Posterior Dirichlet parameters 1 + N_j '''
        return 1.0 + self.counts


def _values(samples):
    if isinstance(samples, ssdn.SampleSet):
        return np.asarray(samples.values, dtype=float)
    return np.atleast_1d(np.asarray(samples, dtype=float))


def fit(samples, J):
    '''
    Count the observations falling into each dyadic bin.

    **Example**::

        post = ss.fit(ss.sample('lipschitz-sine', 4096, seed=1), J=ss.choose_J(4096, alpha=1))
    '''
    partition = DyadicPartition(J)
    values = _values(samples)
    if values.size and (values.min() < 0 or values.max() > 1):
        errormsg = f'Histogram posteriors live on [0,1]; the sample spans [{values.min()}, {values.max()}]'
        raise ssb.DomainError(errormsg)
    counts = np.bincount(partition.index(values), minlength=partition.nbins) if values.size else np.zeros(partition.nbins)
    return HistogramPosterior(partition, counts)


def update(post, samples):
    ''' Conjugate update with additional observations '''
    extra = fit(samples, post.J)
    return HistogramPosterior(post.partition, post.counts + extra.counts)


def bayes_mean(post, grid=None):
    ''' The posterior mean histogram, with height (1+N_j)/(2^J+n)·2^J on bin j '''
    partition = post.partition
    K = partition.nbins
    heights = post.dirichlet/(K + post.n)*K
    grid = partition.grid(grid)
    return ssdn.GridFunction.piecewise_constant(grid, partition.edges, heights, is_density=True, label='bayes_mean')


def sample_weights(post, m, seed=None):
    '''
    Draw m weight vectors from the posterior (or the prior, when n = 0) as
    normalized independent Gamma(1+N_j) variables; returns an (m, 2^J) array.
    '''
    if not sc.isnumber(m) or int(m) != m or m < 1:
        errormsg = f'The number of draws must be a positive integer, not {m}'
        raise ssb.InvalidInputError(errormsg)
    rng = ssu.make_rng(seed)
    gammas = rng.standard_gamma(post.dirichlet, size=(int(m), post.partition.nbins))
    return gammas/gammas.sum(axis=1, keepdims=True)


def sample_posterior(post, m, seed=None, grid=None):
    ''' Draw m posterior histogram densities '''
    partition = post.partition
    grid = partition.grid(grid)
    weights = sample_weights(post, m, seed)
    K = partition.nbins
    return [ssdn.GridFunction.piecewise_constant(grid, partition.edges, K*w, is_density=True) for w in weights]


#%% Rates

def choose_J(n, alpha):
    '''
    Resolution with 2^J ≍ (n/log n)^{1/(2α+1)}, i.e. bins of width ε_{n,α}^{1/α}.

    **Example**::

        J = ss.choose_J(45_000, alpha=1) # n/log n ≈ 4200, so 2^J = 16
    '''
    if not sc.isnumber(n) or n < 2:
        errormsg = f'choose_J needs n ≥ 2, not {n}'
        raise ssb.InvalidInputError(errormsg)
    if not 0 < alpha <= 1:
        errormsg = f'The histogram regularity must be in (0,1], not {alpha}'
        raise ssb.InvalidInputError(errormsg)
    J = np.log2(ssu.n_over_log_n(n))/(2*alpha + 1)
    return max(0, int(np.round(J)))


def sup_rate(n, alpha, log_factor_power=0.0):
    ''' The minimax sup-norm rate ε_{n,α} = (n/log n)^{-α/(2α+1)}, optionally times log(n)^power '''
    n = np.asarray(n, dtype=float)
    rate = ssu.n_over_log_n(n)**(-alpha/(2*alpha + 1))*np.log(n)**log_factor_power
    return float(rate) if rate.ndim == 0 else rate


#%% Posterior and prior masses

def _as_unit_density(p0):
    if not isinstance(p0, ssdn.GridFunction):
        p0 = ssdn.tabulate(p0, ssdn.Grid(0, 1))
    if p0.grid.lo < 0 or p0.grid.hi > 1:
        errormsg = f'The truth must be tabulated inside [0,1], not on {p0.grid.brief(output=True)}'
        raise ssb.DomainError(errormsg)
    return p0


def _bin_ranges(p0, partition):
    ''' Smallest and largest value of p0 over each bin, one-sided limits included '''
    x, h = p0.grid.x, p0.grid.h
    idx = np.concatenate([partition.index(x), partition.index(x[:-1] + h/2), partition.index(x[1:] - h/2)])
    vals = np.concatenate([p0.values, p0.right[:-1], p0.left[1:]])
    lo = np.full(partition.nbins, np.inf)
    hi = np.full(partition.nbins, -np.inf)
    np.minimum.at(lo, idx, vals)
    np.maximum.at(hi, idx, vals)
    return lo, hi


def _sup_distances(post, p0, m, seed):
    p0 = _as_unit_density(p0)
    lo, hi = _bin_ranges(p0, post.partition)
    heights = post.partition.nbins*sample_weights(post, m, seed)
    gaps = np.maximum(heights - lo, hi - heights)
    return gaps.max(axis=1)


def posterior_supnorm_mass(post, p0, radius, m=1000, seed=None):
    '''
    Fraction of m posterior draws at sup-distance at least radius from p0.

    **Example**::

        mass = ss.posterior_supnorm_mass(post, 'lipschitz-sine', radius=3*ss.sup_rate(4096, 1), m=500, seed=2)
    '''
    if not radius > 0:
        errormsg = f'The radius must be positive, not {radius}'
        raise ssb.InvalidInputError(errormsg)
    dists = _sup_distances(post, p0, m, seed)
    return float(np.mean(dists >= radius))


def _simpson_bins(p0, partition):
    ''' Per-bin integrals of p0, p0·log p0 and p0·log² p0 by 33-node Simpson '''
    nodes = ssd.kl_simpson_nodes
    u = np.clip(np.linspace(0, 1, nodes), 1e-9, 1 - 1e-9) # Stay inside the bin so jumps at edges use the one-sided limits
    weights = np.ones(nodes)
    weights[1:-1:2] = 4
    weights[2:-1:2] = 2
    width = 1.0/partition.nbins
    weights *= width/(3*(nodes - 1))
    x = partition.edges[:-1, None] + width*u[None, :]
    vals = p0.evaluate(x.ravel()).reshape(x.shape)
    logs = np.log(vals)
    a = (vals*weights).sum(axis=1)
    b = (vals*logs*weights).sum(axis=1)
    c = (vals*logs**2*weights).sum(axis=1)
    return a, b, c


def prior_kl_ball_mass(J, p0, eps, m=1000, seed=None):
    '''
    Monte Carlo prior mass of {p: -P0 log(p/p0) ≤ ε², P0 log²(p/p0) ≤ ε²}
    under the Dirichlet(1, ..., 1) histogram prior with 2^J bins.
    '''
    if not eps > 0:
        errormsg = f'eps must be positive, not {eps}'
        raise ssb.InvalidInputError(errormsg)
    p0 = _as_unit_density(p0)
    inner = np.concatenate([p0.values, p0.right[:-1], p0.left[1:]])
    if inner.min() <= 0:
        errormsg = f'The KL neighborhood needs p0 > 0 on [0,1]; its minimum is {inner.min()}'
        raise ssb.InvalidInputError(errormsg)
    partition = DyadicPartition(J)
    a, b, c = _simpson_bins(p0, partition)
    prior = HistogramPosterior(partition, np.zeros(partition.nbins))
    weights = sample_weights(prior, m, seed)
    logp = np.log(np.maximum(partition.nbins*weights, ssd.eps))
    kl = b.sum() - logp @ a
    second = c.sum() - 2*(logp @ b) + (logp**2) @ a
    inside = (kl <= eps**2) & (second <= eps**2)
    return float(np.mean(inside))


def calibrate_radius(post, p0, eps, target=0.1, m=1000, seed=None, multipliers=None):
    '''
    Smallest multiplier M (from a grid) whose sup-ball of radius M·ε leaves
    posterior mass below target. Returns (M, mass); M is nan if none qualifies.
    '''
    multipliers = ssd.radius_grid if multipliers is None else np.asarray(multipliers, dtype=float)
    dists = _sup_distances(post, p0, m, seed)
    mass = np.nan
    for M in multipliers:
        mass = float(np.mean(dists >= M*eps))
        if mass < target:
            return float(M), mass
    ssu.warn(f'No multiplier up to {multipliers[-1]} brings the posterior sup-mass below {target}')
    return np.nan, mass


def bayes_risk_bound(post, p0, M, eps, m=1000, seed=None):
    '''
    Jensen bound on the Bayes estimator error:
    ‖p̂ₙ − p0‖_∞ ≤ Mε + max(2^J, ‖p0‖_∞)·Π(‖p − p0‖_∞ ≥ Mε | X).
    '''
    p0 = _as_unit_density(p0)
    mass = posterior_supnorm_mass(post, p0, M*eps, m=m, seed=seed)
    cap = max(post.partition.nbins, p0.sup())
    return float(M*eps + cap*mass)
