'''
Grids, tabulated functions, norms and the catalog of ground-truth densities.

Everything in SupSim is tabulated on a uniform Grid. A GridFunction stores its
values at the grid nodes together with the one-sided limits at each node, so
that piecewise-constant functions whose jumps sit on nodes (histograms, Haar
projections) are integrated and maximized exactly.
'''

import functools
import numpy as np
import sciris as sc
import scipy.integrate as spi
from . import utils as ssu
from . import defaults as ssd
from . import base as ssb
from .settings import options as sso


__all__ = ['Grid', 'GridFunction', 'DensitySpec', 'SampleSet', 'norm', 'lp_norm', 'weighted_l1_norm',
           'interpolation_check', 'get_density', 'catalog', 'tabulate', 'sample']


#%% Grids and tabulated functions

class Grid(ssb.FlexPretty):
    '''
    A uniform grid of m points on [lo, hi].

    Args:
        lo (float): left endpoint
        hi (float): right endpoint
        m (int): number of points (default ss.options.npts)

    **Example**::

        grid = ss.Grid(0, 1, 2**10+1)
    '''

    def __init__(self, lo=0.0, hi=1.0, m=None):
        if m is None:
            m = sso.npts
        lo, hi, m = float(lo), float(hi), int(m)
        if not (np.isfinite(lo) and np.isfinite(hi) and lo < hi):
            errormsg = f'Grid endpoints must be finite with lo < hi; got [{lo}, {hi}]'
            raise ssb.InvalidInputError(errormsg)
        if m < 2:
            errormsg = f'A grid needs at least 2 points, not {m}'
            raise ssb.InvalidInputError(errormsg)
        self.lo = lo
        self.hi = hi
        self.m = m
        self.h = (hi - lo)/(m - 1)
        x = np.linspace(lo, hi, m)
        x.flags.writeable = False
        self.x = x
        return

    def _brief(self):
        return f'Grid([{self.lo:g}, {self.hi:g}], m={self.m})'

    def __eq__(self, other):
        return isinstance(other, Grid) and (self.lo, self.hi, self.m) == (other.lo, other.hi, other.m)

    def __hash__(self):
        return hash((self.lo, self.hi, self.m))

    def __len__(self):
        return self.m

    @property
    def length(self):
        return self.hi - self.lo

    def refine(self):
        ''' The grid with every cell halved '''
        return Grid(self.lo, self.hi, 2*self.m - 1)


def _frozen(arr):
    arr = np.array(arr, dtype=float)
    arr.flags.writeable = False
    return arr


class GridFunction(ssb.FlexPretty):
    '''
    A real function tabulated on a Grid.

    Args:
        grid (Grid): the grid
        values (array): values at the nodes
        left (array): limits from the left at the nodes (default: the values)
        right (array): limits from the right at the nodes (default: the values)
        is_density (bool): if True, check nonnegativity and unit mass
        label (str): optional description

    **Example**::

        f = ss.GridFunction(grid, np.sin(grid.x))
        ss.norm(f, 'sup')
    '''

    def __init__(self, grid, values, left=None, right=None, is_density=False, label=None):
        values = np.array(values, dtype=float)
        if values.shape != (grid.m,):
            errormsg = f'Expected {grid.m} values for {grid.brief(output=True)}, not shape {values.shape}'
            raise ssb.InvalidInputError(errormsg)
        left  = values if left  is None else np.array(left,  dtype=float)
        right = values if right is None else np.array(right, dtype=float)
        for arr in [values, left, right]:
            if not np.all(np.isfinite(arr)):
                errormsg = 'Grid function values must be finite'
                raise ssb.InvalidInputError(errormsg)
        self.grid   = grid
        self.values = _frozen(values)
        self.left   = _frozen(left)
        self.right  = _frozen(right)
        self.is_density = bool(is_density)
        self.label  = label
        if is_density:
            self.check_density()
        return

    def _brief(self):
        kind = 'density' if self.is_density else 'function'
        label = f'"{self.label}" ' if self.label else ''
        return f'GridFunction({label}{kind} on {self.grid.brief(output=True)})'

    def check_density(self, tol=None):
        ''' Raise if the function is not a probability density up to tol '''
        tol = ssd.density_tol if tol is None else tol
        lowest = min(self.values.min(), self.left.min(), self.right.min())
        if lowest < -ssd.eps:
            errormsg = f'A density must be nonnegative; minimum value is {lowest}'
            raise ssb.InvalidInputError(errormsg)
        mass = self.integral()
        if abs(mass - 1) > tol:
            errormsg = f'A density must integrate to 1; quadrature gives {mass:.12f}'
            raise ssb.InvalidInputError(errormsg)
        return

    @classmethod
    def piecewise_constant(cls, grid, edges, heights, **kwargs):
        '''
        Tabulate a function that equals heights[k] on the bin (edges[k], edges[k+1]],
        the first bin being closed on the left, and zero outside the bins.
        '''
        edges = np.asarray(edges, dtype=float)
        heights = np.asarray(heights, dtype=float)
        if len(edges) != len(heights) + 1:
            errormsg = f'Need one more edge than heights; got {len(edges)} edges and {len(heights)} heights'
            raise ssb.InvalidInputError(errormsg)

        def lookup(idx):
            valid = (idx >= 0) & (idx < len(heights))
            return np.where(valid, heights[np.clip(idx, 0, len(heights)-1)], 0.0)

        x = grid.x
        left_idx = np.searchsorted(edges, x, side='left') - 1
        right_idx = np.searchsorted(edges, x, side='right') - 1
        node_idx = np.where(x == edges[0], 0, left_idx)
        return cls(grid, lookup(node_idx), left=lookup(left_idx), right=lookup(right_idx), **kwargs)

    def _check_grid(self, other):
        if self.grid != other.grid:
            errormsg = f'Cannot combine functions on different grids: {self.grid.brief(output=True)} vs {other.grid.brief(output=True)}'
            raise ssb.DomainError(errormsg)
        return

    def _combine(self, other, op):
        if isinstance(other, GridFunction):
            self._check_grid(other)
            return GridFunction(self.grid, op(self.values, other.values), left=op(self.left, other.left), right=op(self.right, other.right))
        elif sc.isnumber(other):
            return GridFunction(self.grid, op(self.values, other), left=op(self.left, other), right=op(self.right, other))
        return NotImplemented

    def __add__(self, other):
        return self._combine(other, np.add)

    def __radd__(self, other):
        return self._combine(other, np.add)

    def __sub__(self, other):
        return self._combine(other, np.subtract)

    def __rsub__(self, other):
        return self._combine(other, lambda a, b: np.subtract(b, a))

    def __mul__(self, other):
        if isinstance(other, GridFunction): # Pointwise products are only needed with scalars
            return NotImplemented
        return self._combine(other, np.multiply)

    def __rmul__(self, other):
        return self.__mul__(other)

    def __neg__(self):
        return self*(-1.0)

    def map(self, func):
        ''' Apply an elementwise function to the values and both limits '''
        return GridFunction(self.grid, func(self.values), left=func(self.left), right=func(self.right))

    def integral(self, weight=None):
        ''' Trapezoid integral using the one-sided limits on each cell '''
        lo_vals = self.right[:-1]
        hi_vals = self.left[1:]
        if weight is not None:
            weight = np.asarray(weight, dtype=float)
            lo_vals = lo_vals*weight[:-1]
            hi_vals = hi_vals*weight[1:]
        return float(0.5*self.grid.h*np.sum(lo_vals + hi_vals))

    def cumulative(self):
        ''' Cumulative integral from lo at every node '''
        cells = 0.5*self.grid.h*(self.right[:-1] + self.left[1:])
        return np.concatenate([[0.0], np.cumsum(cells)])

    def evaluate(self, x):
        '''
        Evaluate by linear interpolation between the right limit at the left node
        and the left limit at the right node of each cell (exact for piecewise
        constant and piecewise linear functions); zero outside the grid.
        '''
        x = np.asarray(x, dtype=float)
        grid = self.grid
        pos = (x - grid.lo)/grid.h
        i = np.clip(np.floor(pos).astype(int), 0, grid.m - 2)
        frac = pos - i
        out = self.right[i] + frac*(self.left[i+1] - self.right[i])
        on_node = np.isclose(frac, 0, atol=1e-12) | np.isclose(frac, 1, atol=1e-12)
        node = np.clip(np.rint(pos).astype(int), 0, grid.m - 1)
        out = np.where(on_node, self.values[node], out)
        outside = (x < grid.lo - 1e-12*grid.h) | (x > grid.hi + 1e-12*grid.h)
        return np.where(outside, 0.0, out)

    def sup(self):
        return float(max(np.abs(self.values).max(), np.abs(self.left).max(), np.abs(self.right).max()))


#%% Norms

def _parse_which(which):
    key = str(which).lower().replace('_', '')
    mapping = {'l1':'L1', '1':'L1', 'l2':'L2', '2':'L2', 'sup':'sup', 'inf':'sup', 'linf':'sup', 'max':'sup'}
    if key not in mapping:
        errormsg = f'Norm "{which}" not understood; choices are "L1", "L2", or "sup"'
        raise ssb.InvalidInputError(errormsg)
    return mapping[key]


def norm(f, which='sup'):
    '''
    L1, L2 or sup norm of a GridFunction. L1 and L2 use the composite trapezoid;
    the sup norm also uses the one-sided limits, so jump extrema are not missed.

    **Examples**::

        ss.norm(p_hat - p0, 'sup')
        ss.norm(p_hat - p0, 'L1')
    '''
    if f.values.size == 0:
        raise ssb.InvalidInputError('Cannot take the norm of an empty grid function')
    which = _parse_which(which)
    if which == 'sup':
        return f.sup()
    elif which == 'L1':
        return f.map(np.abs).integral()
    else:
        return float(np.sqrt(f.map(np.square).integral()))


def lp_norm(f, s):
    ''' L^s norm for s ≥ 1 (s = np.inf gives the sup norm) '''
    if s == np.inf:
        return norm(f, 'sup')
    if not s >= 1:
        errormsg = f'The L^s norm needs s ≥ 1, not {s}'
        raise ssb.InvalidInputError(errormsg)
    integral = f.map(lambda v: np.abs(v)**s).integral()
    return float(integral**(1.0/s))


def weighted_l1_norm(f, s):
    ''' ∫|f(x)|(1+|x|)^s dx by trapezoid '''
    if s < 0:
        errormsg = f'The weight exponent must be nonnegative, not {s}'
        raise ssb.InvalidInputError(errormsg)
    weight = (1 + np.abs(f.grid.x))**s
    return f.map(np.abs).integral(weight=weight)


def interpolation_check(f, g, s):
    '''
    Check ‖f−g‖_s ≤ max{‖f−g‖_1, ‖f−g‖_∞} for 1 < s < ∞.

    **Example**::

        assert ss.interpolation_check(p_hat, p0, s=2)
    '''
    if not (1 < s < np.inf):
        errormsg = f'The interpolation inequality is checked for 1 < s < ∞, not s = {s}'
        raise ssb.InvalidInputError(errormsg)
    diff = f - g
    lhs = lp_norm(diff, s)
    rhs = max(norm(diff, 'L1'), norm(diff, 'sup'))
    return bool(lhs <= rhs + 1e-9)


#%% Catalog of ground-truth densities

class DensitySpec(ssb.FlexPretty):
    '''
    A ground-truth density with known regularity.

    Args:
        name (str): catalog name
        alpha (float): Hölder exponent of the construction
        pdf (func): vectorized density
        domain (tuple): working domain (lo, hi); densities on ℝ are truncated to it when tabulated
        params (list): the parameters of the construction
        support (str): "interval" if the density vanishes outside the domain, "real" otherwise
        breaks (list): points where the density is not smooth (passed to the quadrature check)
        cf (func): closed-form characteristic function, if known
        verify (bool): check that the density integrates to 1 within 1e-8
    '''

    def __init__(self, name, alpha, pdf, domain, params=None, support='interval', breaks=None, cf=None, verify=True):
        if not alpha > 0:
            errormsg = f'The regularity exponent must be positive, not {alpha}'
            raise ssb.InvalidInputError(errormsg)
        if support not in ['interval', 'real']:
            errormsg = f'Support "{support}" not understood; choices are "interval" or "real"'
            raise ssb.InvalidInputError(errormsg)
        self.name    = name
        self.alpha   = float(alpha)
        self.pdf     = pdf
        self.domain  = (float(domain[0]), float(domain[1]))
        self.params  = np.array(sc.toarray(params) if params is not None else [], dtype=float)
        self.support = support
        self.breaks  = sorted(sc.tolist(breaks)) if breaks is not None else []
        self.cf      = cf
        self.mass    = self.total_mass() if verify else None
        if verify and abs(self.mass - 1) > ssd.density_tol:
            errormsg = f'Catalog density "{name}" integrates to {self.mass:.12f}, not 1'
            raise ValueError(errormsg)
        lo, hi = self.domain
        self.domain_mass = self._quad(lo, hi)
        self.truncation_mass = max(0.0, 1 - self.domain_mass)
        x = np.linspace(lo, hi, ssd.cdf_npts)
        self._table_x = _frozen(x)
        self._table_cdf = _frozen(ssu.cdf_table(x, self.pdf(x)))
        return

    def _brief(self):
        return f'DensitySpec("{self.name}", alpha={self.alpha:g}, domain=[{self.domain[0]:g}, {self.domain[1]:g}])'

    def __call__(self, x):
        return self.pdf(np.asarray(x, dtype=float))

    def _quad(self, a, b):
        points = [p for p in self.breaks if a < p < b]
        edges = [a] + points + [b]
        total = 0.0
        for lo, hi in zip(edges[:-1], edges[1:]):
            total += spi.quad(self.pdf, lo, hi, epsabs=1e-13, epsrel=1e-12, limit=200)[0]
        return total

    def total_mass(self):
        ''' Integral of the density over its support by adaptive quadrature '''
        if self.support == 'interval':
            return self._quad(*self.domain)
        lo = min(self.breaks + [0.0])
        hi = max(self.breaks + [0.0])
        middle = self._quad(lo, hi) if hi > lo else 0.0
        left = spi.quad(self.pdf, -np.inf, lo, epsabs=1e-13, limit=200)[0]
        right = spi.quad(self.pdf, hi, np.inf, epsabs=1e-13, limit=200)[0]
        return left + middle + right

    def mean(self):
        ''' Mean of the density restricted to the working domain '''
        lo, hi = self.domain
        first = spi.quad(lambda x: x*self.pdf(x), lo, hi, points=self.breaks or None, limit=200)[0]
        return first/self.domain_mass


def _laplace(x):
    return 0.5*np.exp(-np.abs(x))


def _make_sine(name, c):
    if abs(c) > 1:
        errormsg = f'The sine perturbation needs |c| ≤ 1 to stay a density, not {c}'
        raise ssb.InvalidInputError(errormsg)
    def pdf(x):
        inside = (x >= 0) & (x <= 1)
        return np.where(inside, 1 + c*np.sin(2*np.pi*x), 0.0)
    return DensitySpec(name, alpha=1.0, pdf=pdf, domain=(0, 1), params=[c])


def _make_tilted(name, c):
    if abs(c) >= 2:
        errormsg = f'The tilted density needs |c| < 2 to stay positive, not {c}'
        raise ssb.InvalidInputError(errormsg)
    def pdf(x):
        inside = (x >= 0) & (x <= 1)
        return np.where(inside, 1 + c*(x - 0.5), 0.0)
    return DensitySpec(name, alpha=1.0, pdf=pdf, domain=(0, 1), params=[c])


def _make_holder(name, alpha):
    if not 0 < alpha < 1:
        errormsg = f'The rough Hölder density needs alpha in (0,1), not {alpha}'
        raise ssb.InvalidInputError(errormsg)
    kappa = 0.5**alpha/(alpha + 1) # ∫|x-½|^α over [0,1], so the normalizing constant is 1
    def pdf(x):
        inside = (x >= 0) & (x <= 1)
        return np.where(inside, 1 + np.abs(x - 0.5)**alpha - kappa, 0.0)
    return DensitySpec(name, alpha=alpha, pdf=pdf, domain=(0, 1), params=[alpha, kappa], breaks=[0.5])


def _make_fixed(name):
    pad = ssd.tail_pad
    if name == 'uniform':
        def cf(t):
            t = np.asarray(t, dtype=complex)
            small = np.abs(t) < 1e-8
            safe = np.where(small, 1.0, t)
            return np.where(small, 1.0 + 0.5j*t, (np.exp(1j*safe) - 1)/(1j*safe))
        pdf = lambda x: np.where((x >= 0) & (x <= 1), 1.0, 0.0)
        return DensitySpec(name, alpha=1.0, pdf=pdf, domain=(0, 1), cf=cf)
    elif name == 'laplace':
        cf = lambda t: 1/(1 + np.asarray(t, dtype=float)**2) + 0j
        return DensitySpec(name, alpha=1.0, pdf=_laplace, domain=(-25, 25), support='real', breaks=[0.0], cf=cf)
    elif name == 'laplace-2atom':
        a = 1.0
        pdf = lambda x: 0.5*_laplace(x - a) + 0.5*_laplace(x + a)
        cf = lambda t: np.cos(a*np.asarray(t, dtype=float))/(1 + np.asarray(t, dtype=float)**2) + 0j
        return DensitySpec(name, alpha=1.0, pdf=pdf, domain=(-a-pad, a+pad), params=[-a, a, 0.5, 0.5], support='real', breaks=[-a, a], cf=cf)
    elif name == 'laplace-conv':
        pdf = lambda x: 0.25*(1 + np.abs(x))*np.exp(-np.abs(x))
        cf = lambda t: 1/(1 + np.asarray(t, dtype=float)**2)**2 + 0j
        return DensitySpec(name, alpha=2.0, pdf=pdf, domain=(-40, 40), support='real', breaks=[0.0], cf=cf)
    elif name == 'gaussian':
        pdf = lambda x: np.exp(-0.5*x**2)/ssu.SQRT2PI
        cf = lambda t: np.exp(-0.5*np.asarray(t, dtype=float)**2) + 0j
        return DensitySpec(name, alpha=2.0, pdf=pdf, domain=(-10, 10), support='real', cf=cf)
    return None


fixed_names = ['uniform', 'lipschitz-sine', 'laplace', 'laplace-2atom', 'laplace-conv', 'gaussian']
family_names = ['sine:<c>', 'tilted:<c>', 'holder-<alpha>']


def catalog():
    ''' List the catalog names (families take a numeric parameter) '''
    return fixed_names + family_names


@functools.lru_cache(maxsize=None)
def get_density(name):
    '''
    Look up a catalog density by name.

    **Examples**::

        p0 = ss.get_density('lipschitz-sine') # 1 + 0.5 sin(2πx) on [0,1]
        p0 = ss.get_density('holder-0.5')
        p0 = ss.get_density('laplace-2atom') # Laplace mixture with atoms at ±1
    '''
    if isinstance(name, DensitySpec):
        return name
    key = str(name).strip().lower()
    try:
        if key == 'lipschitz-sine':
            return _make_sine(key, 0.5)
        elif key.startswith('sine:'):
            return _make_sine(key, float(key.split(':', 1)[1]))
        elif key.startswith('tilted:'):
            return _make_tilted(key, float(key.split(':', 1)[1]))
        elif key.startswith('holder-'):
            return _make_holder(key, float(key.split('-', 1)[1]))
    except ValueError as E:
        if isinstance(E, ssb.InvalidInputError):
            raise
        errormsg = f'Could not parse the parameter of catalog density "{name}"'
        raise ssb.InvalidInputError(errormsg) from E
    spec = _make_fixed(key)
    if spec is None:
        errormsg = f'Density "{name}" is not in the catalog; choices are:\n{sc.newlinejoin(catalog())}'
        raise sc.KeyNotFoundError(errormsg)
    return spec


def tabulate(spec, grid=None, renormalize=True):
    '''
    Tabulate a catalog density on a grid as a GridFunction flagged as a density.
    Densities on ℝ are truncated to the grid; with renormalize=True the
    tabulation is rescaled to unit quadrature mass.
    '''
    spec = get_density(spec)
    if grid is None:
        grid = Grid(*spec.domain)
    x = grid.x
    values = spec(x)
    left, right = values, values
    if spec.support == 'interval':
        lo, hi = spec.domain
        left = np.where((x > lo) & (x <= hi), values, 0.0)
        right = np.where((x >= lo) & (x < hi), values, 0.0)
    raw = GridFunction(grid, values, left=left, right=right)
    if renormalize:
        mass = raw.integral()
        raw = raw*(1.0/mass)
    return GridFunction(grid, raw.values, left=raw.left, right=raw.right, is_density=renormalize, label=spec.name)


#%% Samples

class SampleSet(ssb.FlexPretty):
    '''
    An i.i.d. sample with the seed and source that produced it.

    Args:
        values (array): the draws
        seed (int): seed of the generator that produced them
        source (str): name of the catalog density
    '''

    def __init__(self, values, seed=None, source=None):
        self.values = _frozen(np.atleast_1d(values))
        self.seed = seed
        self.source = source
        return

    def __len__(self):
        return len(self.values)

    @property
    def n(self):
        return len(self.values)

    def _brief(self):
        return f'SampleSet(n={self.n}, source="{self.source}", seed={self.seed})'

    def concat(self, other):
        ''' Pool two samples (the seed of the result is undefined) '''
        return SampleSet(np.concatenate([self.values, other.values]), seed=None, source=self.source)


def sample(spec, n, seed=None):
    '''
    Draw n i.i.d. values from a catalog density by inverse-CDF sampling on a
    2^16-point table; identical (spec, n, seed) triples give identical samples.

    **Example**::

        samples = ss.sample('lipschitz-sine', n=4096, seed=1)
    '''
    spec = get_density(spec)
    if not sc.isnumber(n) or int(n) != n or n < 1:
        errormsg = f'The sample size must be a positive integer, not {n}'
        raise ssb.InvalidInputError(errormsg)
    if seed is None:
        seed = int(np.random.SeedSequence().generate_state(1, dtype=np.uint64)[0] >> np.uint64(1))
    rng = ssu.make_rng(seed)
    values = ssu.inverse_cdf(spec._table_x, spec._table_cdf, int(n), rng)
    return SampleSet(values, seed=seed, source=spec.name)
