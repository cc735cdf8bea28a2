'''
Approximating sequences K_j: convolution kernels at scale 2^-j and the Haar
projection onto dyadic cells, with the estimator, the smoother K_j(p), and the
dominating kernels used in concentration constants.
'''

import functools
import numpy as np
import sciris as sc
import scipy.integrate as spi
import scipy.signal as sps
import scipy.special as spsp
from . import utils as ssu
from . import defaults as ssd
from . import base as ssb
from . import density as ssdn


__all__ = ['KernelSpec', 'ApproxOperator', 'DominatingKernel', 'make_kernel', 'bandlimited_kernel',
           'make_operator', 'dyadic_index', 'eval_Kj', 'estimator', 'convolve', 'smooth', 'bias', 'dominating']


#%% Kernels

class KernelSpec(ssb.FlexPretty):
    '''
    A convolution kernel K with unit integral.

    Mass, L1 norm and moments are computed by Simpson quadrature on a spatial
    table at construction; a declared number of vanishing moments is verified.

    Args:
        name (str): the kernel name
        evaluate (func): vectorized K(x)
        fourier (func): K̃(t), if known in closed form
        support (float): half-width of the spatial table
        table (tuple): precomputed (x, values), used instead of evaluating on a fresh table
        moments (array): ∫x^k K for k = 0, 1, ...; computed from the table if not supplied
        vanishing_up_to (int): declared number of vanishing moments (verified)
        passband (float): half-width of the frequency band on which K̃ ≡ 1, if any
        tol (float): tolerance of the mass check
    '''

    def __init__(self, name, evaluate, fourier=None, support=None, table=None, moments=None,
                 vanishing_up_to=None, passband=None, tol=None, max_moment=4):
        tol = ssd.density_tol if tol is None else tol
        self.name = name
        self.evaluate = evaluate
        self.fourier = fourier
        self.passband = passband
        self.kind = ssd.kernel_kinds.get(name, -1)
        if table is None:
            x = np.linspace(-support, support, ssd.kernel_quad_npts)
            table = (x, evaluate(x))
        x, values = table
        self.support = float(x[-1])
        self._x = x
        self._values = values

        mass = spi.simpson(values, x=x)
        if abs(mass - 1) > tol:
            errormsg = f'Kernel "{name}" integrates to {mass:.12f}, not 1'
            raise ValueError(errormsg)
        self.l1_norm = float(spi.simpson(np.abs(values), x=x))
        if self.l1_norm < 1 - tol:
            errormsg = f'Kernel "{name}" has L1 norm {self.l1_norm} < 1'
            raise ValueError(errormsg)

        if moments is None:
            moments = [spi.simpson(x**k*values, x=x) for k in range(max_moment + 1)]
        self.moments = np.array(moments, dtype=float)
        vanishing = 0
        for k in range(1, len(self.moments)):
            if abs(self.moments[k]) < 1e-8:
                vanishing = k
            else:
                break
        if vanishing_up_to is not None and vanishing_up_to > vanishing:
            errormsg = f'Kernel "{name}" was declared with {vanishing_up_to} vanishing moments, but quadrature verifies only {vanishing}'
            raise ValueError(errormsg)
        self.vanishing_up_to = vanishing if vanishing_up_to is None else int(vanishing_up_to)
        return

    def _brief(self):
        return f'KernelSpec("{self.name}", ‖K‖₁={self.l1_norm:.4f}, vanishing moments={self.vanishing_up_to})'

    def __call__(self, x):
        return self.evaluate(np.asarray(x, dtype=float))

    def abs_moment(self, power):
        ''' ∫|x|^power |K(x)| dx over the spatial table '''
        return float(spi.simpson(np.abs(self._x)**power*np.abs(self._values), x=self._x))

    def weighted_sq_norm(self, s):
        ''' ∫K(x)²(1+|x|)^s dx over the spatial table '''
        return float(spi.simpson(self._values**2*(1 + np.abs(self._x))**s, x=self._x))

    def table(self):
        ''' The spatial table (x, K(x)) '''
        return self._x, self._values


def _gaussian(x):
    return np.exp(-0.5*x**2)/ssu.SQRT2PI


def _laplace(x):
    return 0.5*np.exp(-np.abs(x))


def taper(t):
    ''' Fourier transform of the band-limited kernel: 1 on |t|≤½, cos² taper to 0 at |t|=1 '''
    a = np.abs(np.asarray(t, dtype=float))
    return np.where(a <= 0.5, 1.0, np.where(a <= 1.0, np.cos(np.pi*(a - 0.5))**2, 0.0))


def _fourier_moments(fourier, max_moment, step=0.05):
    ''' Moments ∫x^k K from central differences of K̃ at 0 (K̃ real and even) '''
    moments = [1.0]
    for k in range(1, max_moment + 1):
        if k % 2:
            moments.append(0.0)
        else:
            i = np.arange(k + 1)
            stencil = (-1.0)**i*spsp.comb(k, i)
            derivative = np.sum(stencil*fourier((k/2 - i)*step))/step**k
            moments.append(float((-1)**(k//2)*derivative)) # ∫x^k K = (-i)^k K̃^(k)(0)
    return moments


@functools.lru_cache(maxsize=None)
def bandlimited_kernel(beta=2.0):
    '''
    Kernel whose Fourier transform is supported on [-1, 1] and equals 1 on [-½, ½],
    with all moments up to ⌊beta⌋ vanishing. The spatial kernel is tabulated once
    by a Riemann sum of the inverse Fourier transform.

    **Example**::

        K = ss.bandlimited_kernel(2)
        op = ss.make_operator(K, j=4)
    '''
    if not beta > 0:
        errormsg = f'beta must be positive, not {beta}'
        raise ssb.InvalidInputError(errormsg)

    # Inverse Fourier transform: K(x) = (1/π) ∫_0^1 K̃(t) cos(tx) dt, midpoint rule on [-1,1]
    nfreq = ssd.bandlimited_nfreq
    dt = 2.0/nfreq
    t = dt*(np.arange(nfreq//2) + 0.5)
    weights = taper(t)*dt/np.pi
    x = np.arange(0, ssd.bandlimited_xmax + ssd.bandlimited_dx/2, ssd.bandlimited_dx)
    half = np.empty_like(x)
    for chunk in np.array_split(np.arange(len(x)), max(1, len(x)//500)):
        half[chunk] = np.cos(np.outer(x[chunk], t)) @ weights
    xs = np.concatenate([-x[:0:-1], x])
    values = np.concatenate([half[:0:-1], half])
    values /= spi.simpson(values, x=xs) # Unit mass on the truncated table

    table_x, table_v = xs, values
    evaluate = lambda u: np.interp(u, table_x, table_v, left=0.0, right=0.0)
    max_moment = max(4, int(np.floor(beta)) + 1)
    moments = _fourier_moments(taper, max_moment)
    return KernelSpec(f'bandlimited:{beta:g}', evaluate, fourier=taper, table=(xs, values), moments=moments,
                      vanishing_up_to=int(np.floor(beta)), passband=0.5, tol=1e-6)


@functools.lru_cache(maxsize=None)
def make_kernel(name):
    '''
    Look up a kernel by name: "gaussian", "laplace", or "bandlimited:β".
    '''
    if isinstance(name, KernelSpec):
        return name
    key = str(name).strip().lower()
    if key == 'gaussian':
        return KernelSpec('gaussian', _gaussian, fourier=lambda t: np.exp(-0.5*np.asarray(t, dtype=float)**2),
                          support=ssd.kernel_support['gaussian'])
    elif key == 'laplace':
        return KernelSpec('laplace', _laplace, fourier=lambda t: 1/(1 + np.asarray(t, dtype=float)**2),
                          support=ssd.kernel_support['laplace'])
    elif key.startswith('bandlimited'):
        beta = float(key.split(':', 1)[1]) if ':' in key else 2.0
        return bandlimited_kernel(beta)
    errormsg = f'Kernel "{name}" not recognized; choices are:\n{sc.newlinejoin(ssd.kernel_names)}'
    raise sc.KeyNotFoundError(errormsg)


#%% Operators

class ApproxOperator(ssb.FlexPretty):
    '''
    A member K_j of an admissible approximating sequence.

    Args:
        kind (str): "convolution" or "haar_projection"
        j (int): resolution level; the scale is 2^-j
        kernel (KernelSpec): the kernel (convolution kind only)
    '''

    def __init__(self, kind, j, kernel=None):
        kind = 'haar_projection' if kind in ['haar', 'haar_projection'] else kind
        if kind not in ['convolution', 'haar_projection']:
            errormsg = f'Operator kind "{kind}" not understood; choices are "convolution" or "haar_projection"'
            raise ssb.InvalidInputError(errormsg)
        if int(j) != j or j < 0:
            errormsg = f'The resolution must be a nonnegative integer, not {j}'
            raise ssb.InvalidInputError(errormsg)
        if kind == 'convolution' and not isinstance(kernel, KernelSpec):
            errormsg = 'A convolution operator needs a KernelSpec'
            raise ssb.InvalidInputError(errormsg)
        self.kind = kind
        self.j = int(j)
        self.kernel = kernel if kind == 'convolution' else None
        return

    def _brief(self):
        name = 'haar' if self.kind == 'haar_projection' else self.kernel.name
        return f'ApproxOperator({name}, j={self.j})'

    @property
    def scale(self):
        return 2.0**(-self.j)

    @property
    def is_haar(self):
        return self.kind == 'haar_projection'


def make_operator(kernel, j):
    '''
    Build K_j from a kernel name, a KernelSpec, or "haar".

    **Examples**::

        op = ss.make_operator('haar', j=4)
        op = ss.make_operator('gaussian', j=3)
    '''
    if isinstance(kernel, str) and kernel.strip().lower() == 'haar':
        return ApproxOperator('haar_projection', j)
    return ApproxOperator('convolution', j, kernel=make_kernel(kernel))


def dyadic_index(x, j):
    ''' Zero-based index of the cell ((l-1)2^-j, l2^-j] containing x, the first cell being closed at 0 '''
    x = np.asarray(x, dtype=float)
    idx = np.ceil(x*2.0**j).astype(np.int64) - 1
    return np.clip(idx, 0, 2**j - 1)


def _check_unit(values, what):
    values = np.asarray(values, dtype=float)
    if np.any(values < 0) or np.any(values > 1):
        errormsg = f'The Haar projection is defined on [0,1]; {what} has values in [{values.min()}, {values.max()}]'
        raise ssb.DomainError(errormsg)
    return


def eval_Kj(op, x, y):
    '''
    Evaluate K_j(x, y): 2^j K(2^j(x-y)) for convolution kernels, 2^j·1{same dyadic cell} for Haar.
    '''
    factor = 2.0**op.j
    if op.is_haar:
        _check_unit(x, 'x')
        _check_unit(y, 'y')
        same = dyadic_index(x, op.j) == dyadic_index(y, op.j)
        out = factor*same.astype(float)
    else:
        out = factor*op.kernel(factor*(np.asarray(x, dtype=float) - np.asarray(y, dtype=float)))
    return float(out) if np.ndim(out) == 0 else out


def _default_grid(samples, op):
    if op.is_haar:
        return ssdn.Grid(0, 1)
    if samples.source is None:
        errormsg = 'A grid is required when the sample has no catalog source'
        raise ssb.InvalidInputError(errormsg)
    return ssdn.Grid(*ssdn.get_density(samples.source).domain)


def _check_haar_grid(grid):
    if grid.lo < 0 or grid.hi > 1:
        errormsg = f'The Haar projection lives on [0,1]; cannot use {grid.brief(output=True)}'
        raise ssb.DomainError(errormsg)
    return


def estimator(samples, op, grid=None):
    '''
    The estimator n^-1 Σ K_j(·, X_i) tabulated on a grid; for the Haar projection
    this is the dyadic histogram with height 2^j N_l/n on bin l.

    **Example**::

        p_hat = ss.estimator(ss.sample('uniform', 500, seed=1), ss.make_operator('haar', 3))
    '''
    values = np.asarray(samples.values if isinstance(samples, ssdn.SampleSet) else samples, dtype=float)
    n = len(values)
    if n < 1:
        errormsg = 'The estimator needs at least one observation'
        raise ssb.InvalidInputError(errormsg)
    if grid is None:
        grid = _default_grid(samples, op)

    if op.is_haar:
        _check_unit(values, 'the sample')
        _check_haar_grid(grid)
        nbins = 2**op.j
        counts = np.bincount(dyadic_index(values, op.j), minlength=nbins)
        heights = nbins*counts/n
        edges = np.linspace(0, 1, nbins + 1)
        return ssdn.GridFunction.piecewise_constant(grid, edges, heights)

    kernel = op.kernel
    scale = op.scale
    if kernel.kind >= 0:
        out = ssu.kernel_sum(np.ascontiguousarray(grid.x), values, np.full(n, 1.0/n), np.full(n, scale), kernel.kind)
    else:
        out = np.zeros(grid.m)
        for chunk in np.array_split(values, max(1, n//256)):
            out += kernel((grid.x[:, None] - chunk[None, :])/scale).sum(axis=1)
        out /= n*scale
    return ssdn.GridFunction(grid, out)


def convolve(p, kernel, scale):
    '''
    Quadrature convolution (K_scale * p) on the grid of p, with K_scale(x) = K(x/scale)/scale;
    p is zero off the grid, so taps longer than the grid are never used.
    '''
    kernel = make_kernel(kernel)
    grid = p.grid
    half = min(int(np.ceil(kernel.support*scale/grid.h)), grid.m)
    offsets = np.arange(-half, half + 1)*grid.h
    taps = kernel(offsets/scale)*grid.h/scale
    mid = 0.5*(p.left + p.right)
    values = sps.fftconvolve(mid, taps, mode='same')
    return ssdn.GridFunction(grid, values)


def smooth(p, op):
    '''
    K_j(p): convolution at scale 2^-j, or for the Haar projection the local
    average 2^j ∫_{A_l} p on each dyadic bin.

    **Example**::

        bias = ss.norm(ss.smooth(p0, op) - p0, 'sup')
    '''
    if op.is_haar:
        grid = p.grid
        _check_haar_grid(grid)
        nbins = 2**op.j
        edges = np.linspace(0, 1, nbins + 1)
        F = np.interp(edges, grid.x, p.cumulative(), left=0.0, right=p.integral())
        heights = nbins*np.diff(F)
        return ssdn.GridFunction.piecewise_constant(grid, edges, heights)
    return convolve(p, op.kernel, op.scale)


def bias(p, op, which='sup'):
    ''' ‖K_j(p) − p‖ in the requested norm '''
    return ssdn.norm(smooth(p, op) - p, which)


#%% Dominating kernels

class DominatingKernel(ssb.FlexPretty):
    '''
    A bounded integrable Φ with |K(x,y)| ≤ Φ(|x−y|).

    Args:
        phi (func): Φ as a function of u = |x−y| ≥ 0
        l1_norm (float): ‖Φ‖₁
        name (str): description
        sq_norm (func): s -> ∫Φ²(1+|u|)^s du
    '''

    def __init__(self, phi, l1_norm, name=None, sq_norm=None):
        if l1_norm <= 0:
            errormsg = f'‖Φ‖₁ must be positive, not {l1_norm}'
            raise ssb.InvalidInputError(errormsg)
        self.phi = phi
        self.l1_norm = float(l1_norm)
        self.name = name
        self._sq_norm = sq_norm
        return

    def _brief(self):
        return f'DominatingKernel({self.name}, ‖Φ‖₁={self.l1_norm:.4f})'

    def weighted_sq_norm(self, s):
        ''' ‖Φ²‖ in L¹(μ_s) '''
        return self._sq_norm(s)

    def verify(self, K, low, high, npairs=None, seed=0):
        ''' Check |K(x,y)| ≤ Φ(|x−y|) on random pairs in [low, high]² '''
        npairs = ssd.domination_npairs if npairs is None else npairs
        rng = ssu.make_rng(seed)
        x = rng.uniform(low, high, npairs)
        y = x + rng.uniform(-2, 2, npairs) # Concentrate pairs where Φ is informative
        y = np.clip(y, low, high)
        ok = np.abs(K(x, y)) <= self.phi(np.abs(x - y)) + 1e-12
        if not ok.all():
            errormsg = f'Φ fails to dominate the kernel at {np.sum(~ok)} of {npairs} pairs'
            raise ValueError(errormsg)
        return True


def dominating(op, verify=True):
    '''
    The dominating kernel of an operator at resolution 0: Φ = |K| for convolution
    kernels, Φ = 1_[0,1] for the Haar projection.
    '''
    if op.is_haar:
        phi = lambda u: np.where((u >= 0) & (u <= 1), 1.0, 0.0)
        sq_norm = lambda s: (2**(s + 1) - 1)/(s + 1) # ∫_0^1 (1+u)^s du
        dom = DominatingKernel(phi, 1.0, name='haar', sq_norm=sq_norm)
        if verify:
            haar0 = lambda x, y: (np.ceil(x) == np.ceil(y)).astype(float) # Unit cells (k, k+1] on ℝ
            dom.verify(haar0, 0, 4)
    else:
        kernel = op.kernel
        phi = lambda u: np.abs(kernel(u))
        dom = DominatingKernel(phi, kernel.l1_norm, name=kernel.name, sq_norm=kernel.weighted_sq_norm)
        if verify:
            dom.verify(lambda x, y: kernel(x - y), -kernel.support/2, kernel.support/2)
    return dom
