'''
Characteristic functions and the L² bias of convolution smoothing in frequency:
algebraic decay estimation, the integral I_β[h̃] = ∫|1 − h̃(t)|²/|t|^{2β} dt,
the small-t moment limit of 1 − h̃, and the δ → 0 limit of ‖p − p∗h_δ‖₂².
'''

import numpy as np
import pandas as pd
import sciris as sc
import scipy.integrate as spi
import scipy.special as spsp
import scipy.stats as sps
from . import defaults as ssd
from . import base as ssb
from . import density as ssdn
from . import operators as ssop


__all__ = ['CharFunction', 'DecayEstimate', 'char_fn', 'estimate_decay', 'I_beta', 'moment_limit_check',
           'lemma1_limit_check', 'parseval_check']


#%% Characteristic functions

class CharFunction(ssb.FlexPretty):
    '''
    A characteristic function t ↦ ∫ e^{itx} p(x) dx.

    Args:
        evaluate (func): vectorized, complex-valued
        closed_form (bool): whether evaluate is exact
        source (object): the DensitySpec, KernelSpec or GridFunction it comes from
    '''

    def __init__(self, evaluate, closed_form=False, source=None):
        self.evaluate = evaluate
        self.closed_form = closed_form
        self.source = source
        return

    def __call__(self, t):
        t = np.asarray(t, dtype=float)
        return np.asarray(self.evaluate(t), dtype=complex)

    def _brief(self):
        name = getattr(self.source, 'name', None) or getattr(self.source, 'label', None)
        kind = 'closed form' if self.closed_form else 'numerical'
        return f'CharFunction({name}, {kind})'


class DecayEstimate(sc.prettyobj):
    ''' Fit of log|p̃(t)| = log B − β log|t| over a frequency range '''

    def __init__(self, beta, B, fit_range, residual):
        self.beta = float(beta)
        self.B = float(B)
        self.fit_range = tuple(fit_range)
        self.residual = float(residual)
        return


def _numerical_cf(p, chunk=64):
    ''' Cell-wise trapezoid transform of a tabulated function, using its one-sided limits '''
    x = p.grid.x
    h = p.grid.h
    lo_vals = p.right[:-1]
    hi_vals = p.left[1:]

    def evaluate(t):
        t = np.atleast_1d(t)
        out = np.empty(t.shape, dtype=complex)
        flat_t = t.ravel()
        flat = out.ravel()
        for start in range(0, flat_t.size, chunk):
            tt = flat_t[start:start+chunk, None]
            phase = np.exp(1j*tt*x[None, :])
            flat[start:start+chunk] = 0.5*h*(phase[:, :-1] @ lo_vals + phase[:, 1:] @ hi_vals)
        return flat.reshape(t.shape)

    return evaluate


def char_fn(source):
    '''
    Characteristic function of a catalog density (name or DensitySpec), a kernel
    (KernelSpec), or a tabulated density (GridFunction, by quadrature).

    **Examples**::

        cf = ss.char_fn('laplace')
        cf(1.0) # 0.5
        cf_num = ss.char_fn(ss.tabulate('laplace'))
    '''
    if isinstance(source, CharFunction):
        return source
    if isinstance(source, ssdn.GridFunction):
        return CharFunction(_numerical_cf(source), closed_form=False, source=source)
    if isinstance(source, ssop.KernelSpec):
        if source.fourier is not None:
            return CharFunction(lambda t: source.fourier(t) + 0j, closed_form=True, source=source)
        x, values = source.table()
        table = ssdn.GridFunction(ssdn.Grid(x[0], x[-1], len(x)), values)
        return CharFunction(_numerical_cf(table), closed_form=False, source=source)
    spec = ssdn.get_density(source)
    if spec.cf is not None:
        return CharFunction(spec.cf, closed_form=True, source=spec)
    return CharFunction(_numerical_cf(ssdn.tabulate(spec)), closed_form=False, source=spec)


def estimate_decay(cf, t_grid=(50, 500), npts=200):
    '''
    Least-squares fit of log|cf(t)| = log B − β log t.

    Args:
        cf (CharFunction): the characteristic function (anything char_fn accepts)
        t_grid (tuple or array): (t_lo, t_hi) for a log-spaced grid of npts points, or explicit frequencies
        npts (int): number of frequencies when t_grid is a range
    '''
    cf = char_fn(cf)
    t_grid = np.asarray(t_grid, dtype=float)
    if t_grid.size == 2:
        t = np.logspace(np.log10(t_grid[0]), np.log10(t_grid[1]), npts)
    else:
        t = t_grid
    amp = np.abs(cf(t))
    if np.any(amp <= 0) or not np.all(np.isfinite(amp)):
        errormsg = f'The characteristic function vanishes on [{t.min():g}, {t.max():g}]; cannot fit an algebraic decay'
        raise ssb.FitError(errormsg)
    slope, intercept = np.polyfit(np.log(t), np.log(amp), 1)
    fitted = intercept + slope*np.log(t)
    residual = np.sqrt(np.mean((np.log(amp) - fitted)**2))
    if not -slope > 0:
        errormsg = f'The characteristic function does not decay on [{t.min():g}, {t.max():g}] (fitted slope {slope:0.3f})'
        raise ssb.FitError(errormsg)
    return DecayEstimate(-slope, np.exp(intercept), (t.min(), t.max()), residual)


#%% Frequency integrals

def _log_simpson(func, t_lo, t_hi, nodes_per_decade=None):
    ''' ∫_{t_lo}^{t_hi} func(t) dt by Simpson's rule in u = log t '''
    nodes_per_decade = ssd.nodes_per_decade if nodes_per_decade is None else nodes_per_decade
    decades = np.log10(t_hi/t_lo)
    nint = max(2, 2*int(np.ceil(decades*nodes_per_decade/2)))
    u = np.linspace(np.log(t_lo), np.log(t_hi), nint + 1)
    t = np.exp(u)
    return float(spi.simpson(func(t)*t, x=u))


def _moments(source, r):
    ''' Moments ∫x^k h for k = 1..r '''
    if isinstance(source, CharFunction):
        source = source.source
    if isinstance(source, ssop.KernelSpec):
        if len(source.moments) <= r:
            x, values = source.table()
            return np.array([spi.simpson(x**k*values, x=x) for k in range(1, r + 1)])
        return np.array(source.moments[1:r+1])
    if isinstance(source, ssdn.GridFunction):
        x = source.grid.x
        return np.array([source.integral(weight=x**k) for k in range(1, r + 1)])
    spec = ssdn.get_density(source)
    lo, hi = spec.domain
    return np.array([spi.quad(lambda x: x**k*spec(x), lo, hi, points=spec.breaks or None, limit=200)[0] for k in range(1, r + 1)])


def _first_moment_order(source, r_max=4):
    moments = _moments(source, r_max)
    for k, m in enumerate(moments, start=1):
        if abs(m) > 1e-8:
            return k, m
    return r_max + 1, 0.0


def I_beta(cf_h, beta, full_output=False, t_max=None, t_small=None):
    '''
    I_β[h̃] = ∫|1 − h̃(t)|²/|t|^{2β} dt.

    Near 0 the series 1 − h̃(t) ≈ −(i^r/r!) m_r t^r is integrated exactly, where
    m_r is the first nonvanishing moment; the body is integrated with log-spaced
    Simpson nodes split at |t| = 1; beyond t_max h̃ is frozen at h̃(t_max).

    Args:
        cf_h (CharFunction): characteristic function of h (or a KernelSpec / catalog name)
        beta (float): the exponent; needs ½ < β < r + ½
        full_output (bool): also return the pieces and the error budget

    **Example**::

        value = ss.I_beta(ss.make_kernel('gaussian'), 2)
    '''
    cf = char_fn(cf_h)
    t_max = ssd.t_max if t_max is None else t_max
    t_small = ssd.t_small if t_small is None else t_small
    if not beta > 0.5:
        errormsg = f'I_beta diverges at infinity for beta ≤ ½ (got {beta})'
        raise ssb.DivergenceError(errormsg)
    r, m_r = _first_moment_order(cf.source)
    if beta >= r + 0.5:
        errormsg = f'I_beta diverges at 0 for beta ≥ {r + 0.5:g}: the first nonvanishing moment of h has order {r}'
        raise ssb.DivergenceError(errormsg)

    def integrand(t):
        return np.abs(1 - cf(t))**2/t**(2*beta)

    power = 2*r - 2*beta + 1
    coef = (abs(m_r)/spsp.factorial(r))**2
    series = coef*t_small**power/power
    below_one = _log_simpson(integrand, t_small, 1.0)
    above_one = _log_simpson(integrand, 1.0, t_max)
    tail = abs(1 - cf(t_max))**2*t_max**(1 - 2*beta)/(2*beta - 1)
    value = 2*(series + below_one + above_one + tail)
    if not full_output:
        return float(value)

    coarse = _log_simpson(integrand, t_small, 1.0, ssd.nodes_per_decade//2) + _log_simpson(integrand, 1.0, t_max, ssd.nodes_per_decade//2)
    budget = sc.objdict(
        series      = 2*series,
        below_one   = 2*below_one,
        above_one   = 2*above_one,
        tail        = 2*tail,
        tail_bound  = 2*4*t_max**(1 - 2*beta)/(2*beta - 1), # |1 − h̃|² ≤ 4
        quad_error  = 2*abs(below_one + above_one - coarse)/15, # Richardson estimate for Simpson
        series_error = 2*series*t_small**2, # Relative size of the next term in t²
    )
    return float(value), budget


def moment_limit_check(h, r=2, ts=None):
    '''
    Extrapolate [1 − h̃(t)]/t^r as t → 0 and compare with −Re(i^r)/r!·∫x^r h.

    Returns:
        (limit, target)
    '''
    cf = char_fn(h)
    ts = ssd.moment_ts if ts is None else np.asarray(ts, dtype=float)
    moments = _moments(cf.source, r)
    lower = moments[:r-1]
    if np.any(np.abs(lower) > 1e-8):
        errormsg = f'Moments 1..{r-1} of h must vanish for the order-{r} limit; they are {lower}'
        raise ssb.PreconditionError(errormsg)
    g = np.real((1 - cf(ts))/ts**r)
    ratio = ts[0]/ts[1]
    factor = ratio**2 - 1 # The error of g is O(t²) for symmetric h
    extrapolated = g[1:] + (g[1:] - g[:-1])/factor
    limit = float(extrapolated[-1])
    target = float(-np.real(1j**r)/spsp.factorial(r)*moments[r-1])
    return limit, target


def _l2_bias_sq(cf_p, cf_h, delta, B, beta):
    ''' (1/2π)∫|p̃(t)|²|1 − h̃(δt)|² dt over all t, with a power-law tail for |p̃| '''
    t_lo = 1e-4
    t_hi = 1e4/delta
    body = _log_simpson(lambda t: np.abs(cf_p(t))**2*np.abs(1 - cf_h(delta*t))**2, t_lo, t_hi)
    tail = B**2*t_hi**(1 - 2*beta)/(2*beta - 1)*np.abs(1 - cf_h(delta*t_hi))**2
    return float((body + tail)/np.pi) # Even integrand: (1/2π)·2∫_0^∞


def lemma1_limit_check(p, h, beta, deltas=None, decay_range=(50, 500)):
    '''
    Compare δ^{-(2β−1)}‖p − p∗h_δ‖₂² with its limit (2π)^{-1} B_p² I_β[h̃].

    Returns:
        DataFrame with columns delta, l2sq, ratio; df.attrs holds B, I_beta, the limit and the fitted log-log slope

    **Example**::

        table = ss.lemma1_limit_check('laplace', 'gaussian', beta=2, deltas=[1e-2, 1e-3])
    '''
    cf_p = char_fn(p)
    cf_h = char_fn(ssop.make_kernel(h) if isinstance(h, str) else h)
    deltas = np.array([1e-1, 10**-1.5, 1e-2, 10**-2.5] if deltas is None else deltas, dtype=float)
    decay = estimate_decay(cf_p, decay_range)
    if abs(decay.beta - beta) > 0.05:
        errormsg = f'The characteristic function of p decays with degree {decay.beta:0.3f}, not {beta}'
        raise ssb.PreconditionError(errormsg)
    far = ssd.decay_far
    B = float(np.abs(cf_p(far))*far**beta)
    ib = I_beta(cf_h, beta)
    limit = B**2*ib/(2*np.pi)
    l2sq = np.array([_l2_bias_sq(cf_p, cf_h, d, B, beta) for d in deltas])
    df = pd.DataFrame(dict(delta=deltas, l2sq=l2sq, ratio=deltas**(-(2*beta - 1))*l2sq/limit))
    df.attrs.update(B=B, I_beta=ib, limit=limit)
    if len(deltas) > 1:
        df.attrs['slope'] = float(sps.linregress(np.log(deltas), np.log(l2sq)).slope)
    return df


def parseval_check(p, h, delta, grid=None):
    '''
    ‖p − p∗h_δ‖₂² computed in space (quadrature convolution on a grid) and in
    frequency. Returns (space, frequency).
    '''
    spec = ssdn.get_density(p)
    kernel = ssop.make_kernel(h)
    p_grid = ssdn.tabulate(spec, grid)
    smoothed = ssop.convolve(p_grid, kernel, delta)
    space = ssdn.norm(p_grid - smoothed, 'L2')**2
    cf_p = char_fn(spec)
    cf_h = char_fn(kernel)
    integrand = lambda t: np.abs(cf_p(t))**2*np.abs(1 - cf_h(delta*t))**2
    t_hi = 50.0/delta + 1e3
    frequency = _log_simpson(integrand, 1e-4, t_hi)/np.pi
    return float(space), float(frequency)
