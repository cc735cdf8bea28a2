'''
Cumulative distribution functions and quantiles of tabulated densities, the
quantile inversion identity, the three-term smoothing decomposition of
F(q0) − F0(q0), and quantiles of posterior draws.
'''

import numpy as np
import sciris as sc
import scipy.integrate as spi
import scipy.optimize as spo
import scipy.special as spsp
from . import utils as ssu
from . import defaults as ssd
from . import base as ssb
from . import density as ssdn
from . import operators as ssop


__all__ = ['CdfFunction', 'QuantileReport', 'cdf', 'quantile', 'inversion_identity_check', 'bias_decomposition',
           'posterior_quantiles', 'histogram_quantiles', 'positivity_guard', 'quantile_report',
           'sup_ball_inclusion_check', 'quantile_rate']


class CdfFunction(ssb.FlexPretty):
    '''
    The CDF of a tabulated density, F(x) = ∫_{lo}^x p, stored at the grid nodes.

    Args:
        density (GridFunction): the density p
    '''

    def __init__(self, density):
        self.density = density
        self.grid = density.grid
        values = np.clip(density.cumulative(), 0, 1)
        values.flags.writeable = False
        self.values = values
        return

    def _brief(self):
        return f'CdfFunction(on {self.grid.brief(output=True)}, F(hi)={self.values[-1]:0.10f})'

    def __call__(self, x):
        return self.evaluate(x)

    def evaluate(self, x):
        '''
        Exact integral of the linear interpolant of p within each cell (0 left of
        the grid, F(hi) right of it).
        '''
        x = np.asarray(x, dtype=float)
        grid = self.grid
        p = self.density
        pos = np.clip((x - grid.lo)/grid.h, 0, grid.m - 1)
        i = np.clip(np.floor(pos).astype(int), 0, grid.m - 2)
        frac = pos - i
        r, l = p.right[i], p.left[i+1]
        partial = grid.h*(frac*r + 0.5*frac**2*(l - r))
        out = np.clip(self.values[i] + partial, 0, 1)
        return out


class QuantileReport(sc.prettyobj):
    ''' Quantiles of p and p0 with the quantities of the inversion identity '''

    def __init__(self, tau, q_hat, q0, F_gap, p_at_star_lb):
        if not 0 < tau < 1:
            errormsg = f'tau must be in (0,1), not {tau}'
            raise ssb.InvalidInputError(errormsg)
        self.tau = float(tau)
        self.q_hat = float(q_hat)
        self.q0 = float(q0)
        self.F_gap = float(F_gap)
        self.p_at_star_lb = float(p_at_star_lb)
        return

    def to_dict(self):
        return dict(tau=self.tau, q_hat=self.q_hat, q0=self.q0, F_gap=self.F_gap, p_at_star_lb=self.p_at_star_lb)


#%% CDFs and quantiles

def cdf(p):
    '''
    The CDF of a tabulated density.

    **Example**::

        F = ss.cdf(ss.tabulate('uniform'))
        F(0.3) # 0.3
    '''
    lowest = min(p.values.min(), p.left.min(), p.right.min())
    if lowest < -ssd.eps:
        errormsg = f'Cannot build a CDF from a function with negative values (minimum {lowest})'
        raise ssb.InvalidInputError(errormsg)
    return CdfFunction(p)


def _check_tau(tau):
    if not 0 < tau < 1:
        errormsg = f'tau must be in (0,1), not {tau}'
        raise ssb.InvalidInputError(errormsg)
    return


def quantile(F, tau):
    '''
    Smallest x with F(x) ≥ τ, inverting F.evaluate() exactly: within a cell the
    CDF is quadratic, so the crossing solves a quadratic.
    '''
    _check_tau(tau)
    if isinstance(F, ssdn.GridFunction):
        F = cdf(F)
    values = F.values
    grid = F.grid
    k = int(np.searchsorted(values, tau, side='left'))
    if k == 0:
        return float(grid.x[0])
    if k >= len(values):
        return float(grid.x[-1])
    i = k - 1
    r, l = F.density.right[i], F.density.left[i+1]
    a = 0.5*grid.h*(l - r)
    b = grid.h*r
    deficit = tau - values[i] # > 0
    denom = b + np.sqrt(max(b**2 + 4*a*deficit, 0.0))
    frac = 2*deficit/denom if denom > 0 else 1.0
    return float(grid.x[i] + np.clip(frac, 0, 1)*grid.h)


def posterior_quantiles(draws, tau):
    ''' τ-quantile of each posterior draw '''
    _check_tau(tau)
    return np.array([quantile(cdf(draw), tau) for draw in draws])


def histogram_quantiles(weights, J, tau):
    '''
    τ-quantiles of many dyadic histograms at once, from an (m, 2^J) array of
    bin weights; equal to quantile(cdf(draw), tau) for each draw.
    '''
    _check_tau(tau)
    weights = np.atleast_2d(np.asarray(weights, dtype=float))
    cum = np.cumsum(weights, axis=1)
    k = np.minimum((cum < tau).sum(axis=1), weights.shape[1] - 1)
    rows = np.arange(len(weights))
    before = np.where(k > 0, cum[rows, np.maximum(k - 1, 0)], 0.0)
    inside = weights[rows, k]
    frac = np.where(inside > 0, (tau - before)/np.where(inside > 0, inside, 1.0), 1.0)
    return (k + np.clip(frac, 0, 1))/2**J


def quantile_rate(n, alpha):
    ''' The single-quantile rate ε_{n,α}^{1+1/α} = (n/log n)^{-(α+1)/(2α+1)} '''
    rate = ssu.n_over_log_n(n)**(-(alpha + 1)/(2*alpha + 1))
    return float(rate) if np.ndim(rate) == 0 else rate


#%% The inversion identity and the smoothing decomposition

def _find_star(p, slope, a, b):
    ''' A point q* in [a, b] with p(q*) = slope, by bisection '''
    f = lambda x: float(p.evaluate(x)) - slope
    fa, fb = f(a), f(b)
    if fa*fb <= 0:
        return spo.bisect(f, a, b, xtol=ssd.bisect_tol) if fa != fb else a
    nodes = np.concatenate([[a], p.grid.x[(p.grid.x > a) & (p.grid.x < b)], [b]])
    vals = p.evaluate(nodes) - slope
    change = np.nonzero(vals[:-1]*vals[1:] <= 0)[0]
    if not len(change):
        errormsg = f'No point between {a} and {b} has density equal to the secant slope {slope}'
        raise ssb.DegenerateDensityError(errormsg)
    k = change[0]
    return spo.bisect(f, nodes[k], nodes[k+1], xtol=ssd.bisect_tol)


def inversion_identity_check(p, p0, tau, full_output=False):
    '''
    Residual of q − q0 = −[F(q0) − τ]/p(q*), with q* found by bisection so that
    F(q) − F(q0) = p(q*)(q − q0).
    '''
    _check_tau(tau)
    F, F0 = cdf(p), cdf(p0)
    q, q0 = quantile(F, tau), quantile(F0, tau)
    a, b = min(q, q0), max(q, q0)
    if b - a < 1e-14:
        p_star = float(p.evaluate(q0))
        if p_star <= 0:
            errormsg = f'The density vanishes at the quantile {q0}'
            raise ssb.DegenerateDensityError(errormsg)
        residual = abs(float(F.evaluate(q0)) - tau)/p_star
        star = q0
    else:
        nodes = np.concatenate([[a], p.grid.x[(p.grid.x > a) & (p.grid.x < b)], [b]])
        if p.evaluate(nodes).min() <= 0:
            errormsg = f'The density vanishes between the quantiles {a} and {b}'
            raise ssb.DegenerateDensityError(errormsg)
        slope = (float(F.evaluate(q)) - float(F.evaluate(q0)))/(q - q0)
        star = _find_star(p, slope, a, b)
        p_star = float(p.evaluate(star))
        residual = abs(q - q0 + (float(F.evaluate(q0)) - tau)/p_star)
    if full_output:
        return float(residual), sc.objdict(q=q, q0=q0, q_star=star, p_star=p_star)
    return float(residual)


def _smooth_cdf_at(F, q, K, b):
    ''' (K_b ∗ F)(q) = ∫ K(z) F(q − b z) dz on the spatial table of K '''
    z, kvals = K.table()
    return float(spi.simpson(kvals*F.evaluate(q - b*z), x=z))


def _local_constant(p0, q0, zeta):
    ''' sup |p0| plus the largest slope of p0 on the ζ-window around q0 '''
    x = p0.grid.x
    inside = (x >= q0 - zeta) & (x <= q0 + zeta)
    vals = p0.values[inside]
    slopes = np.abs(np.diff(vals))/p0.grid.h if vals.size > 1 else np.zeros(1)
    return float(np.abs(vals).max() + slopes.max())


def bias_decomposition(p, p0, tau, b, K='bandlimited:2', alpha=1.0, zeta=None, full_output=False):
    '''
    Split F(q0) − F0(q0) = T1 + T2 + T3 with
    T1 = (K_b∗F0)(q0) − F0(q0), T2 = (K_b∗(F − F0))(q0), T3 = F(q0) − (K_b∗F)(q0),
    and check |T1| ≤ D·b^{α+1} with D = [R/(⌊α⌋+1)! + 2ζ^{-(α+1)}]∫|x|^{α+1}|K|.

    Args:
        p (GridFunction): the estimate
        p0 (GridFunction): the truth
        tau (float): quantile level
        b (float): bandwidth
        K (str or KernelSpec): kernel with ⌊α⌋+1 vanishing moments
        alpha (float): regularity of p0
        zeta (float): half-width of the window around q0
        full_output (bool): also return D, the bound and the telescoping residual

    **Example**::

        T1, T2, T3 = ss.bias_decomposition(p, p0, tau=0.3, b=0.1)
    '''
    _check_tau(tau)
    if not b > 0:
        errormsg = f'The bandwidth must be positive, not {b}'
        raise ssb.InvalidInputError(errormsg)
    K = ssop.make_kernel(K)
    needed = int(np.floor(alpha)) + 1
    if K.vanishing_up_to < needed:
        errormsg = f'Kernel "{K.name}" has {K.vanishing_up_to} vanishing moments; alpha={alpha} needs {needed}'
        raise ssb.PreconditionError(errormsg)
    zeta = ssd.zeta if zeta is None else zeta
    F, F0 = cdf(p), cdf(p0)
    q0 = quantile(F0, tau)
    F0_q0 = float(F0.evaluate(q0))
    F_q0 = float(F.evaluate(q0))
    smooth_F0 = _smooth_cdf_at(F0, q0, K, b)
    smooth_F = _smooth_cdf_at(F, q0, K, b)
    T1 = smooth_F0 - F0_q0
    T2 = smooth_F - smooth_F0
    T3 = F_q0 - smooth_F

    R = _local_constant(p0, q0, zeta)
    D = (R/spsp.factorial(needed) + 2*zeta**(-(alpha + 1)))*K.abs_moment(alpha + 1)
    bound = D*b**(alpha + 1)
    if abs(T1) > bound:
        ssu.warn(f'|T1| = {abs(T1):0.3e} exceeds the bound D·b^(α+1) = {bound:0.3e}')
    if full_output:
        extra = sc.objdict(q0=q0, D=D, bound=bound, telescoping=abs(T1 + T2 + T3 - (F_q0 - F0_q0)))
        return (T1, T2, T3), extra
    return T1, T2, T3


#%% Guards and reports

def positivity_guard(p0, tau, zeta=None, r=None):
    '''
    Infimum of p0 on [q0 − ζ, q0 + ζ]; raises DegenerateDensityError if it is
    not positive or falls below r.
    '''
    zeta = ssd.zeta if zeta is None else zeta
    q0 = quantile(cdf(p0), tau)
    x = p0.grid.x
    inside = (x >= q0 - zeta) & (x <= q0 + zeta)
    inner = inside[1:] & inside[:-1]
    vals = np.concatenate([p0.values[inside], p0.right[:-1][inner], p0.left[1:][inner]])
    low = float(vals.min())
    floor = 0.0 if r is None else r
    if low <= 0 or low < floor:
        errormsg = f'The density is not bounded below near its {tau}-quantile {q0:0.4f}: inf over [{q0-zeta:0.4f}, {q0+zeta:0.4f}] is {low:0.4g}, required r = {floor:g}'
        raise ssb.DegenerateDensityError(errormsg)
    return low


def quantile_report(p, p0, tau, zeta=None):
    ''' Quantiles of p and p0, |F(q0) − τ|, and the infimum of p on the ζ-window around q0 '''
    _check_tau(tau)
    zeta = ssd.zeta if zeta is None else zeta
    F, F0 = cdf(p), cdf(p0)
    q_hat, q0 = quantile(F, tau), quantile(F0, tau)
    x = p.grid.x
    inside = (x >= q0 - zeta) & (x <= q0 + zeta)
    p_lb = float(p.values[inside].min()) if inside.any() else float(p.evaluate(q0))
    return QuantileReport(tau, q_hat, q0, abs(float(F.evaluate(q0)) - tau), p_lb)


def sup_ball_inclusion_check(draws, p0, tau, M, eps, M_prime, alpha=1.0):
    '''
    Count draws inside the sup-ball {‖p − p0‖_∞ < Mε} that fall outside the
    quantile ball {|q − q0| < M′ε^{1+1/α}}.
    '''
    _check_tau(tau)
    q0 = quantile(cdf(p0), tau)
    qs = posterior_quantiles(draws, tau)
    dists = np.array([ssdn.norm(draw - p0, 'sup') for draw in draws])
    in_ball = dists < M*eps
    in_qball = np.abs(qs - q0) < M_prime*eps**(1 + 1/alpha)
    violations = int(np.sum(in_ball & ~in_qball))
    out = sc.objdict(
        n_draws    = len(draws),
        n_in_ball  = int(in_ball.sum()),
        violations = violations,
        fraction   = violations/max(1, int(in_ball.sum())),
    )
    return out
