'''
Dirichlet process location mixtures of Laplace and Gaussian kernels.

The Dirichlet process is truncated at T sticks, and the posterior is sampled with
a blocked Gibbs sampler. Each sweep updates, in order, the cluster labels, the
stick proportions, the atoms (random-walk Metropolis within Gibbs) and, for
Gaussian kernels, the common bandwidth sigma.
'''

import numpy as np
import sciris as sc
import scipy.special as spsp
from . import utils as ssu
from . import defaults as ssd
from . import base as ssb
from . import density as ssdn
from . import operators as ssop
from . import histogram as sshi


__all__ = ['MixingMeasure', 'DPMixtureSpec', 'GibbsState', 'mixture_density', 'prior_draw', 'fit_gibbs',
           'bayes_estimator', 'laplace_rate_point', 'gaussian_bias_check', 'sigma_floor', 'sigma_prior_mass_below']


#%% Mixing measures and model specification

class MixingMeasure(ssb.FlexPretty):
    '''
    A discrete mixing distribution Σ w_k δ_{θ_k}.

    Args:
        atoms (array): locations θ_k
        weights (array): nonnegative weights summing to 1
    '''

    def __init__(self, atoms, weights):
        atoms = np.array(atoms, dtype=float).ravel()
        weights = np.array(weights, dtype=float).ravel()
        if atoms.shape != weights.shape or atoms.size == 0:
            errormsg = f'Atoms and weights must be nonempty and of equal length, not {atoms.size} and {weights.size}'
            raise ssb.InvalidInputError(errormsg)
        if np.any(weights < 0):
            errormsg = f'Mixing weights must be nonnegative; minimum is {weights.min()}'
            raise ssb.InvalidInputError(errormsg)
        if abs(weights.sum() - 1) > ssd.weight_tol:
            errormsg = f'Mixing weights must sum to 1; they sum to {weights.sum():.15f}'
            raise ssb.InvalidInputError(errormsg)
        atoms.flags.writeable = False
        weights.flags.writeable = False
        self.atoms = atoms
        self.weights = weights
        return

    def __len__(self):
        return len(self.atoms)

    def _brief(self):
        occupied = np.sum(self.weights > ssd.prune_weight)
        return f'MixingMeasure(T={len(self)}, atoms with weight={occupied})'


class DPMixtureSpec(ssb.FlexPretty):
    '''
    Prior specification of a Dirichlet process mixture.

    Args:
        kernel (str): "laplace" or "gaussian"
        alpha_mass (float): total mass of the base measure
        base (str): "uniform" on [-a, a], or "exp-power" with density ∝ exp(-b|θ|^delta)
        a (float): half-width of the uniform base
        b (float): rate of the exp-power base
        delta (float): exponent of the exp-power base
        sigma_prior (dict): parameters (s, t, D) of g(σ) ∝ σ^-s exp(-D σ^-1 log^t(1/σ)) on (0,1] (Gaussian only)
        truncation (int): number of sticks T; if None, chosen from n when fitting

    **Examples**::

        spec = ss.DPMixtureSpec('laplace', alpha_mass=1, a=1)
        spec = ss.DPMixtureSpec('gaussian', base='exp-power', b=1, delta=2)
    '''

    def __init__(self, kernel='laplace', alpha_mass=1.0, base='uniform', a=1.0, b=1.0, delta=2.0,
                 sigma_prior=None, truncation=None):
        if kernel not in ['laplace', 'gaussian']:
            errormsg = f'Mixture kernel "{kernel}" not understood; choices are "laplace" or "gaussian"'
            raise ssb.InvalidInputError(errormsg)
        if base not in ['uniform', 'exp-power']:
            errormsg = f'Base measure "{base}" not understood; choices are "uniform" or "exp-power"'
            raise ssb.InvalidInputError(errormsg)
        for key, val in dict(alpha_mass=alpha_mass, a=a, b=b, delta=delta).items():
            if not val > 0:
                errormsg = f'{key} must be positive, not {val}'
                raise ssb.InvalidInputError(errormsg)
        if truncation is not None and (int(truncation) != truncation or truncation < 1):
            errormsg = f'The truncation must be a positive integer, not {truncation}'
            raise ssb.InvalidInputError(errormsg)
        self.kernel      = kernel
        self.alpha_mass  = float(alpha_mass)
        self.base        = base
        self.a           = float(a)
        self.b           = float(b)
        self.delta       = float(delta)
        self.sigma_prior = sc.mergedicts(ssd.sigma_prior, sigma_prior)
        self.truncation  = None if truncation is None else int(truncation)
        self._base_table = None
        self._sigma_table = None
        return

    def _brief(self):
        base = f'uniform[-{self.a:g},{self.a:g}]' if self.base == 'uniform' else f'exp(-{self.b:g}|θ|^{self.delta:g})'
        return f'DPMixtureSpec({self.kernel}, α={self.alpha_mass:g}, base={base})'

    def n_sticks(self, n=None):
        ''' T = max(50, ⌈10·α·log n⌉) unless fixed at construction '''
        if self.truncation is not None:
            return self.truncation
        if n is None or n < 2:
            return ssd.min_truncation
        return max(ssd.min_truncation, int(np.ceil(10*self.alpha_mass*np.log(n))))

    @property
    def base_scale(self):
        ''' Typical spread of the base measure, used for the Metropolis step '''
        return self.a if self.base == 'uniform' else (1/self.b)**(1/self.delta)

    def base_logpdf(self, theta):
        ''' Unnormalized log density of the base measure '''
        theta = np.asarray(theta, dtype=float)
        if self.base == 'uniform':
            return np.where(np.abs(theta) <= self.a, 0.0, -np.inf)
        return -self.b*np.abs(theta)**self.delta

    def draw_atoms(self, size, rng):
        ''' Draw i.i.d. atoms from the normalized base measure '''
        rng = ssu.make_rng(rng)
        if self.base == 'uniform':
            return rng.uniform(-self.a, self.a, size)
        if self._base_table is None:
            half = (40/self.b)**(1/self.delta) # Base density below e^-40 beyond
            x = np.linspace(-half, half, ssd.base_table_npts)
            self._base_table = (x, ssu.cdf_table(x, np.exp(self.base_logpdf(x))))
        x, cdf = self._base_table
        return ssu.inverse_cdf(x, cdf, size, rng)

    def sigma_logpdf(self, sigma):
        ''' Unnormalized log prior density of sigma, -inf outside (0,1] '''
        s, t, D = self.sigma_prior['s'], self.sigma_prior['t'], self.sigma_prior['D']
        sigma = np.asarray(sigma, dtype=float)
        inside = (sigma > 0) & (sigma <= 1)
        safe = np.where(inside, sigma, 0.5)
        logs = -s*np.log(safe) - D*np.log(1/safe)**t/safe
        return np.where(inside, logs, -np.inf)

    def sigma_table(self):
        ''' Tabulated CDF of the sigma prior on (0,1] '''
        if self._sigma_table is None:
            x = np.linspace(1.0/ssd.sigma_grid_npts, 1, ssd.sigma_grid_npts)
            logs = self.sigma_logpdf(x)
            pdf = np.exp(logs - logs.max())
            x = np.concatenate([[0.0], x])
            pdf = np.concatenate([[0.0], pdf])
            self._sigma_table = (x, ssu.cdf_table(x, pdf))
        return self._sigma_table

    def draw_sigma(self, rng):
        x, cdf = self.sigma_table()
        return float(ssu.inverse_cdf(x, cdf, 1, rng)[0])

    def default_grid(self, m=4097, data=None):
        ''' A grid covering the base support plus kernel tails, widened to the data range if data are given '''
        reach = self.a if self.base == 'uniform' else 3*self.base_scale
        pad = ssd.tail_pad if self.kernel == 'laplace' else 6.0 # σ ≤ 1 for Gaussian mixtures
        lo, hi = -reach - pad, reach + pad
        if data is not None:
            values = np.asarray(getattr(data, 'values', data), dtype=float)
            lo, hi = min(lo, values.min() - pad), max(hi, values.max() + pad)
        return ssdn.Grid(lo, hi, m)


class GibbsState(ssb.FlexPretty):
    '''
    The state of a blocked Gibbs chain, with its diagnostics.

    Args:
        assignments (array): cluster label of each observation
        mixing (MixingMeasure): current atoms and weights
        sigma (float): current bandwidth (Gaussian kernel only)
        iteration (int): number of completed sweeps
        rng_seed (int): seed of the chain
    '''

    def __init__(self, assignments, mixing, sigma=None, iteration=0, rng_seed=None):
        self.assignments = assignments
        self.mixing = mixing
        self.sigma = sigma
        self.iteration = iteration
        self.rng_seed = rng_seed
        self.atom_accept = sc.autolist()
        self.sigma_accept = sc.autolist()
        self.n_clusters = sc.autolist()
        ssu.set_metadata(self)
        return

    def _brief(self):
        return f'GibbsState(iteration={self.iteration}, occupied clusters={len(np.unique(self.assignments))})'

    def diagnostics(self):
        ''' Acceptance rates and the occupied-cluster trace as a JSON-ready dict '''
        out = sc.objdict(
            iterations = self.iteration,
            atom_acceptance = float(np.mean(self.atom_accept)) if len(self.atom_accept) else None,
            sigma_acceptance = float(np.mean(self.sigma_accept)) if len(self.sigma_accept) else None,
            cluster_trace = [int(c) for c in self.n_clusters],
        )
        return out


#%% Mixture densities

def _scales(kernel, sigma, size):
    if kernel == 'gaussian':
        if sigma is None or not sigma > 0:
            errormsg = f'A Gaussian mixture needs sigma > 0, not {sigma}'
            raise ssb.InvalidInputError(errormsg)
        return np.full(size, float(sigma))
    if sigma is not None and not sigma > 0:
        errormsg = f'sigma must be positive, not {sigma}'
        raise ssb.InvalidInputError(errormsg)
    return np.full(size, 1.0 if sigma is None else float(sigma))


def mixture_density(G, kernel='laplace', sigma=None, grid=None):
    '''
    Tabulate Σ w_k φ_σ(x − θ_k) for the Laplace kernel φ(x) = ½e^{-|x|} (σ = 1
    unless given) or the standard Gaussian kernel (σ required).

    **Example**::

        G = ss.MixingMeasure([-1, 1], [0.5, 0.5])
        p = ss.mixture_density(G, 'laplace', grid=ss.Grid(-9, 9, 4097))
    '''
    kind = ssd.kernel_kinds[kernel]
    scales = _scales(kernel, sigma, len(G))
    if grid is None:
        pad = ssd.tail_pad if kernel == 'laplace' else 8*scales[0]
        grid = ssdn.Grid(G.atoms.min() - pad, G.atoms.max() + pad, 4097)
    keep = G.weights > ssd.prune_weight
    values = ssu.kernel_sum(np.ascontiguousarray(grid.x), G.atoms[keep], G.weights[keep], scales[keep], kind)
    return ssdn.GridFunction(grid, values)


def bayes_estimator(draws, kernel='laplace', grid=None):
    '''
    Pointwise posterior mean of the mixture density over a list of draws, each
    a MixingMeasure or a (MixingMeasure, sigma) pair.
    '''
    if isinstance(draws, (MixingMeasure, tuple)):
        draws = [draws]
    if not len(draws):
        errormsg = 'The Bayes estimator needs at least one posterior draw'
        raise ssb.InvalidInputError(errormsg)
    atoms, weights, scales = [], [], []
    for draw in draws:
        G, sigma = draw if isinstance(draw, tuple) else (draw, None)
        atoms.append(G.atoms)
        weights.append(G.weights/len(draws))
        scales.append(_scales(kernel, sigma, len(G)))
    pooled = MixingMeasure(np.concatenate(atoms), np.concatenate(weights)/np.sum(np.concatenate(weights)))
    if grid is None:
        grid = ssdn.Grid(pooled.atoms.min() - ssd.tail_pad, pooled.atoms.max() + ssd.tail_pad, 4097)
    scales = np.concatenate(scales)
    keep = pooled.weights > ssd.prune_weight
    values = ssu.kernel_sum(np.ascontiguousarray(grid.x), pooled.atoms[keep], pooled.weights[keep], scales[keep], ssd.kernel_kinds[kernel])
    return ssdn.GridFunction(grid, values, label='bayes_estimator')


#%% Prior and posterior sampling

def _stick_weights(v):
    ''' w_k = v_k Π_{l<k} (1 − v_l), with the last stick taking the remainder '''
    v = np.array(v, dtype=float)
    v[-1] = 1.0
    remaining = np.concatenate([[1.0], np.cumprod(1 - v[:-1])])
    w = v*remaining
    return w/w.sum()


def prior_draw(spec, seed=None, T=None):
    '''
    Draw (G, sigma) from the truncated stick-breaking prior; sigma is None for
    Laplace mixtures.
    '''
    rng = ssu.make_rng(seed)
    T = spec.n_sticks() if T is None else int(T)
    if T < 1:
        errormsg = f'The truncation must be at least 1, not {T}'
        raise ssb.InvalidInputError(errormsg)
    v = rng.beta(1.0, spec.alpha_mass, size=T)
    G = MixingMeasure(spec.draw_atoms(T, rng), _stick_weights(v))
    sigma = spec.draw_sigma(rng) if spec.kernel == 'gaussian' else None
    return G, sigma


def _loglik(x, theta, kernel, sigma):
    if kernel == 'laplace':
        return np.log(0.5) - np.abs(x - theta)
    return -0.5*((x - theta)/sigma)**2 - np.log(sigma*ssu.SQRT2PI)


def _initial_state(init, spec, T, rng):
    if isinstance(init, str):
        if init != 'prior':
            errormsg = f'Chain initialization "{init}" not understood; use "prior" or a MixingMeasure'
            raise ssb.InvalidInputError(errormsg)
        G, sigma = prior_draw(spec, rng, T=T)
        return G.atoms.copy(), G.weights.copy(), sigma
    G, sigma = init if isinstance(init, tuple) else (init, None)
    if len(G) > T:
        errormsg = f'The initial mixing measure has {len(G)} atoms, more than the truncation T={T}'
        raise ssb.InvalidInputError(errormsg)
    atoms = np.concatenate([G.atoms, spec.draw_atoms(T - len(G), rng)])
    weights = np.concatenate([G.weights, np.zeros(T - len(G))])
    if spec.kernel == 'gaussian' and sigma is None:
        sigma = spec.draw_sigma(rng)
    return atoms, weights, sigma


def fit_gibbs(samples, spec, iters=None, burnin=None, thin=None, seed=None, init='prior',
              return_state=False, verbose=0, **kwargs):
    '''
    Blocked Gibbs sampler for the truncated Dirichlet process mixture posterior.

    Args:
        samples (SampleSet or array): the data
        spec (DPMixtureSpec): the prior
        iters (int): total number of sweeps
        burnin (int): sweeps discarded at the start
        thin (int): keep every thin-th sweep after burn-in
        seed (int): seed of the chain
        init (str or MixingMeasure): "prior", or a starting mixing measure (optionally with sigma as a tuple)
        return_state (bool): also return the final GibbsState with diagnostics
        verbose (int): 0 silent, 1 summary, 2 progress bar
        kwargs (dict): overrides of ss.defaults.gibbs_defaults (n_inner, step_frac, sigma_step)

    Returns:
        List of (MixingMeasure, sigma) draws, plus the GibbsState if requested

    **Example**::

        spec = ss.DPMixtureSpec('laplace', alpha_mass=1, a=1)
        draws = ss.fit_gibbs(ss.sample('laplace-2atom', 500, seed=1), spec, iters=1000, burnin=250, seed=2)
        p_hat = ss.bayes_estimator(draws, 'laplace', spec.default_grid())
    '''
    given = {k:v for k,v in dict(iters=iters, burnin=burnin, thin=thin).items() if v is not None}
    pars = sc.mergedicts(ssd.gibbs_defaults, given, kwargs)
    iters, burnin, thin = int(pars['iters']), int(pars['burnin']), int(pars['thin'])
    if iters <= burnin or burnin < 0 or thin < 1:
        errormsg = f'Need iters > burnin ≥ 0 and thin ≥ 1, not iters={iters}, burnin={burnin}, thin={thin}'
        raise ssb.InvalidInputError(errormsg)

    x = np.asarray(samples.values if isinstance(samples, ssdn.SampleSet) else samples, dtype=float)
    n = len(x)
    if n < 1:
        errormsg = 'The Gibbs sampler needs at least one observation'
        raise ssb.InvalidInputError(errormsg)
    T = spec.n_sticks(n)
    if T < 10:
        errormsg = f'The blocked Gibbs sampler needs a truncation T ≥ 10, not {T}'
        raise ssb.InvalidInputError(errormsg)

    timer = sc.timer()
    rng = ssu.make_rng(seed)
    atoms, weights, sigma = _initial_state(init, spec, T, rng)
    kernel = spec.kernel
    step = pars['step_frac']*spec.base_scale
    state = GibbsState(np.zeros(n, dtype=np.int64), None, sigma=sigma, rng_seed=seed)
    draws = []

    for it in range(iters):

        # 1. Cluster labels given sticks and atoms
        logp = np.log(np.maximum(weights, 1e-300))[None, :] + _loglik(x[:, None], atoms[None, :], kernel, sigma)
        probs = np.exp(logp - logp.max(axis=1, keepdims=True))
        cum = np.cumsum(probs, axis=1)
        u = rng.random(n)*cum[:, -1]
        z = np.minimum((cum < u[:, None]).sum(axis=1), T - 1)
        counts = np.bincount(z, minlength=T)

        # 2. Sticks given labels
        rest = np.concatenate([np.cumsum(counts[::-1])[::-1][1:], [0]])
        v = rng.beta(1.0 + counts, spec.alpha_mass + rest)
        weights = _stick_weights(v)

        # 3. Atoms: fresh base draws for empty clusters, Metropolis for occupied ones
        occupied = counts > 0
        atoms = np.where(occupied, atoms, spec.draw_atoms(T, rng))
        current = np.bincount(z, weights=_loglik(x, atoms[z], kernel, sigma), minlength=T) + spec.base_logpdf(atoms)
        accepted = 0
        for _ in range(int(pars['n_inner'])):
            proposal = atoms + step*rng.standard_normal(T)
            proposed = np.bincount(z, weights=_loglik(x, proposal[z], kernel, sigma), minlength=T) + spec.base_logpdf(proposal)
            accept = occupied & (np.log(rng.random(T)) < proposed - current)
            atoms = np.where(accept, proposal, atoms)
            current = np.where(accept, proposed, current)
            accepted += accept.sum()
        state.atom_accept += accepted/(occupied.sum()*pars['n_inner'])

        # 4. Common bandwidth (random walk on log sigma, Jacobian included)
        if kernel == 'gaussian':
            def log_target(s):
                return _loglik(x, atoms[z], kernel, s).sum() + spec.sigma_logpdf(s) + np.log(s)
            proposal = sigma*np.exp(pars['sigma_step']*rng.standard_normal())
            ok = np.log(rng.random()) < log_target(proposal) - log_target(sigma)
            if ok:
                sigma = float(proposal)
            state.sigma_accept += float(ok)

        state.n_clusters += int(occupied.sum())
        if it >= burnin and not (it - burnin) % thin:
            draws.append((MixingMeasure(atoms, weights), sigma))
        if verbose >= 2:
            sc.progressbar(it + 1, iters, label='  Gibbs ', length=20)

    state.assignments = z
    state.mixing = MixingMeasure(atoms, weights)
    state.sigma = sigma
    state.iteration = iters
    if verbose:
        print(f'Gibbs chain finished: {len(draws)} draws, T={T}, atom acceptance {np.mean(state.atom_accept):0.2f} ({timer.toc(output=True):0.1f} s)')
    if return_state:
        return draws, state
    return draws


#%% Rates and bias checks

def laplace_rate_point(n):
    ''' The Laplace-mixture sup-norm rate (n/log n)^{-3/8} '''
    rate = ssu.n_over_log_n(n)**(-3/8)
    return float(rate) if np.ndim(rate) == 0 else rate


def _gaussian_tail(sigma, omega):
    ''' (1/π)∫_{|t|>ω} e^{-σ²t²/2} dt '''
    return float(np.sqrt(2/np.pi)/sigma*spsp.erfc(sigma*omega/np.sqrt(2)))


def gaussian_bias_check(F, sigma, J, kernel='bandlimited:2', x=None, nfreq=2001, full_output=False):
    '''
    Sup-norm bias of a band-limited operator on a Gaussian location mixture,
    measured and bounded analytically.

    The measured bias is (1/2π)∫ p̃(t)(K̃(2^-J t) − 1)e^{-itx} dt with
    p̃(t) = Σw e^{itθ} e^{-σ²t²/2}, maximized over x. The envelope is
    (1/π)∫_{|t|>ω} e^{-σ²t²/2} dt, where ω = 2^J times the passband of K̃.
    With full_output=True the tail beyond the full cutoff 2^J is reported as
    well; it only bounds the bias when K̃ ≡ 1 on [-1, 1], which for the
    default kernel is the case at level J+1.

    Returns:
        (measured, envelope), plus a dict with omega, cutoff and envelope_at_cutoff if full_output
    '''
    if not sigma > 0:
        errormsg = f'sigma must be positive, not {sigma}'
        raise ssb.InvalidInputError(errormsg)
    K = ssop.make_kernel(kernel)
    if K.passband is None:
        errormsg = f'The Gaussian bias check needs a band-limited kernel, not "{K.name}"'
        raise ssb.PreconditionError(errormsg)
    omega = 2.0**J*K.passband
    envelope = _gaussian_tail(sigma, omega)

    t = np.linspace(omega, omega + 12.0/sigma, nfreq)
    if x is None:
        x = np.linspace(F.atoms.min() - 4*sigma, F.atoms.max() + 4*sigma, 1001)
    pt = (F.weights[None, :]*np.exp(1j*np.outer(t, F.atoms))).sum(axis=1)*np.exp(-0.5*(sigma*t)**2)
    integrand = pt*(K.fourier(t/2.0**J) - 1)
    dt = t[1] - t[0]
    quad = np.full(nfreq, dt)
    quad[[0, -1]] = dt/2
    values = np.real(np.exp(-1j*np.outer(x, t)) @ (integrand*quad))/np.pi
    measured = float(np.abs(values).max())
    if full_output:
        extra = sc.objdict(omega=omega, cutoff=2.0**J, envelope_at_cutoff=_gaussian_tail(sigma, 2.0**J))
        return measured, envelope, extra
    return measured, envelope


def sigma_floor(n, beta, E=1.0, psi=0.75):
    ''' σ̲ₙ = E (n ε²_{n,β})^{-1} (log n)^ψ, the bandwidth below which the prior mass is negligible '''
    eps = sshi.sup_rate(n, beta)
    return float(E/(n*eps**2)*np.log(n)**psi)


def sigma_prior_mass_below(spec, s):
    ''' Prior mass G(σ < s) of the tabulated sigma prior '''
    x, cdf = spec.sigma_table()
    return float(np.interp(s, x, cdf, left=0.0, right=1.0))
