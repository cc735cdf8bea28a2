'''
Utilities shared across SupSim: random number generation and seed derivation,
the compiled kernel sum, inverse-CDF tables, logging, warnings and metadata.
'''

import hashlib
import warnings
import numpy as np
import sciris as sc
import numba as nb
from . import version as ssv
from .settings import options as sso


# Specify all externally visible things this file defines
__all__ = ['make_rng', 'derive_seed', 'derive_seeds', 'kernel_sum', 'cdf_table', 'inverse_cdf',
           'n_over_log_n', 'git_hash', 'set_metadata', 'log', 'warn']

SQRT2PI = np.sqrt(2*np.pi)


#%% Randomness

def make_rng(seed=None):
    ''' Return a numpy Generator; a Generator passed in is returned unchanged '''
    if isinstance(seed, np.random.Generator):
        return seed
    return np.random.default_rng(seed)


def derive_seed(master, *keys):
    '''
    Derive a 63-bit seed from a master seed and a tuple of integer keys by
    counter mixing, so that every (master, keys) pair gets its own stream.

    **Example**::

        seed = ss.derive_seed(2024, 3, 17) # n-index 3, replication 17
    '''
    keys = tuple(int(k) for k in keys)
    seq = np.random.SeedSequence(entropy=int(master), spawn_key=keys)
    return int(seq.generate_state(1, dtype=np.uint64)[0] >> np.uint64(1))


def derive_seeds(master, keylist):
    ''' Derive one seed per key tuple and check that they are pairwise distinct '''
    seeds = [derive_seed(master, *sc.tolist(keys, coerce='tuple')) for keys in keylist]
    if len(set(seeds)) != len(seeds):
        errormsg = f'Seed collision while deriving {len(seeds)} seeds from master seed {master}'
        raise RuntimeError(errormsg)
    return seeds


#%% Compiled kernels

@nb.njit((nb.types.Array(nb.float64, 1, 'A', readonly=True), nb.types.Array(nb.float64, 1, 'A', readonly=True), nb.types.Array(nb.float64, 1, 'A', readonly=True), nb.types.Array(nb.float64, 1, 'A', readonly=True), nb.int64), cache=True)
def kernel_sum(x, centers, weights, scales, kind):
    '''
    Weighted sum of scaled kernels, sum_k w_k K((x-c_k)/s_k)/s_k, at every x.

    Args:
        x (array): evaluation points
        centers (array): kernel locations (data points or mixture atoms)
        weights (array): weight of each center
        scales (array): scale of each center
        kind (int): 0 for the standard Gaussian kernel, 1 for the Laplace kernel ½e^{-|u|}

    **Example**::

        values = ss.kernel_sum(grid.x, samples, np.full(n, 1/n), np.full(n, 2.0**-j), 0) # Gaussian KDE
    '''
    out = np.zeros(x.size)
    for k in range(centers.size):
        c = centers[k]
        w = weights[k]
        s = scales[k]
        for i in range(x.size):
            u = (x[i] - c)/s
            if kind == 0:
                if abs(u) < 40.0:
                    out[i] += w*np.exp(-0.5*u*u)/(s*SQRT2PI)
            else:
                if abs(u) < 740.0:
                    out[i] += w*0.5*np.exp(-abs(u))/s
    return out


#%% Inverse-CDF tables

def cdf_table(x, pdf):
    ''' Normalized cumulative trapezoid of a tabulated density '''
    x = np.asarray(x, dtype=float)
    pdf = np.asarray(pdf, dtype=float)
    increments = 0.5*(pdf[1:] + pdf[:-1])*np.diff(x)
    cdf = np.concatenate([[0.0], np.cumsum(increments)])
    total = cdf[-1]
    if not total > 0:
        errormsg = f'Cannot build a CDF table from a density with total mass {total}'
        raise ValueError(errormsg)
    return cdf/total


def inverse_cdf(x, cdf, n, rng):
    ''' Draw n values by monotone linear interpolation of a CDF table '''
    u = make_rng(rng).random(int(n))
    return np.interp(u, cdf, x)


def n_over_log_n(n):
    ''' The effective sample size n/log(n), with the natural logarithm '''
    n = np.asarray(n, dtype=float)
    return n/np.log(n)


#%% Housekeeping

def git_hash(data):
    ''' Git-style content hash: SHA-1 of "blob <length>\\0" followed by the bytes '''
    if isinstance(data, str):
        data = data.encode()
    header = f'blob {len(data)}\0'.encode()
    return hashlib.sha1(header + data).hexdigest()


def set_metadata(obj):
    ''' Set standard metadata for an object '''
    obj.created = sc.now()
    obj.version = ssv.__version__
    obj.git_info = sc.gitinfo(verbose=False)
    return


def log(msg, level=1, verbose=None):
    ''' Print a message if the verbosity is at least the given level '''
    if verbose is None:
        verbose = sso.verbose
    if verbose >= level:
        print(msg)
    return


def warn(msg, category=RuntimeWarning, die=None):
    ''' Raise a warning, print it, or raise it as an error, depending on ss.options.warnings '''
    mode = sso.warnings
    if die or mode == 'error':
        raise category(msg)
    elif mode == 'print':
        print(f'Warning: {msg}')
    else:
        warnings.warn(msg, category=category, stacklevel=2)
    return
