'''
Define defaults for use throughout SupSim
'''

import numpy as np


#%% Global defaults
eps          = 1e-12 # To avoid divide-by-zero and log(0)
density_tol  = 1e-8  # Tolerance on the integral of a tabulated density
weight_tol   = 1e-12 # Tolerance on the sum of mixing weights
default_npts = 2**14 + 1 # Working grid size
cdf_npts     = 2**16 # Size of the CDF table used for inverse-CDF sampling
tail_pad     = 8.0   # Laplace mixtures live on [-a-8, a+8]


#%% Kernels and operators
kernel_names     = ['gaussian', 'laplace', 'haar', 'bandlimited:<beta>']
kernel_kinds     = dict(gaussian=0, laplace=1) # Closed-form kernels handled by the compiled kernel sum
kernel_support   = dict(gaussian=12.0, laplace=40.0) # Half-widths beyond which the kernels are below 1e-17
bandlimited_nfreq = 2**12 # Riemann nodes on t in [-1, 1] for the inverse Fourier transform
bandlimited_xmax  = 400.0 # Half-width of the spatial table of the band-limited kernel
bandlimited_dx    = 0.05  # Spacing of the spatial table
kernel_quad_npts  = 2**16 + 1 # Points used to verify mass and moments of closed-form kernels
domination_npairs = 10_000 # Number of (x,y) pairs used to verify a dominating kernel


#%% Histogram posterior
kl_simpson_nodes = 33 # Per-bin Simpson nodes for the KL integrals
radius_grid      = np.arange(0.25, 10.01, 0.25) # Multipliers tried when calibrating posterior radii


#%% Dirichlet process mixtures
gibbs_defaults = dict(
    iters      = 4000,
    burnin     = 1000,
    thin       = 3,
    n_inner    = 5,    # Metropolis updates of the atoms per sweep
    step_frac  = 0.25, # Atom random-walk step, as a fraction of the base scale
    sigma_step = 0.1,  # Random-walk step on log(sigma)
)
min_truncation  = 50
sigma_prior     = dict(s=1.0, t=1.0, D=1.0) # g(sigma) ∝ sigma^-s exp(-D sigma^-1 log^t(1/sigma)) on (0,1]
sigma_grid_npts = 4001
base_table_npts = 4001
prune_weight    = 1e-12 # Atoms lighter than this are dropped when averaging densities


#%% Fourier tools
nodes_per_decade = 2**12
t_max            = 1e4
t_small          = 1e-3 # Below this, I_beta uses the series expansion of 1-h(t)
decay_far        = 1e5  # Frequency at which the decay constant is read off
moment_ts        = np.array([1e-1, 1e-2, 1e-3, 1e-4])


#%% Quantiles
zeta       = 0.1 # Half-width of the positivity window around the true quantile
bisect_tol = 1e-10


#%% Studies and output
result_cols = ['study_id', 'n', 'replication', 'sup_error', 'l1_error', 'quantile_error', 'seed', 'wall_time_ms']
formats     = ['csv', 'json', 'svg', 'gnuplot']
models      = ['histogram', 'dpm-laplace']
