__version__ = '0.4.1'
__versiondate__ = '2026-10-18'

__license__ = f'SupSim {__version__} ({__versiondate__}) — sup-norm Bayesian curve estimation simulator'
