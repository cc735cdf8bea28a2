'''
Handle rate-study parameters
'''

import yaml
import numpy as np
import sciris as sc
from . import defaults as ssd
from . import base as ssb
from . import density as ssdn

__all__ = ['RateStudyConfig', 'make_config', 'load_config']


#%% RateStudyConfig (parameters) class

class RateStudyConfig(dict):
    '''
    Class to hold a dictionary of rate-study parameters, and associated methods.

    Usually not called by the user directly -- use ``ss.make_config()`` instead.

    Args:
        pars (dict): dictionary of parameters
    '''
    def __init__(self, pars=None, *args, **kwargs):
        if pars is None:
            pars = {}
        super().__init__(*args, **kwargs)
        self.update(pars)
        return


    def __repr__(self, *args, **kwargs):
        ''' Use odict repr, but with a custom class name and no quotes '''
        return sc.odict.__repr__(self, quote='', numsep='.', classname='ss.RateStudyConfig()', *args, **kwargs)


    def copy(self):
        ''' Shortcut for deep copying '''
        return sc.dcp(self)


    def to_dict(self):
        ''' Return parameters as a new dictionary '''
        return {k:v for k,v in self.items()}


    def to_json(self, filename, **kwargs):
        '''
        Export parameters to a JSON file.

        Args:
            filename (str): filename to save to
            kwargs (dict): passed to ``sc.savejson``

        **Example**::
            cfg.to_json('histogram_study.json')
        '''
        return sc.savejson(filename=filename, obj=self.to_dict(), **kwargs)


    def from_json(self, filename, **kwargs):
        '''
        Import parameters from a JSON file.

        Args:
            filename (str): filename to load from
            kwargs (dict): passed to ``sc.loadjson``

        **Example**::
            cfg = ss.make_config().from_json('histogram_study.json')
        '''
        pars = sc.loadjson(filename=filename, **kwargs)
        self.update(pars)
        return self


    def validate(self, die=True):
        '''
        Check keys, types and the consistency of the model with the truth.

        Args:
            die (bool): whether to raise a ConfigError if validation fails (else print)
        '''
        errors = []

        # Check that keys are correct
        valid_keys = set(default_config('histogram').keys())
        keys = set(self.keys())
        if keys != valid_keys:
            diff1 = valid_keys - keys
            diff2 = keys - valid_keys
            if diff1:
                errors.append(f'The configuration is not valid since the following keys are missing:\n{sc.strjoin(diff1)}')
            if diff2:
                errors.append(f'The configuration is not valid since the following keys are not recognized:\n{sc.strjoin(diff2)}')

        # Sample sizes and replications
        n_list = np.array(sc.toarray(self.get('n_list', [])), dtype=float)
        if not len(n_list) or np.any(n_list != np.round(n_list)) or np.any(n_list < 3):
            errors.append(f'n_list must be a nonempty list of integers ≥ 3, not {self.get("n_list")}')
        elif np.any(np.diff(n_list) <= 0):
            errors.append(f'n_list must be strictly increasing, not {self["n_list"]}')
        reps = self.get('reps')
        if not sc.isnumber(reps) or int(reps) != reps or reps < 1:
            errors.append(f'reps must be a positive integer, not {reps}')

        # Model and truth
        model = self.get('model')
        if model not in ssd.models:
            errors.append(f'Model "{model}" not understood; choices are {sc.strjoin(ssd.models)}')
        try:
            truth = ssdn.get_density(self.get('truth'))
        except (ValueError, KeyError) as E:
            errors.append(f'Truth "{self.get("truth")}" is not a catalog density: {E}')
            truth = None
        if truth is not None:
            if model == 'histogram' and (truth.support != 'interval' or truth.domain != (0.0, 1.0)):
                errors.append(f'The histogram model needs a truth supported on [0,1]; "{truth.name}" lives on {truth.domain}')
            if model == 'dpm-laplace' and truth.support != 'real':
                errors.append(f'The Laplace mixture model needs a truth on the real line; "{truth.name}" is supported on {truth.domain}')

        # Rates and quantiles
        alpha = self.get('alpha')
        if not sc.isnumber(alpha) or not alpha > 0:
            errors.append(f'alpha must be positive, not {alpha}')
        kind = self.get('kind')
        if kind not in ['sup', 'quantile']:
            errors.append(f'Study kind "{kind}" not understood; choices are "sup" or "quantile"')
        tau = self.get('tau')
        if tau is not None and not (sc.isnumber(tau) and 0 < tau < 1):
            errors.append(f'tau must be in (0,1), not {tau}')
        if kind == 'quantile' and (tau is None or model != 'histogram'):
            errors.append('Quantile studies need tau and the histogram model')
        freeze_J = self.get('freeze_J')
        if freeze_J is not None and (int(freeze_J) != freeze_J or freeze_J < 0):
            errors.append(f'freeze_J must be None or a nonnegative integer, not {freeze_J}')

        # Assertions
        assertions = self.get('assertions') or {}
        unknown = set(assertions.keys()) - {'slope_range', 'decreasing'}
        if unknown:
            errors.append(f'Unknown assertions {sc.strjoin(unknown)}; choices are slope_range and decreasing')
        if 'slope_range' in assertions and len(assertions['slope_range']) != 2:
            errors.append(f'slope_range must be [low, high], not {assertions["slope_range"]}')

        if errors:
            errormsg = '\n'.join(errors)
            if die: raise ssb.ConfigError(errormsg)
            else:   print(errormsg)
        return self


#%% Parameter creation functions

def default_config(model='histogram'):
    ''' Default parameters of each model '''
    cfg = dict(
        study_id         = f'{model}-sup',
        model            = model,
        kind             = 'sup', # Or 'quantile'
        truth            = 'lipschitz-sine',
        n_list           = [2**k for k in range(10, 18)],
        reps             = 50,
        alpha            = 1.0,
        tau              = None,
        master_seed      = 2024,
        log_factor_power = 0.0, # Exponent of the slowly varying log factor multiplying the rate
        grid_npts        = ssd.default_npts,
        freeze_J         = None, # Fix the histogram resolution instead of following n
        n_draws          = 200, # Posterior draws per replication for quantile studies
        record_wall_time = False,
        alpha_mass       = 1.0,
        a                = 1.0,
        iters            = ssd.gibbs_defaults['iters'],
        burnin           = ssd.gibbs_defaults['burnin'],
        thin             = ssd.gibbs_defaults['thin'],
        assertions       = {},
    )
    if model == 'dpm-laplace':
        cfg.update(
            truth     = 'laplace-2atom',
            n_list    = [250, 1000, 4000],
            reps      = 10,
            alpha     = 1.0,
            grid_npts = 4097,
        )
    return cfg


def make_config(model='histogram', validate=True, die=True, **kwargs):
    '''
    Function for getting rate-study parameters.

    Args:
        model    (str):  "histogram" or "dpm-laplace"; use "test" for a small histogram study
        validate (bool): whether to perform validation on the parameters
        die      (bool): whether to raise an exception if validation fails
        kwargs   (dict): custom parameter values

    **Example**::
        cfg = ss.make_config('histogram', reps=20, n_list=[2**10, 2**12, 2**14])
    '''
    model = str(model).lower()

    # Set test parameters
    if model == 'test':
        model = 'histogram'
        kwargs.setdefault('n_list', [2**8, 2**10, 2**12])
        kwargs.setdefault('reps', 4)
        kwargs.setdefault('grid_npts', 2**10 + 1)

    if model not in ssd.models:
        errormsg = f'Model "{model}" is not currently supported; choices are {sc.strjoin(ssd.models)}'
        raise ssb.ConfigError(errormsg)

    cfg = sc.mergedicts(default_config(model), kwargs, _copy=True)
    if cfg['kind'] == 'quantile' and 'study_id' not in kwargs:
        cfg['study_id'] = f'{model}-quantile'
    cfg = RateStudyConfig(cfg)
    if validate:
        cfg.validate(die=die)
    return cfg


def load_config(filename, validate=True):
    '''
    Load a configuration from a JSON or YAML file; missing keys take the
    defaults of the file's model.
    '''
    path = sc.path(filename)
    if path.suffix == '.json':
        data = sc.loadjson(path)
    elif path.suffix in ['.yaml', '.yml']:
        with open(path) as f:
            data = yaml.safe_load(f)
    else:
        errormsg = f'Unrecognized configuration format for: {path}'
        raise ssb.ConfigError(errormsg)
    data = dict(data or {})
    model = data.pop('model', 'histogram')
    return make_config(model, validate=validate, **data)
