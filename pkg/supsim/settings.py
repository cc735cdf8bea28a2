'''
Define options for SupSim: verbosity, warnings, parallelism and the working grid.
All options should be set using set() or directly, e.g.::

    ss.options(verbose=0)

To reset default options, use::

    ss.options('default')

Note: "options" is used to refer to the choices available (e.g., n_workers), while "settings"
is used to refer to the choices made (e.g., n_workers=4).
'''

import os
import pylab as pl
import sciris as sc


# Only the class instance is public
__all__ = ['options']


#%% Define the options class

class Options(sc.objdict):
    '''
    Set options for SupSim.

    Use ``ss.options.set('defaults')`` to reset all values to default, or ``ss.options.set(npts='default')``
    to reset one parameter to default. See ``ss.options.help(detailed=True)`` for
    more information.

    Options can also be saved and loaded using ``ss.options.save()`` and ``ss.options.load()``.
    See ``ss.options.context()`` to set options temporarily.

    Common options are (see also ``ss.options.help(detailed=True)``):

        - verbose:   default verbosity for studies and samplers
        - warnings:  how to handle warnings (e.g. print, raise as errors, ignore)
        - n_workers: number of processes used for Monte Carlo replications
        - serial:    run replications in the current process instead of in parallel
        - npts:      default number of points of the working grid
        - backend:   which Matplotlib backend to use
        - dpi:       the DPI of saved figures

    **Examples**::

        ss.options(verbose=0) # Silence studies
        ss.options.set(n_workers=4, serial=False) # Multiple changes
        ss.options('defaults') # Reset to default options
    '''

    def __init__(self):
        super().__init__()
        optdesc, options = self.get_orig_options() # Get the options
        self.update(options) # Update this object with them
        self.setattribute('optdesc', optdesc) # Set the description as an attribute, not a dict entry
        self.setattribute('orig_options', sc.dcp(options)) # Copy the default options
        return


    def __call__(self, *args, **kwargs):
        '''Allow ``ss.options(verbose=0)`` instead of ``ss.options.set(verbose=0)`` '''
        return self.set(*args, **kwargs)


    def to_dict(self):
        ''' Pull out only the settings from the options object '''
        return {k:v for k,v in self.items()}


    def __repr__(self):
        output = sc.objectid(self)
        output += 'SupSim options (see also ss.options.disp()):\n'
        output += sc.pp(self.to_dict(), output=True)
        return output


    def __enter__(self):
        return self


    def __exit__(self, *args, **kwargs):
        try:
            reset = {k:v for k,v in self.on_entry.items() if self[k] != v}
            self.set(**reset)
            self.delattribute('on_entry')
        except AttributeError as E:
            errormsg = 'Please use ss.options.context() if using a with block'
            raise AttributeError(errormsg) from E
        return


    def disp(self):
        ''' Detailed representation '''
        output = 'SupSim options (see also ss.options.help()):\n'
        keylen = 10 # Maximum key length -- "n_workers"
        for k,v in self.items():
            keystr = sc.colorize(f'  {k:>{keylen}s}: ', fg='cyan', output=True)
            reprstr = sc.pp(v, output=True)
            reprstr = sc.indent(n=keylen+4, text=reprstr, width=None)
            output += f'{keystr}{reprstr}'
        print(output)
        return


    @staticmethod
    def get_orig_options():
        '''
        Set the default options for SupSim -- not to be called by the user, use
        ``ss.options.set('defaults')`` instead.
        '''
        optdesc = sc.objdict() # Help for the options
        options = sc.objdict() # The options

        optdesc.verbose = 'Default level of verbosity: 0 silent, 1 one line per study, 2 one heading per task'
        options.verbose = float(os.getenv('SUPSIM_VERBOSE', 1))

        optdesc.warnings = 'How warnings are handled: options are "warn" (default), "print", and "error"'
        options.warnings = str(os.getenv('SUPSIM_WARNINGS', 'warn'))

        optdesc.n_workers = 'Number of worker processes for replications (passed to sc.parallelize as ncpus)'
        options.n_workers = int(os.getenv('SUPSIM_N_WORKERS', sc.cpu_count()))

        optdesc.serial = 'Run replications serially in the calling process'
        options.serial = bool(int(os.getenv('SUPSIM_SERIAL', False)))

        optdesc.npts = 'Default number of points of the working grid (2^14+1)'
        options.npts = int(os.getenv('SUPSIM_NPTS', 2**14+1))

        optdesc.backend = 'Set the Matplotlib backend (use "agg" for non-interactive)'
        options.backend = os.getenv('SUPSIM_BACKEND', pl.get_backend())

        optdesc.dpi = 'DPI used when saving figures'
        options.dpi = int(os.getenv('SUPSIM_DPI', 150))

        return optdesc, options


    def set(self, key=None, value=None, **kwargs):
        '''
        Change one or more options.

        Args:
            key    (str):    the parameter to modify, or 'defaults' to reset everything to default values
            value  (varies): the value to specify; use None or 'default' to reset to default
            kwargs (dict):   if supplied, set multiple key-value pairs

        **Example**::

            ss.options.set(verbose=0) # Equivalent to ss.options(verbose=0)
        '''
        if key in ['default', 'defaults']:
            kwargs = self.orig_options
        elif key is not None:
            kwargs = sc.mergedicts(kwargs, {key:value})

        for key,value in kwargs.items():
            if key not in self:
                keys = '\n'.join(self.orig_options.keys())
                errormsg = f'Option "{key}" not recognized; options are "defaults" or:\n{keys}\n\nSee help(ss.options.set) for more information.'
                raise sc.KeyNotFoundError(errormsg)
            if value in [None, 'default']:
                value = self.orig_options[key]
            if key == 'warnings' and value not in ['warn', 'print', 'error']:
                errormsg = f'Warnings option "{value}" not understood; choices are "warn", "print", or "error"'
                raise ValueError(errormsg)
            self[key] = value
            if key == 'backend':
                pl.switch_backend(value)
        return


    def context(self, **kwargs):
        '''
        Alias to set() for use in a "with" block.

        **Examples**::

            # Silence all output
            with ss.options.context(verbose=0):
                ss.run_rate_study(cfg)

            # Convert warnings to errors
            with ss.options.context(warnings='error'):
                ss.choose_J(2**20, alpha=1)
        '''
        on_entry = {k:self[k] for k in kwargs.keys()}
        self.setattribute('on_entry', on_entry)
        self.set(**kwargs)
        return self


    def get_default(self, key):
        ''' Helper function to get the original default options '''
        return self.orig_options[key]


    def changed(self, key):
        ''' Check if current setting has been changed from default '''
        if key in self.orig_options:
            return self[key] != self.orig_options[key]
        else:
            return None


    def help(self, detailed=False):
        '''
        Print information about options.

        Args:
            detailed (bool): whether to print out full help
        '''
        if not detailed:
            print(self.__doc__)
            return

        print('SupSim global options ("Environment" = name of corresponding environment variable):')
        for k,key in enumerate(self.orig_options.keys()):
            sc.heading(f'{k}. {key}', spaces=0, spacesafter=0)
            changestr = ' (modified)' if self.changed(key) else ''
            print(f'          Key: {key}')
            print(f'      Current: {self[key]}{changestr}')
            print(f'      Default: {self.orig_options[key]}')
            print(f'  Environment: SUPSIM_{key.upper()}')
            print(f'  Description: {self.optdesc[key]}')
        return


    def load(self, filename, verbose=True, **kwargs):
        '''
        Load current settings from a JSON file.

        Args:
            filename (str): file to load
            kwargs (dict): passed to ``sc.loadjson()``
        '''
        json = sc.loadjson(filename=filename, **kwargs)
        current = self.to_dict()
        new = {k:v for k,v in json.items() if v != current[k]} # Don't reset keys that haven't changed
        self.set(**new)
        if verbose: print(f'Settings loaded from {filename}')
        return


    def save(self, filename, verbose=True, **kwargs):
        '''
        Save current settings as a JSON file.

        Args:
            filename (str): file to save to
            kwargs (dict): passed to ``sc.savejson()``
        '''
        json = self.to_dict()
        output = sc.savejson(filename=filename, obj=json, **kwargs)
        if verbose: print(f'Settings saved to {filename}')
        return output


# Create the options on module load
options = Options()
