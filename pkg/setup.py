import os
import runpy
from setuptools import setup, find_packages

# Get version
cwd = os.path.abspath(os.path.dirname(__file__))
versionpath = os.path.join(cwd, 'supsim', 'version.py')
version = runpy.run_path(versionpath)['__version__']

# Get the documentation
with open(os.path.join(cwd, 'README.rst'), "r") as f:
    long_description = f.read()

CLASSIFIERS = [
    "Environment :: Console",
    "Intended Audience :: Science/Research",
    "License :: OSI Approved :: MIT License",
    "Operating System :: OS Independent",
    "Programming Language :: Python",
    "Topic :: Scientific/Engineering :: Mathematics",
    "Development Status :: 4 - Beta",
    "Programming Language :: Python :: 3.9",
]

setup(
    name="supsim",
    version=version,
    description="SupSim: sup-norm rates for Bayesian density estimation",
    long_description=long_description,
    long_description_content_type="text/x-rst",
    keywords=["Bayesian nonparametrics", "density estimation", "posterior contraction", "Dirichlet process", "Monte Carlo"],
    platforms=["OS Independent"],
    classifiers=CLASSIFIERS,
    packages=find_packages(exclude=['tests', 'examples', 'examples.*']),
    include_package_data=True,
    install_requires=[
        'numpy',
        'numba',
        'scipy',
        'pandas>=1.5',
        'sciris>=2.0.3',
        'matplotlib>=3.5.0',
        'pyyaml',
    ],
    entry_points={
        'console_scripts': ['supsim=supsim.cli:main'],
    },
)
