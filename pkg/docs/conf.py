# -*- coding: utf-8 -*-
#
# Configuration file for the Sphinx documentation builder.
#
# For a full list of options see the documentation:
# http://www.sphinx-doc.org/en/master/config

import os
import subprocess
import sphinx_rtd_theme
from datetime import datetime
import supsim as ss

# Set environment
os.environ['SPHINX_BUILD'] = 'True'
os.environ['SUPSIM_WARNINGS'] = 'error' # Don't let warnings pass in the docs
on_rtd = os.environ.get('READTHEDOCS') == 'True'

# Generate the API pages
thisdir = os.path.dirname(os.path.abspath(__file__))
subprocess.check_output(['sphinx-apidoc', '-f', '-M', '-o', thisdir, os.path.join(thisdir, '..', 'supsim')], cwd=thisdir)

# Rename "supsim" to "API reference"
filename = os.path.join(thisdir, 'modules.rst')
with open(filename) as f:
    lines = f.readlines()
lines[0] = "API reference\n"
lines[1] = "=============\n"
with open(filename, "w") as f:
    f.writelines(lines)


# -- General configuration ---------------------------------------------------

extensions = [
    'sphinx.ext.mathjax',
    'sphinx.ext.githubpages',
    'sphinx.ext.autodoc',
    'sphinx.ext.napoleon',
    'sphinx.ext.viewcode',  # Add a link to the Python source code for classes, functions etc.
]

autodoc_default_options = {
    'member-order': 'bysource',
    'members': None
}

napoleon_google_docstring = True

autoclass_content = "both"  # Add __init__ doc (ie. params) to class summaries
html_show_sourcelink = False
autodoc_member_order = 'bysource'
add_module_names = False
autodoc_inherit_docstrings = False

templates_path = ['_templates']
source_suffix = '.rst'
master_doc = 'index'

# General information about the project.
project = 'SupSim'
copyright = f'2024 - {datetime.today().year}. These docs were built for {project} version {ss.__version__}\n'
author = 'SupSim developers'
version = ss.__version__
release = ss.__version__

exclude_patterns = ['_build', 'Thumbs.db', '.DS_Store']
pygments_style = 'sphinx'

# RST epilog is added to the end of every topic
rst_epilog = "\n.. include:: /variables.txt"


# -- Options for HTML output ----------------------------------------------

html_theme = 'sphinx_rtd_theme'
html_theme_path = [sphinx_rtd_theme.get_html_theme_path()]
html_static_path = ['_static']
if not on_rtd:
    html_extra_path = ['robots.txt']
html_last_updated_fmt = '%Y-%b-%d'
html_show_sphinx = False
htmlhelp_basename = 'SupSim'

# -- Options for other output ---------------------------------------------

latex_documents = [
    (master_doc, 'supsim-docs.tex', 'supsim', author, 'manual'),
]

man_pages = [
    (master_doc, 'supsim-docs', 'supsim', [author], 1)
]

intersphinx_mapping = {'python': ('https://docs.python.org/3', None),
                       'numpy': ('https://numpy.org/doc/stable/', None),
                       'scipy': ('https://docs.scipy.org/doc/scipy/', None),
                       }
