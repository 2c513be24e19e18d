# perco-micro documentation build configuration file.
#
# This file is execfile()d with the current directory set to its containing
# dir.

import os
import sys

# Make the package importable for autodoc
sys.path.insert(0, os.path.abspath('../../'))

# -- General configuration ----------------------------------------------------

extensions = [
    'sphinx.ext.autodoc',
    'sphinx.ext.viewcode',
    'sphinx_rtd_theme',
    'sphinx.ext.autosectionlabel',
]

# The names of modules to mock and hence avoid import.
autodoc_mock_imports = ['numpy', 'platformdirs', 'scipy']

# The suffix of source filenames.
source_suffix = '.rst'

# The master toctree document.
master_doc = 'index'

# General information about the project.
project = u'perco-micro'
copyright = u'2026, the perco-micro developers'

# The short X.Y version and the full version.
version = '0.4.0'
release = '0.4.0'

exclude_patterns = []

# The name of the Pygments (syntax highlighting) style to use.
pygments_style = 'sphinx'

# -- Options for HTML output --------------------------------------------------

html_theme = 'sphinx_rtd_theme'
html_theme_options = {
    'prev_next_buttons_location': 'bottom',
    'collapse_navigation': True,
    'sticky_navigation': True,
    'navigation_depth': 4,
    'titles_only': False,
}

html_title = 'Documentation'
html_short_title = 'perco-micro - Documentation'

# Output file base name for HTML help builder.
htmlhelp_basename = 'percomicrodoc'

# -- Options for manual page output -------------------------------------------

man_pages = [
    ('index', 'perco-micro', u'perco-micro Documentation',
     [u'the perco-micro developers'], 1)
]
