# -*- coding: utf-8 -*-
#
# sexpde documentation build configuration file.

import os
import re
import sys

# make the package importable for autodoc
sys.path.insert(0, os.path.abspath('..'))

extensions = ['sphinx.ext.autodoc']

templates_path = ['_templates']
source_suffix = '.rst'
master_doc = 'index'

project = u'sexpde'
copyright = u'2026, the sexpde developers'

with open(os.path.join('..', 'sexpde', '__init__.py')) as f:
    _version = re.search(r"__version__ = \((\d+), (\d+)", f.read())
version = '%s.%s' % _version.groups()
release = version

exclude_patterns = ['_build']
pygments_style = 'sphinx'

html_theme = 'default'
htmlhelp_basename = 'sexpdedoc'

latex_documents = [
  ('index', 'sexpde.tex', u'sexpde Documentation',
   u'the sexpde developers', 'manual'),
]
