# -*- coding: utf-8 -*-
#
# Sphinx configuration for the depthcal documentation.

import os
import sys

sys.path.insert(0, os.path.abspath('..'))

extensions = [
    'sphinx.ext.autodoc',
    'sphinx.ext.viewcode',
]

master_doc = 'index'
exclude_patterns = ['_build']

project = 'depthcal'
author = 'The depthcal authors'
copyright = '2026, The depthcal authors'
version = '0.1'
release = version

html_theme = 'alabaster'
