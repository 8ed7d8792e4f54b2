# Minimal Sphinx configuration
import os
import sys

# Add project root to sys.path
sys.path.insert(0, os.path.abspath('..'))

project = 'kinetic-fluid-sim'
extensions = [
    "sphinx.ext.autodoc",
    "sphinx.ext.napoleon",
    "sphinx.ext.viewcode",
    "sphinx.ext.mathjax",
]

master_doc = 'index'
html_theme = 'sphinx_rtd_theme'
