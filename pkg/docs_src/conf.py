# -*- coding: utf-8 -*-
#
# Configuration file for the Sphinx documentation builder.
#
# This file does only contain a selection of the most common options. For a
# full list see the documentation:
# http://www.sphinx-doc.org/en/master/config
# pylint: disable=invalid-name, missing-docstring, redefined-builtin

# -- Path setup --------------------------------------------------------------

import os
import sys

sys.path.insert(0, os.path.abspath(".."))

import sphinx_bootstrap_theme  # noqa: E402

# -- Project information -----------------------------------------------------

project = "KerBil"
copyright = "2025-2026 the KerBil developers"
author = "KerBil Team"

# The short X.Y version
version = "26.10.0"
# The full version, including alpha/beta/rc tags
release = "26.10.0"


# -- General configuration ---------------------------------------------------

extensions = [
    "sphinx.ext.autodoc",
    "sphinx.ext.mathjax",
    "sphinx.ext.napoleon",
    "sphinx.ext.viewcode",
    "sphinx.ext.todo",
]

templates_path = ["_templates"]
source_suffix = ".rst"
master_doc = "index"
language = "en"
exclude_patterns = ["_build", "Thumbs.db", ".DS_Store"]
pygments_style = None


# -- Options for HTML output -------------------------------------------------

html_theme = "bootstrap"
html_theme_path = sphinx_bootstrap_theme.get_html_theme_path()
html_theme_options = {
    "bootswatch_theme": "lumen",
    "navbar_links": [
        ("Running KerBil", "documentation_running_kerbil"),
        ("Configuration", "documentation_configuration"),
        ("Errors", "documentation_errors"),
        ("Code Documentation", "kerbil"),
    ],
    "navbar_sidebarrel": False,
    "navbar_pagenav": False,
    "globaltoc_depth": -1,
    "globaltoc_includehidden": "true",
}
html_sidebars = {"**": []}
html_show_sourcelink = False
htmlhelp_basename = "kerbildoc"


# -- Options for other output formats ----------------------------------------

latex_documents = [
    (master_doc, "kerbil.tex", "KerBil Documentation", author, "manual"),
]
man_pages = [(master_doc, "kerbil", "KerBil Documentation", [author], 1)]


# -- Extension configuration -------------------------------------------------

add_module_names = False
autodoc_member_order = "bysource"
autoclass_content = "init"
todo_include_todos = True
