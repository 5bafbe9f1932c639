# Future
from __future__ import division, print_function, unicode_literals

extensions = []

templates_path = ["_templates"]

source_suffix = ".rst"

master_doc = "index"

project = "cuspfunnel"
copyright = "2026, cuspfunnel developers"

version = "1.0"
release = "1.0.0"

exclude_patterns = ["_build", "links.rst"]

with open("links.rst") as f:
    rst_epilog = f.read()

pygments_style = "sphinx"

html_theme = "default"

html_static_path = ["_static"]

htmlhelp_basename = "cuspfunneldoc"

latex_documents = [
    (
        "index",
        "cuspfunnel.tex",
        "cuspfunnel Documentation",
        "cuspfunnel developers",
        "manual",
    ),
]

man_pages = [
    ("index", "cuspfunnel", "cuspfunnel Documentation", ["cuspfunnel developers"], 1)
]
