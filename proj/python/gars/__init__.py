"""Debiased ranking-score estimation from contextual preference data.

Thin re-export of the compiled extension; see the project README for the
dataset format and the CLI.
"""

try:
    # installed layout: the extension lives inside the package
    from gars._gars import *  # noqa: F401,F403
except ImportError:
    # build-tree layout: the extension is on sys.path directly
    from _gars import *  # noqa: F401,F403
