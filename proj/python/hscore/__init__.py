"""Prequential Hyvarinen-score and log-evidence estimation (C++ core)."""

try:
    from ._hscore import *  # noqa: F401,F403  (installed package layout)
    from ._hscore import __version__  # noqa: F401
except ImportError:  # build-tree layout: extension on PYTHONPATH
    from _hscore import *  # noqa: F401,F403
    from _hscore import __version__  # noqa: F401
