"""Localized adversarial domain generalization toolkit.

Thin wrapper over the compiled extension; see the README for the CLI and
file-format documentation.
"""

try:
    from ladg._core import *  # noqa: F401,F403  (installed layout)
    from ladg import _core as _impl
except ImportError:  # build-tree layout: extension sits next to the package
    from _core import *  # noqa: F401,F403
    import _core as _impl

__all__ = [name for name in dir(_impl) if not name.startswith("_")]
