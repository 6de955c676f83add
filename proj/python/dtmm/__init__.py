"""Transfer-matrix solver for homogeneous linear ODEs with variable coefficients."""

try:
    from dtmm._core import *  # noqa: F401,F403  (installed layout)
    from dtmm._core import __doc__ as _core_doc
except ImportError:  # in-tree build: _core sits next to the package on sys.path
    from _core import *  # noqa: F401,F403
    from _core import __doc__ as _core_doc

__doc__ = _core_doc
__version__ = "0.1.0"
