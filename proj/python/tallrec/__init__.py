"""Loss-driven mixture-of-experts recommender with adaptive per-user loss weights."""

try:
    from ._core import *  # noqa: F401,F403  (installed layout)
    from ._core import __doc__ as _core_doc  # noqa: F401
except ImportError:  # in-build layout: _core.so sits on sys.path, not in the package
    from _core import *  # noqa: F401,F403

try:
    from ._core import __version__
except ImportError:
    try:
        from _core import __version__
    except ImportError:  # extension built without a version stamp
        __version__ = "0.0.0"
