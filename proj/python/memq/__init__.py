"""memq: classification-weighted memory retrieval and synthesis engine.

The compiled extension carries the implementation; this package re-exports it.
When running against an in-tree CMake build, the extension is importable as a
top-level `_core` module via PYTHONPATH.
"""

try:
    from ._core import *  # noqa: F401,F403
    from ._core import __doc__  # noqa: F401
except ImportError:  # in-tree build: extension lives next to the build dir
    from _core import *  # noqa: F401,F403

__version__ = "0.1.0"
