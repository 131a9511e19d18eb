"""Size distributions of convex particles from planar section areas."""

try:
    from ._core import *  # noqa: F401,F403  installed layout
    from ._core import __doc__  # noqa: F401
except ImportError:  # development layout: extension next to the package dir
    from _core import *  # noqa: F401,F403
    from _core import __doc__  # noqa: F401
