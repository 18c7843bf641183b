try:
    from ._pairlock import *  # noqa: F401,F403  (installed wheel)
except ImportError:  # in-tree build with the build directory on sys.path
    from _pairlock import *  # noqa: F401,F403
