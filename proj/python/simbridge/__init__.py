from ._simbridge import *  # noqa: F401,F403
from ._simbridge import __doc__  # noqa: F401
