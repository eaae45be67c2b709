# flake8: noqa: E402,F401
from logging import getLogger

logger = getLogger('cliffsim')

# Version is defined in pyproject.toml.
# It's copied here to make it easier for client code to check the installed version.
__version__ = '0.3.0'

try:
    from .exceptions import *
    from .models import *
    from .backends import *
    from .circuits import *
    from .noise import *
    from .quasiprob import *
    from .ndecs import *
    from .serializers import *
# Log and ignore ImportErrors, if imported outside a virtualenv (e.g., just to check __version__)
except ImportError as e:
    logger.warning(e)
