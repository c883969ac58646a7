from ._core import *  # noqa: F401,F403
from ._core import Error, ConfigError, CalibrationInfeasibleError  # noqa: F401

__version__ = "0.1.0"
