"""Geodesics under the Stein score metric g = I + lambda s s^T, plus the embedded-sphere benchmark."""

from ._scoregeo import *  # noqa: F401,F403
from ._scoregeo import __doc__  # noqa: F401
