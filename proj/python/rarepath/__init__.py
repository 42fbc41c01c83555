"""Rare-disease patient-pathway simulation, random-forest alerting and
referral-threshold optimization (C++ core)."""

from ._rarepath import *  # noqa: F401,F403
from ._rarepath import __version__  # noqa: F401
