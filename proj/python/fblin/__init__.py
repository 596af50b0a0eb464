"""Single-track vehicle model, feedback-linearising control laws and
closed-loop stability analysis."""

from ._core import *  # noqa: F401,F403
from ._core import tool_version as __version__  # noqa: F401
