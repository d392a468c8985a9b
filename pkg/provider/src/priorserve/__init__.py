"""priorserve: reference prior provider for the /prior wire protocol."""

__version__ = "0.1.0"

from .protocol import MASK_TOKEN, PriorRequest, PriorResponse
from .scripted import ScriptedResponder, ScriptError
from .server import build_app, serve_stdio

__all__ = [
    "MASK_TOKEN",
    "PriorRequest",
    "PriorResponse",
    "ScriptError",
    "ScriptedResponder",
    "build_app",
    "serve_stdio",
]
