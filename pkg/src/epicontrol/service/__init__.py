"""Interactive decision service (REST over HTTP)."""

from .app import create_app
from .sessions import Session, SessionError, SessionStore

__all__ = ["Session", "SessionError", "SessionStore", "create_app"]
