"""Unified response wrapper for all byzantine-secretary commands."""

from byzantine_secretary._errors import SecretaryError


def success(data, message=""):
    """Wrap a successful result."""
    return {"status": True, "data": data, "message": message}


def error(message, data=None):
    """Wrap an error result."""
    return {"status": False, "data": data, "message": message}


def from_exception(exc):
    """Wrap an exception raised by a private module.

    Library errors carry a stable ``error_code`` which is surfaced in ``data``
    so the CLI can pick its exit code; anything else is reported verbatim.
    """
    code = getattr(exc, "error_code", None) if isinstance(exc, SecretaryError) else None
    if code is None and isinstance(exc, ValueError):
        code = "CONFIG_ERROR"
    if code is None and isinstance(exc, OSError):
        code = "IO_ERROR"
    return error(str(exc), {"error_code": code} if code else None)
