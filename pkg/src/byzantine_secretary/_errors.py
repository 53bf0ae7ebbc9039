"""Exception hierarchy shared by every subpackage.

Each error carries a stable ``error_code`` so command envelopes and the CLI
can report failures without parsing messages.
"""

from __future__ import annotations


class SecretaryError(Exception):
    """Base class for all library errors."""

    error_code = "SECRETARY_ERROR"

    def __init__(self, message: str, *, details: dict | None = None):
        super().__init__(message)
        self.details = details or {}


class InstanceValidationError(SecretaryError, ValueError):
    """An instance, stream or generator output violates a model invariant."""

    error_code = "INVALID_INSTANCE"


class ContractViolationError(SecretaryError):
    """A policy broke the online contract (e.g. tried to select a past element)."""

    error_code = "CONTRACT_VIOLATION"


class UndefinedPosteriorError(SecretaryError):
    """The conditioning event of a posterior has zero mass."""

    error_code = "UNDEFINED_POSTERIOR"


class PosteriorBudgetError(SecretaryError):
    """Neither exact enumeration nor rejection sampling fits the compute budget."""

    error_code = "POSTERIOR_BUDGET"


class OracleFailure(SecretaryError):
    """An offline benchmark oracle could not produce a value."""

    error_code = "ORACLE_FAILURE"


class OracleInconsistencyError(OracleFailure):
    """An independence oracle contradicted itself (not downward closed)."""

    error_code = "ORACLE_INCONSISTENT"


class ConfigError(SecretaryError, ValueError):
    """Invalid experiment, algorithm or family parameters."""

    error_code = "CONFIG_ERROR"


class UnknownAlgorithmError(ConfigError):
    """The algorithm name is not registered."""

    error_code = "UNKNOWN_ALGORITHM"
