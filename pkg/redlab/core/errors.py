from __future__ import annotations

from typing import Any

EXIT_FAILURE = 1
EXIT_USAGE = 2
EXIT_TOO_LARGE = 3
EXIT_OUTPUT = 4


class RedlabError(Exception):
    """Base class for failures the CLI reports with a dedicated exit status."""

    code = "redlab_error"
    exit_code = EXIT_FAILURE

    def __init__(self, message: str, *, details: dict[str, Any] | None = None) -> None:
        super().__init__(message)
        self.message = message
        self.details = details or {}


class InvalidParameterError(RedlabError, ValueError):
    code = "invalid_parameter"
    exit_code = EXIT_USAGE


class InputArityError(InvalidParameterError):
    code = "input_arity"


class InvalidArityError(InvalidParameterError):
    code = "invalid_arity"


class InvalidPatternError(InvalidParameterError):
    code = "invalid_pattern"


class NetlistValidationError(InvalidParameterError):
    code = "invalid_netlist"


class CyclicNetlistError(RedlabError):
    code = "cyclic_netlist"
    exit_code = EXIT_USAGE

    def __init__(self, net: str) -> None:
        super().__init__(f"netlist contains a cycle through net {net!r}", details={"net": net})
        self.net = net


class TooLargeError(RedlabError):
    code = "too_large"
    exit_code = EXIT_TOO_LARGE

    def __init__(self, message: str, *, size: int, cap: int) -> None:
        super().__init__(message, details={"size": size, "cap": cap})
        self.size = size
        self.cap = cap


class OutputWriteError(RedlabError):
    code = "output_write"
    exit_code = EXIT_OUTPUT
