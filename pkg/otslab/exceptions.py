from typing import Optional


class OtsLabError(Exception):
    """Base class for every error raised by otslab."""


class UnknownParameterSetError(OtsLabError, LookupError):
    """Registry or digest lookup failed."""

    def __init__(self, name: str, kind: str = "parameter set") -> None:
        self.name = name
        self.kind = kind
        super().__init__(f"Unknown {kind}: {name!r}")


class DomainError(OtsLabError, ValueError):
    """An argument lies outside the range an operation accepts."""


class UnsupportedParametersError(OtsLabError, ValueError):
    """Parameters cannot support the requested operation (e.g. even multiplier)."""


class HexFormatError(OtsLabError, ValueError):
    pass


class KeyFileParseError(OtsLabError, ValueError):
    """A key or signature file could not be parsed."""

    def __init__(self, message: str, line: Optional[int] = None, field: Optional[str] = None) -> None:
        self.line = line
        self.field = field
        location = []
        if line is not None:
            location.append(f"line {line}")
        if field is not None:
            location.append(f"field {field!r}")
        if location:
            message = f"{message} ({', '.join(location)})"
        super().__init__(message)


class KeyConsistencyError(OtsLabError, ValueError):
    """Stored public material does not match the private material."""


class KeyReuseError(OtsLabError, RuntimeError):
    """A one-time key was already used or claimed."""


class BenchConfigurationError(OtsLabError, ValueError):
    pass
