"""Exception hierarchy shared by the library, the service and the CLI."""


class QuanvError(Exception):
    """Base class for all package errors."""


class InvalidArgumentError(QuanvError, ValueError):
    pass


class ResourceLimitError(QuanvError, RuntimeError):
    """Raised when a request would exceed a hard size cap (e.g. dense unitaries)."""


class FormatError(QuanvError, ValueError):
    """Raised for malformed audio, feature-cache or image files."""


class TransportError(QuanvError, ConnectionError):
    """Network-level failure talking to the extraction server. Safe to retry."""

    retryable = True


class RemoteError(QuanvError):
    """The server answered with an error body ``{"error": CODE, "detail": ...}``."""

    retryable = False

    def __init__(self, code, detail, status=None):
        super().__init__(f"{code}: {detail}")
        self.code = code
        self.detail = detail
        self.status = status


class StartupError(QuanvError, OSError):
    """The extraction server could not bind or load its registry."""
