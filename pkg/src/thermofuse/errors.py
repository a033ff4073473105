"""Exception types shared across the package."""


class ThermofuseError(Exception):
    """Base class for every error raised by this package."""


class ShapeError(ThermofuseError, ValueError):
    """Operands have incompatible dimensions."""


class DomainError(ThermofuseError, ValueError):
    """Argument value outside the operation's domain."""


class StateError(ThermofuseError, RuntimeError):
    """Operation invoked in an invalid order, e.g. backward without a forward."""


class EmptyWindowError(ThermofuseError, ValueError):
    """Attention pooling received zero positions."""


class GeometryError(ThermofuseError, ValueError):
    """Degenerate point configuration (coincident or collinear atoms)."""


class PdbParseError(ThermofuseError, ValueError):
    """Malformed PDB record; carries the 1-based offending line number."""

    def __init__(self, message: str, line_number: int | None = None):
        if line_number is not None:
            message = f"line {line_number}: {message}"
        super().__init__(message)
        self.line_number = line_number


class EmptyStructureError(ThermofuseError, ValueError):
    """No usable ATOM records for the requested chain."""


class BoundsError(ThermofuseError, IndexError):
    """Residue position outside the structure or embedding range."""


class ConsistencyError(ThermofuseError, ValueError):
    """Dataset row disagrees with the structure it references."""


class EmbeddingFormatError(ThermofuseError, ValueError):
    """Embedding file has a bad magic string or unreadable header."""


class EmbeddingLengthError(ThermofuseError, ValueError):
    """Embedding payload shorter or longer than the header declares."""


class EmbeddingDataError(ThermofuseError, ValueError):
    """Embedding payload contains non-finite values."""


class DatasetError(ThermofuseError, ValueError):
    """Mutation dataset file is malformed."""


class DataLinkageError(ThermofuseError, ValueError):
    """Dataset rows that cannot be resolved against structures/embeddings."""

    def __init__(self, message: str, rows: list | None = None):
        super().__init__(message)
        self.rows = rows or []


class MetricUndefinedError(ThermofuseError, ValueError):
    """Statistic undefined for the given inputs (e.g. constant vector)."""


class DegenerateModelError(ThermofuseError, ValueError):
    """Training data cannot support the requested model (e.g. one class)."""


class ArtifactIntegrityError(ThermofuseError, ValueError):
    """Model artifact checksum does not match its payload."""


class ArtifactVersionError(ThermofuseError, ValueError):
    """Model artifact declares an unsupported format version."""


class ServiceStartupError(ThermofuseError, RuntimeError):
    """HTTP service could not start (missing artifact, busy port, ...)."""
