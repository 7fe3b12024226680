"""Exception types shared across the package."""


class DoconsistError(Exception):
    """Base class for all package-specific errors."""


class NonSquareError(DoconsistError):
    pass


class NonBinaryEntryError(DoconsistError):
    pass


class TimeOrderViolation(DoconsistError):
    """An adjacency entry on or above the diagonal is set.

    Carries the offending (effect, cause) position, 1-based.
    """

    def __init__(self, i, j):
        self.i = i
        self.j = j
        super().__init__(f"entry ({i},{j}) violates the time order (need cause < effect)")


class DimensionMismatch(DoconsistError):
    pass


class ArityOutOfRange(DoconsistError):
    pass


class IndexOutOfRange(DoconsistError):
    pass


class CapacityExceeded(DoconsistError):
    pass


class SchemaError(DoconsistError):
    """Malformed on-disk document; carries the offending field path."""

    def __init__(self, path, message):
        self.path = path
        super().__init__(f"{path}: {message}")


class ShapeMismatch(DoconsistError):
    pass


class MissingHead(DoconsistError):
    def __init__(self, view):
        self.view = view
        super().__init__(f"no augmentation head for view {view}")


class NonFiniteLoss(DoconsistError):
    def __init__(self, epoch):
        self.epoch = epoch
        super().__init__(f"non-finite loss at epoch {epoch}")


class SingleClass(DoconsistError):
    pass


class MissingAnswer(DoconsistError):
    def __init__(self, k):
        self.k = k
        super().__init__(f"answer {k} not found in oracle output")


class AmbiguousAnswer(DoconsistError):
    def __init__(self, k):
        self.k = k
        super().__init__(f"answer {k} has no yes/no token before the next answer")


class DegenerateDialogue(DoconsistError):
    pass


class OracleFailure(DoconsistError):
    """Oracle transport or parsing failed after retries.

    ``partial_trace`` holds whatever iterations completed before the abort.
    """

    def __init__(self, message, partial_trace=None):
        self.partial_trace = partial_trace or []
        super().__init__(message)
