"""Exception hierarchy shared by all hedkit modules.

Every error carries a stable ``code`` string so the CLI and HTTP service
can emit machine-readable payloads.
"""


class HedkitError(Exception):
    """Base class for all hedkit errors."""

    code = "error"

    def payload(self) -> dict:
        return {"code": self.code, "message": str(self)}


# audio --------------------------------------------------------------------

class AudioParseError(HedkitError):
    """Malformed RIFF/WAVE container. Carries the byte offset of the fault."""

    code = "audio-parse"

    def __init__(self, message: str, offset: int):
        super().__init__(f"{message} (byte offset {offset})")
        self.offset = offset


class UnsupportedFormatError(HedkitError):
    code = "audio-unsupported-format"


class InvalidSegmentError(HedkitError):
    code = "invalid-segment"


# alignment ----------------------------------------------------------------

class TierNotFoundError(HedkitError):
    code = "named-tier-not-found"


class AlignmentValidationError(HedkitError):
    code = "alignment-validation"


class ContainmentError(AlignmentValidationError):
    code = "alignment-containment"


class SchemaError(HedkitError):
    """Schema violation in a JSON/CSV file; ``path`` names the offending field."""

    code = "schema"

    def __init__(self, message: str, path: str = ""):
        super().__init__(f"{path}: {message}" if path else message)
        self.path = path


# ranker -------------------------------------------------------------------

class InsufficientDataError(HedkitError):
    code = "insufficient-data"


class ModelFileError(HedkitError):
    code = "model-corrupt-file"


class ModelVersionError(ModelFileError):
    code = "model-version"


# hed ----------------------------------------------------------------------

class EmptyHierarchyError(HedkitError):
    code = "empty-hierarchy"


class IncompleteBankError(HedkitError):
    code = "incomplete-bank"


class HedValidationError(HedkitError):
    code = "hed-validation"


# editor -------------------------------------------------------------------

class EditIndexError(HedkitError):
    code = "edit-index"


class UnknownEmotionError(HedkitError):
    code = "unknown-emotion"


class ShapeMismatchError(HedkitError):
    code = "shape-mismatch"
