"""Exception hierarchy shared across the engine."""


class LabelvoteError(Exception):
    """Base class for all errors raised by this package."""


class InvalidInput(LabelvoteError):
    """A caller violated an operation's precondition."""


# --- model selection ---------------------------------------------------------

class SelectionSourceUnavailable(LabelvoteError):
    """Neither the model hub nor a local catalog could be used."""


class SelectionParseError(LabelvoteError):
    """The ranking LLM's reply could not be parsed into known model ids."""


class InsufficientCandidates(LabelvoteError):
    """Fewer candidates than the number of models requested."""


# --- prompting / review ------------------------------------------------------

class TemplateError(LabelvoteError):
    """A template was rendered without all of its required placeholders."""

    def __init__(self, template_name: str, missing: list[str]):
        self.template_name = template_name
        self.missing = sorted(missing)
        super().__init__(f"template {template_name!r} missing placeholders: {', '.join(self.missing)}")


class UnresolvedSample(LabelvoteError):
    """Every review attempt produced an unparseable label."""

    def __init__(self, sample_id: str, attempts: int, last_response: str):
        self.sample_id = sample_id
        self.attempts = attempts
        self.last_response = last_response
        super().__init__(f"sample {sample_id!r} unresolved after {attempts} attempts")


class LlmUnavailable(LabelvoteError):
    """Chat-completion transport failed after exhausting retries."""


# --- backend gateway ---------------------------------------------------------

class DuplicateBackend(LabelvoteError):
    """A backend id was registered twice."""


class LabelMapError(LabelvoteError):
    """A backend declares labels that cannot be mapped onto the schema."""

    def __init__(self, backend_id: str, offending: list[str]):
        self.backend_id = backend_id
        self.offending = sorted(offending)
        super().__init__(f"backend {backend_id!r} has unmappable labels: {', '.join(self.offending)}")


class BackendUnavailable(LabelvoteError):
    """A single backend failed its health probe or all transport retries."""


class FanoutFailed(LabelvoteError):
    """Every registered backend failed for a batch; the run must pause."""


class RefineFailed(LabelvoteError):
    """A fine-tuning cycle failed on at least one backend; no versions changed."""


class IllegalState(LabelvoteError):
    """An operation was attempted in a scheduler state that forbids it."""


# --- pipeline ----------------------------------------------------------------

class IngestError(LabelvoteError):
    """A dataset row is malformed."""

    def __init__(self, row: int, reason: str):
        self.row = row
        self.reason = reason
        super().__init__(f"row {row}: {reason}")


class ChecksumError(LabelvoteError):
    """A checkpoint file is corrupt or has an unknown format version."""
