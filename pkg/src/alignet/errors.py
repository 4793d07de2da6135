"""Exception hierarchy shared by every pipeline module."""

from __future__ import annotations

from pathlib import Path


class AlignetError(RuntimeError):
    pass


class InputError(AlignetError):
    """An argument or precondition violation."""


class ValidationError(AlignetError):
    """External data (lexicon, corpus, config) failed validation."""


class CorruptInputError(ValidationError):
    def __init__(self, *, path: Path, total: int, rejected: int) -> None:
        self.path = path
        self.total = total
        self.rejected = rejected
        super().__init__(
            f"{path}: {rejected} of {total} lines rejected; "
            "the file does not match the expected schema."
        )


class ConsistencyError(AlignetError):
    """Two artifacts disagree (missing score, unlabeled node, ...)."""


class MissingArtifactError(AlignetError):
    def __init__(self, path: Path, *, stage: str) -> None:
        self.path = path
        self.stage = stage
        super().__init__(
            f"Missing upstream artifact {path} required by stage `{stage}`."
        )
