class StyloError(Exception):
    """Base class for all toolkit errors."""


class ValidationError(StyloError):
    """Bad input: malformed files, violated preconditions, unknown names."""


class ConfigError(ValidationError):
    pass


class CorpusError(ValidationError):
    pass


class DataFileError(StyloError):
    """A pinned data file is missing or does not match its checksum."""


class TrainingError(StyloError):
    pass


class StageError(StyloError):
    """Wraps an error raised inside a named pipeline stage."""

    def __init__(self, stage, cause):
        super().__init__(f"stage {stage!r} failed: {cause}")
        self.stage = stage
        self.cause = cause
