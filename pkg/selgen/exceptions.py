class SelgenError(Exception):
    """Base class for every error raised by selgen."""


class InvalidArgument(SelgenError, ValueError):
    pass


class CorpusParseError(SelgenError):
    def __init__(self, path, message):
        self.path = path
        super(CorpusParseError, self).__init__('%s: %s' % (path, message))


class EmptyDatasetError(SelgenError):
    pass


class AlignmentError(SelgenError):
    pass


class InputTooLongError(SelgenError):
    pass


class InvariantViolation(SelgenError):
    pass


class NumericError(SelgenError):
    def __init__(self, message, layer=None, step=None):
        self.layer = layer
        self.step = step
        super(NumericError, self).__init__(message)


class StageError(SelgenError):
    def __init__(self, stage, cause):
        self.stage = stage
        self.cause = cause
        super(StageError, self).__init__(
            'stage %r failed: %s' % (stage, cause))


class RunLockedError(SelgenError):
    """Another process owns the run directory."""
