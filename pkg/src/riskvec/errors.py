"""Exception hierarchy shared across the pipeline stages."""


class RiskvecError(Exception):
    """Base class for all errors raised by riskvec."""


class ValidationError(RiskvecError):
    """Bad input or configuration. The CLI maps these to exit code 1."""


class EmptyInputError(ValidationError):
    pass


class InsufficientDataError(ValidationError):
    """Not enough usable observations to build a trajectory or a model."""


class UndefinedBearingError(ValidationError):
    pass


class SurfaceLoadError(ValidationError):
    pass


class CollinearityError(ValidationError):
    def __init__(self, message, columns=()):
        super().__init__(message)
        self.columns = list(columns)


class MissingArtifactError(ValidationError):
    pass
