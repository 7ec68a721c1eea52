from typing import Any, Union


class KnownError(Exception):
    inner = None
    exit_code = 1

    def __init__(self, message: str, inner: Union[Any, None] = None):
        super().__init__(message)
        self.inner = inner

    def get_pretty(self) -> str:
        if self.inner:
            return f"""{self}
... {self.inner}
"""
        return str(self)


class ProgrammingError(KnownError):
    pass


class BadUsage(KnownError):
    exit_code = 2

    def __init__(self, message: str):
        super().__init__(f"Bad usage: {message}.")


class BadFile(KnownError):
    exit_code = 3

    def __init__(self, filename: str, inner=None):
        super().__init__(f"Bad file: {filename}.", inner)


class ClickFileError(BadFile):
    def __init__(self, filename: str, message: str):
        super().__init__(filename, message)


class BadInputError(KnownError):
    exit_code = 4

    def __init__(self, input: str, message: str):
        super().__init__(f"Bad input [{input}]: {message}")


class CumulantOrderError(BadInputError):
    def __init__(self, order: int, samples: int):
        super().__init__("samples", f"order {order} cumulant needs at least {order} samples, got {samples}")


class UnknownConfigurationError(KnownError):
    exit_code = 4

    def __init__(self, name: str):
        super().__init__(f"Configuration entry is not known: {name}.")


class ConfigurationError(KnownError):
    exit_code = 4

    def __init__(self, message: str):
        super().__init__(f"Bad configuration: {message}.")


class InsufficientFramesError(KnownError):
    exit_code = 5

    def __init__(self, frames: int, needed: int):
        super().__init__(f"Not enough frames: got {frames}, need at least {needed}. Use a shorter frame length or fewer batches.")


class FormatVersionError(KnownError):
    exit_code = 6

    def __init__(self, filename: str, found: str, supported: str):
        super().__init__(f"File [{filename}] has format version {found}, this tool supports {supported}.")


class OutputExistsError(KnownError):
    exit_code = 7

    def __init__(self, filename: str):
        super().__init__(f"Output [{filename}] already exists. Pass --force to overwrite.")


class DegenerateSteadyStateError(KnownError):
    exit_code = 8

    def __init__(self, count: int):
        super().__init__(f"Expected exactly one zero eigenvalue, found {count}. The Markov graph is probably disconnected.")


class DefectiveLiouvillianError(KnownError):
    exit_code = 8

    def __init__(self, residual: float):
        super().__init__(f"Liouvillian is (nearly) defective, reconstruction residual {residual:.3e}. Perturb the rates slightly.")


class FitError(KnownError):
    exit_code = 9

    def __init__(self, message: str, inner=None):
        super().__init__(f"Fit failed: {message}.", inner)
