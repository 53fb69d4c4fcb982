"""Exception hierarchy shared across the package.

The CLI maps these onto exit codes: ``ConfigError`` -> 1, ``DataError`` -> 2.
"""


class SparkPerfError(Exception):
    """Base class for all errors raised by sparkperf."""


class ConfigError(SparkPerfError, ValueError):
    """Invalid configuration, hyper-parameters or arguments."""


class DataError(SparkPerfError, ValueError):
    """Invalid or inconsistent input data."""


class RunValidationError(DataError):
    """A run record violates one of its invariants.

    ``field`` names the offending attribute so callers can tell the
    failure kinds apart without parsing the message.
    """

    def __init__(self, field, message):
        super().__init__(f"{field}: {message}")
        self.field = field


class LogParseError(DataError):
    """Malformed or incomplete event log.

    ``kind`` is one of ``"truncated log"``, ``"orphan task"``,
    ``"malformed json"`` or ``"stage without tasks"``.
    """

    def __init__(self, kind, message, line=None):
        where = f" (line {line})" if line is not None else ""
        super().__init__(f"{kind}{where}: {message}")
        self.kind = kind
        self.line = line


class FeatureError(DataError):
    """A feature matrix could not be built for a run."""

    def __init__(self, message, run_index=None):
        prefix = f"run {run_index}: " if run_index is not None else ""
        super().__init__(prefix + message)
        self.run_index = run_index


class SplitError(DataError):
    """A scenario split is inconsistent with a dataset or grid."""


class DivergenceError(SparkPerfError, ArithmeticError):
    """Neural-network training produced a non-finite loss."""

    def __init__(self, epoch):
        super().__init__(f"divergence: non-finite loss at epoch {epoch}")
        self.epoch = epoch
