"""Exception hierarchy shared by all aifedge modules."""


class AifEdgeError(Exception):
    """Base class for every error raised by the package."""


class InvalidConfigurationError(AifEdgeError, ValueError):
    pass


class ThresholdEvaluationError(AifEdgeError, ValueError):
    pass


class MissingMetricError(AifEdgeError, KeyError):
    def __str__(self):
        return Exception.__str__(self)


class EmptyBatchError(AifEdgeError, ValueError):
    pass


class ConfigurationError(AifEdgeError, ValueError):
    """Malformed scenario, SLO set or experiment definition."""


class SchemaError(AifEdgeError, ValueError):
    """Variables of a dataset, model or query do not line up."""


class ColdStartError(AifEdgeError, RuntimeError):
    pass


class DegenerateHistoryError(AifEdgeError, ZeroDivisionError):
    pass


class ProfileNotFoundError(AifEdgeError, FileNotFoundError):
    pass


class ReplaySchemaError(AifEdgeError, ValueError):
    pass
