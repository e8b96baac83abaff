"""Exception types raised across the package."""


class PivotPruneError(Exception):
    """Base class for all errors raised by pivotprune."""


class MissingFeaturesError(PivotPruneError, ValueError):
    pass


class DimensionMismatchError(PivotPruneError, ValueError):
    pass


class ZeroVectorError(PivotPruneError, ValueError):
    """Angular distance is undefined for the zero vector."""


class DatasetError(PivotPruneError, ValueError):
    pass


class SpecMismatchError(PivotPruneError, ValueError):
    """A pivot set or table was built with a different distance."""


class IndexFormatError(PivotPruneError):
    """Bad magic, unsupported version, or truncated index file."""


class FingerprintMismatchError(PivotPruneError):
    """The index on disk was built from a different dataset."""


class EventLogError(PivotPruneError, ValueError):
    pass
