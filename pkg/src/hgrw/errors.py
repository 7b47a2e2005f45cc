"""Exception hierarchy shared by all hgrw modules."""


class HgrwError(Exception):
    """Base class for errors raised by this package."""


class DataError(HgrwError):
    """Malformed input data: bad files, inconsistent schemas, invalid graphs."""


class NumericError(HgrwError):
    """A computation left its defined domain (non-finite loss, empty ratio, ...)."""


class UndefinedRatioError(NumericError):
    """Homophily ratio requested on an empty or fully unlabeled edge set."""


class UndefinedMeasureError(NumericError):
    """Cluster complexity requested with coincident class centroids."""


class UsageError(HgrwError):
    """Bad command-line invocation."""
