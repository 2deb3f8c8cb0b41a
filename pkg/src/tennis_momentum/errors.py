"""Exception and warning types shared by every module.

Each exception carries an ``exit_code`` used by the command line front end:
1 for usage problems, 2 for bad or insufficient data, 3 for numerical failure.
"""


class MomentumError(Exception):
    exit_code = 2


class UsageError(MomentumError):
    exit_code = 1


class SelectorError(UsageError):
    """A match id or player selector did not resolve."""


class DataError(MomentumError):
    exit_code = 2


class SchemaError(DataError):
    pass


class RowError(DataError):
    def __init__(self, row, message):
        self.row = row
        super().__init__(f"row {row}: {message}")


class EmptyDatasetError(DataError):
    pass


class EncodingError(DataError):
    pass


class UnknownColumnError(DataError):
    pass


class EmptySeriesError(DataError):
    pass


class EmptySubsetError(DataError):
    pass


class DegenerateLabelsError(DataError):
    pass


class FeatureMismatchError(DataError):
    pass


class InsufficientDataError(DataError):
    pass


class DomainError(MomentumError):
    """Non-finite input or an otherwise ill-posed numerical problem."""

    exit_code = 3


class MomentumWarning(UserWarning):
    pass


class DegeneracyWarning(MomentumWarning):
    pass


class SeparationWarning(MomentumWarning):
    pass


class ConstantColumnWarning(MomentumWarning):
    pass
