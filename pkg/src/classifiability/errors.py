"""Exception hierarchy. Every error is a ``ValueError`` so callers that only
care about bad input can catch one thing."""


class ClassifiabilityError(ValueError):
    pass


class EmptyDataset(ClassifiabilityError):
    pass


class NonFiniteFeature(ClassifiabilityError):
    def __init__(self, row, col):
        super().__init__(f"non-finite feature value at row {row}, column {col}")
        self.row = row
        self.col = col


class LabelOutOfRange(ClassifiabilityError):
    pass


class EmptyClass(ClassifiabilityError):
    pass


class DimensionMismatch(ClassifiabilityError):
    pass


class IndexOutOfRange(ClassifiabilityError):
    pass


class KTooLarge(ClassifiabilityError):
    pass


class DatasetTooSmall(ClassifiabilityError):
    pass


class EmptyNeighborhood(ClassifiabilityError):
    pass


class SubsampleTooSmall(ClassifiabilityError):
    pass


class DegenerateProblem(ClassifiabilityError):
    pass


class TooManyClusters(ClassifiabilityError):
    pass


class DegenerateSplit(ClassifiabilityError):
    pass


class ParseError(ClassifiabilityError):
    def __init__(self, message, row=None, column=None):
        super().__init__(message)
        self.row = row
        self.column = column


class MissingColumn(ClassifiabilityError):
    pass


class EmptyFile(ClassifiabilityError):
    pass
