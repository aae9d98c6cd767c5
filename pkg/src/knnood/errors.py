"""Exception hierarchy shared by every module.

Everything derives from :class:`KnnOodError` (itself a ``ValueError``) so
callers can catch one type. The CLI maps :class:`DegenerateDataError` to exit
code 3 and everything else to exit code 2.
"""


class KnnOodError(ValueError):
    pass


class DegenerateDataError(KnnOodError):
    """Input is well formed but numerically collapsed."""


# tensor_io
class FormatError(KnnOodError):
    pass


class BadMagic(FormatError):
    pass


class UnsupportedVersion(FormatError):
    pass


class TruncatedPayload(FormatError):
    pass


class NonFiniteValue(FormatError):
    pass


class RaggedRows(FormatError):
    pass


class NonNumericCell(FormatError):
    pass


class InconsistentExampleCount(KnnOodError):
    pass


class EmptyStack(KnnOodError):
    pass


# knn_core
class EmptyPointSet(KnnOodError):
    pass


class KTooLarge(KnnOodError):
    pass


class DimensionMismatch(KnnOodError):
    pass


class ZeroRadius(DegenerateDataError):
    pass


# ood_scoring
class DegenerateNormalizer(DegenerateDataError):
    pass


class KMismatch(KnnOodError):
    pass


class EmptyLayerList(KnnOodError):
    pass


# eval_metrics
class EmptyClass(KnnOodError):
    pass


class EmptyInput(KnnOodError):
    pass


class NonPositiveBinCount(KnnOodError):
    pass


# theory_lab
class InteriorPoint(KnnOodError):
    pass


class InvalidParameter(KnnOodError):
    pass
