"""Input checks shared by the estimator and the command line."""

from collections.abc import Mapping

from .arith import get_arithmetic
from .exceptions import DataError
from .measures import DiscreteMeasure, _check_dims, as_weights

__all__ = ["check_measure", "check_measures", "check_weights"]


def check_measure(m, arith=None):
    """Coerce one measure-like object into a :class:`DiscreteMeasure`.

    Accepted forms are a ``DiscreteMeasure``, a mapping ``{point: mass}``,
    or a pair ``(points, masses)``.
    """
    arith = get_arithmetic(arith)
    if isinstance(m, DiscreteMeasure):
        if arith.exact or all(isinstance(v, float) for v in m.masses):
            return m
        return m.to_float()
    if isinstance(m, Mapping):
        return DiscreteMeasure(list(m.keys()), list(m.values()), arith=arith)
    try:
        points, masses = m
    except (TypeError, ValueError):
        raise DataError(f"cannot interpret {type(m).__name__} as a measure") from None
    return DiscreteMeasure(points, masses, arith=arith)


def check_measures(X, arith=None):
    """Validate a nonempty sequence of measures of a common dimension."""
    if isinstance(X, (DiscreteMeasure, Mapping)):
        raise DataError("expected a sequence of measures, got a single measure")
    measures = tuple(check_measure(m, arith) for m in X)
    _check_dims(measures)
    return measures


def check_weights(weights, n, arith=None):
    """Weights for ``n`` measures; ``None`` means uniform."""
    return as_weights(weights, n, arith)
