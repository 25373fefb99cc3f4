"""Arithmetic modes: exact rationals or binary floats with a relative tolerance."""

from dataclasses import dataclass
from fractions import Fraction
from numbers import Rational

__all__ = ["Arithmetic", "RATIONAL", "FLOAT", "get_arithmetic"]


@dataclass(frozen=True)
class Arithmetic:
    """Scalar policy shared by every step of one computation.

    Parameters
    ----------
    kind : {"rational", "float"}
        ``"rational"`` keeps every value a :class:`fractions.Fraction` and
        compares exactly. ``"float"`` uses Python floats and compares with the
        relative tolerance ``tol``.
    tol : float
        Relative tolerance used by float comparisons. Ignored in rational mode.
    """

    kind: str = "rational"
    tol: float = 1e-9

    def __post_init__(self):
        if self.kind not in ("rational", "float"):
            raise ValueError(f"unknown arithmetic kind {self.kind!r}")
        if not self.tol > 0:
            raise ValueError("tolerance must be positive")

    @property
    def exact(self):
        return self.kind == "rational"

    def scalar(self, x):
        if self.exact:
            if isinstance(x, Fraction):
                return x
            if isinstance(x, (int, Rational)):
                return Fraction(x)
            if isinstance(x, str):
                return Fraction(x.strip())
            # decimal semantics for binary floats: 0.1 -> 1/10
            return Fraction(repr(float(x)))
        if isinstance(x, str):
            return float(Fraction(x.strip()))
        return float(x)

    def point(self, coords):
        return tuple(self.scalar(c) for c in coords)

    def eq(self, a, b):
        if self.exact:
            return a == b
        return abs(a - b) <= self.tol * max(1.0, abs(a), abs(b))

    def is_zero(self, a):
        if self.exact:
            return a == 0
        return abs(a) <= self.tol

    def is_positive(self, a):
        if self.exact:
            return a > 0
        return a > self.tol

    def points_equal(self, p, q):
        if self.exact:
            return p == q
        return all(abs(a - b) <= self.tol * max(1.0, abs(a), abs(b)) for a, b in zip(p, q))


RATIONAL = Arithmetic("rational")
FLOAT = Arithmetic("float")


def get_arithmetic(arith=None, tol=None):
    """Coerce ``None``, a kind string, or an :class:`Arithmetic` into an :class:`Arithmetic`."""
    if arith is None:
        arith = "rational"
    if isinstance(arith, Arithmetic):
        if tol is not None and tol != arith.tol:
            return Arithmetic(arith.kind, tol)
        return arith
    return Arithmetic(arith, 1e-9 if tol is None else tol)
