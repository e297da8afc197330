"""Exact quadratic surds p + q*sqrt(d) over the rationals.

Regime boundaries such as lambda = -24/23 sit on measure-zero sets, so
every classification decision is made with these objects rather than
with floats.  A surd with a negative radicand is a complex number.
"""

from __future__ import annotations

import cmath
import math
from fractions import Fraction
from numbers import Rational

__all__ = ["Surd", "as_fraction", "is_square", "rational_sqrt"]


def as_fraction(value) -> Fraction:
    """Convert an int, Fraction or ``"p/q"`` string to a Fraction.

    Floats are refused: an exact rational is required.
    """
    if isinstance(value, Fraction):
        return value
    if isinstance(value, bool):
        raise TypeError("booleans are not rationals")
    if isinstance(value, (int, Rational)):
        return Fraction(value)
    if isinstance(value, str):
        return Fraction(value.strip())
    raise TypeError(f"expected an exact rational, got {type(value).__name__}")


def _isqrt_exact(n: int) -> int | None:
    if n < 0:
        return None
    s = math.isqrt(n)
    return s if s * s == n else None


def rational_sqrt(x: Fraction) -> Fraction | None:
    """Return sqrt(x) if it is rational, else None."""
    x = Fraction(x)
    if x < 0:
        return None
    num = _isqrt_exact(x.numerator)
    den = _isqrt_exact(x.denominator)
    if num is None or den is None:
        return None
    return Fraction(num, den)


def is_square(x: Fraction) -> bool:
    return rational_sqrt(x) is not None


class Surd:
    """The number ``p + q*sqrt(d)`` with rational p, q, d.

    When ``d`` is the square of a rational the surd part is folded into
    ``p`` so that equality and hashing are structural.
    """

    __slots__ = ("p", "q", "d")

    def __init__(self, p, q=0, d=0):
        p = as_fraction(p)
        q = as_fraction(q)
        d = as_fraction(d)
        root = rational_sqrt(d)
        if root is not None:
            p += q * root
            q = Fraction(0)
        if q == 0:
            q = Fraction(0)
        self.p = p
        self.q = q
        self.d = d

    # -- predicates ---------------------------------------------------
    @property
    def is_rational(self) -> bool:
        return self.q == 0

    @property
    def is_real(self) -> bool:
        return self.q == 0 or self.d > 0

    @property
    def is_imaginary(self) -> bool:
        """Pure imaginary, nonzero."""
        return self.p == 0 and self.q != 0 and self.d < 0

    def sign(self) -> int:
        """Exact sign of a real surd."""
        if not self.is_real:
            raise ValueError("sign of a complex surd is undefined")
        p, q = self.p, self.q
        if q == 0:
            return (p > 0) - (p < 0)
        qs = 1 if q > 0 else -1
        if p == 0:
            return qs
        ps = 1 if p > 0 else -1
        if ps == qs:
            return ps
        # opposite signs: compare p^2 with q^2 d
        diff = p * p - q * q * self.d
        return ps if diff > 0 else qs

    @property
    def real_part(self) -> Fraction | Surd:
        if self.is_real:
            return self
        return Surd(self.p, 0, self.d)

    # -- arithmetic ---------------------------------------------------
    def _coerce(self, other) -> Surd:
        if isinstance(other, Surd):
            if other.q != 0 and self.q != 0 and other.d != self.d:
                raise ValueError("surds with different radicands")
            return other
        return Surd(as_fraction(other), 0, self.d)

    def _radicand(self, other: Surd) -> Fraction:
        return self.d if self.q != 0 else other.d

    def __add__(self, other):
        try:
            o = self._coerce(other)
        except TypeError:
            return NotImplemented
        return Surd(self.p + o.p, self.q + o.q, self._radicand(o))

    __radd__ = __add__

    def __neg__(self):
        return Surd(-self.p, -self.q, self.d)

    def __sub__(self, other):
        try:
            o = self._coerce(other)
        except TypeError:
            return NotImplemented
        return self + (-o)

    def __rsub__(self, other):
        return (-self) + other

    def __mul__(self, other):
        try:
            o = self._coerce(other)
        except TypeError:
            return NotImplemented
        d = self._radicand(o)
        return Surd(self.p * o.p + self.q * o.q * d,
                    self.p * o.q + self.q * o.p, d)

    __rmul__ = __mul__

    def __truediv__(self, other):
        if isinstance(other, Surd) and not other.is_rational:
            # multiply by the conjugate
            conj = Surd(other.p, -other.q, other.d)
            den = other * conj
            return (self * conj) / den.p
        o = as_fraction(other.p if isinstance(other, Surd) else other)
        return Surd(self.p / o, self.q / o, self.d)

    def conjugate_root(self) -> Surd:
        """``p - q*sqrt(d)``."""
        return Surd(self.p, -self.q, self.d)

    # -- comparisons --------------------------------------------------
    def __eq__(self, other):
        if isinstance(other, Surd):
            if self.q == 0 and other.q == 0:
                return self.p == other.p
            return self.p == other.p and self.q == other.q and self.d == other.d
        try:
            return self.q == 0 and self.p == as_fraction(other)
        except TypeError:
            return NotImplemented

    def __hash__(self):
        if self.q == 0:
            return hash(self.p)
        return hash((self.p, self.q, self.d))

    def __lt__(self, other):
        return (self - other).sign() < 0

    def __le__(self, other):
        return (self - other).sign() <= 0

    def __gt__(self, other):
        return (self - other).sign() > 0

    def __ge__(self, other):
        return (self - other).sign() >= 0

    # -- conversions --------------------------------------------------
    def __complex__(self):
        if self.q == 0:
            return complex(float(self.p))
        root = cmath.sqrt(float(self.d))
        return complex(float(self.p) + float(self.q) * root)

    def __float__(self):
        if not self.is_real:
            raise TypeError("complex surd has no float value")
        if self.q == 0:
            return float(self.p)
        return float(self.p) + float(self.q) * math.sqrt(float(self.d))

    def to_gmpy(self):
        """Value as a gmpy2 mpc at the current context precision."""
        import gmpy2

        p = gmpy2.mpq(self.p.numerator, self.p.denominator)
        if self.q == 0:
            return gmpy2.mpc(p)
        q = gmpy2.mpq(self.q.numerator, self.q.denominator)
        root = gmpy2.sqrt(gmpy2.mpc(gmpy2.mpq(self.d.numerator, self.d.denominator)))
        return gmpy2.mpc(p) + q * root

    def value(self):
        """Float or complex value, whichever is natural."""
        return float(self) if self.is_real else complex(self)

    def __repr__(self):
        return f"Surd({self.p}, {self.q}, {self.d})"

    def __str__(self):
        if self.q == 0:
            return str(self.p)
        sign = "+" if self.q > 0 else "-"
        q = abs(self.q)
        qs = "" if q == 1 else f"{q}*"
        head = "" if self.p == 0 else f"{self.p} {sign} "
        if self.p == 0 and sign == "-":
            head = "-"
        return f"{head}{qs}sqrt({self.d})"

    def to_json(self) -> dict:
        v = complex(self)
        return {"exact": str(self), "re": v.real, "im": v.imag}
