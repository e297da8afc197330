"""Leading orders, resonances and regime classification.

Two leading-order families exist for the rescaled system:

* case (i): x ~ a tau**-2, y ~ b tau**-2 with resonances -1, 6, r, rbar,
  r, rbar = 5/2 +/- sqrt(1 - 24(1/lam + 1))/2;
* case (ii): y ~ 6 tau**-2 and x ~ a tau**alpha with alpha, alphabar =
  1/2 +/- sqrt(1 - 48 lam)/2 and resonances -1, 0, 6, r, rbar where
  r, rbar = -/+ sqrt(1 - 48 lam).

All decisions below are exact.
"""

from __future__ import annotations

import json
import math
from dataclasses import dataclass, field
from enum import Enum
from fractions import Fraction

from .errors import InvalidParameterError, RegimeError
from .exact import Surd, as_fraction, is_square

__all__ = [
    "Regime",
    "RegimeReport",
    "SubstitutionIndex",
    "case_i_discriminant",
    "case_ii_discriminant",
    "case_i_resonances",
    "case_ii_exponents",
    "classify",
    "substitution_index",
    "LAMBDA_REPEATED_I",
    "LAMBDA_LOG_ANOMALY",
    "LAMBDA_REPEATED_II",
]

LAMBDA_REPEATED_I = Fraction(-24, 23)
LAMBDA_LOG_ANOMALY = Fraction(-1, 2)
LAMBDA_REPEATED_II = Fraction(1, 48)


class Regime(str, Enum):
    COMPLEX = "CaseI-Complex"
    REPEATED = "CaseI-Repeated"
    IRRATIONAL = "CaseI-IrrationalDistinct"
    RATIONAL = "CaseI-RationalDistinct"
    LOG_ANOMALY = "CaseI-LogAnomaly"
    NEGATIVE_I = "CaseI-NegativeResonance"
    II_POSITIVE = "CaseII-PositiveRbar"
    II_REPEATED = "CaseII-RepeatedZero"
    II_IMAGINARY = "CaseII-Imaginary"
    II_NEGATIVE = "CaseII-NegativeResonance"
    INTEGRABLE = "Integrable"


def _lam(lam) -> Fraction:
    if isinstance(lam, float):
        raise InvalidParameterError("lambda must be an exact rational")
    lam = as_fraction(lam)
    if lam == 0:
        raise InvalidParameterError("lambda must be nonzero")
    return lam


def case_i_discriminant(lam) -> Fraction:
    lam = _lam(lam)
    return 1 - 24 * (1 / lam + 1)


def case_ii_discriminant(lam) -> Fraction:
    lam = _lam(lam)
    return 1 - 48 * lam


def case_i_resonances(lam) -> tuple[Surd, Surd]:
    """Exact (r, rbar) for the case (i) leading order."""
    disc = case_i_discriminant(lam)
    half = Fraction(1, 2)
    return Surd(Fraction(5, 2), half, disc), Surd(Fraction(5, 2), -half, disc)


def case_ii_exponents(lam) -> tuple[Surd, Surd, Surd, Surd]:
    """Exact (alpha, alphabar, r, rbar) for the case (ii) leading orders."""
    lam = _lam(lam)
    if lam <= LAMBDA_LOG_ANOMALY:
        raise RegimeError("case (ii) leading orders require lambda > -1/2")
    disc = 1 - 48 * lam
    half = Fraction(1, 2)
    return (Surd(half, half, disc), Surd(half, -half, disc),
            Surd(0, -1, disc), Surd(0, 1, disc))


@dataclass(frozen=True)
class SubstitutionIndex:
    """Least n with every relevant shifted resonance exponent positive."""

    n: int
    mu1: object = None
    mu2: object = None
    beta_bar: object = None


def _real_part(x):
    if isinstance(x, Surd):
        return x.real_part if not x.is_real else x
    return complex(x).real


def _exceeds(x, bound: Fraction) -> bool:
    re = _real_part(x)
    if isinstance(re, Surd):
        return re > bound
    return re > float(bound)


def substitution_index(resonances, case: str = "i") -> SubstitutionIndex:
    """Least positive n with r - 1/n > 0 for every resonance supplied.

    For case ``"i"`` pass ``(r, rbar)``; for case ``"ii"`` pass ``(rbar,)``.
    Complex resonances are judged by their real part, which gives n = 1.
    """
    res = list(resonances)
    for x in res:
        if not _exceeds(x, Fraction(0)):
            raise RegimeError(f"resonance {x} is not positive")
    n = 1
    while not all(_exceeds(x, Fraction(1, n)) for x in res):
        n += 1
    shifted = [x - Fraction(1, n) if isinstance(x, Surd) else x - 1 / n for x in res]
    if case == "i":
        return SubstitutionIndex(n, mu1=shifted[0], mu2=shifted[1])
    return SubstitutionIndex(n, beta_bar=shifted[0])


@dataclass(frozen=True)
class RegimeReport:
    lam: Fraction
    branch: str
    case: Regime
    alpha: object
    alpha_bar: object
    beta: int
    resonances: tuple
    discriminant: Fraction
    viable: bool
    integrable: bool = False
    status: str = ""
    epsilon: float | None = None
    n: int | None = None
    alternate: Regime | None = None
    extras: dict = field(default_factory=dict)

    @property
    def r(self):
        return self.resonances[-2]

    @property
    def rbar(self):
        return self.resonances[-1]

    def to_json(self) -> dict:
        def enc(x):
            if isinstance(x, Surd):
                return x.to_json()
            if x is None:
                return None
            return {"exact": str(x), "re": float(x), "im": 0.0}

        return {
            "lambda": str(self.lam),
            "branch": self.branch,
            "case": self.case.value,
            "alpha": enc(self.alpha),
            "alphaBar": enc(self.alpha_bar),
            "beta": self.beta,
            "resonances": [enc(x) for x in self.resonances],
            "discriminant": str(self.discriminant),
            "epsilon": self.epsilon,
            "viable": self.viable,
            "integrable": self.integrable,
            "status": self.status,
            "n": self.n,
            "alternate": self.alternate.value if self.alternate else None,
        }

    def dumps(self) -> str:
        return json.dumps(self.to_json(), indent=2)


def _integrable(lam: Fraction, A: float, B: float) -> bool:
    return ((lam == -1 and A == B) or lam == Fraction(-1, 6)
            or (lam == Fraction(-1, 16) and B == 16 * A))


def _case_i_label(lam: Fraction, A: float, B: float) -> tuple[Regime, bool, str]:
    disc = case_i_discriminant(lam)
    if _integrable(lam, A, B):
        # only lam = -1 has both resonances positive on this branch
        viable = lam == -1
        return Regime.INTEGRABLE, viable, "integrable parameter set"
    if lam < LAMBDA_REPEATED_I or lam > 0:
        return Regime.COMPLEX, True, "complex resonances"
    if lam == LAMBDA_REPEATED_I:
        return Regime.REPEATED, False, "repeated resonance r = rbar = 5/2; not expanded"
    if lam < LAMBDA_LOG_ANOMALY:
        if is_square(disc):
            if lam == -1:
                return (Regime.RATIONAL, False,
                        "logarithmic psi-series (lambda = -1, A != B); out of scope")
            return (Regime.RATIONAL, True,
                    "rational resonances; lattice collisions may force logarithms")
        return Regime.IRRATIONAL, True, "irrational positive distinct resonances"
    if lam == LAMBDA_LOG_ANOMALY:
        return (Regime.LOG_ANOMALY, False,
                "leading coefficient of x vanishes; logarithmic leading order")
    status = "negative resonance rbar < 0; not a general solution"
    if lam == Fraction(-1, 16):
        status = "logarithmic psi-series (lambda = -1/16, B != 16A); out of scope"
    return Regime.NEGATIVE_I, False, status


def _case_ii_label(lam: Fraction, branch: str) -> tuple[Regime, bool, str]:
    if lam <= LAMBDA_LOG_ANOMALY:
        raise RegimeError("case (ii) leading orders require lambda > -1/2")
    if lam == LAMBDA_REPEATED_II:
        return Regime.II_REPEATED, False, "repeated resonance r = rbar = 0; not expanded"
    if lam > LAMBDA_REPEATED_II:
        return (Regime.II_IMAGINARY, False,
                "pure imaginary resonances; convergence not established")
    if branch == "iia":
        return (Regime.II_NEGATIVE, False,
                "negative resonance r < 0; not a general solution")
    status = "positive resonance rbar"
    if lam < 0:
        status += "; alphabar < 0 so the bounded-variable resummation is unavailable"
    return Regime.II_POSITIVE, True, status


def classify(lam, A: float = 1.0, B: float = 1.0, branch: str = "i") -> RegimeReport:
    """Classify lambda for the chosen leading-order branch.

    ``branch`` is ``"i"`` (case i), ``"ii"`` (case ii, leading order
    alphabar) or ``"iia"`` (case ii, leading order alpha).
    """
    lam = _lam(lam)
    A, B = float(A), float(B)
    integrable = _integrable(lam, A, B)
    if branch == "i":
        case, viable, status = _case_i_label(lam, A, B)
        r, rbar = case_i_resonances(lam)
        disc = case_i_discriminant(lam)
        eps = None
        if disc < 0:
            eps = 0.5 * math.sqrt(float(-disc))
        n = None
        if viable:
            n = substitution_index((r, rbar), "i").n
        alternate = _case_ii_label(lam, "ii")[0] if lam > LAMBDA_LOG_ANOMALY else None
        return RegimeReport(lam, branch, case, Surd(-2), Surd(-2), -2,
                            (Surd(-1), Surd(6), r, rbar), disc, viable,
                            integrable, status, eps, n, alternate)
    if branch not in ("ii", "iia"):
        raise ValueError(f"unknown branch {branch!r}")
    case, viable, status = _case_ii_label(lam, branch)
    alpha, alpha_bar, r, rbar = case_ii_exponents(lam)
    disc = case_ii_discriminant(lam)
    n = substitution_index((rbar,), "ii").n if viable else None
    alternate = _case_i_label(lam, A, B)[0]
    return RegimeReport(lam, branch, case, alpha, alpha_bar, -2,
                        (Surd(-1), Surd(6), Surd(0), r, rbar), disc, viable,
                        integrable, status, None, n, alternate)
