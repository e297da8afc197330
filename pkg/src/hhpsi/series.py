"""Psi-series coefficient tables for both leading-order families.

Case (i) (alpha = beta = -2)::

    x = sum a[k,l,m] tau**(k - 2 + r l + rbar m)
    y = sum b[k,l,m] tau**(k - 2 + r l + rbar m)

Case (ii) (beta = -2, leading order alphabar for x)::

    x = sum a[k,l,m] tau**(k + alphabar + (2 + alphabar) m + rbar l)
    y = sum b[k,l,m] tau**(k - 2 + (2 + alphabar) m + rbar l)

Coefficients are produced grade by grade (grade = k + l + m).  Every
right-hand side at an index only involves strictly smaller indices, so
the set {k + l + m <= N} is closed and the truncated table is exact.
"""

from __future__ import annotations

import csv
import json
from dataclasses import dataclass, field
from fractions import Fraction
from pathlib import Path

import numpy as np

from .errors import (CompatibilityError, DegenerateLeadingCoefficientError,
                     InternalConsistencyError, RegimeError)
from .exact import Surd
from .model import ModelParams
from .singularity import Regime, case_i_discriminant, case_ii_discriminant, classify

__all__ = [
    "CoefficientTable",
    "DoubleSeriesForm",
    "CGTWForm",
    "leading_coefficients_case_i",
    "expand_case_i",
    "expand_case_ii",
    "expand",
    "recursion_residual",
    "case_i_identity_residual",
    "case_ii_identity_residual",
    "reindex_to_double_series",
    "reindex_to_cgtw",
    "simplex",
    "extended_context",
    "DEFAULT_COMPAT_TOL",
]

DEFAULT_COMPAT_TOL = 1e-10
_SINGULAR_TOL = 1e-13


def simplex(N: int):
    """Indices (k, l, m) with k + l + m <= N, by grade then lexicographically."""
    for g in range(N + 1):
        for k in range(g, -1, -1):
            for l in range(g - k, -1, -1):
                yield k, l, g - k - l


class _Arith:
    """Scalar factory for complex128 or gmpy2 mpc at a fixed precision."""

    def __init__(self, precision: int | None):
        self.precision = precision
        if precision is not None:
            import gmpy2

            self.gmpy2 = gmpy2

    def zeros(self, shape):
        if self.precision is None:
            return np.zeros(shape, dtype=complex)
        z = np.empty(shape, dtype=object)
        z.fill(self.gmpy2.mpc(0))
        return z

    def num(self, x):
        """Convert Fraction, Surd, float or complex."""
        if self.precision is None:
            if isinstance(x, Surd):
                return complex(x)
            if isinstance(x, Fraction):
                return complex(float(x))
            return complex(x)
        g = self.gmpy2
        if isinstance(x, Surd):
            return x.to_gmpy()
        if isinstance(x, Fraction):
            return g.mpc(g.mpq(x.numerator, x.denominator))
        return g.mpc(x)

    def sqrt(self, x):
        if self.precision is None:
            return np.sqrt(complex(x))
        return self.gmpy2.sqrt(self.gmpy2.mpc(x))

    def context(self):
        if self.precision is None:
            import contextlib

            return contextlib.nullcontext()
        return extended_context(self.precision)


def extended_context(bits: int):
    """gmpy2 context manager with ``bits`` of mantissa for real and imaginary parts."""
    import gmpy2

    return gmpy2.context(gmpy2.get_context(), precision=bits)


def _box(a, b, k, l, m):
    # sum_{p <= (k,l,m)} a[p] b[(k,l,m) - p]
    return np.sum(a[:k + 1, :l + 1, :m + 1] * b[k::-1, l::-1, m::-1])


def _abs_box(a, b, k, l, m):
    return float(np.sum(np.abs(a[:k + 1, :l + 1, :m + 1].astype(complex))
                        * np.abs(b[k::-1, l::-1, m::-1].astype(complex))))


@dataclass(frozen=True, eq=False)
class CoefficientTable:
    """Coefficients a[k,l,m], b[k,l,m] for k + l + m <= order.

    ``a`` and ``b`` are dense read-only cubes of side ``order + 1``;
    entries outside the simplex are zero and carry no meaning.
    """

    case: str
    params: ModelParams
    order: int
    a: np.ndarray
    b: np.ndarray
    arbitrary: dict
    step_exact: tuple  # case I: (r, rbar); case II: (alphabar, rbar)
    compatibility: dict = field(default_factory=dict)
    extra_resonances: tuple = ()
    precision: int | None = None
    convergence_verified: bool = True

    # -- lattice ------------------------------------------------------
    @property
    def r(self) -> Surd:
        return self.step_exact[0] if self.case == "I" else self.step_exact[1] * -1

    @property
    def rbar(self) -> Surd:
        return self.step_exact[1]

    @property
    def alpha_bar(self) -> Surd:
        if self.case != "II":
            raise AttributeError("alpha_bar is defined for case II tables only")
        return self.step_exact[0]

    def exponent_exact(self, k: int, l: int, m: int) -> Surd:
        """Lattice offset e of index (k, l, m), exact.

        Case I: e = k + r l + rbar m.  Case II: e = k + (2 + alphabar) m + rbar l.
        """
        if self.case == "I":
            r, rbar = self.step_exact
            return r * l + rbar * m + k
        alpha_bar, rbar = self.step_exact
        return (alpha_bar + 2) * m + rbar * l + k

    def exponent_grid(self) -> np.ndarray:
        """Complex lattice offsets e for every cell of the cube."""
        k, l, m = np.indices(self.a.shape)
        if self.case == "I":
            r, rbar = (complex(s) for s in self.step_exact)
            return k + r * l + rbar * m
        alpha_bar, rbar = (complex(s) for s in self.step_exact)
        return k + (2 + alpha_bar) * m + rbar * l

    @property
    def x_offset(self) -> complex:
        return -2.0 if self.case == "I" else complex(self.step_exact[0])

    y_offset = -2.0

    def mask(self, N: int | None = None) -> np.ndarray:
        N = self.order if N is None else N
        k, l, m = np.indices(self.a.shape)
        return (k + l + m) <= N

    # -- access -------------------------------------------------------
    def __getitem__(self, idx):
        k, l, m = idx
        if min(idx) < 0 or k + l + m > self.order:
            return 0j, 0j
        return self.a[k, l, m], self.b[k, l, m]

    @property
    def coeffs(self) -> dict:
        """Sparse view {(k, l, m): (a, b)} of the nonzero entries."""
        out = {}
        for idx in simplex(self.order):
            a, b = self.a[idx], self.b[idx]
            if a != 0 or b != 0:
                out[idx] = (a, b)
        return out

    def as_complex(self) -> CoefficientTable:
        if self.precision is None:
            return self
        return _replace(self, a=_frozen(self.a.astype(complex)),
                        b=_frozen(self.b.astype(complex)), precision=None)

    def truncate(self, N: int) -> CoefficientTable:
        """Restriction to grades <= N; exact because the simplex is closed."""
        if N > self.order:
            raise ValueError(f"table has order {self.order} < {N}")
        s = slice(0, N + 1)
        a = self.a[s, s, s].copy()
        b = self.b[s, s, s].copy()
        keep = np.indices(a.shape).sum(axis=0) <= N
        a[~keep] = 0
        b[~keep] = 0
        compat = {i: v for i, v in self.compatibility.items() if sum(i) <= N}
        extra = tuple(i for i in self.extra_resonances if sum(i) <= N)
        return _replace(self, order=N, a=_frozen(a), b=_frozen(b),
                        compatibility=compat, extra_resonances=extra)

    # -- evaluation ---------------------------------------------------
    def evaluate(self, tau: float) -> np.ndarray:
        """(x, u, y, v) at distance tau > 0 from the singularity."""
        if tau <= 0:
            raise ValueError("tau must be positive")
        mask = self.mask()
        e = self.exponent_grid()[mask]
        a = self.a[mask].astype(complex)
        b = self.b[mask].astype(complex)
        px = self.x_offset + e
        py = self.y_offset + e
        z = np.log(tau)
        tx = np.exp(px * z)
        ty = np.exp(py * z)
        return np.array([
            np.sum(a * tx),
            np.sum(a * px * tx) / tau,
            np.sum(b * ty),
            np.sum(b * py * ty) / tau,
        ])

    def evaluate_extended(self, tau, bits: int | None = None) -> list:
        """(x, u, y, v) as gmpy2 mpc numbers, for checks that cancel heavily.

        Powers are built from tau**k, tau**(step1 l), tau**(step2 m) so
        only products are needed per coefficient.  Call inside
        ``extended_context`` to keep the result's precision downstream.
        """
        import gmpy2
        from gmpy2 import mpc

        with extended_context(bits or self.precision or 113):
            tau = gmpy2.mpfr(tau)
            if not tau > 0:
                raise ValueError("tau must be positive")
            s1, s2 = (x.to_gmpy() for x in self.step_exact)
            if self.case == "II":
                s1, s2 = s2, s1 + 2  # l carries rbar, m carries 2 + alphabar
                xo = self.step_exact[0].to_gmpy()
            else:
                xo = mpc(-2)
            yo = mpc(-2)
            N = self.order
            lt = gmpy2.log(tau)
            pk = [tau ** k for k in range(N + 1)]
            pl = [gmpy2.exp(s1 * l * lt) for l in range(N + 1)]
            pm = [gmpy2.exp(s2 * m * lt) for m in range(N + 1)]
            x = u = y = v = mpc(0)
            txo, tyo = gmpy2.exp(xo * lt), gmpy2.exp(yo * lt)
            for (k, l, m) in simplex(N):
                a, b = self.a[k, l, m], self.b[k, l, m]
                if a == 0 and b == 0:
                    continue
                base = pk[k] * pl[l] * pm[m]
                e = k + s1 * l + s2 * m
                if a != 0:
                    term = mpc(a) * base * txo
                    x += term
                    u += term * (xo + e) / tau
                if b != 0:
                    term = mpc(b) * base * tyo
                    y += term
                    v += term * (yo + e) / tau
            return [x, u, y, v]

    # -- serialization ------------------------------------------------
    def metadata(self) -> dict:
        def enc(z):
            z = complex(z)
            return [z.real, z.imag]

        meta = {
            "case": self.case,
            "lambda": str(self.params.lam),
            "A": self.params.A,
            "B": self.params.B,
            "sign": self.params.sign,
            "order": self.order,
            "precision": self.precision,
            "convergenceVerified": self.convergence_verified,
            "arbitrary": {k: enc(v) for k, v in self.arbitrary.items()},
            "compatibility": {",".join(map(str, i)): v
                              for i, v in self.compatibility.items()},
            "extraResonances": [list(i) for i in self.extra_resonances],
        }
        if self.case == "I":
            meta["exponents"] = {
                "x": "k - 2 + r*l + rbar*m", "y": "k - 2 + r*l + rbar*m",
                "r": self.step_exact[0].to_json(), "rbar": self.step_exact[1].to_json()}
        else:
            meta["exponents"] = {
                "x": "k + alphabar + (2 + alphabar)*m + rbar*l",
                "y": "k - 2 + (2 + alphabar)*m + rbar*l",
                "alphaBar": self.step_exact[0].to_json(),
                "rbar": self.step_exact[1].to_json()}
        return meta

    def write(self, directory, stem: str = "coefficients") -> tuple[Path, Path]:
        """Write ``<stem>.csv`` and the ``<stem>.json`` metadata header."""
        directory = Path(directory)
        directory.mkdir(parents=True, exist_ok=True)
        csv_path = directory / f"{stem}.csv"
        with open(csv_path, "w", newline="") as fh:
            w = csv.writer(fh)
            w.writerow(["k", "l", "m", "re_a", "im_a", "re_b", "im_b"])
            for (k, l, m) in simplex(self.order):
                a = complex(self.a[k, l, m])
                b = complex(self.b[k, l, m])
                w.writerow([k, l, m, repr(a.real), repr(a.imag), repr(b.real), repr(b.imag)])
        json_path = directory / f"{stem}.json"
        json_path.write_text(json.dumps(self.metadata(), indent=2))
        return csv_path, json_path


def _frozen(arr):
    arr.flags.writeable = False
    return arr


def _replace(table, **changes):
    from dataclasses import replace

    return replace(table, **changes)


def read_table_csv(path) -> dict:
    """Read a coefficient CSV back into {(k, l, m): (a, b)}."""
    out = {}
    with open(path, newline="") as fh:
        for row in csv.DictReader(fh):
            idx = (int(row["k"]), int(row["l"]), int(row["m"]))
            out[idx] = (complex(float(row["re_a"]), float(row["im_a"])),
                        complex(float(row["re_b"]), float(row["im_b"])))
    return out


# ---------------------------------------------------------------------------
# case (i)
# ---------------------------------------------------------------------------

def leading_coefficients_case_i(p: ModelParams, precision: int | None = None):
    """(a_000, b_000) = (+/-(3/lam) sqrt(2 + 1/lam), -3/lam).

    a_000 is imaginary when 2 + 1/lam < 0.
    """
    lam = p.lam
    if lam == Fraction(-1, 2):
        raise DegenerateLeadingCoefficientError(
            "lambda = -1/2: the leading coefficient of x vanishes")
    ar = _Arith(precision)
    with ar.context():
        a0 = p.sign * ar.num(3 / lam) * ar.sqrt(ar.num(2 + 1 / lam))
        b0 = ar.num(-3 / lam)
    return a0, b0


def _compat_value(m11, c, rhs1, rhs2):
    # left null vector (c, -m11) of [[m11, c], [c, m22]] when det = 0
    return c * rhs1 - m11 * rhs2


def _default_arbitrary_i(complex_res: bool, arbitrary):
    out = {"a010": 0.1, "a001": None, "a600": 0.0}
    if arbitrary:
        out.update(arbitrary)
    if out["a001"] is None:
        out["a001"] = complex(out["a010"]).conjugate() if complex_res else out["a010"]
    return out


def expand_case_i(p: ModelParams, arbitrary: dict | None = None, N: int = 20, *,
                  tol: float = DEFAULT_COMPAT_TOL, precision: int | None = None,
                  check_regime: bool = True) -> CoefficientTable:
    """Build the case (i) table to grade N.

    ``arbitrary`` may set ``a010``, ``a001`` and ``a600``.  Defaults are
    a010 = 0.1, a001 = conj(a010) for complex resonances (0.1 otherwise)
    and a600 = 0.
    """
    if N < 0:
        raise ValueError("order must be nonnegative")
    report = classify(p.lam, p.A, p.B, "i")
    if check_regime and not report.viable:
        raise RegimeError(f"{report.case.value}: {report.status}")
    lam = p.lam
    disc = case_i_discriminant(lam)
    r_ex, rbar_ex = report.resonances[2], report.resonances[3]
    consts = _default_arbitrary_i(disc < 0, arbitrary)
    resonant = {Surd(-1), Surd(6), r_ex, rbar_ex}
    free = {(0, 1, 0): "a010", (0, 0, 1): "a001", (6, 0, 0): "a600"}

    ar = _Arith(precision)
    compat: dict = {}
    extra: list = []
    shape = (N + 1,) * 3
    with ar.context():
        a = ar.zeros(shape)
        b = ar.zeros(shape)
        a0, b0 = leading_coefficients_case_i(p, precision)
        a[0, 0, 0], b[0, 0, 0] = a0, b0
        lamn = ar.num(lam)
        A, B = ar.num(p.A), ar.num(p.B)
        r, rbar = ar.num(r_ex), ar.num(rbar_ex)
        c = 2 * lamn * a0
        six_over_lam = ar.num(6 / lam)
        cvals = {k: ar.num(v) for k, v in consts.items()}
        for (k, l, m) in simplex(N):
            if k + l + m == 0:
                continue
            e = k + r * l + rbar * m
            m11 = e * (e - 5)
            m22 = (e - 2) * (e - 3) + six_over_lam
            rhs1 = -2 * lamn * _box(a, b, k, l, m)
            rhs2 = _box(b, b, k, l, m) - lamn * _box(a, a, k, l, m)
            if k >= 2:
                rhs1 -= A * a[k - 2, l, m]
                rhs2 -= B * b[k - 2, l, m]
            idx = (k, l, m)
            e_ex = Surd(k + Fraction(5 * (l + m), 2), Fraction(l - m, 2), disc)
            if e_ex in resonant:
                val = _compat_value(m11, c, rhs1, rhs2)
                s1 = abs(complex(p.A)) * (abs(complex(a[k - 2, l, m])) if k >= 2 else 0.0) \
                    + abs(2 * float(lam)) * _abs_box(a, b, k, l, m)
                s2 = abs(complex(p.B)) * (abs(complex(b[k - 2, l, m])) if k >= 2 else 0.0) \
                    + abs(float(lam)) * _abs_box(a, a, k, l, m) + _abs_box(b, b, k, l, m)
                scale = max(abs(complex(c)) * s1, abs(complex(m11)) * s2)
                rel = abs(complex(val)) / scale if scale > 0 else 0.0
                compat[idx] = rel
                if rel > tol:
                    raise CompatibilityError(
                        f"compatibility fails at {idx}: relative residual {rel:.3e}"
                        + ("" if idx in free else
                           " (lattice collision with a resonance; logarithms required)"),
                        index=idx, residual=rel)
                aval = cvals[free[idx]] if idx in free else ar.num(0)
                if idx not in free:
                    extra.append(idx)
                a[idx] = aval
                b[idx] = (rhs1 - m11 * aval) / c
                continue
            det = m11 * m22 - c * c
            if abs(complex(det)) <= _SINGULAR_TOL * (abs(complex(m11 * m22)) + abs(complex(c * c))):
                raise InternalConsistencyError(
                    f"recursion matrix singular at non-resonant index {idx}")
            a[idx] = (rhs1 * m22 - c * rhs2) / det
            b[idx] = (m11 * rhs2 - c * rhs1) / det
    arbitrary_out = {"a010": consts["a010"], "a001": consts["a001"], "a600": consts["a600"]}
    return CoefficientTable("I", p, N, _frozen(a), _frozen(b), arbitrary_out,
                            (r_ex, rbar_ex), compat, tuple(extra), precision)


# ---------------------------------------------------------------------------
# case (ii)
# ---------------------------------------------------------------------------

def expand_case_ii(p: ModelParams, arbitrary: dict | None = None, N: int = 20, *,
                   tol: float = DEFAULT_COMPAT_TOL, precision: int | None = None,
                   check_regime: bool = True) -> CoefficientTable:
    """Build the case (ii) table (leading order alphabar) to grade N.

    Free constants: ``a000`` (default 1), ``a010`` (0.1), ``b600`` (0).
    The operator is triangular: b is solved first, then a.
    """
    if N < 0:
        raise ValueError("order must be nonnegative")
    report = classify(p.lam, p.A, p.B, "ii")
    verified = report.case == Regime.II_POSITIVE
    if check_regime and report.case not in (Regime.II_POSITIVE, Regime.II_IMAGINARY):
        raise RegimeError(f"{report.case.value}: {report.status}")
    lam = p.lam
    D = case_ii_discriminant(lam)
    alpha_bar_ex, rbar_ex = report.alpha_bar, report.resonances[-1]
    consts = {"a000": 1.0, "a010": 0.1, "b600": 0.0}
    if arbitrary:
        consts.update(arbitrary)
    a_res = {Surd(0), rbar_ex}
    b_res = {Surd(-1), Surd(6)}

    ar = _Arith(precision)
    compat: dict = {}
    extra: list = []
    shape = (N + 1,) * 3
    with ar.context():
        a = ar.zeros(shape)
        b = ar.zeros(shape)
        cvals = {k: ar.num(v) for k, v in consts.items()}
        a0 = cvals["a000"]
        a[0, 0, 0] = a0
        b[0, 0, 0] = ar.num(6)
        lamn = ar.num(lam)
        A, B = ar.num(p.A), ar.num(p.B)
        alpha_bar, rbar = ar.num(alpha_bar_ex), ar.num(rbar_ex)
        c = 2 * lamn * a0
        for (k, l, m) in simplex(N):
            if k + l + m == 0:
                continue
            idx = (k, l, m)
            e = k + (2 + alpha_bar) * m + rbar * l
            e_ex = Surd(k + Fraction(5 * m, 2), Fraction(2 * l - m, 2), D)
            op_a = e * (e - rbar)
            op_b = (e + 1) * (e - 6)
            rhs_a = -2 * lamn * _box(a, b, k, l, m)
            rhs_b = _box(b, b, k, l, m)
            if m >= 2:
                rhs_b -= lamn * _box(a, a, k, l, m - 2)
            if k >= 2:
                rhs_a -= A * a[k - 2, l, m]
                rhs_b -= B * b[k - 2, l, m]
            if e_ex in b_res:
                s = abs(p.B) * (abs(complex(b[k - 2, l, m])) if k >= 2 else 0.0) \
                    + _abs_box(b, b, k, l, m) \
                    + (abs(float(lam)) * _abs_box(a, a, k, l, m - 2) if m >= 2 else 0.0)
                rel = abs(complex(rhs_b)) / s if s > 0 else 0.0
                compat[idx] = rel
                if rel > tol:
                    raise CompatibilityError(
                        f"compatibility fails at {idx}: relative residual {rel:.3e}",
                        index=idx, residual=rel)
                if idx == (6, 0, 0):
                    b[idx] = cvals["b600"]
                else:
                    b[idx] = ar.num(0)
                    extra.append(idx)
            else:
                if abs(complex(op_b)) < _SINGULAR_TOL * (1 + abs(complex(e)) ** 2):
                    raise InternalConsistencyError(f"b-operator singular at {idx}")
                b[idx] = rhs_b / op_b
            rhs = rhs_a - c * b[idx]
            if e_ex in a_res:
                s = abs(p.A) * (abs(complex(a[k - 2, l, m])) if k >= 2 else 0.0) \
                    + abs(2 * float(lam)) * _abs_box(a, b, k, l, m) \
                    + abs(complex(c * b[idx]))
                rel = abs(complex(rhs)) / s if s > 0 else 0.0
                compat[idx] = max(rel, compat.get(idx, 0.0))
                if rel > tol:
                    raise CompatibilityError(
                        f"compatibility fails at {idx}: relative residual {rel:.3e}",
                        index=idx, residual=rel)
                if idx == (0, 1, 0):
                    a[idx] = cvals["a010"]
                else:
                    a[idx] = ar.num(0)
                    extra.append(idx)
            else:
                if abs(complex(op_a)) < _SINGULAR_TOL * (1 + abs(complex(e)) ** 2):
                    raise InternalConsistencyError(f"a-operator singular at {idx}")
                a[idx] = rhs / op_a
    return CoefficientTable("II", p, N, _frozen(a), _frozen(b), dict(consts),
                            (alpha_bar_ex, rbar_ex), compat, tuple(extra), precision,
                            convergence_verified=verified)


def expand(p: ModelParams, case: str = "I", arbitrary=None, N: int = 20, **kw):
    """Dispatch to :func:`expand_case_i` or :func:`expand_case_ii`."""
    if case.upper() in ("I", "1"):
        return expand_case_i(p, arbitrary, N, **kw)
    if case.upper() in ("II", "2"):
        return expand_case_ii(p, arbitrary, N, **kw)
    raise ValueError(f"unknown case {case!r}")


# ---------------------------------------------------------------------------
# verification
# ---------------------------------------------------------------------------

def _cauchy3(a, b, N):
    """Truncated triple Cauchy product by shifted accumulation."""
    out = np.zeros((N + 1,) * 3, dtype=complex)
    for (p, q, s) in simplex(N):
        c = a[p, q, s]
        if c == 0:
            continue
        out[p:, q:, s:] += c * b[:N + 1 - p, :N + 1 - q, :N + 1 - s]
    return out


def recursion_residual(table: CoefficientTable, max_grade: int | None = None) -> np.ndarray:
    """Relative residual of the equations of motion, index by index.

    The truncated series is substituted into the second-order system and
    the coefficient of every lattice monomial with grade <= max_grade is
    compared with the largest single term contributing to it.  Returns
    the cube of relative residuals (max over both equations; NaN outside
    the checked simplex).
    """
    t = table.as_complex()
    N = t.order
    max_grade = N if max_grade is None else max_grade
    a, b = np.array(t.a), np.array(t.b)
    aa, ab_ = np.abs(a), np.abs(b)
    lam = t.params.lam_float
    A, B = t.params.A, t.params.B
    e = t.exponent_grid()
    shift_a = np.zeros_like(a)
    shift_b = np.zeros_like(b)
    shift_a[2:] = a[:-2]
    shift_b[2:] = b[:-2]
    ab, aa_c, bb = _cauchy3(a, b, N), _cauchy3(a, a, N), _cauchy3(b, b, N)
    abs_ab, abs_aa, abs_bb = _cauchy3(aa, ab_, N).real, _cauchy3(aa, aa, N).real, \
        _cauchy3(ab_, ab_, N).real
    if t.case == "I":
        px = e - 2
        lin_x = px * (px - 1) * a
        lin_y = px * (px - 1) * b
        xx, abs_xx = aa_c, abs_aa
    else:
        px = t.x_offset + e
        lin_x = px * (px - 1) * a
        py = e - 2
        lin_y = py * (py - 1) * b
        # x**2 lands two steps up in m
        xx = np.zeros_like(aa_c)
        abs_xx = np.zeros_like(abs_aa)
        xx[:, :, 2:] = aa_c[:, :, :-2]
        abs_xx[:, :, 2:] = abs_aa[:, :, :-2]
    r1 = lin_x + A * shift_a + 2 * lam * ab
    r2 = lin_y + B * shift_b + lam * xx - bb
    s1 = np.maximum.reduce([np.abs(lin_x), abs(A) * np.abs(shift_a), abs(2 * lam) * abs_ab])
    s2 = np.maximum.reduce([np.abs(lin_y), abs(B) * np.abs(shift_b),
                            abs(lam) * abs_xx, abs_bb])
    with np.errstate(invalid="ignore", divide="ignore"):
        q1 = np.where(s1 > 0, np.abs(r1) / s1, 0.0)
        q2 = np.where(s2 > 0, np.abs(r2) / s2, 0.0)
    out = np.maximum(q1, q2)
    out[~t.mask(max_grade)] = np.nan
    return out


def case_i_identity_residual(table: CoefficientTable) -> float:
    """Relative residual of the case (i) compatibility identity at (6,0,0)."""
    if table.case != "I" or table.order < 4:
        raise ValueError("needs a case I table of order >= 4")
    t = table.as_complex()
    lam, A, B = t.params.lam_float, t.params.A, t.params.B
    a0 = t.a[0, 0, 0]
    a2, a4 = t.a[2, 0, 0], t.a[4, 0, 0]
    b2, b4 = t.b[2, 0, 0], t.b[4, 0, 0]
    terms = [lam * a0 * a4 * A, 2 * lam ** 2 * a0 * a2 * b4, 2 * lam ** 2 * a0 * a4 * b2,
             -3 * b4 * B, -6 * lam * a2 * a4, 6 * b2 * b4]
    scale = max(abs(x) for x in terms)
    return abs(sum(terms)) / scale if scale > 0 else 0.0


def case_ii_identity_residual(table: CoefficientTable) -> float:
    """Relative residual of the case (ii) compatibility identity at (6,0,0)."""
    if table.case != "II" or table.order < 5:
        raise ValueError("needs a case II table of order >= 5")
    t = table.as_complex()
    B = t.params.B
    b = [t.b[i, 0, 0] for i in range(6)]
    terms = [-B * b[4]] + [b[6 - p] * b[p] for p in range(1, 6)]
    scale = max(abs(x) for x in terms)
    return abs(sum(terms)) / scale if scale > 0 else 0.0


# ---------------------------------------------------------------------------
# equivalent series forms
# ---------------------------------------------------------------------------

@dataclass(frozen=True, eq=False)
class DoubleSeriesForm:
    """Coefficients of x = sum a_ij tau**(i-2+j r) + abar_ij tau**(i-2+j rbar).

    ``abar[:, 0]`` and ``bbar[:, 0]`` are identically zero.
    """

    a: np.ndarray
    abar: np.ndarray
    b: np.ndarray
    bbar: np.ndarray
    r: complex
    rbar: complex

    def evaluate(self, tau: float) -> np.ndarray:
        i, j = np.indices(self.a.shape)
        z = np.log(tau)
        out = np.zeros(4, dtype=complex)
        for ca, cb, rr in ((self.a, self.b, self.r), (self.abar, self.bbar, self.rbar)):
            pw = i - 2 + j * rr
            t = np.exp(pw * z)
            out += [np.sum(ca * t), np.sum(ca * pw * t) / tau,
                    np.sum(cb * t), np.sum(cb * pw * t) / tau]
        return out


@dataclass(frozen=True, eq=False)
class CGTWForm:
    """x = sum A_ji tau**(i-2+j(r-2)) + Abar_ji tau**(i-2+j(rbar-2)); arrays indexed [j, i]."""

    A: np.ndarray
    Abar: np.ndarray
    B: np.ndarray
    Bbar: np.ndarray
    r: complex
    rbar: complex

    def evaluate(self, tau: float) -> np.ndarray:
        j, i = np.indices(self.A.shape)
        z = np.log(tau)
        out = np.zeros(4, dtype=complex)
        for ca, cb, rr in ((self.A, self.B, self.r), (self.Abar, self.Bbar, self.rbar)):
            pw = i - 2 + j * (rr - 2)
            t = np.exp(pw * z)
            out += [np.sum(ca * t), np.sum(ca * pw * t) / tau,
                    np.sum(cb * t), np.sum(cb * pw * t) / tau]
        return out


def reindex_to_double_series(t: CoefficientTable) -> DoubleSeriesForm:
    """Split the triple sum into m = l, m < l and m > l parts (uses r + rbar = 5)."""
    if t.case != "I":
        raise ValueError("double-series form exists for case I tables only")
    t = t.as_complex()
    N = t.order
    size_i = 5 * N + 1
    a = np.zeros((size_i, N + 1), dtype=complex)
    abar = np.zeros_like(a)
    b = np.zeros_like(a)
    bbar = np.zeros_like(a)
    for (k, l, m) in simplex(N):
        ca, cb = t.a[k, l, m], t.b[k, l, m]
        if l >= m:
            i, j = k + 5 * m, l - m
            a[i, j] += ca
            b[i, j] += cb
        else:
            i, j = k + 5 * l, m - l
            abar[i, j] += ca
            bbar[i, j] += cb
    return DoubleSeriesForm(a, abar, b, bbar, complex(t.r), complex(t.rbar))


def reindex_to_cgtw(d: DoubleSeriesForm) -> CGTWForm:
    """A_ji = a_{i-2j, j} for i >= 2j, zero otherwise."""
    ni, nj = d.a.shape
    size_i = ni + 2 * (nj - 1)
    out = [np.zeros((nj, size_i), dtype=complex) for _ in range(4)]
    for src, dst in zip((d.a, d.abar, d.b, d.bbar), out):
        for j in range(nj):
            dst[j, 2 * j:2 * j + ni] = src[:, j]
    return CGTWForm(*out, d.r, d.rbar)
