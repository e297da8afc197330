"""Single-series form of the psi-series and its variational structure.

With w = tau**(1/n) and z = ln tau, a case I table regroups as

    x = sum_g f_g(z) tau**(g/n - 2),   f_g(z) = sum c[l, m] exp((mu1 l + mu2 m) z)

where g = n k + l + m, mu1 = r - 1/n, mu2 = rbar - 1/n.  Case II uses
g = n k + 2 n m + l with x-offset g/n + alphabar and steps (alphabar, betabar)
on the pair (m, l).  Each f_g is stored as a 2-D array over the lattice pair;
the exponent of cell (i, j) is i*s1 + j*s2, built from exact surds.
"""

from __future__ import annotations

import json
from dataclasses import dataclass
from fractions import Fraction

import numpy as np

from .errors import DivergentIntegralError, InvalidResummationError, OutOfRangeError, RegimeError
from .exact import Surd
from .model import ModelParams
from .series import CoefficientTable, simplex
from .singularity import SubstitutionIndex, substitution_index

__all__ = [
    "ExpoSum",
    "ResummedSeries",
    "VariationalSystem",
    "resum",
    "build_variational",
    "variational_system",
    "forcing",
    "ode_residual",
    "grade_zero_residual",
    "solve_by_integral",
]


class ExpoSum:
    """z -> sum_{i,j} c[i, j] exp((i s1 + j s2) z) on a fixed lattice box."""

    __slots__ = ("c", "steps", "exact_steps")

    def __init__(self, c, steps, exact_steps=None):
        self.c = np.asarray(c, dtype=complex)
        self.steps = (complex(steps[0]), complex(steps[1]))
        self.exact_steps = exact_steps

    @classmethod
    def zeros_like(cls, other: ExpoSum) -> ExpoSum:
        return cls(np.zeros_like(other.c), other.steps, other.exact_steps)

    def _new(self, c):
        return ExpoSum(c, self.steps, self.exact_steps)

    @property
    def exponents(self) -> np.ndarray:
        i, j = np.indices(self.c.shape)
        return i * self.steps[0] + j * self.steps[1]

    def __add__(self, other):
        if isinstance(other, ExpoSum):
            return self._new(self.c + other.c)
        c = self.c.copy()
        c[0, 0] += other
        return self._new(c)

    __radd__ = __add__

    def __neg__(self):
        return self._new(-self.c)

    def __sub__(self, other):
        return self + (-other)

    def __mul__(self, other):
        if isinstance(other, ExpoSum):
            return self._new(_conv(self.c, other.c))
        return self._new(self.c * other)

    __rmul__ = __mul__

    def shift(self, di: int, dj: int) -> ExpoSum:
        """Multiply by exp((di s1 + dj s2) z), truncating at the box edge."""
        c = np.zeros_like(self.c)
        s0, s1 = c.shape
        if di < s0 and dj < s1:
            c[di:, dj:] = self.c[:s0 - di, :s1 - dj]
        return self._new(c)

    def derivative(self) -> ExpoSum:
        return self._new(self.c * self.exponents)

    def __call__(self, z):
        z = np.asarray(z, dtype=float)
        e = self.exponents
        nz = self.c != 0
        terms = self.c[nz]
        mus = e[nz]
        return np.exp(np.multiply.outer(z, mus)) @ terms

    def max_amplitude(self) -> float:
        return float(np.max(np.abs(self.c))) if self.c.size else 0.0

    def abs_sum(self) -> float:
        return float(np.sum(np.abs(self.c)))

    def terms(self) -> list[tuple[complex, complex]]:
        """Nonzero (amplitude, exponent) pairs with equal exponents merged."""
        merged: dict = {}
        order = []
        for (i, j) in zip(*np.nonzero(self.c)):
            if self.exact_steps is not None:
                key = self.exact_steps[0] * int(i) + self.exact_steps[1] * int(j)
            else:
                key = (int(i), int(j))
            if key not in merged:
                merged[key] = [0j, complex(i * self.steps[0] + j * self.steps[1])]
                order.append(key)
            merged[key][0] += self.c[i, j]
        return [(merged[k][0], merged[k][1]) for k in order if merged[k][0] != 0]

    def __repr__(self):
        return f"ExpoSum({len(self.terms())} terms)"


def _conv(a, b):
    """Truncated 2-D Cauchy product on the box of ``a``."""
    out = np.zeros_like(a)
    s0, s1 = a.shape
    if np.count_nonzero(a) > np.count_nonzero(b):
        a, b = b, a
    for (i, j) in zip(*np.nonzero(a)):
        out[i:, j:] += a[i, j] * b[:s0 - i, :s1 - j]
    return out


@dataclass(frozen=True, eq=False)
class ResummedSeries:
    """Per-grade coefficient functions (f_g, g_g, h_g, k_g)."""

    case: str
    params: ModelParams
    n: int
    gamma_max: int
    f: tuple
    h: tuple
    steps: tuple  # exact (s1, s2)
    alpha_bar: Surd | None = None

    @property
    def x_offset(self) -> complex:
        return -2.0 if self.case == "I" else complex(self.alpha_bar)

    def x_power(self, gamma: int) -> complex:
        return gamma / self.n + self.x_offset

    def y_power(self, gamma: int) -> float:
        return gamma / self.n - 2.0

    def g(self, gamma: int) -> ExpoSum:
        return self.f[gamma] * self.x_power(gamma) + self.f[gamma].derivative()

    def k(self, gamma: int) -> ExpoSum:
        return self.h[gamma] * self.y_power(gamma) + self.h[gamma].derivative()

    def vector(self, gamma: int) -> tuple[ExpoSum, ExpoSum, ExpoSum, ExpoSum]:
        return self.f[gamma], self.g(gamma), self.h[gamma], self.k(gamma)

    def evaluate(self, tau: float, gamma_max: int | None = None) -> np.ndarray:
        """(x, u, y, v) at distance tau from the singularity."""
        if tau <= 0:
            raise ValueError("tau must be positive")
        G = self.gamma_max if gamma_max is None else gamma_max
        z = np.log(tau)
        out = np.zeros(4, dtype=complex)
        for gamma in range(G + 1):
            fv = self.vector(gamma)
            px, py = self.x_power(gamma), self.y_power(gamma)
            w = (tau ** px, tau ** (px - 1), tau ** py, tau ** (py - 1))
            out += [fv[i](z) * w[i] for i in range(4)]
        return out

    def to_json(self) -> dict:
        grades = []
        for gamma in range(self.gamma_max + 1):
            comps = {}
            for name, es in zip("fghk", self.vector(gamma)):
                comps[name] = [[c.real, c.imag, mu.real, mu.imag] for c, mu in es.terms()]
            grades.append({"gamma": gamma, **comps})
        return {
            "case": self.case,
            "lambda": str(self.params.lam),
            "n": self.n,
            "gammaMax": self.gamma_max,
            "steps": [s.to_json() for s in self.steps],
            "grades": grades,
        }

    def dumps(self) -> str:
        return json.dumps(self.to_json())


def _steps_for(t: CoefficientTable, n: int):
    inv = Fraction(1, n)
    if t.case == "I":
        r, rbar = t.step_exact
        return (r - inv, rbar - inv), None
    alpha_bar, rbar = t.step_exact
    return (alpha_bar, rbar - inv), alpha_bar


def resum(t: CoefficientTable, n: SubstitutionIndex | int | None = None) -> ResummedSeries:
    """Regroup a coefficient table into per-grade exponential sums."""
    if n is None:
        if t.case == "I":
            n = substitution_index(t.step_exact, "i").n
        else:
            n = substitution_index((t.rbar,), "ii").n
    elif isinstance(n, SubstitutionIndex):
        n = n.n
    steps, alpha_bar = _steps_for(t, n)
    for s in steps:
        if s.real_part.sign() < 0:
            raise InvalidResummationError(
                f"lattice step {s} has negative real part; coefficient functions "
                "would be unbounded as z -> -infinity")
    tc = t.as_complex()
    G = t.order
    shape = (G + 1, G + 1)
    fs = [np.zeros(shape, dtype=complex) for _ in range(G + 1)]
    hs = [np.zeros(shape, dtype=complex) for _ in range(G + 1)]
    for (k, l, m) in simplex(G):
        if t.case == "I":
            gamma, key = n * k + l + m, (l, m)
        else:
            gamma, key = n * k + 2 * n * m + l, (m, l)
        if gamma > G:
            continue
        fs[gamma][key] += tc.a[k, l, m]
        hs[gamma][key] += tc.b[k, l, m]
    svals = tuple(complex(s) for s in steps)
    f = tuple(ExpoSum(c, svals, steps) for c in fs)
    h = tuple(ExpoSum(c, svals, steps) for c in hs)
    return ResummedSeries(t.case, t.params, n, G, f, h, steps, alpha_bar)


@dataclass(frozen=True, eq=False)
class VariationalSystem:
    """f' + A f = F at one grade, with A = P D P^-1."""

    gamma: int
    n: int
    A: np.ndarray
    P: np.ndarray
    Pinv: np.ndarray
    D: np.ndarray
    F: tuple | None = None

    @property
    def M(self) -> float:
        """||P|| ||P^-1|| in the max-row-sum norm."""
        return float(np.linalg.norm(self.P, np.inf) * np.linalg.norm(self.Pinv, np.inf))

    def diagonalization_error(self) -> float:
        return float(np.max(np.abs(self.Pinv @ self.A @ self.P - self.D)))


def build_variational(gamma: int, case: str, p: ModelParams, f0, n: int,
                      F=None) -> VariationalSystem:
    """Matrix A_g, eigenvectors P and diagonal D_g for grade g >= 1."""
    if gamma < 1:
        raise OutOfRangeError("grade must be >= 1")
    lam = p.lam_float
    f0 = complex(f0)
    s = gamma / n
    if case == "I":
        from .singularity import case_i_resonances

        r, rbar = (complex(x) for x in case_i_resonances(p.lam))
        A = np.array([[s - 2, -1, 0, 0],
                      [-6, s - 3, 2 * lam * f0, 0],
                      [0, 0, s - 2, -1],
                      [2 * lam * f0, 0, 6 / lam, s - 3]], dtype=complex)
        c = 3 * (2 + 1 / lam)
        P = np.array([[-lam * f0, -lam * f0, lam * f0, lam * f0],
                      [3 * lam * f0, -4 * lam * f0, lam * f0 * (r - 2), lam * f0 * (rbar - 2)],
                      [3, 3, c, c],
                      [-9, 12, c * (r - 2), c * (rbar - 2)]], dtype=complex)
        D = np.diag([s + 1, s - 6, s - r, s - rbar]).astype(complex)
    elif case == "II":
        from .singularity import case_ii_exponents

        _, ab, _, rbar = (complex(x) for x in case_ii_exponents(p.lam))
        A = np.array([[s + ab, -1, 0, 0],
                      [12 * lam, s + ab - 1, 2 * lam * f0, 0],
                      [0, 0, s - 2, -1],
                      [0, 0, -12, s - 3]], dtype=complex)
        P = np.array([[-ab * f0 / 12, 1, -lam * f0, 1],
                      [lam * f0, ab, -lam * f0 * (ab + 6), 1 - ab],
                      [1, 0, 3 * (2 * ab + 5), 0],
                      [-3, 0, 12 * (2 * ab + 5), 0]], dtype=complex)
        D = np.diag([s + 1, s, s - 6, s - rbar]).astype(complex)
    else:
        raise ValueError(f"unknown case {case!r}")
    if abs(np.linalg.det(P)) < 1e-14 * np.linalg.norm(P) ** 4:
        raise RegimeError("eigenvector matrix is singular for this lambda")
    return VariationalSystem(gamma, n, A, P, np.linalg.inv(P), D, F)


def forcing(s: ResummedSeries, gamma: int) -> tuple[ExpoSum, ExpoSum, ExpoSum, ExpoSum]:
    """Right-hand side (0, G_g, 0, K_g) assembled from lower grades."""
    lam, A, B, n = s.params.lam_float, s.params.A, s.params.B, s.n
    zero = ExpoSum.zeros_like(s.f[0])
    G = zero
    K = zero
    if gamma - 2 * n >= 0:
        G = G - s.f[gamma - 2 * n] * A
        K = K - s.h[gamma - 2 * n] * B
    fh = _conv_sum(s.f, s.h, gamma, 1)
    hh = _conv_sum(s.h, s.h, gamma, 1)
    G = G - fh * (2 * lam)
    if s.case == "I":
        ff = _conv_sum(s.f, s.f, gamma, 1)
        K = K - ff * lam + hh
    else:
        # x**2 carries tau**(2 alphabar): two steps up in the m direction
        if gamma - 4 * n >= 0:
            ff = _conv_sum(s.f, s.f, gamma - 4 * n, 0)
            K = K - ff.shift(2, 0) * lam
        K = K + hh
    return zero, G, zero, K


def _conv_sum(u, v, gamma, start):
    # sum_{mu=start}^{gamma-start} u[gamma - mu] * v[mu]
    out = np.zeros_like(u[0].c)
    for mu in range(start, gamma - start + 1):
        out += _conv(u[gamma - mu].c, v[mu].c)
    return ExpoSum(out, u[0].steps, u[0].exact_steps)


def variational_system(s: ResummedSeries, gamma: int) -> VariationalSystem:
    return build_variational(gamma, s.case, s.params, s.f[0].c[0, 0], s.n, forcing(s, gamma))


def _apply(M, vec):
    return tuple(sum((vec[j] * M[i, j] for j in range(4)), ExpoSum.zeros_like(vec[0]))
                 for i in range(4))


def ode_residual(s: ResummedSeries, gammas=None) -> dict:
    """Relative residual of f' + A f - F per grade.

    The value is the largest residual amplitude divided by the largest
    amplitude among f', A f and F at that grade.
    """
    gammas = range(1, s.gamma_max + 1) if gammas is None else gammas
    out = {}
    for gamma in gammas:
        v = variational_system(s, gamma)
        fv = s.vector(gamma)
        Af = _apply(v.A, fv)
        res = [fv[i].derivative() + Af[i] - v.F[i] for i in range(4)]
        scale = max(max(x.max_amplitude() for x in fv),
                    max(x.max_amplitude() for x in Af),
                    max(x.max_amplitude() for x in v.F))
        num = max(x.max_amplitude() for x in res)
        out[gamma] = num / scale if scale > 0 else num
    return out


def grade_zero_residual(s: ResummedSeries) -> float:
    """Algebraic equations at g = 0 (all coefficient functions constant)."""
    lam = s.params.lam_float
    f0 = s.f[0].c[0, 0]
    h0 = s.h[0].c[0, 0]
    g0 = s.g(0).c[0, 0]
    k0 = s.k(0).c[0, 0]
    px = s.x_power(0)
    eqs = [
        g0 - px * f0,
        k0 + 2 * h0,
        (px - 1) * g0 + 2 * lam * f0 * h0,
        -3 * k0 + lam * f0 * f0 * (s.case == "I") - h0 * h0,
    ]
    scale = max(abs(f0), abs(h0), abs(g0), abs(k0), 1.0) ** 2
    return max(abs(e) for e in eqs) / scale


def solve_by_integral(gamma: int, v: VariationalSystem) -> tuple:
    """Closed-form bounded solution of f' + A f = F from z = -infinity."""
    if gamma / v.n <= 6:
        raise OutOfRangeError(f"grade {gamma} needs g/n > 6 for the integral form")
    if v.F is None:
        raise ValueError("variational system carries no forcing")
    w = _apply(v.Pinv, v.F)
    d = np.diag(v.D)
    out = []
    for i in range(4):
        mu = w[i].exponents + d[i]
        nz = w[i].c != 0
        if np.any(mu[nz].real <= 0):
            raise DivergentIntegralError(f"exponent with nonpositive real part in component {i}")
        c = np.zeros_like(w[i].c)
        c[nz] = w[i].c[nz] / mu[nz]
        out.append(ExpoSum(c, w[i].steps, w[i].exact_steps))
    return _apply(v.P, out)
