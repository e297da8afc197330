"""Growth bounds for the resummed coefficient functions.

A certificate records a constant K with

    max(|f_g(z)|, |g_g(z)|, |h_g(z)|, |k_g(z)|) <= (c K)**g / sqrt(g + 1)

for every sampled z < 0 and 1 <= g <= gamma_max, where c = 2 when both
lattice steps share the real part 3/2 (complex resonances) and c = 3
otherwise.  The series then converges for tau < 1/(2K), respectively
tau < 1/(3K)**n.
"""

from __future__ import annotations

import json
import math
from dataclasses import dataclass, field

import numpy as np
from scipy.optimize import minimize_scalar
from scipy.special import comb

from .errors import CertificateError, InvalidParameterError
from .model import ModelParams
from .resummation import ResummedSeries, build_variational

__all__ = [
    "BoundCertificate",
    "lemma_a2_partial_sum",
    "lemma_a1_constant",
    "lemma_a3_constant",
    "forcing_constant",
    "base_order",
    "convergence_radius",
    "default_z_grid",
    "certify",
    "K_FLOOR",
]

K_FLOOR = 1e-3
_INFLATE = 1 + 1e-9


def lemma_a2_partial_sum(gamma: int) -> float:
    """sum_{mu=0}^{g-1} 1/(sqrt(mu+1) sqrt(g-mu)); tends to pi from below."""
    if gamma < 1:
        raise ValueError("gamma must be >= 1")
    mu = np.arange(gamma, dtype=float)
    return float(np.sum(1.0 / (np.sqrt(mu + 1) * np.sqrt(gamma - mu))))


def _check_mp(M, p):
    if not (0 < M <= 1):
        raise InvalidParameterError("M must lie in (0, 1]")
    if not p > 0:
        raise InvalidParameterError("p must be positive")


def lemma_a3_constant(polys, N: int, M: float = 1.0, p: float = 1.0) -> float:
    """Explicit K for bivariate polynomials via the binomial-theorem bound.

    ``polys[g - 1][i, j]`` is the coefficient of X**i Y**j in P_g, with
    i + j <= g.  Grades g >= N are ignored.
    """
    if N <= 1:
        raise InvalidParameterError("N must exceed 1")
    _check_mp(M, p)
    K = 0.0
    for gamma in range(1, min(N - 1, len(polys)) + 1):
        c = np.abs(np.asarray(polys[gamma - 1], dtype=complex))
        for (i, j) in zip(*np.nonzero(c)):
            beta = i + j
            if beta > gamma:
                raise InvalidParameterError(f"degree {beta} exceeds grade {gamma}")
            den = comb(gamma, beta, exact=True) * comb(beta, i, exact=True) * M \
                * p ** (gamma - beta)
            # log form: the raw ratio overflows for large grades
            lk = (math.log(c[i, j]) + 0.5 * math.log(gamma + 1) - math.log(den)) / gamma
            K = max(K, math.exp(lk))
    return max(K, K_FLOOR)


def _sup_ratio(coeffs, d: float, p: float) -> float:
    """sup_{X > 0} |sum c_m X**m| / (p + X)**d, for deg <= d.

    With X = p t/(1 - t) the ratio becomes sum c_m p**(m-d) t**m (1-t)**(d-m)
    on the compact interval [0, 1].
    """
    c = np.asarray(coeffs, dtype=complex)
    m = np.arange(len(c))
    scale = c * p ** (m - d)

    def g(t):
        t = np.atleast_1d(t)
        powers = t[:, None] ** m * (1 - t[:, None]) ** (d - m)
        return np.abs(powers @ scale)

    grid = np.linspace(0.0, 1.0, 2049)
    vals = g(grid)
    best = int(np.argmax(vals))
    lo, hi = grid[max(best - 1, 0)], grid[min(best + 1, len(grid) - 1)]
    if hi > lo:
        res = minimize_scalar(lambda t: -g(t)[0], bounds=(lo, hi), method="bounded",
                              options={"xatol": 1e-14})
        return max(vals[best], -res.fun)
    return vals[best]


def lemma_a1_constant(polys, N: int, M: float = 1.0, p: float = 1.0, q: int = 1) -> float:
    """Least K > 1/p with |P_g(X)| <= M (pK + KX)**(g/q) / sqrt(g + 1) for X > 0.

    ``polys[g - 1]`` holds the coefficients of P_g in increasing degree
    (degree <= g // q).  The minimum is exact up to the supremum search:
    K_g = (sqrt(g+1)/M * sup_X |P_g(X)| / (p + X)**(g/q))**(q/g).
    """
    if q < 1 or int(q) != q:
        raise InvalidParameterError("q must be a positive integer")
    if N <= q:
        raise InvalidParameterError("N must exceed q")
    _check_mp(M, p)
    K = (1.0 / p) * _INFLATE
    for gamma in range(1, min(N - 1, len(polys)) + 1):
        c = np.trim_zeros(np.asarray(polys[gamma - 1], dtype=complex), "b")
        if c.size == 0:
            continue
        d = gamma / q
        if c.size - 1 > gamma // q:
            raise InvalidParameterError(f"degree {c.size - 1} exceeds [{gamma}/{q}]")
        sup = _sup_ratio(c, d, p)
        if sup == 0:
            continue
        lk = (math.log(sup) + 0.5 * math.log(gamma + 1) - math.log(M)) / d
        K = max(K, math.exp(lk) * _INFLATE)
    return max(K, K_FLOOR)


def forcing_constant(p: ModelParams) -> float:
    """E = max(|A| + 2|lam| pi, |B| + (|lam| + 1) pi)."""
    lam = abs(p.lam_float)
    return max(abs(p.A) + 2 * lam * math.pi, abs(p.B) + (lam + 1) * math.pi)


def base_order(M: float, E: float, n: int) -> int:
    """Least N > 6n with M E sqrt(N + 1) / (N/n - 6) < 1."""
    def ok(N):
        return M * E * math.sqrt(N + 1) < N / n - 6

    lo = 6 * n + 1
    if ok(lo):
        return lo
    hi = 2 * lo
    while not ok(hi):
        hi *= 2
    # the defect is concave in N, so the admissible set is a half-line
    while hi - lo > 1:
        mid = (lo + hi) // 2
        if ok(mid):
            hi = mid
        else:
            lo = mid
    return hi


def convergence_radius(K: float, c: int, n: int = 1) -> float:
    """R = 1/(2K) on the complex lattice (c = 2), else 1/(3K)**n."""
    if not K > 0:
        raise InvalidParameterError("K must be positive")
    if c == 2:
        return 1 / (2 * K)
    return (1 / (c * K)) ** n


def default_z_grid() -> np.ndarray:
    return -np.logspace(math.log10(20.0), -3, 64)


@dataclass(frozen=True)
class BoundCertificate:
    case: str
    K: float
    N0: int
    M_lambda: float
    E: float
    radius: float
    c: int
    n: int
    verified_range: tuple
    fit_range: tuple
    z_grid: tuple
    passed: bool
    max_ratio: float
    k_grew: bool = False
    K_half: float | None = None
    lam: str = ""
    extras: dict = field(default_factory=dict)

    def to_json(self) -> dict:
        return {
            "case": self.case,
            "lambda": self.lam,
            "K": self.K,
            "E": self.E,
            "M_lambda": self.M_lambda,
            "N0": self.N0,
            "radius": self.radius,
            "c": self.c,
            "n": self.n,
            "checkedGammaMax": self.verified_range[1],
            "fitRange": list(self.fit_range),
            "gridSize": len(self.z_grid),
            "maxRatio": self.max_ratio,
            "kGrew": self.k_grew,
            "KHalf": self.K_half,
            "pass": self.passed,
        }

    def dumps(self) -> str:
        return json.dumps(self.to_json(), indent=2)


def _is_complex_lattice(s: ResummedSeries) -> bool:
    return s.case == "I" and not s.steps[0].is_real


def _fit_K(s: ResummedSeries, hi: int, complex_lattice: bool) -> float:
    # K over grades 1..hi
    K = K_FLOOR
    for comp in range(4):
        if complex_lattice:
            polys = []
            for gamma in range(1, hi + 1):
                a = np.abs(s.vector(gamma)[comp].c)
                deg = np.add.outer(np.arange(a.shape[0]), np.arange(a.shape[1]))
                polys.append(np.bincount(deg.ravel(), weights=a.ravel(),
                                         minlength=gamma + 1)[:gamma + 1])
            K = max(K, lemma_a1_constant(polys, hi + 1, 1.0, 1.0, 1))
        else:
            polys = [s.vector(gamma)[comp].c for gamma in range(1, hi + 1)]
            K = max(K, lemma_a3_constant(polys, hi + 1, 1.0, 1.0))
    return K


def certify(s: ResummedSeries, p: ModelParams | None = None, gamma_max: int | None = None,
            z_grid=None, *, raise_on_failure: bool = True) -> BoundCertificate:
    """Fit K from the lemma constants and check the growth bound on a z-grid."""
    p = s.params if p is None else p
    gamma_max = s.gamma_max if gamma_max is None else gamma_max
    if gamma_max > s.gamma_max or gamma_max < 1:
        raise ValueError(f"series only reaches grade {s.gamma_max}")
    z_grid = default_z_grid() if z_grid is None else np.asarray(z_grid, dtype=float)
    if np.any(z_grid >= 0):
        raise ValueError("z grid must lie in (-inf, 0)")
    complex_lattice = _is_complex_lattice(s)
    c = 2 if complex_lattice else 3
    M = build_variational(1, s.case, p, s.f[0].c[0, 0], s.n).M
    E = forcing_constant(p)
    N0 = base_order(M, E, s.n)
    fit_hi = min(N0 - 1, gamma_max)
    K = _fit_K(s, fit_hi, complex_lattice)
    half = max(1, fit_hi // 2)
    K_half = _fit_K(s, half, complex_lattice)
    if fit_hi < gamma_max:
        K_full = _fit_K(s, gamma_max, complex_lattice)
        k_grew = K_full > K
    else:
        k_grew = K > K_half

    logcK = math.log(c * K)
    worst = (-math.inf, None)
    for gamma in range(1, gamma_max + 1):
        vec = s.vector(gamma)
        norm = np.max(np.abs(np.array([comp(z_grid) for comp in vec])), axis=0)
        # z -> 0- bound through the nonnegative majorant at X = 1
        maj = max(comp.abs_sum() for comp in vec)
        bound = gamma * logcK - 0.5 * math.log(gamma + 1)
        for z, val in list(zip(z_grid, norm)) + [(0.0, maj)]:
            if val == 0:
                continue
            excess = math.log(val) - bound
            if excess > worst[0]:
                worst = (excess, (gamma, float(z), float(val), math.exp(bound)))
    max_ratio = math.exp(worst[0]) if worst[1] else 0.0
    passed = max_ratio <= 1.0
    if not passed and raise_on_failure:
        raise CertificateError(f"bound violated at gamma={worst[1][0]}, z={worst[1][1]}",
                               witness=worst[1])
    radius = convergence_radius(K, c, s.n)
    return BoundCertificate(s.case, K, N0, M, E, radius, c, s.n, (1, gamma_max),
                            (1, fit_hi), tuple(float(z) for z in z_grid), passed,
                            max_ratio, k_grew, K_half, str(p.lam))
