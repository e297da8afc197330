"""Series evaluation, an independent ODE integrator and cross-checks.

Validation always runs series -> integrator: the integrator is seeded
from the series at tau0 and its state at tau1 is compared with the series
at tau1.  Time is measured from the singularity (t0 = 0 unless given).
"""

from __future__ import annotations

import csv
import json
import math
import warnings
from dataclasses import dataclass, field
from pathlib import Path

import numpy as np
from scipy.integrate import solve_ivp

from .errors import ConvergenceWarning
from .model import ModelParams, PhaseState, energy, vector_field
from .resummation import ResummedSeries
from .series import CoefficientTable, extended_context
from .singularity import substitution_index

__all__ = [
    "Trajectory",
    "ValidationReport",
    "evaluate_series",
    "integrate_ode",
    "cross_validate",
    "empirical_radius",
    "series_curve",
    "energy_variation",
    "energy_variation_extended",
    "write_curve_csv",
]

FINITE_TIME_SINGULARITY = "finite-time-singularity"


def evaluate_series(t: CoefficientTable | ResummedSeries, tau: float, t0: float = 0.0,
                    radius: float | None = None) -> PhaseState:
    """State (x, x', y, y') at time t0 + tau by direct summation."""
    if not tau > 0:
        raise ValueError("tau must be positive")
    if radius is not None and tau >= radius:
        warnings.warn(f"tau={tau} is not inside the radius {radius}", ConvergenceWarning,
                      stacklevel=2)
    return PhaseState.from_array(t.evaluate(tau), t0 + tau)


@dataclass
class Trajectory:
    t: np.ndarray
    y: np.ndarray
    status: str
    message: str
    sol: object = None

    @property
    def final(self) -> np.ndarray:
        return self.y[:, -1]

    def __call__(self, t):
        return self.sol(t)


def integrate_ode(s0: PhaseState | np.ndarray, p: ModelParams, t_span, tol: float = 1e-12,
                  t_eval=None) -> Trajectory:
    """Adaptive DOP853 (8th order, embedded 5th/3rd error estimate) with dense output.

    A step-size collapse is reported as a finite-time singularity.
    """
    if not tol > 0:
        raise ValueError("tol must be positive")
    y0 = s0.as_array() if isinstance(s0, PhaseState) else np.asarray(s0)
    if not np.all(np.isfinite(y0)):
        raise ValueError("initial state must be finite")
    if np.all(np.imag(y0) == 0):
        y0 = np.real(y0).astype(float)
    scale = float(np.max(np.abs(y0)))
    atol = tol * max(scale, 1e-300)
    sol = solve_ivp(lambda _t, w: vector_field(w, p), t_span, y0, method="DOP853",
                    rtol=tol, atol=atol, dense_output=True, t_eval=t_eval)
    status = "ok"
    if sol.status == -1:
        status = FINITE_TIME_SINGULARITY if "step size" in sol.message.lower() else "failed"
    return Trajectory(sol.t, sol.y, status, sol.message, sol.sol)


def series_curve(t: CoefficientTable, taus) -> np.ndarray:
    """Rows (tau, x, u, y, v, E) along the series."""
    rows = []
    for tau in taus:
        w = t.evaluate(tau)
        rows.append([tau, *w, energy(w, t.params)])
    return np.array(rows)


def _energy_extended(w, p: ModelParams):
    import gmpy2

    x, u, y, v = w
    lam = gmpy2.mpq(p.lam.numerator, p.lam.denominator)
    A, B = gmpy2.mpfr(p.A), gmpy2.mpfr(p.B)
    return (u * u + v * v + A * x * x + B * y * y) / 2 + lam * x * x * y - y ** 3 / 3


def energy_variation_extended(states, p: ModelParams, bits: int) -> dict:
    """Energy spread for gmpy2 states with exact parameters, at ``bits`` precision."""
    with extended_context(bits):
        E = [_energy_extended(w, p) for w in states]
        spread = max(abs(e - E[0]) for e in E)
        rel = spread / max(abs(E[0]), 1)
    return {
        "energy": complex(E[0]),
        "spread": float(spread),
        "relative": float(rel),
        "cancellation": None,
        "extendedPrecision": bits,
    }


def energy_variation(states, p: ModelParams) -> dict:
    """Spread of the energy over a set of states.

    ``relative`` divides by max(|E|, 1); ``cancellation`` divides by the
    largest single term of the energy (the rounding floor of the
    evaluation, which is huge near the singularity).
    """
    E = np.array([energy(w, p) for w in states])
    spread = float(np.max(np.abs(E - E[0])))
    lam = p.lam_float
    terms = []
    for x, u, y, v in states:
        terms.append(max(abs(u * u) / 2, abs(v * v) / 2, abs(p.A * x * x) / 2,
                         abs(p.B * y * y) / 2, abs(lam * x * x * y), abs(y ** 3) / 3))
    return {
        "energy": complex(E[0]),
        "spread": spread,
        "relative": spread / max(abs(E[0]), 1.0),
        "cancellation": spread / max(terms),
    }


@dataclass
class ValidationReport:
    case: str
    lam: str
    tau0: float
    tau1: float
    orders: list
    deviations: list
    series_states: list
    integrator_states: list
    energy_series: dict
    energy_integrator: list
    empirical_radius: float
    radius: float | None
    status: str
    messages: list = field(default_factory=list)
    max_imag_ratio: float = 0.0
    noise_floor: float = 0.0

    @property
    def max_deviation(self) -> float:
        return max(self.deviations) if self.deviations else 0.0

    def to_json(self) -> dict:
        def enc(w):
            return [[complex(c).real, complex(c).imag] for c in w]

        return {
            "case": self.case,
            "lambda": self.lam,
            "tau0": self.tau0,
            "tau1": self.tau1,
            "orders": self.orders,
            "deviations": self.deviations,
            "maxDeviation": self.max_deviation,
            "seriesStates": [enc(w) for w in self.series_states],
            "integratorStates": [enc(w) for w in self.integrator_states],
            "energySeries": {k: (v if not isinstance(v, complex) else [v.real, v.imag])
                             for k, v in self.energy_series.items()},
            "energyIntegrator": self.energy_integrator,
            "empiricalRadius": None if math.isinf(self.empirical_radius) else self.empirical_radius,
            "radius": self.radius,
            "maxImagRatio": self.max_imag_ratio,
            "noiseFloor": self.noise_floor,
            "status": self.status,
            "messages": self.messages,
        }

    def dumps(self) -> str:
        return json.dumps(self.to_json(), indent=2)


def _rel(a, b) -> float:
    return float(np.max(np.abs(np.asarray(a) - np.asarray(b))) / np.max(np.abs(b)))


def cross_validate(t: CoefficientTable, p: ModelParams | None, tau0: float, tau1: float,
                   orders, tol: float = 1e-12, radius: float | None = None,
                   energy_samples: int = 64, noise_floor: float | None = None) -> ValidationReport:
    """Seed the integrator from the series at tau0; compare at tau1, per order."""
    p = t.params if p is None else p
    if not 0 < tau0 <= tau1:
        raise ValueError("need 0 < tau0 <= tau1")
    orders = sorted(orders)
    if orders and orders[-1] > t.order:
        raise ValueError(f"table only reaches order {t.order}")
    noise = 100 * tol if noise_floor is None else noise_floor
    messages = []
    status = "ok"
    if radius is not None and tau1 >= radius:
        status = "warning"
        messages.append(f"tau1={tau1} is not inside the radius {radius}")
    devs, sstates, istates, ienergy = [], [], [], []
    imag = 0.0
    for N in orders:
        tn = t.truncate(N)
        w0 = tn.evaluate(tau0)
        w1 = tn.evaluate(tau1)
        imag = max(imag, float(np.max(np.abs(w1.imag)) / np.max(np.abs(w1))))
        if tau1 == tau0:
            end = w0
            ienergy.append(0.0)
        else:
            traj = integrate_ode(PhaseState.from_array(w0, tau0), p, (tau0, tau1), tol)
            if traj.status != "ok":
                status = "failed"
                messages.append(f"order {N}: integrator {traj.status}: {traj.message}")
            end = traj.final
            ev = energy_variation(traj.y.T, p)
            ienergy.append(ev["relative"])
        sstates.append(w1)
        istates.append(end)
        devs.append(_rel(end, w1))
    for i in range(1, len(devs)):
        if devs[i] > max(devs[i - 1], noise):
            status = "convergence-failure"
            messages.append(f"deviation grew from order {orders[i - 1]} to {orders[i]}")
    lo = tau1 / 4 if tau1 > tau0 else tau0
    taus = np.linspace(lo, tau1, energy_samples)
    top = t.truncate(orders[-1]) if orders else t
    if t.precision is not None:
        ev = energy_variation_extended([top.evaluate_extended(tau) for tau in taus], p,
                                       t.precision)
    else:
        ev = energy_variation([top.evaluate(tau) for tau in taus], p)
    try:
        remp = empirical_radius(t)
    except ValueError:
        remp = math.nan
    return ValidationReport(t.case, str(p.lam), tau0, tau1, orders, devs, sstates, istates,
                            ev, ienergy, remp, radius, status, messages, imag, noise)


def _grade_index(t: CoefficientTable, n: int):
    k, l, m = np.indices(t.a.shape)
    if t.case == "I":
        return n * k + l + m
    return n * k + 2 * n * m + l


def empirical_radius(t: CoefficientTable, n: int | None = None) -> float:
    """Reciprocal of max over the upper half of grades of m_g**(1/g), to the power n.

    m_g is the largest coefficient magnitude in resummation grade g; the
    grading is in w = tau**(1/n), hence the power n for tau.
    """
    if t.order < 20:
        raise ValueError("empirical radius needs a table of order >= 20")
    if n is None:
        n = substitution_index(t.step_exact if t.case == "I" else (t.rbar,),
                               "i" if t.case == "I" else "ii").n
    G = t.order
    grade = _grade_index(t, n)
    valid = t.mask() & (grade <= G)
    mags = np.maximum(np.abs(t.a.astype(complex)), np.abs(t.b.astype(complex)))
    best = 0.0
    for g in range(max(1, G // 2), G + 1):
        sel = valid & (grade == g)
        if not np.any(sel):
            continue
        mg = float(np.max(mags[sel]))
        if mg > 0:
            best = max(best, mg ** (1.0 / g))
    if best == 0:
        return math.inf
    return (1.0 / best) ** n


def write_curve_csv(path, rows) -> Path:
    """CSV with columns t, x, u, y, v, E (real parts)."""
    path = Path(path)
    path.parent.mkdir(parents=True, exist_ok=True)
    with open(path, "w", newline="") as fh:
        w = csv.writer(fh)
        w.writerow(["t", "x", "u", "y", "v", "E"])
        for row in rows:
            w.writerow([repr(float(np.real(c))) for c in row])
    return path
