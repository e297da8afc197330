import csv
import json
import math
import warnings
from dataclasses import replace
from fractions import Fraction
from importlib import resources

import jsonschema
import numpy as np
import pytest

from hhpsi import (ConvergenceWarning, ModelParams, PhaseState, certify, cross_validate,
                   empirical_radius, energy, evaluate_series, expand_case_i, expand_case_ii,
                   integrate_ode, resum)
from hhpsi.validation import series_curve, write_curve_csv


# -- series evaluation --------------------------------------------------------

@pytest.mark.parametrize("fixture", ["table_complex", "table_irrational"])
def test_leading_limit_case_i(fixture, request):
    t = request.getfixturevalue(fixture)
    a0, b0 = complex(t.a[0, 0, 0]), complex(t.b[0, 0, 0])
    # first correction is the smaller of tau^2 and the lowest lattice exponent
    q = min(2.0, min(complex(e).real for e in t.step_exact))
    for tau in (1e-3, 1e-4):
        s = evaluate_series(t, tau)
        assert abs(s.x * tau ** 2 - a0) < 10 * tau ** q * abs(a0)
        assert abs(s.y * tau ** 2 - b0) < 10 * tau ** q * abs(b0)


def test_leading_limit_case_ii(table_case_ii):
    tau = 1e-4
    s = evaluate_series(table_case_ii, tau)
    assert abs(s.y * tau ** 2 - 6) < 1e-6


@pytest.mark.parametrize("fixture", ["table_complex", "table_irrational"])
def test_triple_and_resummed_agree(fixture, request):
    t = request.getfixturevalue(fixture)
    s = resum(t)
    a = evaluate_series(t, 0.1).as_array()
    b = evaluate_series(s, 0.1).as_array()
    assert np.max(np.abs(a - b)) / np.max(np.abs(a)) < 1e-12


def test_evaluate_series_guards(table_complex):
    with pytest.raises(ValueError):
        evaluate_series(table_complex, 0.0)
    with pytest.raises(ValueError):
        evaluate_series(table_complex, -0.1)
    with pytest.warns(ConvergenceWarning):
        evaluate_series(table_complex, 0.3, radius=0.25)
    with warnings.catch_warnings():
        warnings.simplefilter("error")
        s = evaluate_series(table_complex, 0.1, t0=2.0, radius=0.25)
    assert s.t == pytest.approx(2.1)


# -- integrator ---------------------------------------------------------------

def test_zero_state_stays_zero(p_complex):
    traj = integrate_ode(np.zeros(4), p_complex, (0, 5))
    assert traj.status == "ok"
    assert np.all(traj.y == 0)


@pytest.mark.parametrize("s0", [(0.1, 0.05, 0.1, 0.0), (0.3, -0.1, 0.0, 0.2), (0.0, 0.2, -0.2, 0.1)])
def test_energy_drift_over_unit_span(s0):
    p = ModelParams(1, 2, Fraction(-4, 5))
    tol = 1e-10
    traj = integrate_ode(np.array(s0), p, (0, 1), tol)
    E = np.array([energy(w, p) for w in traj.y.T])
    assert np.max(np.abs(E - E[0])) / max(1, abs(E[0])) < 10 * tol


def test_small_amplitude_cosine():
    p = ModelParams(1, 1, 1)
    ts = np.linspace(0, 2 * math.pi, 41)
    traj = integrate_ode(np.array([1e-6, 0, 0, 0]), p, (0, 2 * math.pi), 1e-12, t_eval=ts)
    assert np.max(np.abs(traj.y[0] - 1e-6 * np.cos(ts))) / 1e-6 < 1e-9


def _endpoint_errors(tols):
    p = ModelParams(1, 1, 1)
    s0 = np.array([0.1, 0.05, 0.1, 0.0])
    ref = integrate_ode(s0, p, (0, 10), 1e-14).final
    return [float(np.max(np.abs(integrate_ode(s0, p, (0, 10), tol).final - ref)))
            for tol in tols]


@pytest.mark.filterwarnings("ignore::UserWarning")
def test_halving_tol_reduces_error_fourfold():
    # stated invariant; tolerance-proportional step control gives about 2x per halving
    e = _endpoint_errors([1e-8, 5e-9])
    assert e[0] / e[1] >= 4


@pytest.mark.filterwarnings("ignore::UserWarning")
def test_error_tracks_tolerance():
    e = _endpoint_errors([1e-6, 5e-7, 1e-8, 5e-9])
    for hi, lo in ((e[0], e[1]), (e[2], e[3])):
        assert hi / lo >= 1.8
    assert e[2] < 2e-2 * e[0]


def test_blow_up_reports_singularity():
    traj = integrate_ode(np.array([0.0, 0.0, 10.0, 0.0]), ModelParams(1, 1, 1), (0, 5))
    assert traj.status == "finite-time-singularity"
    assert traj.t[-1] < 5


def test_integrator_guards(p_complex):
    with pytest.raises(ValueError):
        integrate_ode(np.zeros(4), p_complex, (0, 1), tol=0)
    with pytest.raises(ValueError):
        integrate_ode(np.array([np.nan, 0, 0, 0]), p_complex, (0, 1))


def test_integrator_accepts_phase_state(p_complex):
    s = PhaseState.from_array(np.array([0.1, 0, 0, 0]), 0.0)
    assert integrate_ode(s, p_complex, (0, 1)).status == "ok"


# -- cross-validation ---------------------------------------------------------

@pytest.fixture(scope="module")
def radius_complex(series_complex):
    return certify(series_complex).radius


def test_deviation_shrinks_with_order(table_complex, radius_complex):
    R = radius_complex
    rep = cross_validate(table_complex, None, R / 8, R / 4, [4, 8, 16], radius=R)
    assert rep.status == "ok"
    d = rep.deviations
    assert d[1] < d[0] and d[2] < d[1]
    assert all(x >= 0 for x in d)


def test_equal_endpoints_give_zero_deviation(table_complex):
    rep = cross_validate(table_complex, None, 0.05, 0.05, [10, 20])
    assert rep.deviations == [0.0, 0.0]


def test_order_zero_deviation_is_quadratic(table_complex):
    devs = []
    for tau0 in (0.02, 0.01, 0.005):
        rep = cross_validate(table_complex, None, tau0, 2 * tau0, [0])
        devs.append(rep.deviations[0])
    for big, small in zip(devs, devs[1:]):
        assert 3.0 < big / small < 5.0


def test_radius_warning(table_complex, radius_complex):
    R = radius_complex
    rep = cross_validate(table_complex, None, R / 2, 1.1 * R, [10], radius=R)
    assert rep.status == "warning" and rep.messages


def test_convergence_failure_status(table_complex):
    # a corrupted grade-25 coefficient makes order 30 worse than order 20
    a = table_complex.a.copy()
    a[25, 0, 0] += 1e20
    bad = replace(table_complex, a=a)
    rep = cross_validate(bad, None, 0.05, 0.1, [10, 20, 30])
    assert rep.status == "convergence-failure"
    assert rep.deviations[2] > rep.deviations[1] and rep.messages


def test_cross_validate_guards(table_complex):
    with pytest.raises(ValueError):
        cross_validate(table_complex, None, 0.1, 0.05, [10])
    with pytest.raises(ValueError):
        cross_validate(table_complex, None, 0.05, 0.1, [31])


def test_conjugate_symmetric_report_is_real(table_complex, radius_complex):
    R = radius_complex
    rep = cross_validate(table_complex, None, R / 8, R / 4, [20], radius=R)
    assert rep.max_imag_ratio < 1e-10


def test_report_schema(table_complex, radius_complex):
    R = radius_complex
    doc = cross_validate(table_complex, None, R / 8, R / 4, [10, 20], radius=R).to_json()
    schema = json.loads(resources.files("hhpsi").joinpath("schemas/validation.schema.json")
                        .read_text())
    jsonschema.validate(doc, schema)
    for key in ("deviations", "maxDeviation", "orders", "empiricalRadius", "energySeries"):
        assert key in doc
    assert json.loads(json.dumps(doc)) == doc


# -- empirical radius ---------------------------------------------------------

def test_geometric_table_has_radius_half(table_complex):
    k, l, m = np.indices(table_complex.a.shape)
    grade = k + l + m
    a = np.where(grade <= table_complex.order, 2.0 ** grade, 0.0).astype(table_complex.a.dtype)
    t = replace(table_complex, a=a, b=np.zeros_like(table_complex.b))
    assert empirical_radius(t) == pytest.approx(0.5, rel=1e-12)


def test_leading_only_table_has_infinite_radius(table_complex):
    a = np.zeros_like(table_complex.a)
    a[0, 0, 0] = table_complex.a[0, 0, 0]
    b = np.zeros_like(table_complex.b)
    b[0, 0, 0] = table_complex.b[0, 0, 0]
    assert math.isinf(empirical_radius(replace(table_complex, a=a, b=b)))


def test_short_table_is_rejected(table_complex):
    with pytest.raises(ValueError):
        empirical_radius(table_complex.truncate(19))


def test_certified_radius_below_empirical(table_complex, radius_complex):
    assert 0 < radius_complex <= empirical_radius(table_complex)


def test_case_ii_radius_uses_substitution_index(table_case_ii):
    R = empirical_radius(table_case_ii)
    assert R == empirical_radius(table_case_ii, n=2)
    assert 0 < R < math.inf


# -- curves -------------------------------------------------------------------

def test_curve_csv_columns(tmp_path, table_complex):
    rows = series_curve(table_complex, np.linspace(0.02, 0.06, 5))
    path = write_curve_csv(tmp_path / "out" / "curve.csv", rows)
    with open(path) as fh:
        data = list(csv.reader(fh))
    assert data[0] == ["t", "x", "u", "y", "v", "E"]
    assert len(data) == 6
    assert float(data[1][0]) == pytest.approx(0.02)
    assert np.array([[float(c) for c in r] for r in data[1:]]) == pytest.approx(rows.real)


def test_case_ii_series_seeds_integrator():
    t = expand_case_ii(ModelParams(1, 1, Fraction(1, 96)), N=20)
    rep = cross_validate(t, None, 0.01, 0.02, [10, 20])
    assert rep.status == "ok"
    assert rep.deviations[-1] < 1e-8
