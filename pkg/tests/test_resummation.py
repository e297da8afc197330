import json
import math
from dataclasses import replace
from fractions import Fraction
from importlib import resources

import jsonschema
import numpy as np
import pytest
from hypothesis import given, settings, strategies as st

from hhpsi import (DivergentIntegralError, ExpoSum, InvalidResummationError, ModelParams,
                   OutOfRangeError, expand_case_i, expand_case_ii, resum, solve_by_integral)
from hhpsi.exact import Surd
from hhpsi.resummation import (build_variational, grade_zero_residual, ode_residual,
                               variational_system)
from hhpsi.series import leading_coefficients_case_i, simplex
from hhpsi.singularity import case_i_resonances, case_ii_exponents


@pytest.fixture(scope="module")
def series_irrational(table_irrational):
    return resum(table_irrational)


@pytest.fixture(scope="module")
def series_case_ii(table_case_ii):
    return resum(table_case_ii)


@pytest.fixture(scope="module")
def all_series(series_complex, series_irrational, series_case_ii):
    return {"complex": series_complex, "irrational": series_irrational, "ii": series_case_ii}


# -- grade zero ------------------------------------------------------------

def test_grade_zero_case_i(series_complex):
    lam = 1.0
    f0 = series_complex.f[0].c[0, 0]
    assert f0 == pytest.approx(3 / lam * math.sqrt(1 / lam + 2))
    assert series_complex.g(0).c[0, 0] == pytest.approx(-2 * f0)
    assert series_complex.h[0].c[0, 0] == pytest.approx(-3 / lam)
    assert series_complex.k(0).c[0, 0] == pytest.approx(6 / lam)
    assert grade_zero_residual(series_complex) < 1e-14


def test_grade_zero_case_ii(series_case_ii, table_case_ii):
    abar = float(table_case_ii.alpha_bar)
    f0 = series_case_ii.f[0].c[0, 0]
    assert f0 == 1.0
    assert series_case_ii.g(0).c[0, 0] == pytest.approx(abar * f0)
    assert series_case_ii.h[0].c[0, 0] == 6
    assert series_case_ii.k(0).c[0, 0] == -12
    assert grade_zero_residual(series_case_ii) < 1e-14


# -- grouping --------------------------------------------------------------

def _velocity_regroup(t, n):
    """Regroup the table's u-coefficients a_klm * (x power) straight from the triple sum."""
    G = t.order
    out = [np.zeros((G + 1, G + 1), dtype=complex) for _ in range(G + 1)]
    for (k, l, m) in simplex(G):
        e = complex(t.exponent_exact(k, l, m)) + t.x_offset
        if t.case == "I":
            gamma, key = n * k + l + m, (l, m)
        else:
            gamma, key = n * k + 2 * n * m + l, (m, l)
        if gamma <= G:
            out[gamma][key] += t.a[k, l, m] * e
    return out


@pytest.mark.parametrize("name", ["complex", "irrational", "ii"])
def test_g_matches_direct_regrouping(all_series, name, table_complex, table_irrational,
                                     table_case_ii):
    s = all_series[name]
    t = {"complex": table_complex, "irrational": table_irrational, "ii": table_case_ii}[name]
    direct = _velocity_regroup(t, s.n)
    for gamma in range(s.gamma_max + 1):
        got = s.g(gamma).c
        assert np.allclose(got, direct[gamma], rtol=1e-12, atol=1e-12 * np.abs(got).max())


@pytest.mark.parametrize("name", ["complex", "irrational", "ii"])
def test_derivative_identities_are_term_exact(all_series, name):
    s = all_series[name]
    for gamma in range(s.gamma_max + 1):
        f, h = s.f[gamma], s.h[gamma]
        gx = f.c * (gamma / s.n + s.x_offset) + f.c * f.exponents
        ky = h.c * (gamma / s.n - 2) + h.c * h.exponents
        assert np.array_equal(s.g(gamma).c, gx)
        assert np.array_equal(s.k(gamma).c, ky)


def test_degree_bound(all_series):
    for s in all_series.values():
        smax = max(complex(x).real for x in s.steps)
        for gamma in range(s.gamma_max + 1):
            for _, mu in s.f[gamma].terms():
                assert mu.real >= -1e-15
                assert mu.real <= gamma * smax + 1e-12


def test_exponents_merge_structurally():
    s = resum(expand_case_i(ModelParams(1, 1, -1), N=8))
    # r = 3, rbar = 2: cells (1, 0) and (0, 2) share exponent 2
    assert s.steps == (Surd(2), Surd(1))
    for gamma in range(s.gamma_max + 1):
        mus = [mu for _, mu in s.f[gamma].terms()]
        assert len(mus) == len(set(mus))


def test_case_ii_negative_alpha_bar_refused():
    t = expand_case_ii(ModelParams(1, 1, Fraction(-1, 4)), N=6)
    with pytest.raises(InvalidResummationError):
        resum(t)


def test_reality(series_complex):
    z = np.linspace(-15, -1e-3, 200)
    for gamma in range(series_complex.gamma_max + 1):
        for comp in series_complex.vector(gamma):
            vals = comp(z)
            mag = np.maximum(np.abs(vals), 1e-300)
            assert np.all(np.abs(vals.imag) <= 1e-12 * np.maximum(mag, comp.max_amplitude()))


@pytest.mark.parametrize("name", ["complex", "irrational", "ii"])
def test_evaluation_consistency(all_series, name, table_complex, table_irrational, table_case_ii):
    s = all_series[name]
    t = {"complex": table_complex, "irrational": table_irrational, "ii": table_case_ii}[name]
    # grades beyond the order are incomplete in the resummed form; compare on a matched truncation
    G = 20 if s.n == 1 else 40
    tt = t.truncate(min(G, t.order))
    sr = resum(tt, s.n)
    kept = np.zeros_like(np.asarray(tt.a), dtype=bool)
    for (k, l, m) in simplex(tt.order):
        g = s.n * k + (l + m if t.case == "I" else 2 * s.n * m + l)
        kept[k, l, m] = g <= tt.order
    a = np.where(kept, np.asarray(tt.a), 0)
    b = np.where(kept, np.asarray(tt.b), 0)
    direct = replace(tt, a=a, b=b)
    for tau in (0.05, 0.1, 0.2):
        w = direct.evaluate(tau)
        assert np.allclose(sr.evaluate(tau), w, rtol=1e-12, atol=0)


# -- variational matrices ----------------------------------------------------

def test_eigenvalue_example():
    p = ModelParams(1, 1, 1)
    v = build_variational(7, "I", p, 3 * math.sqrt(3), 1)
    eps = math.sqrt(47) / 2
    expected = [8, 1, 4.5 - 1j * eps, 4.5 + 1j * eps]
    got = sorted(np.linalg.eigvals(v.A), key=lambda c: (c.real, c.imag))
    assert np.allclose(got, sorted(expected, key=lambda c: (c.real, c.imag)), atol=1e-10)
    assert np.allclose(np.sort_complex(np.diag(v.D)), np.sort_complex(expected), atol=1e-12)


def _spectrum_matches(A, expected):
    got = list(np.linalg.eigvals(A))
    for e in expected:
        j = int(np.argmin([abs(g - e) for g in got]))
        if abs(got[j] - e) > 1e-10 * max(1, abs(e)):
            return False
        got.pop(j)
    return True


@settings(max_examples=200, deadline=None)
@given(st.one_of(st.fractions(Fraction(1, 50), 20, max_denominator=50),
                 st.fractions(-20, Fraction(-25, 23), max_denominator=50)),
       st.integers(1, 60))
def test_spectrum_case_i_complex(lam, gamma):
    p = ModelParams(1, 1, lam)
    f0 = leading_coefficients_case_i(p)[0]
    r, rbar = (complex(x) for x in case_i_resonances(lam))
    v = build_variational(gamma, "I", p, f0, 1)
    assert _spectrum_matches(v.A, [gamma + 1, gamma - 6, gamma - r, gamma - rbar])
    assert v.diagonalization_error() < 1e-10 * max(1, gamma)
    assert v.M >= 1


@settings(max_examples=200, deadline=None)
@given(st.fractions(Fraction(-24, 23), Fraction(-1, 2), max_denominator=400)
       .filter(lambda q: Fraction(-24, 23) < q < Fraction(-1, 2) and q != -1),
       st.integers(1, 60))
def test_spectrum_case_i_real(lam, gamma):
    p = ModelParams(1, 1, lam)
    f0 = leading_coefficients_case_i(p)[0]
    r, rbar = (complex(x) for x in case_i_resonances(lam))
    n = 1 if rbar.real > 1 else int(math.floor(1 / rbar.real)) + 1
    v = build_variational(gamma, "I", p, f0, n)
    s = gamma / n
    assert _spectrum_matches(v.A, [s + 1, s - 6, s - r, s - rbar])
    assert v.diagonalization_error() < 1e-10 * max(1, s)


@settings(max_examples=200, deadline=None)
@given(st.fractions(Fraction(-1, 2), Fraction(1, 48), max_denominator=4000)
       .filter(lambda q: Fraction(-1, 2) < q < Fraction(1, 48) and q != 0),
       st.integers(1, 60), st.floats(0.1, 3))
def test_spectrum_case_ii(lam, gamma, f0):
    p = ModelParams(1, 1, lam)
    _, abar, _, rbar = (complex(x) for x in case_ii_exponents(lam))
    n = int(math.floor(1 / rbar.real)) + 1
    v = build_variational(gamma, "II", p, f0, n)
    s = gamma / n
    assert _spectrum_matches(v.A, [s + 1, s, s - 6, s - rbar])
    assert v.diagonalization_error() < 1e-10 * max(1, s)


@pytest.mark.parametrize("name", ["complex", "irrational", "ii"])
def test_diagonalisation_up_to_40(all_series, name):
    s = all_series[name]
    f0 = s.f[0].c[0, 0]
    for gamma in range(1, 41):
        v = build_variational(gamma, s.case, s.params, f0, s.n)
        assert v.diagonalization_error() < 1e-10
        assert v.M >= 1


# -- matrix ODE ---------------------------------------------------------------

@pytest.mark.parametrize("name", ["complex", "irrational", "ii"])
def test_ode_residual(all_series, name):
    s = all_series[name]
    res = ode_residual(s, range(1, s.gamma_max + 1))
    assert max(res.values()) < 1e-9


def test_ode_residual_with_zero_constants():
    t = expand_case_i(ModelParams(1, 1, 1), {"a010": 0, "a001": 0, "a600": 0}, N=8)
    s = resum(t)
    res = ode_residual(s, range(1, 6))
    assert res[1] == res[3] == res[5] == 0
    assert res[2] < 1e-14 and res[4] < 1e-14


def test_ode_residual_detects_corruption(table_complex):
    a = np.array(table_complex.a)
    assert a[2, 1, 0] != 0
    a[2, 1, 0] *= 1.01
    s = resum(replace(table_complex, a=a))
    assert max(ode_residual(s, [3, 4]).values()) > 1e-6


# -- integral representation --------------------------------------------------

@pytest.mark.parametrize("name", ["complex", "irrational", "ii"])
def test_integral_matches_resummed(all_series, name):
    s = all_series[name]
    for gamma in range(6 * s.n + 1, min(30, s.gamma_max) + 1):
        v = variational_system(s, gamma)
        sol = solve_by_integral(gamma, v)
        ref = s.vector(gamma)
        scale = max(c.max_amplitude() for c in ref)
        err = max(np.max(np.abs(a.c - b.c)) for a, b in zip(sol, ref))
        assert err <= 1e-9 * scale, (gamma, err, scale)


def test_integral_out_of_range(series_complex):
    with pytest.raises(OutOfRangeError):
        solve_by_integral(6, variational_system(series_complex, 6))


def test_integral_zero_forcing(series_complex):
    zero = ExpoSum.zeros_like(series_complex.f[0])
    v = build_variational(9, "I", series_complex.params, series_complex.f[0].c[0, 0], 1,
                          (zero,) * 4)
    sol = solve_by_integral(9, v)
    assert all(np.count_nonzero(c.c) == 0 for c in sol)


def test_integral_divergent():
    c = np.zeros((3, 3), dtype=complex)
    c[1, 0] = 1.0
    bad = ExpoSum(c, (-20.0, 0.0))
    zero = ExpoSum.zeros_like(bad)
    v = build_variational(7, "I", ModelParams(1, 1, 1), 3 * math.sqrt(3), 1,
                          (zero, bad, zero, zero))
    with pytest.raises(DivergentIntegralError):
        solve_by_integral(7, v)


def test_grade_must_be_positive():
    with pytest.raises(OutOfRangeError):
        build_variational(0, "I", ModelParams(1, 1, 1), 1.0, 1)


# -- ExpoSum algebra ----------------------------------------------------------

small = st.lists(st.complex_numbers(max_magnitude=3, allow_nan=False, allow_infinity=False),
                 min_size=9, max_size=9)


@given(small, small, st.floats(-5, 0))
def test_product_matches_pointwise(u, v, z):
    steps = (0.5 + 0.3j, 0.5 - 0.3j)
    a = np.zeros((6, 6), dtype=complex)
    b = np.zeros((6, 6), dtype=complex)
    a[:3, :3] = np.reshape(u, (3, 3))
    b[:3, :3] = np.reshape(v, (3, 3))
    ea, eb = ExpoSum(a, steps), ExpoSum(b, steps)
    prod = (ea * eb)(z)
    assert prod == pytest.approx(ea(z) * eb(z), rel=1e-10, abs=1e-10)
    assert (ea + eb)(z) == pytest.approx(ea(z) + eb(z), rel=1e-12, abs=1e-12)


@given(small, st.floats(-5, -0.1))
def test_derivative_matches_finite_difference(u, z):
    steps = (1.5 + 0.7j, 1.5 - 0.7j)
    a = np.reshape(np.asarray(u, dtype=complex), (3, 3))
    e = ExpoSum(a, steps)
    h = 1e-5
    fd = (e(z + h) - e(z - h)) / (2 * h)
    assert e.derivative()(z) == pytest.approx(fd, rel=1e-6, abs=1e-6)


def test_json_dump_schema():
    schema = json.loads(resources.files("hhpsi").joinpath("schemas/resummed.schema.json")
                        .read_text())
    doc = json.loads(resum(expand_case_i(ModelParams(1, 1, 1), N=5)).dumps())
    jsonschema.validate(doc, schema)
    assert doc["grades"][0]["f"][0][:2] == pytest.approx([3 * math.sqrt(3), 0.0])
