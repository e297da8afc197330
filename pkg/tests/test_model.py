from fractions import Fraction

import numpy as np
import pytest
import sympy as sp

from hhpsi import InvalidParameterError, ModelParams, PhaseState, energy, rescale_parameters, vector_field
from hhpsi.model import energy_rate


def test_rescale_examples():
    assert rescale_parameters(1, 1, 1, 1).lam == 1
    assert rescale_parameters(1, 2, 4, 2).lam == Fraction(1, 2)
    p = rescale_parameters(1, 1, -6, 1)
    assert p.lam == Fraction(-1, 6)


def test_rescale_rejects_zero():
    with pytest.raises(InvalidParameterError):
        rescale_parameters(1, 1, 0, 1)
    with pytest.raises(InvalidParameterError):
        rescale_parameters(1, 1, 1, 0)


def test_params_invariants():
    with pytest.raises(InvalidParameterError):
        ModelParams(1, 1, 0)
    with pytest.raises(InvalidParameterError):
        ModelParams(0, 1, 1)
    with pytest.raises(InvalidParameterError):
        ModelParams(1, 1, 0.5)
    p = ModelParams(1, 1, "-24/23")
    assert p.lam == Fraction(-24, 23)
    assert p.lam_float == pytest.approx(-24 / 23)


def test_vector_field_examples():
    p = ModelParams(1, 1, 1)
    assert np.array_equal(vector_field((0, 0, 0, 0), p), np.zeros(4))
    assert np.array_equal(vector_field((1, 0, 0, 0), p), [0, -1, 0, -1])
    assert np.array_equal(vector_field(PhaseState(0, 0, 1, 0), p), [0, 0, 0, 0])


def test_energy_examples():
    p = ModelParams(1, 1, 1)
    assert energy((0, 0, 0, 0), p) == 0
    assert energy((1, 0, 0, 0), p) == 0.5
    assert energy((1, 0, 1, 0), p) == pytest.approx(5 / 3, rel=1e-15)


def test_energy_is_symbolically_conserved():
    x, u, y, v, A, B, lam = sp.symbols("x u y v A B lam")
    E = (u ** 2 + v ** 2 + A * x ** 2 + B * y ** 2) / 2 + lam * x ** 2 * y - y ** 3 / 3
    flow = (u, -A * x - 2 * lam * x * y, v, -B * y - lam * x ** 2 + y ** 2)
    rate = sum(sp.diff(E, s) * f for s, f in zip((x, u, y, v), flow))
    assert sp.expand(rate) == 0


def test_energy_rate_vanishes_on_random_draws():
    rng = np.random.default_rng(7)
    worst = 0.0
    for _ in range(10_000):
        lam = Fraction(int(rng.integers(-40, 41)) or 1, int(rng.integers(1, 20)))
        p = ModelParams(rng.uniform(-3, 3) or 1.0, rng.uniform(-3, 3) or 1.0, lam)
        s = rng.normal(size=4) * 10 ** rng.uniform(-2, 2)
        dx, du, dy, dv = vector_field(s, p)
        x, u, y, v = s
        lamf = p.lam_float
        terms = np.array([(p.A * x + 2 * lamf * x * y) * dx, u * du,
                          (p.B * y + lamf * x * x - y * y) * dy, v * dv])
        worst = max(worst, abs(energy_rate(s, p)) / np.max(np.abs(terms)))
    assert worst < 1e-12


def test_phase_state_rejects_nonfinite():
    with pytest.raises(ValueError):
        PhaseState(np.nan, 0, 0, 0)
    s = PhaseState.from_array([1, 2, 3, 4], 0.5)
    assert s.t == 0.5 and list(s.as_array()) == [1, 2, 3, 4]
