import math

import numpy as np
import pytest
from hypothesis import given, strategies as st

from ambdispatch.core import DomainError
from ambdispatch.laws import (expected_hospital_time, expected_scene_time, expected_travel_time,
                              sample_hospital_time, sample_scene_time, sample_travel_time)

U_E = 1 - 1 / math.e
uniform = st.floats(0.0, 1.0, exclude_max=True)


def test_travel_at_zero():
    assert sample_travel_time(300.0, 0.0) == 300.0


def test_travel_at_one_minus_inv_e():
    assert sample_travel_time(300.0, U_E) == pytest.approx(600.0)


@pytest.mark.parametrize("fn", [lambda u: sample_travel_time(10.0, u),
                                lambda u: sample_scene_time(2, u),
                                lambda u: sample_hospital_time(2, u)])
@pytest.mark.parametrize("u", [1.0, 1.5, -0.1, float("nan")])
def test_bad_uniform_rejected(fn, u):
    with pytest.raises(DomainError):
        fn(u)


def test_bad_uniform_in_array_rejected():
    with pytest.raises(DomainError):
        sample_travel_time(10.0, np.array([0.2, 1.0]))


@given(uniform)
def test_scene_severity_zero_is_constant(u):
    assert sample_scene_time(0, u) == 600.0


def test_scene_type_c():
    assert sample_scene_time(2, U_E) == pytest.approx(900.0)


@given(uniform)
def test_hospital_severity_zero_is_constant(u):
    assert sample_hospital_time(0, u) == 600.0


def test_hospital_cap_binds():
    assert sample_hospital_time(3, np.nextafter(1.0, 0.0)) == 1200.0


def test_hospital_type_b():
    assert sample_hospital_time(1, U_E) == pytest.approx(750.0)


@given(st.floats(0, 1e4), uniform, st.integers(0, 3))
def test_bounds(tf, u, c):
    assert sample_travel_time(tf, u) >= tf
    assert sample_scene_time(c, u) >= 600.0
    assert 600.0 <= sample_hospital_time(c, u) <= 1200.0


def test_array_and_scalar_agree():
    u = np.random.default_rng(3).random(50)
    arr = sample_hospital_time(3, u)
    assert np.allclose(arr, [sample_hospital_time(3, float(x)) for x in u])


def test_means_on_a_modest_sample():
    u = np.random.default_rng(11).random(200_000)
    assert sample_travel_time(300.0, u).mean() == pytest.approx(expected_travel_time(300.0), rel=0.02)
    assert sample_scene_time(3, u).mean() == pytest.approx(expected_scene_time(3), rel=0.02)
    assert sample_hospital_time(2, u).mean() == pytest.approx(expected_hospital_time(2), rel=0.02)


def test_hospital_mean_closed_form_by_quadrature():
    # E[min(600, X)], X ~ Exp(mean m), equals the integral of P(X > x) over [0, 600]
    for c in (1, 2, 3):
        m = 150.0 * c
        xs = np.linspace(0.0, 600.0, 200_001)
        integral = np.trapezoid(np.exp(-xs / m), xs)
        assert expected_hospital_time(c) == pytest.approx(600.0 + integral, rel=1e-9)
