import math

import numpy as np
import pytest

from zenolab.errors import QuadratureFailure
from zenolab.quadrature import default_rtol, gk15, integrate, split_panels


def test_gk15_exact_for_polynomials():
    val, err = gk15(lambda x: x ** 10, [0.0], [1.0])
    assert val[0] == pytest.approx(1 / 11, rel=1e-14)
    assert err[0] < 1e-12


def test_finite_interval_sin():
    res = integrate(np.sin, [0.0, math.pi], rtol=1e-10)
    assert res.value == pytest.approx(2.0, rel=1e-10)


def test_infinite_range():
    res = integrate(lambda x: 1 / (1 + x * x), [-math.inf, math.inf], rtol=1e-9)
    assert res.value == pytest.approx(math.pi, rel=1e-8)


def test_endpoint_singularity():
    res = integrate(lambda x: 1 / np.sqrt(x), [0.0, 1.0], rtol=1e-8)
    assert res.value == pytest.approx(2.0, rel=1e-7)


def test_complex_oscillatory():
    t = 40.0
    res = integrate(lambda x: np.exp(-1j * t * x), split_panels(0, 1, math.pi / (4 * t)), rtol=1e-10)
    exact = (1 - np.exp(-1j * t)) / (1j * t)
    assert abs(res.value - exact) < 1e-10


def test_failure_reports_estimate():
    with pytest.raises(QuadratureFailure) as info:
        integrate(lambda x: np.sin(1 / np.maximum(x, 1e-300)), [0.0, 1.0], rtol=1e-14, max_panels=50)
    assert info.value.error > 0


def test_env_override(monkeypatch):
    monkeypatch.setenv("ZENOLAB_QUAD_TOL", "1e-9")
    assert default_rtol() == 1e-9
    monkeypatch.setenv("ZENOLAB_QUAD_TOL", "2")
    with pytest.raises(ValueError):
        default_rtol()
