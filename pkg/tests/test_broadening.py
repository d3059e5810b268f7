import math

import numpy as np
import pytest
from scipy.integrate import quad

from zenolab import broadening as br
from zenolab.errors import InvalidParameter, RegimeWarning


def test_sinc_values():
    f = br.ProjectiveSinc(0.8)
    assert br.eval_filter(f, 3.0, 3.0) == pytest.approx(0.8 / (2 * math.pi))
    assert br.eval_filter(f, 3.0 + 2 * math.pi / 0.8, 3.0) == pytest.approx(0.0, abs=1e-17)


def test_lorentzian_value():
    assert br.eval_filter(br.ContinuousLorentzian(2.0), 1.0, 1.0) == pytest.approx(1 / (2 * math.pi))


def test_effective_rates():
    assert br.effective_rate(br.ProjectiveSinc(0.5)) == 4.0
    assert br.effective_rate(br.ProjectiveSinc(2.0)) == 1.0
    assert br.effective_rate(br.ContinuousLorentzian(7.0)) == 7.0
    for f in (br.ProjectiveSinc(0.37), br.ContinuousLorentzian(2.2)):
        # nu = 1 / (pi F(omega_a))
        assert br.effective_rate(f) == pytest.approx(1 / (math.pi * f(0.4, 0.4)))


def test_invalid_widths():
    for bad in (0.0, -1.0, math.inf):
        with pytest.raises(InvalidParameter):
            br.ProjectiveSinc(bad)
        with pytest.raises(InvalidParameter):
            br.ContinuousLorentzian(bad)


def test_monitor_filter():
    assert br.filter_from_monitor(1.0, 100.0).nu == pytest.approx(0.02)
    with np.testing.suppress_warnings() as sup:
        sup.record(RegimeWarning)
        f = br.filter_from_monitor(0.1, 1.0)
        assert not sup.log
    assert f.nu == pytest.approx(0.02) and not f.regime_warning
    with pytest.warns(RegimeWarning):
        f = br.filter_from_monitor(1.0, 2.0)
    assert f.nu == pytest.approx(1.0) and f.regime_warning
    with pytest.raises(InvalidParameter):
        br.filter_from_monitor(0.0, 1.0)


def test_sinc_normalization_with_tail():
    tau = 1.3
    f = br.ProjectiveSinc(tau)
    X = 200 * math.pi / (tau / 2)
    period = 2 * math.pi / tau
    core = sum(quad(lambda w: f(w, 0.0), -X + k * period, -X + (k + 1) * period, epsabs=0, epsrel=1e-12)[0]
               for k in range(400))
    # tails: (tau/2pi) * int_{|x|>Xtau/2} (2/tau) sin^2 x / x^2 dx, averaged sin^2 -> 1/2
    tail = 2 * (1 / math.pi) * 0.5 / (X * tau / 2)
    assert core + tail == pytest.approx(1.0, abs=1e-6)


def test_periodic_lorentzian_band_normalization():
    f = br.PeriodicLorentzian(0.6, 0.5)
    edge = math.pi / 0.5
    val, _ = quad(lambda w: f(w, 0.0), -edge, edge, epsrel=1e-12)
    assert val == pytest.approx(1.0, rel=1e-10)
    assert f.nu == pytest.approx(1 / (math.pi * f(0.0, 0.0)))


def test_filter_from_dict():
    assert br.filter_from_dict({"kind": "projective", "tau": 2}).nu == 1.0
    assert br.filter_from_dict({"kind": "continuous", "nu": 3}).nu == 3.0
    assert br.filter_from_dict({"kind": "monitor", "omega": 0.1, "gamma_u": 1}).nu == pytest.approx(0.02)
    with pytest.raises(InvalidParameter, match="tau"):
        br.filter_from_dict({"kind": "projective"})
    with pytest.raises(InvalidParameter, match="kind"):
        br.filter_from_dict({"kind": "pulsed"})
