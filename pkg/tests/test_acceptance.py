"""Acceptance criteria, one marker per criterion; the terminal summary prints PASS/FAIL lines."""
import json
import math
import time
import warnings

import numpy as np
import pytest

from zenolab import cli
from zenolab import dynamics as dyn
from zenolab import polarization as pol
from zenolab import rate_engine as re_
from zenolab import spectra as sp
from zenolab.broadening import ContinuousLorentzian, ProjectiveSinc
from zenolab.errors import FilterMassWarning, OutOfRegime

crit = pytest.mark.criterion


# 1 ---------------------------------------------------------------------------

@crit(1)
@pytest.mark.parametrize("eta", [0.5, 1, 2])
def test_c1_closed_forms_on_grid(eta):
    # expected to fail: the leading-order forms carry O(nu/omega_C) and O((nu/omega_C)^(1-eta))
    # corrections far above 1e-3 at omega_C = 1e3 omega_a, and nu = 100 omega_a is outside their
    # stated regime nu << omega_C
    wa, wc = 1.0, 1e3
    spec = sp.PowerLawCutoff(1.0, eta, wc)
    bad = []
    t0 = time.perf_counter()
    for nu in np.geomspace(1e-2, 1e2, 25) * wa:
        with warnings.catch_warnings():
            warnings.simplefilter("ignore", FilterMassWarning)
            got = re_.overlap_rate(spec, ContinuousLorentzian(nu), wa)
        try:
            ref = re_.closed_form_powerlaw_rate(1.0, eta, wc, wa, nu)
        except OutOfRegime:
            bad.append((nu, "closed form out of regime"))
            continue
        err = abs(got / ref - 1)
        if err > 1e-3:
            bad.append((nu, err))
    assert time.perf_counter() - t0 < 10
    assert not bad, f"{len(bad)} of 25 points off: {bad[:4]}"


# 2 ---------------------------------------------------------------------------

GR_CASES = [(sp.Lorentzian(1.0, 0.0, 1.0), 0.3),
            (sp.Hydrogenic(1e-3, 1e3), 10.0),
            (sp.PowerLawCutoff(1.0, 1, 1e3), 1.0)]


@crit(2)
@pytest.mark.parametrize("family", ["projective", "continuous"])
@pytest.mark.parametrize("spec,wa", GR_CASES)
def test_c2_golden_rule_limit(spec, wa, family):
    nu = 1e-4 * re_.delta_a_estimate(spec, wa)
    filt = ProjectiveSinc.from_rate(nu) if family == "projective" else ContinuousLorentzian(nu)
    R = re_.overlap_rate(spec, filt, wa)
    assert abs(R / sp.golden_rule_rate(spec, wa) - 1) <= 0.01


# 3 ---------------------------------------------------------------------------

@crit(3)
def test_c3_lorentzian_zeno_scaling():
    C, G = 1.0, 1.0
    spec = sp.Lorentzian(C, 1e6, G)
    nu = 300 * G
    R = re_.overlap_rate(spec, ProjectiveSinc.from_rate(nu), 1e6)
    assert abs(R * nu / (2 * C) - 1) <= 0.05


@crit(3)
def test_c3_tail_slope_and_prefactor():
    A = 1.0
    tail = sp.TailCutoff(A, 0.5, 1e8, 1, 1.0)
    nu = np.geomspace(1e5, 1e6, 6)
    R = np.array([re_.overlap_rate(tail, ProjectiveSinc.from_rate(v), 1e8) for v in nu])
    slope, icpt = np.polyfit(np.log(nu), np.log(R), 1)
    assert abs(slope + 0.5) <= 0.02
    B = np.exp(np.mean(np.log(R) + 0.5 * np.log(nu)))
    assert abs(B / (8 * math.sqrt(math.pi) / 3 * A) - 1) <= 0.05


# 4 ---------------------------------------------------------------------------

@crit(4)
def test_c4_hydrogenic_aze_law():
    alpha, wb = 1e-3, 1e6
    wa = 1e-5 * wb
    spec = sp.Hydrogenic(alpha, wb)
    for nu in np.geomspace(1e2 * wa, 1e-2 * wb, 7):
        R = re_.overlap_rate(spec, ProjectiveSinc.from_rate(nu), wa)
        ref = alpha * nu * (math.log(wb / nu) + 0.354)
        assert abs(R / ref - 1) <= 0.10


@crit(4)
def test_c4_hydrogenic_turnover():
    wb = 1e6
    wa = 1e-5 * wb
    curve = re_.rate_curve(sp.Hydrogenic(1e-3, wb), "projective", wa, np.geomspace(1e-2 * wa, 1e3 * wb, 40))
    i = int(np.argmax(curve.R))
    assert 0 < i < len(curve.R) - 1
    assert np.all(np.diff(curve.R[: i + 1]) > 0) and np.all(np.diff(curve.R[i:]) < 0)
    assert curve.nu_1 is not None and wb / 3 <= curve.nu_1 <= 3 * wb


# 5 ---------------------------------------------------------------------------

def _lorentzian_sets():
    rng = np.random.default_rng(20240605)
    out = []
    for _ in range(3):
        G = rng.uniform(0.5, 2.0)
        out.append((rng.uniform(0.1, 2.0) * G * G, rng.uniform(-1, 1) * G, G, rng.uniform(-1, 1) * G))
    return out


@crit(5)
@pytest.mark.parametrize("C,wm,G,wa", _lorentzian_sets())
def test_c5_volterra_accuracy_and_order(C, wm, G, wa):
    spec = sp.Lorentzian(C, wm, G)
    errs = []
    for n in (1000, 2000, 4000):
        rec = dyn.solve_survival_amplitude(spec, wa, 5.0 / G, n)
        ref = dyn.lorentzian_amplitude_oracle(C, wm, G, wa, rec.t)
        errs.append(np.max(np.abs(rec.alpha - ref)))
    assert errs[-1] <= 1e-6
    assert math.log2(errs[-2] / errs[-1]) >= 1.9


# 6 ---------------------------------------------------------------------------

@crit(6)
@pytest.mark.parametrize("nu", [0.1, 1.0, 10.0, 100.0])
def test_c6_dynamics_vs_rate(nu):
    spec = sp.Lorentzian(1e-4, 1e6, 1.0)
    tau = 2 / nu
    law = dyn.measured_decay_law(spec, 1e6, tau, 1, steps=4000)
    R = re_.overlap_rate(spec, ProjectiveSinc(tau), 1e6)
    assert abs(law.R_eff / R - 1) <= 0.03


# 7 ---------------------------------------------------------------------------

FINITE_C = [sp.Lorentzian(1.0, 0.5, 1.0), sp.PowerLawCutoff(1.0, 1.5, 10.0),
            sp.Hydrogenic(1e-3, 1e3), sp.Flat(1.0, -1.0, 2.0),
            sp.Tabulated([0.0, 1.0, 3.0, 4.0], [0.0, 2.0, 0.5, 0.0])]


@crit(7)
@pytest.mark.parametrize("spec", FINITE_C, ids=lambda s: s.kind)
def test_c7_zeno_onset(spec):
    tz = sp.zeno_time(spec)
    t = 1e-2 * tz
    wa = spec.peak
    rec = dyn.solve_survival_amplitude(spec, wa, t, 64)
    assert abs((1 - rec.survival[-1]) / (t / tz) ** 2 - 1) <= 0.01


# 8 ---------------------------------------------------------------------------

@crit(8)
def test_c8_rabi_without_measurement():
    run = pol.simulate_polarization(pol.CavityConfig(1.0), pol.NoiseModel.constant(0.05), 500, 1)
    n = np.arange(501)
    assert np.max(np.abs(run.mean_ph - np.cos(n * 0.05) ** 2)) <= 1e-13


@crit(8)
def test_c8_projective_exponential():
    run = pol.simulate_polarization(pol.CavityConfig(0.0), pol.NoiseModel.constant(0.05), 200, 1)
    n = np.arange(201)
    assert np.max(np.abs(run.mean_ph / np.exp(-n * 0.05 ** 2) - 1)) <= 0.02


@crit(8)
def test_c8_partial_measurement_rate():
    dphi, theta = 0.02, 0.5
    run = pol.simulate_polarization(pol.CavityConfig(theta), pol.NoiseModel.constant(dphi), 3000, 1)
    rate, _ = pol.fitted_decay_rate(run)
    assert abs(rate / (dphi ** 2 * (1 + theta) / (1 - theta)) - 1) <= 0.05


# 9 ---------------------------------------------------------------------------

MC_GAMMAS = [0.0, 0.7, -0.9]
_clock = {"mc": 0.0}


@pytest.fixture(scope="module")
def mc_runs():
    cfg = pol.CavityConfig(0.5)
    out = {}
    t0 = time.perf_counter()
    for g in MC_GAMMAS:
        nz = pol.NoiseModel(0.02, g)
        R = pol.band_overlap_rate(cfg, nz)
        trips = math.ceil(1 / (R * cfg.tau_r))
        run = pol.simulate_polarization(cfg, nz, trips, 100_000, workers=4)
        out[g] = (R, *pol.fitted_decay_rate(run))
    _clock["mc"] = time.perf_counter() - t0
    return out


@crit(9)
@pytest.mark.parametrize("gamma", MC_GAMMAS)
def test_c9_mc_rate_within_three_sigma(mc_runs, gamma):
    # expected to fail: the band rate is the O(B^2) small-jump limit, while the sampled decay
    # carries an O(B^4) correction that exceeds 3 sigma at 1e5 shots
    R, rate, sigma = mc_runs[gamma]
    assert abs(rate - R) <= 3 * sigma, f"deviation {(rate - R) / sigma:+.1f} sigma"


@crit(9)
@pytest.mark.parametrize("gamma", [0.0, 0.7, -0.7, 0.9, -0.9])
def test_c9_periodogram(gamma):
    t0 = time.perf_counter()
    nz, tau = pol.NoiseModel(0.02, gamma), 1.0
    x = pol.sample_phase_jumps(nz, 2 ** 18, seed=7)
    w, S, k = pol.periodogram(x, tau, 256)
    ref = pol.jump_spectrum(nz, tau, w)
    frac = np.mean(np.abs(S - ref) <= 3 * ref / math.sqrt(k))
    _clock["mc"] += time.perf_counter() - t0
    assert frac >= 0.9


@crit(9)
def test_c9_band_rate_trends():
    t0 = time.perf_counter()
    omt = np.linspace(0.05, 0.9, 18)
    rates = {g: np.array([pol.band_overlap_rate(pol.CavityConfig(1 - m), pol.NoiseModel(0.02, g)) for m in omt])
             for g in (0.0, 0.7, -0.9)}
    _clock["mc"] += time.perf_counter() - t0
    assert np.all(np.diff(rates[0.7]) < 0)
    assert np.all(np.diff(rates[-0.9]) > 0)
    assert np.ptp(rates[0.0]) / np.mean(rates[0.0]) <= 0.10


@crit(9)
def test_c9_runtime(mc_runs):
    assert _clock["mc"] < 60


# 10 --------------------------------------------------------------------------

@crit(10)
@pytest.mark.parametrize("family", ["projective", "continuous"])
def test_c10_flat_invariance(family):
    G0, half = 0.7, 5e3
    spec = sp.Flat(G0, 0.0, 2 * half)
    nus = np.geomspace(1e-3, 1.0, 13)
    curve = re_.rate_curve(spec, family, half, nus)
    assert np.all(np.abs(curve.R / (2 * math.pi * G0) - 1) <= 1e-3)


# 11 --------------------------------------------------------------------------

def _replay_same(tmp_path, argv):
    a, b = tmp_path / "a.out", tmp_path / "b.out"
    assert cli.main([str(x) for x in argv] + ["--out", str(a)]) == 0
    assert cli.main(["replay", str(a), "--out", str(b)]) == 0
    return a.read_bytes() == b.read_bytes()


@crit(11)
def test_c11_replay_rate_and_decay(tmp_path):
    spec = tmp_path / "s.json"
    spec.write_text(json.dumps({"kind": "hydrogenic", "alpha": 1e-3, "omega_b": 1e3}))
    assert _replay_same(tmp_path, ["rate", "--spectrum", spec, "--omega-a", 1.0, "--nu-grid", "log:0.1:1e4:9",
                                   "--workers", 3])
    spec.write_text(json.dumps({"kind": "lorentzian", "C": 1e-2, "omega_m": 0, "gamma_r": 1}))
    assert _replay_same(tmp_path, ["decay", "--spectrum", spec, "--omega-a", 0.0, "--t-max", 5, "--steps", 500])
    assert _replay_same(tmp_path, ["decay", "--spectrum", spec, "--omega-a", 0.0, "--tau-grid", "log:0.1:10:4"])


@crit(11)
def test_c11_replay_threaded_monte_carlo(tmp_path):
    assert _replay_same(tmp_path, ["polarization", "--gamma", -0.5, "--jump-rms", 0.05, "--theta", 0.3,
                                   "--trips", 40, "--shots", 3 * pol.SHOT_BLOCK + 11, "--workers", 4])
    assert _replay_same(tmp_path, ["polarization", "--gamma", 0.7, "--theta-sweep", "0.9,0.5", "--mc",
                                   "--shots", 5000, "--workers", 3])
