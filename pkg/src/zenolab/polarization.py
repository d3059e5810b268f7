"""Photon polarization in a cavity with a noisy rotator and a partial absorber.

Each round trip rotates the polarization by a random jump ``dphi_n`` and then
multiplies the vertical amplitude by the absorber transparency ``theta``.
Jumps follow a stationary Gaussian AR(1) process with rms ``B`` and lag-1
correlation ``gamma``; the horizontal survival probability decays at a rate
set by the overlap of the jump spectrum with the absorber's lineshape.
"""

from __future__ import annotations

import math
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass, field

import numpy as np
from scipy.signal import lfilter

from .broadening import ContinuousLorentzian, PeriodicLorentzian
from .errors import InvalidParameter, OutOfBand, OutOfRegime, Unsupported
from .quadrature import default_rtol, integrate

CONSTANT = "constant"
GAUSSIAN_AR1 = "gaussian_ar1"

# shots per independently seeded block; fixed so results never depend on threading
SHOT_BLOCK = 4096
DEFAULT_SEED = 20240601


@dataclass(frozen=True)
class NoiseModel:
    B: float
    gamma: float = 0.0
    mode: str = GAUSSIAN_AR1

    def __post_init__(self):
        if self.mode not in (CONSTANT, GAUSSIAN_AR1):
            raise InvalidParameter(f"noise mode must be {CONSTANT!r} or {GAUSSIAN_AR1!r}")
        if not np.isfinite(self.B):
            raise InvalidParameter("jump size must be finite")
        if self.mode == GAUSSIAN_AR1:
            if self.B < 0:
                raise InvalidParameter(f"rms jump must be nonnegative, got {self.B}")
            if not abs(self.gamma) < 1:
                raise InvalidParameter(f"|gamma| must be < 1, got {self.gamma}")

    @classmethod
    def constant(cls, delta_phi):
        return cls(B=float(delta_phi), mode=CONSTANT)


@dataclass(frozen=True)
class CavityConfig:
    theta: float
    tau_r: float = 1.0

    def __post_init__(self):
        if not 0 <= self.theta <= 1:
            raise InvalidParameter(f"theta must lie in [0, 1], got {self.theta}")
        if not (np.isfinite(self.tau_r) and self.tau_r > 0):
            raise InvalidParameter(f"tau_r must be positive, got {self.tau_r}")

    @property
    def nu(self) -> float:
        return 2 * (1 - self.theta) / ((1 + self.theta) * self.tau_r)


@dataclass(frozen=True)
class PolarizationState:
    a_h: complex = 1.0
    a_v: complex = 0.0

    @property
    def p_h(self) -> float:
        return abs(self.a_h) ** 2

    @property
    def norm(self) -> float:
        return abs(self.a_h) ** 2 + abs(self.a_v) ** 2


def round_trip(state: PolarizationState, dphi: float, theta: float) -> PolarizationState:
    c, s = math.cos(dphi), math.sin(dphi)
    a_h = state.a_h * c - state.a_v * s
    a_v = state.a_h * s + state.a_v * c
    return PolarizationState(a_h, theta * a_v)


def _stationary_ar1(rng, B, gamma, n, shots=None):
    shape = (n,) if shots is None else (shots, n)
    xi = rng.standard_normal(shape)
    x0 = B * xi[..., :1]
    if n == 1:
        return x0
    drive = B * math.sqrt(1 - gamma * gamma) * xi[..., 1:]
    rest, _ = lfilter([1.0], [1.0, -gamma], drive, axis=-1, zi=gamma * x0)
    return np.concatenate([x0, rest], axis=-1)


def sample_phase_jumps(noise: NoiseModel, n: int, seed: int = DEFAULT_SEED) -> np.ndarray:
    """``n`` consecutive jumps; the first is drawn from the stationary law."""
    n = int(n)
    if n < 1:
        raise InvalidParameter("need at least one jump")
    if noise.mode == CONSTANT:
        return np.full(n, float(noise.B))
    return _stationary_ar1(np.random.default_rng(seed), noise.B, noise.gamma, n)


def _block_rng(seed, block):
    return np.random.Generator(np.random.PCG64(np.random.SeedSequence(seed, spawn_key=(block,))))


def _run_block(config, noise, n_trips, seed, block, size):
    """Per-trip sum and sum of squares of P_h over one block of shots."""
    theta = config.theta
    a_h = np.ones(size)
    a_v = np.zeros(size)
    s1 = np.empty(n_trips + 1)
    s2 = np.empty(n_trips + 1)
    s1[0], s2[0] = size, size
    if noise.mode == CONSTANT:
        c, s = math.cos(noise.B), math.sin(noise.B)
    else:
        rng = _block_rng(seed, block)
        B, g = noise.B, noise.gamma
        kick = B * math.sqrt(1 - g * g)
        dphi = B * rng.standard_normal(size)
    for n in range(1, n_trips + 1):
        if noise.mode != CONSTANT:
            if n > 1:
                dphi = g * dphi + kick * rng.standard_normal(size)
            c, s = np.cos(dphi), np.sin(dphi)
        a_h, a_v = a_h * c - a_v * s, theta * (a_h * s + a_v * c)
        p = a_h * a_h
        s1[n] = p.sum()
        s2[n] = (p * p).sum()
    return s1, s2


@dataclass
class PolarizationRun:
    config: CavityConfig
    noise: NoiseModel
    shots: int
    seed: int
    n: np.ndarray
    mean_ph: np.ndarray
    stderr: np.ndarray
    block_sums: np.ndarray = field(repr=False)
    block_sizes: np.ndarray = field(repr=False)

    @property
    def t(self):
        return self.n * self.config.tau_r

    def rows(self):
        for row in zip(self.n, self.t, self.mean_ph, self.stderr):
            yield int(row[0]), float(row[1]), float(row[2]), float(row[3])


def simulate_polarization(config: CavityConfig, noise: NoiseModel, n_trips: int, shots: int,
                          seed: int = DEFAULT_SEED, workers: int | None = None) -> PolarizationRun:
    """Mean horizontal survival ``P_h(n)`` over ``shots`` noise realizations.

    Shots are grouped into fixed blocks of ``SHOT_BLOCK``; block ``k`` draws
    from ``SeedSequence(seed, spawn_key=(k,))`` so the shot index alone fixes
    its noise. Block results are reduced in block order, which makes the
    output bit-identical for any ``workers``.
    """
    n_trips = int(n_trips)
    shots = int(shots)
    if shots < 1:
        raise InvalidParameter("shots must be >= 1")
    if n_trips < 1:
        raise InvalidParameter("trips must be >= 1")
    if noise.mode == CONSTANT:
        sizes = [1]
    else:
        full, rem = divmod(shots, SHOT_BLOCK)
        sizes = [SHOT_BLOCK] * full + ([rem] if rem else [])

    def job(k):
        return _run_block(config, noise, n_trips, seed, k, sizes[k])

    if workers and workers > 1 and len(sizes) > 1:
        with ThreadPoolExecutor(max_workers=workers) as pool:
            parts = list(pool.map(job, range(len(sizes))))
    else:
        parts = [job(k) for k in range(len(sizes))]

    s1 = np.zeros(n_trips + 1)
    s2 = np.zeros(n_trips + 1)
    for a, b in parts:
        s1 += a
        s2 += b
    total = sum(sizes)
    mean = s1 / total
    if noise.mode == CONSTANT or total < 2:
        stderr = np.zeros_like(mean)
    else:
        var = np.maximum(s2 / total - mean * mean, 0.0) * total / (total - 1)
        stderr = np.sqrt(var / total)
    return PolarizationRun(config=config, noise=noise, shots=shots, seed=seed,
                           n=np.arange(n_trips + 1), mean_ph=mean, stderr=stderr,
                           block_sums=np.array([a for a, _ in parts]),
                           block_sizes=np.array(sizes))


def _log_slope(n, p):
    n = np.asarray(n, dtype=float)
    y = np.log(p)
    nc = n - n.mean()
    return float(np.dot(nc, y - y.mean()) / np.dot(nc, nc))


def default_fit_start(config: CavityConfig, noise: NoiseModel) -> int:
    """First trip used in rate fits, past the absorber and noise transients."""
    relax = 1.0 / max(1e-12, 1 - config.theta)
    if noise.mode == GAUSSIAN_AR1:
        relax += 1.0 / (1 - abs(noise.gamma))
    return int(math.ceil(5 * relax))


def fitted_decay_rate(run: PolarizationRun, n_min: int | None = None, n_max: int | None = None):
    """Exponential rate (per unit time) of the mean survival and its jackknife error.

    Fits ``ln P_h`` against ``n`` over ``[n_min, n_max]``. The error comes from
    leave-one-block-out refits; it is zero for a deterministic run and NaN if
    only one block exists.
    """
    if n_min is None:
        n_min = default_fit_start(run.config, run.noise)
    if n_max is None:
        n_max = int(run.n[-1])
    sel = slice(int(n_min), int(n_max) + 1)
    n = run.n[sel]
    if n.size < 2:
        raise InvalidParameter("fit window holds fewer than two trips")
    tau = run.config.tau_r
    rate = -_log_slope(n, run.mean_ph[sel]) / tau
    k = run.block_sizes.size
    if run.noise.mode == CONSTANT:
        return rate, 0.0
    if k < 2:
        return rate, math.nan
    total_sum = run.block_sums.sum(axis=0)
    total = run.block_sizes.sum()
    loo = np.empty(k)
    for i in range(k):
        m = (total_sum - run.block_sums[i]) / (total - run.block_sizes[i])
        loo[i] = -_log_slope(n, m[sel]) / tau
    sigma = math.sqrt((k - 1) / k * np.sum((loo - loo.mean()) ** 2))
    return rate, sigma


def jump_spectrum(noise: NoiseModel, tau_r: float, omega):
    """Spectral density of the rotation rate ``dphi_n / tau_r`` on the band ``|w| <= pi/tau_r``."""
    if noise.mode == CONSTANT:
        raise Unsupported("a constant jump has a delta-function spectrum")
    w = np.asarray(omega, dtype=float)
    edge = math.pi / tau_r
    if np.any(np.abs(w) > edge * (1 + 1e-12)):
        raise OutOfBand(f"frequency outside the band |omega| <= {edge:.6g}")
    g = noise.gamma
    out = (noise.B ** 2 / tau_r) / (2 * math.pi) * (1 - g * g) / (1 + g * g - 2 * g * np.cos(w * tau_r))
    return float(out) if out.ndim == 0 else out


def band_overlap_rate(config: CavityConfig, noise: NoiseModel, lineshape: str = "periodic",
                      rtol: float | None = None) -> float:
    """Decay rate ``2 pi int_band G F`` per unit time.

    ``lineshape="periodic"`` folds the absorber's Lorentzian onto the band,
    which is what a once-per-trip absorber produces; ``"lorentzian"`` uses the
    plain Lorentzian of the same ``nu`` truncated at the band edges.
    """
    theta, tau = config.theta, config.tau_r
    if noise.mode == CONSTANT:
        if theta == 1:
            raise OutOfRegime("no absorption: a constant rotation gives Rabi oscillation, not decay")
        return noise.B ** 2 * (1 + theta) / ((1 - theta) * tau)
    if theta == 1:
        raise OutOfRegime("theta = 1 applies no measurement and the survival does not decay")
    if lineshape == "periodic":
        filt = PeriodicLorentzian(theta, tau)
    elif lineshape == "lorentzian":
        filt = ContinuousLorentzian(config.nu)
    else:
        raise InvalidParameter(f"lineshape must be 'periodic' or 'lorentzian', got {lineshape!r}")
    edge = math.pi / tau
    width = min(config.nu, (1 - abs(noise.gamma)) / tau, edge)
    pts = np.unique(np.concatenate([
        np.linspace(-edge, edge, 33),
        np.clip(np.outer([-1, 1], width * 2.0 ** np.arange(-2, 8)).ravel(), -edge, edge),
    ]))
    rtol = default_rtol() if rtol is None else rtol
    res = integrate(lambda w: 2 * math.pi * jump_spectrum(noise, tau, w) * filt(w, 0.0), pts, rtol=rtol)
    return float(res.value)


def periodogram(x, tau_r: float, segment: int):
    """Bartlett-averaged one-sided-grid periodogram of a series sampled every ``tau_r``.

    Returns ``(omega, density, n_segments)`` with ``density`` normalized as a
    two-sided density, so white noise of variance ``s2`` gives ``s2 tau_r / 2 pi``.
    Each bin's relative standard error is ``1 / sqrt(n_segments)``.
    """
    x = np.asarray(x, dtype=float)
    segment = int(segment)
    k = x.size // segment
    if k < 1:
        raise InvalidParameter("series shorter than one segment")
    blocks = x[: k * segment].reshape(k, segment)
    power = np.abs(np.fft.rfft(blocks, axis=1)) ** 2
    density = tau_r / (2 * math.pi * segment) * power.mean(axis=0)
    omega = 2 * math.pi * np.fft.rfftfreq(segment, d=tau_r)
    return omega, density, k
