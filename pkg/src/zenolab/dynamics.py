"""Survival amplitude of a level coupled to a reservoir.

The amplitude obeys the exact Volterra integro-differential equation

    d alpha/dt = -int_0^t K(t - s) alpha(s) ds,   K(u) = exp(i w_a u) Phi(u)

which is solved here by trapezoidal product integration on a uniform grid.
"""

from __future__ import annotations

import cmath
import math
from dataclasses import dataclass, field

import numpy as np

from . import spectra as sp
from .errors import InvalidParameter, StepTooCoarse
from .quadrature import default_rtol, integrate

# largest allowed dt * (kernel frequency scale)
MAX_PHASE_STEP = 0.2
MEMORY_CUTOFF = 1e-8


@dataclass
class SurvivalRecord:
    omega_a: float
    t: np.ndarray
    alpha: np.ndarray
    dt: float
    order: int = 2
    memory_horizon: float | None = None
    meta: dict = field(default_factory=dict)

    @property
    def survival(self):
        return np.abs(self.alpha) ** 2


@dataclass
class MeasuredDecayLaw:
    tau: float
    n_max: int
    rho: np.ndarray
    R_eff: float
    alpha_tau: complex

    @property
    def n(self):
        return np.arange(self.n_max + 1)

    @property
    def t(self):
        return self.n * self.tau


def kernel_values(spec, omega_a, dt, n_steps):
    """K_j = exp(i w_a j dt) Phi(j dt) for j = 0..n_steps, computed once."""
    tj = dt * np.arange(n_steps + 1)
    phi = np.asarray(sp.correlation_function(spec, tj))
    return np.exp(1j * omega_a * tj) * phi


def _check_step(spec, omega_a, dt):
    c = sp.integrated_coupling(spec)
    scale = max(spec.frequency_scale(omega_a), math.sqrt(max(c, 0.0)))
    if dt * scale > MAX_PHASE_STEP:
        raise StepTooCoarse(
            f"dt = {dt:.3g} with kernel frequency scale {scale:.3g}: "
            f"dt * scale = {dt * scale:.3g} > {MAX_PHASE_STEP}")


def solve_survival_amplitude(spec, omega_a, t_max, n_steps, memory_horizon=None,
                             kernel=None) -> SurvivalRecord:
    """Second-order product-integration solve of the amplitude equation.

    ``memory_horizon`` truncates the kernel after that time; it is accepted
    only if ``|Phi(T)| < 1e-8 Phi(0)``. A precomputed ``kernel`` (as from
    :func:`kernel_values`) skips the correlation-function evaluation.
    """
    if not (t_max > 0 and np.isfinite(t_max)):
        raise InvalidParameter("t_max must be positive and finite")
    n_steps = int(n_steps)
    if n_steps < 16:
        raise InvalidParameter("need at least 16 steps")
    dt = t_max / n_steps
    _check_step(spec, omega_a, dt)
    K = kernel_values(spec, omega_a, dt, n_steps) if kernel is None else np.asarray(kernel)
    if K.shape != (n_steps + 1,):
        raise InvalidParameter("kernel length must be n_steps + 1")

    window = n_steps
    if memory_horizon is not None:
        phi_T = abs(sp.correlation_function(spec, memory_horizon))
        phi_0 = abs(K[0])
        if not phi_T < MEMORY_CUTOFF * phi_0:
            raise InvalidParameter(
                f"|Phi(T_mem)| / Phi(0) = {phi_T / phi_0:.3g} is not below {MEMORY_CUTOFF}")
        window = max(1, int(memory_horizon / dt))
        K = K.copy()
        K[window + 1:] = 0.0

    alpha = np.zeros(n_steps + 1, dtype=complex)
    alpha[0] = 1.0
    y_prev = 0.0
    denom = 1.0 + 0.25 * dt * dt * K[0]
    for n in range(1, n_steps + 1):
        j0 = max(1, n - window)
        # S_n = K_n alpha_0 / 2 + sum_{j=1}^{n-1} K_{n-j} alpha_j
        S = 0.5 * K[n] * alpha[0] if n <= window else 0.0
        if n > j0:
            S = S + np.dot(K[n - j0:0:-1], alpha[j0:n])
        alpha[n] = (alpha[n - 1] - 0.5 * dt * y_prev - 0.5 * dt * dt * S) / denom
        y_prev = dt * (S + 0.5 * K[0] * alpha[n])
    return SurvivalRecord(omega_a=float(omega_a), t=dt * np.arange(n_steps + 1), alpha=alpha,
                          dt=dt, memory_horizon=memory_horizon,
                          meta={"scheme": "trapezoidal product integration"})


def lorentzian_amplitude_oracle(C, omega_m, gamma_r, omega_a, t):
    """Closed-form amplitude for ``Phi(t) = C exp(-(gamma_r + i omega_m) t)``.

    With ``g = gamma_r + i (omega_m - omega_a)`` the amplitude solves
    ``a'' + g a' + C a = 0``, ``a(0) = 1``, ``a'(0) = 0``.
    """
    if not gamma_r > 0:
        raise InvalidParameter("gamma_r must be positive")
    t = np.asarray(t, dtype=float)
    g = complex(gamma_r, omega_m - omega_a)
    if C == 0:
        return np.ones_like(t, dtype=complex) if t.ndim else complex(1.0)
    s = cmath.sqrt(g * g - 4 * C)
    if (s * g.conjugate()).real < 0:
        s = -s
    lam_big = (-g - s) / 2
    if abs(s) < 1e-12 * abs(g):
        lam = -g / 2
        out = (1 - lam * t) * np.exp(lam * t)
    else:
        lam_small = C / lam_big
        # lam_small e^{lam_big t} - lam_big e^{lam_small t}, over lam_small - lam_big
        out = (lam_small * np.exp(lam_big * t) - lam_big * np.exp(lam_small * t)) / (lam_small - lam_big)
    return complex(out) if np.ndim(out) == 0 else out


def short_time_amplitude(spec, omega_a, t, rtol=None) -> complex:
    """First-order amplitude ``1 - int_0^t (t - u) Phi(u) exp(i w_a u) du``.

    Reliable while ``|1 - alpha| << 1``.
    """
    if t < 0:
        raise InvalidParameter("t must be nonnegative")
    if t == 0:
        return complex(1.0)
    rtol = default_rtol() if rtol is None else rtol

    def f(u):
        phi = np.asarray(sp.correlation_function(spec, u, rtol=rtol * 1e-2))
        return (t - u) * phi * np.exp(1j * omega_a * u)

    c = sp.integrated_coupling(spec)
    scale = max(spec.frequency_scale(omega_a), 1e-300)
    n_panels = max(1, int(math.ceil(t * scale / (math.pi / 4))))
    edges = np.linspace(0.0, t, min(n_panels, 4096) + 1)
    res = integrate(f, edges, rtol=rtol, atol=1e-15 * c * t * t)
    return complex(1.0 - res.value)


def measured_decay_law(spec, omega_a, tau, n_max, steps=2000) -> MeasuredDecayLaw:
    """Survival after n ideal projections at interval tau: |alpha(tau)|^(2n)."""
    if not tau > 0:
        raise InvalidParameter("tau must be positive")
    n_max = int(n_max)
    if n_max < 0:
        raise InvalidParameter("n_max must be nonnegative")
    rec = solve_survival_amplitude(spec, omega_a, tau, steps)
    a = rec.alpha[-1]
    p = abs(a) ** 2
    rho = p ** np.arange(n_max + 1)
    R_eff = -math.log(p) / tau if p > 0 else math.inf
    return MeasuredDecayLaw(tau=float(tau), n_max=n_max, rho=rho, R_eff=R_eff, alpha_tau=complex(a))
