"""Measurement-induced level broadening F(omega).

Filters are unit-area lineshapes centred on the level frequency ``omega_a``,
which is passed at call time so one filter can sweep many level positions.
"""

from __future__ import annotations

import math
import warnings
from dataclasses import dataclass

import numpy as np

from .errors import InvalidParameter, RegimeWarning

# Omega / gamma_u above this ratio leaves the incoherent-monitor regime
MONITOR_VALIDITY_RATIO = 0.1


@dataclass(frozen=True)
class ProjectiveSinc:
    """Ideal projections at interval ``tau``: ``(tau/2pi) sinc^2((w - w_a) tau/2)``."""

    tau: float
    kind = "projective"

    def __post_init__(self):
        if not (np.isfinite(self.tau) and self.tau > 0):
            raise InvalidParameter(f"tau must be positive and finite, got {self.tau}")

    @classmethod
    def from_rate(cls, nu):
        return cls(2.0 / nu)

    @property
    def nu(self):
        return 2.0 / self.tau

    def __call__(self, omega, omega_a):
        x = (np.asarray(omega, dtype=float) - omega_a) * self.tau / 2
        # np.sinc is sin(pi x)/(pi x)
        return self.tau / (2 * math.pi) * np.sinc(x / math.pi) ** 2


@dataclass(frozen=True)
class ContinuousLorentzian:
    """Continuous monitoring: ``(1/pi) nu / ((w - w_a)^2 + nu^2)``."""

    nu: float
    regime_warning: bool = False
    kind = "continuous"

    def __post_init__(self):
        if not (np.isfinite(self.nu) and self.nu > 0):
            raise InvalidParameter(f"nu must be positive and finite, got {self.nu}")

    @classmethod
    def from_rate(cls, nu):
        return cls(nu)

    def __call__(self, omega, omega_a):
        d = np.asarray(omega, dtype=float) - omega_a
        return self.nu / (math.pi * (d * d + self.nu ** 2))


@dataclass(frozen=True)
class PeriodicLorentzian:
    """Lorentzian folded onto the band ``|w| <= pi/period`` (Poisson kernel).

    This is the exact lineshape of a measurement that keeps a fraction
    ``theta`` of the amplitude every ``period``; it has unit area over one
    band and ``nu = 2 (1 - theta) / ((1 + theta) period)``.
    """

    theta: float
    period: float
    kind = "periodic"

    def __post_init__(self):
        if not 0 <= self.theta < 1:
            raise InvalidParameter(f"theta must lie in [0, 1), got {self.theta}")
        if not (np.isfinite(self.period) and self.period > 0):
            raise InvalidParameter(f"period must be positive, got {self.period}")

    @property
    def nu(self):
        return 2 * (1 - self.theta) / ((1 + self.theta) * self.period)

    def __call__(self, omega, omega_a):
        x = (np.asarray(omega, dtype=float) - omega_a) * self.period
        th = self.theta
        return self.period / (2 * math.pi) * (1 - th * th) / (1 + th * th - 2 * th * np.cos(x))


FILTER_TYPES = {cls.kind: cls for cls in (ProjectiveSinc, ContinuousLorentzian)}


def eval_filter(filt, omega, omega_a):
    """F(omega) for a filter centred on ``omega_a``."""
    out = filt(omega, omega_a)
    return float(out) if np.ndim(out) == 0 else out


def effective_rate(filt, omega_a=0.0) -> float:
    """Effective measurement rate ``nu = 1 / (pi F(omega_a))``."""
    return float(filt.nu)


def filter_from_monitor(omega, gamma_u) -> ContinuousLorentzian:
    """Continuous filter for a monitor field of Rabi frequency ``omega``.

    The auxiliary level decays at ``gamma_u``; the dephasing rate is
    ``2 omega^2 / gamma_u``. Outside ``omega << gamma_u`` the returned filter
    carries ``regime_warning=True`` and a :class:`RegimeWarning` is issued.
    """
    if not (np.isfinite(omega) and omega > 0):
        raise InvalidParameter(f"monitor Rabi frequency must be positive, got {omega}")
    if not (np.isfinite(gamma_u) and gamma_u > 0):
        raise InvalidParameter(f"gamma_u must be positive, got {gamma_u}")
    flagged = omega / gamma_u > MONITOR_VALIDITY_RATIO
    if flagged:
        warnings.warn(
            f"monitor ratio Omega/gamma_u = {omega / gamma_u:.3g} exceeds "
            f"{MONITOR_VALIDITY_RATIO}; the Lorentzian filter is only approximate",
            RegimeWarning, stacklevel=2)
    return ContinuousLorentzian(2 * omega ** 2 / gamma_u, regime_warning=flagged)


def filter_family(kind):
    """Constructor mapping a rate ``nu`` to a filter of the given family."""
    if kind in ("continuous", "monitor"):
        return ContinuousLorentzian.from_rate
    if kind == "projective":
        return ProjectiveSinc.from_rate
    raise InvalidParameter(f"unknown filter family {kind!r}")


def filter_from_dict(cfg: dict):
    cfg = dict(cfg)
    kind = cfg.pop("kind", None)
    try:
        if kind == "projective":
            return ProjectiveSinc(float(cfg["tau"]))
        if kind == "continuous":
            return ContinuousLorentzian(float(cfg["nu"]))
        if kind == "monitor":
            return filter_from_monitor(float(cfg["omega"]), float(cfg["gamma_u"]))
    except KeyError as exc:
        raise InvalidParameter(f"{kind} filter: missing field {exc}") from None
    raise InvalidParameter(f"field 'kind': expected projective|continuous|monitor, got {kind!r}")
