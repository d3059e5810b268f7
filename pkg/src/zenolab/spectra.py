"""Reservoir coupling spectra G(omega).

All frequencies are angular (rad/s). G carries units of rad/s so that
``2*pi * integral(G * F)`` is a rate in 1/s for a unit-area filter F.

Every spectrum is an immutable dataclass exposing:

* ``__call__(omega)`` -- vectorized G(omega), exactly zero off support
* ``derivative(omega)`` -- dG/domega (one-sided values at kinks are not
  guaranteed; callers nudge away from ``breakpoints``)
* ``support`` -- closed interval ``(lo, hi)``, ends may be infinite
* ``breakpoints`` -- frequencies where G or G' is discontinuous
* ``features`` -- ``(center, width)`` pairs used to seed quadrature panels;
  width 0 marks an isolated non-analytic point
"""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np

from .errors import Divergent, InvalidParameter
from .quadrature import default_rtol, integrate, split_panels

# hint offsets, in units of a feature width, around each feature center
_LADDER = np.concatenate([[0.0], np.outer([-1.0, 1.0], 2.0 ** np.arange(-6, 15)).ravel()])


def _as_array(omega):
    return np.asarray(omega, dtype=float)


def _check_finite(name, value, positive=False):
    if not np.isfinite(value):
        raise InvalidParameter(f"{name} must be finite, got {value}")
    if positive and value <= 0:
        raise InvalidParameter(f"{name} must be positive, got {value}")


@dataclass(frozen=True)
class Lorentzian:
    """Unit-shape Lorentzian of total mass ``C`` on the whole real line."""

    C: float
    omega_m: float
    gamma_r: float
    kind = "lorentzian"

    def __post_init__(self):
        _check_finite("C", self.C)
        if self.C < 0:
            raise InvalidParameter("C must be nonnegative")
        _check_finite("omega_m", self.omega_m)
        _check_finite("gamma_r", self.gamma_r, positive=True)

    def __call__(self, omega):
        d = _as_array(omega) - self.omega_m
        return (self.C / math.pi) * self.gamma_r / (d * d + self.gamma_r ** 2)

    def derivative(self, omega):
        d = _as_array(omega) - self.omega_m
        return -(self.C / math.pi) * self.gamma_r * 2 * d / (d * d + self.gamma_r ** 2) ** 2

    @property
    def support(self):
        return (-math.inf, math.inf)

    @property
    def breakpoints(self):
        return np.empty(0)

    @property
    def features(self):
        return [(self.omega_m, self.gamma_r)]

    @property
    def peak(self):
        return self.omega_m

    def integrated_coupling(self):
        return float(self.C)

    def correlation(self, t):
        t = _as_array(t)
        return self.C * np.exp(-(self.gamma_r + 1j * self.omega_m) * t)

    def frequency_scale(self, omega_a):
        return abs(self.omega_m - omega_a) + self.gamma_r


@dataclass(frozen=True)
class PowerLawCutoff:
    """``G = A * omega**eta`` on ``0 < omega < omega_c``, zero elsewhere."""

    A: float
    eta: float
    omega_c: float
    kind = "power_law"

    def __post_init__(self):
        _check_finite("A", self.A)
        if self.A < 0:
            raise InvalidParameter("A must be nonnegative")
        _check_finite("eta", self.eta, positive=True)
        _check_finite("omega_c", self.omega_c, positive=True)

    def __call__(self, omega):
        w = _as_array(omega)
        inside = (w > 0) & (w < self.omega_c)
        return np.where(inside, self.A * np.abs(w) ** self.eta, 0.0)

    def derivative(self, omega):
        w = _as_array(omega)
        inside = (w > 0) & (w < self.omega_c)
        with np.errstate(divide="ignore"):
            d = self.A * self.eta * np.abs(w) ** (self.eta - 1)
        return np.where(inside, d, 0.0)

    @property
    def support(self):
        return (0.0, self.omega_c)

    @property
    def breakpoints(self):
        return np.array([0.0, self.omega_c])

    @property
    def features(self):
        return [(0.0, 0.0), (self.omega_c, 0.0)]

    @property
    def peak(self):
        return self.omega_c

    def integrated_coupling(self):
        return self.A * self.omega_c ** (self.eta + 1) / (self.eta + 1)

    def frequency_scale(self, omega_a):
        return max(abs(self.omega_c - omega_a), abs(omega_a))


@dataclass(frozen=True)
class TailCutoff:
    """Slowly decaying tail ``A |omega - omega_c|**(-beta)`` on one side.

    G is nonzero only where ``side * (omega - omega_c) >= gamma_r``; the inner
    region and the far side of the cutoff are hard zeros.
    """

    A: float
    beta: float
    omega_c: float
    side: int = 1
    gamma_r: float = 1.0
    kind = "tail_cutoff"

    def __post_init__(self):
        _check_finite("A", self.A)
        if self.A < 0:
            raise InvalidParameter("A must be nonnegative")
        if not 0 < self.beta < 1:
            raise InvalidParameter(f"beta must lie in (0, 1), got {self.beta}")
        _check_finite("omega_c", self.omega_c)
        if self.side not in (1, -1):
            raise InvalidParameter(f"side must be +1 or -1, got {self.side}")
        _check_finite("gamma_r", self.gamma_r, positive=True)

    def _x(self, omega):
        return self.side * (_as_array(omega) - self.omega_c)

    def __call__(self, omega):
        x = self._x(omega)
        inside = x >= self.gamma_r
        return np.where(inside, self.A * np.abs(x) ** (-self.beta), 0.0)

    def derivative(self, omega):
        x = self._x(omega)
        inside = x >= self.gamma_r
        d = -self.side * self.A * self.beta * np.abs(x) ** (-self.beta - 1)
        return np.where(inside, d, 0.0)

    @property
    def edge(self):
        return self.omega_c + self.side * self.gamma_r

    @property
    def support(self):
        return (self.edge, math.inf) if self.side > 0 else (-math.inf, self.edge)

    @property
    def breakpoints(self):
        return np.array([self.edge])

    @property
    def features(self):
        return [(self.edge, self.gamma_r)]

    @property
    def peak(self):
        return self.edge

    def integrated_coupling(self):
        raise Divergent("tail spectrum with beta < 1 has infinite integrated coupling; "
                        "use the B * nu**(-beta) asymptote")

    def frequency_scale(self, omega_a):
        raise Divergent("tail spectrum has no finite correlation time scale")


@dataclass(frozen=True)
class Hydrogenic:
    """Spontaneous-emission spectrum ``alpha * omega / (1 + (omega/omega_b)**2)**4``."""

    alpha: float
    omega_b: float
    kind = "hydrogenic"

    # beyond this multiple of omega_b the tail mass is below 1e-12 of C
    TRUNCATION = 100.0

    def __post_init__(self):
        _check_finite("alpha", self.alpha)
        if self.alpha < 0:
            raise InvalidParameter("alpha must be nonnegative")
        _check_finite("omega_b", self.omega_b, positive=True)

    def __call__(self, omega):
        w = _as_array(omega)
        q = 1.0 + (w / self.omega_b) ** 2
        return np.where(w > 0, self.alpha * w / q ** 4, 0.0)

    def derivative(self, omega):
        w = _as_array(omega)
        u = (w / self.omega_b) ** 2
        d = self.alpha * (1.0 - 7.0 * u) / (1.0 + u) ** 5
        return np.where(w > 0, d, 0.0)

    @property
    def support(self):
        return (0.0, math.inf)

    @property
    def breakpoints(self):
        return np.array([0.0])

    @property
    def features(self):
        return [(0.0, 0.0), (self.peak, self.omega_b)]

    @property
    def peak(self):
        return self.omega_b / math.sqrt(7.0)

    def integrated_coupling(self):
        return self.alpha * self.omega_b ** 2 / 6.0

    def frequency_scale(self, omega_a):
        return max(self.omega_b, abs(omega_a))


@dataclass(frozen=True)
class Flat:
    """Constant level ``G0`` on the band ``[omega_lo, omega_hi]``."""

    G0: float
    omega_lo: float
    omega_hi: float
    kind = "flat"

    def __post_init__(self):
        _check_finite("G0", self.G0)
        if self.G0 < 0:
            raise InvalidParameter("G0 must be nonnegative")
        _check_finite("omega_lo", self.omega_lo)
        _check_finite("omega_hi", self.omega_hi)
        if not self.omega_hi > self.omega_lo:
            raise InvalidParameter("omega_hi must exceed omega_lo")

    def __call__(self, omega):
        w = _as_array(omega)
        return np.where((w >= self.omega_lo) & (w <= self.omega_hi), float(self.G0), 0.0)

    def derivative(self, omega):
        return np.zeros_like(_as_array(omega))

    @property
    def support(self):
        return (self.omega_lo, self.omega_hi)

    @property
    def breakpoints(self):
        return np.array([self.omega_lo, self.omega_hi])

    @property
    def features(self):
        return [(self.omega_lo, 0.0), (self.omega_hi, 0.0)]

    @property
    def peak(self):
        return 0.5 * (self.omega_lo + self.omega_hi)

    def integrated_coupling(self):
        return self.G0 * (self.omega_hi - self.omega_lo)

    def correlation(self, t):
        t = _as_array(t)
        width = self.omega_hi - self.omega_lo
        center = 0.5 * (self.omega_hi + self.omega_lo)
        # G0 * int exp(-i w t) dw over the band, written with sinc for t -> 0
        return self.G0 * width * np.exp(-1j * center * t) * np.sinc(width * t / (2 * math.pi))

    def frequency_scale(self, omega_a):
        return max(abs(self.omega_hi - omega_a), abs(self.omega_lo - omega_a))


@dataclass(frozen=True, eq=False)
class Tabulated:
    """Piecewise-linear G through ``(omega, values)``, zero outside the grid."""

    omega: np.ndarray
    values: np.ndarray
    kind = "tabulated"

    def __post_init__(self):
        w = np.array(self.omega, dtype=float)
        g = np.array(self.values, dtype=float)
        if w.ndim != 1 or w.shape != g.shape or w.size < 2:
            raise InvalidParameter("tabulated grid and values must be 1-D of equal length >= 2")
        if not (np.all(np.isfinite(w)) and np.all(np.isfinite(g))):
            raise InvalidParameter("tabulated grid and values must be finite")
        if np.any(np.diff(w) <= 0):
            raise InvalidParameter("tabulated grid must be strictly increasing")
        if np.any(g < 0):
            raise InvalidParameter("tabulated values must be nonnegative")
        w.flags.writeable = False
        g.flags.writeable = False
        object.__setattr__(self, "omega", w)
        object.__setattr__(self, "values", g)

    def __call__(self, omega):
        w = _as_array(omega)
        out = np.interp(w, self.omega, self.values, left=0.0, right=0.0)
        return np.where((w >= self.omega[0]) & (w <= self.omega[-1]), out, 0.0)

    def derivative(self, omega):
        w = _as_array(omega)
        slopes = np.diff(self.values) / np.diff(self.omega)
        idx = np.clip(np.searchsorted(self.omega, w, side="right") - 1, 0, slopes.size - 1)
        inside = (w >= self.omega[0]) & (w < self.omega[-1])
        return np.where(inside, slopes[idx], 0.0)

    @property
    def support(self):
        return (float(self.omega[0]), float(self.omega[-1]))

    @property
    def breakpoints(self):
        return self.omega

    @property
    def features(self):
        return [(float(w), 0.0) for w in self.omega[[0, -1]]]

    @property
    def peak(self):
        return float(self.omega[int(np.argmax(self.values))])

    def integrated_coupling(self):
        return float(np.sum(0.5 * (self.values[1:] + self.values[:-1]) * np.diff(self.omega)))

    def correlation(self, t):
        t = _as_array(t)
        shape = t.shape
        t = t.ravel()
        a = self.omega[:-1]
        h = np.diff(self.omega)
        g0 = self.values[:-1]
        dg = np.diff(self.values)
        z = -1j * np.outer(t, h)
        e1, e2 = _phi_moments(z)
        seg = np.exp(-1j * np.outer(t, a)) * h * (g0 * e1 + dg * e2)
        return seg.sum(axis=1).reshape(shape)

    def frequency_scale(self, omega_a):
        nz = self.omega[self.values > 0]
        if nz.size == 0:
            return 0.0
        return float(np.max(np.abs(nz - omega_a)))


def _phi_moments(z):
    """``int_0^1 exp(z s) ds`` and ``int_0^1 s exp(z s) ds`` with small-z series."""
    small = np.abs(z) < 1e-2
    zs = np.where(small, 1.0, z)
    ez = np.exp(zs)
    e1 = np.where(small, 1 + z / 2 + z ** 2 / 6 + z ** 3 / 24 + z ** 4 / 120, (ez - 1) / zs)
    e2 = np.where(small, 0.5 + z / 3 + z ** 2 / 8 + z ** 3 / 30 + z ** 4 / 144,
                  (ez * (zs - 1) + 1) / zs ** 2)
    return e1, e2


SPECTRUM_TYPES = {cls.kind: cls for cls in
                  (Lorentzian, PowerLawCutoff, TailCutoff, Hydrogenic, Flat, Tabulated)}


def hint_points(spec, lo=-math.inf, hi=math.inf):
    """Breakpoints plus a geometric ladder around each feature, clipped to [lo, hi]."""
    pts = [np.asarray(spec.breakpoints, dtype=float)]
    for center, width in spec.features:
        if width > 0:
            pts.append(center + width * _LADDER)
        else:
            pts.append(np.array([center]))
    pts = np.concatenate(pts)
    pts = pts[np.isfinite(pts) & (pts > lo) & (pts < hi)]
    return np.unique(pts)


def eval_spectrum(spec, omega):
    """G(omega) for any spectrum variant; returns a float for scalar input."""
    out = spec(omega)
    return float(out) if np.ndim(out) == 0 else out


def integrated_coupling(spec) -> float:
    """Total coupling C, the integral of G over all frequencies."""
    return float(spec.integrated_coupling())


def golden_rule_rate(spec, omega_a) -> float:
    """Unperturbed decay rate 2*pi*G(omega_a)."""
    return 2 * math.pi * float(spec(omega_a))


def zeno_time(spec) -> float:
    """Inverse rms coupling 1/sqrt(C); the quadratic-onset time scale."""
    c = integrated_coupling(spec)
    if c <= 0:
        return math.inf
    return 1.0 / math.sqrt(c)


def _numeric_correlation(spec, t, rtol):
    lo, hi = spec.support
    if isinstance(spec, Hydrogenic):
        hi = Hydrogenic.TRUNCATION * spec.omega_b
    if not (np.isfinite(lo) and np.isfinite(hi)):
        raise Divergent(f"no numeric correlation function for {spec.kind}")
    edges = hint_points(spec, lo, hi)
    edges = np.unique(np.concatenate([[lo, hi], edges]))
    if t > 0:
        # oscillation-aware panels: width <= pi / (4 t)
        edges = np.unique(np.concatenate(
            [split_panels(a, b, math.pi / (4 * t)) for a, b in zip(edges[:-1], edges[1:])]))
    res = integrate(lambda w: spec(w) * np.exp(-1j * w * t), edges, rtol=rtol,
                    atol=1e-14 * spec.integrated_coupling())
    return complex(res.value)


def correlation_function(spec, t, rtol=None):
    """Reservoir correlation Phi(t) = integral of G(omega) exp(-i omega t).

    Analytic for Lorentzian, Flat and Tabulated spectra; oscillation-aware
    Gauss-Kronrod quadrature otherwise. Accepts scalar or array ``t >= 0``.
    """
    if isinstance(spec, TailCutoff):
        raise Divergent("Phi(0) = C is infinite for a tail spectrum")
    t_arr = _as_array(t)
    if np.any(t_arr < 0) or not np.all(np.isfinite(t_arr)):
        raise InvalidParameter("correlation_function requires finite t >= 0")
    if hasattr(spec, "correlation"):
        out = spec.correlation(t_arr)
    else:
        rtol = default_rtol() if rtol is None else rtol
        flat = [_numeric_correlation(spec, float(tt), rtol) for tt in t_arr.ravel()]
        out = np.array(flat, dtype=complex).reshape(t_arr.shape)
    return complex(out) if out.ndim == 0 else out


def spectrum_from_dict(cfg: dict):
    """Build a spectrum from a JSON-style mapping with a ``kind`` field."""
    if not isinstance(cfg, dict):
        raise InvalidParameter("spectrum config must be a JSON object")
    cfg = dict(cfg)
    kind = cfg.pop("kind", None)
    if kind not in SPECTRUM_TYPES:
        raise InvalidParameter(f"field 'kind': expected one of {sorted(SPECTRUM_TYPES)}, got {kind!r}")
    cls = SPECTRUM_TYPES[kind]
    if kind == "tabulated":
        cfg = {"omega": cfg.pop("omega", None), "values": cfg.pop("G", cfg.pop("values", None)), **cfg}
        if cfg["omega"] is None or cfg["values"] is None:
            raise InvalidParameter("tabulated spectrum needs fields 'omega' and 'G'")
    try:
        return cls(**cfg)
    except TypeError as exc:
        raise InvalidParameter(f"{kind} spectrum: {exc}") from None


def spectrum_to_dict(spec) -> dict:
    if isinstance(spec, Tabulated):
        return {"kind": spec.kind, "omega": spec.omega.tolist(), "G": spec.values.tolist()}
    out = {"kind": spec.kind}
    for name in spec.__dataclass_fields__:
        out[name] = getattr(spec, name)
    return out
