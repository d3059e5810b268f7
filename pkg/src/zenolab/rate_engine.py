"""Measurement-modified decay rate R = 2 pi * int_0^inf G(w) F(w) dw.

Besides the overlap quadrature this module holds the closed-form limits
(Zeno 2C/nu and B nu^-beta laws, power-law and hydrogenic anti-Zeno laws),
the genuine-Zeno threshold, and the regime classifier behind RateCurve.
"""

from __future__ import annotations

import math
import warnings
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass, field

import numpy as np
from scipy.special import gamma as gamma_fn
from scipy.special import sici

from . import spectra as sp
from .broadening import ContinuousLorentzian, PeriodicLorentzian, ProjectiveSinc, filter_family
from .errors import (FilterMassWarning, InvalidParameter, OutOfRegime, QuadratureFailure,
                     Unsupported, ZeroDensity, ZenoError)
from .quadrature import default_rtol, integrate

HYDROGENIC_C1 = 0.354

# sinc^2 periods on each side of omega_a integrated panel by panel
EXPLICIT_PERIODS = 1000
DROPPED_MASS_REPORT = 1e-3

# regime classification constants (reported in RateCurve.thresholds)
GOLDEN_RULE_BAND = 0.05
AZE_FACTOR = 1.05
SLOPE_TOL = 1e-3

GOLDEN_RULE = "GOLDEN_RULE"
AZE = "AZE"
QZE_SCALING = "QZE_SCALING"
GENUINE_QZE = "GENUINE_QZE"
FAILED = "FAILED"


@dataclass(frozen=True)
class OverlapResult:
    rate: float
    error: float
    dropped_filter_mass: float
    evaluations: int


def _positive_support(spec):
    lo, hi = spec.support
    return max(lo, 0.0), hi


def dropped_filter_mass(filt, omega_a):
    """Filter mass at negative frequency, which the overlap integral omits."""
    if isinstance(filt, ContinuousLorentzian):
        return 0.5 - math.atan(omega_a / filt.nu) / math.pi
    if isinstance(filt, ProjectiveSinc):
        X = abs(omega_a) * filt.tau / 2
        if X == 0:
            return 0.5
        # int_0^X sinc^2 = Si(2X) - sin^2(X)/X
        inner = (sici(2 * X)[0] - math.sin(X) ** 2 / X) / math.pi
        return 0.5 - inner if omega_a > 0 else 0.5 + inner
    return 0.0


def _lorentzian_overlap(spec, filt, omega_a, rtol):
    nu = filt.nu
    lo, hi = _positive_support(spec)
    phi_lo = math.atan((lo - omega_a) / nu) if np.isfinite(lo) else -math.pi / 2
    phi_hi = math.atan((hi - omega_a) / nu) if np.isfinite(hi) else math.pi / 2
    hints = sp.hint_points(spec, lo, hi)
    edges = np.concatenate([[phi_lo, phi_hi], np.arctan((hints - omega_a) / nu)])
    edges = np.unique(edges[(edges >= phi_lo) & (edges <= phi_hi)])
    # the filter is uniform in phi; this just guarantees a minimum resolution
    edges = np.unique(np.concatenate([edges, np.linspace(phi_lo, phi_hi, 33)]))

    def integrand(phi):
        return 2.0 * spec(omega_a + nu * np.tan(phi))

    res = integrate(integrand, edges, rtol=rtol)
    return float(res.value), res.error, res.evaluations


def _merge(intervals):
    out = []
    for a, b in sorted(intervals):
        if out and a <= out[-1][1]:
            out[-1][1] = max(out[-1][1], b)
        else:
            out.append([a, b])
    return out


def _subtract(zone, windows):
    """Parts of interval ``zone`` not covered by the merged ``windows``."""
    a, b = zone
    pieces = []
    cur = a
    for wa, wb in windows:
        if wb <= cur or wa >= b:
            continue
        if wa > cur:
            pieces.append((cur, wa))
        cur = max(cur, wb)
    if cur < b:
        pieces.append((cur, b))
    return pieces


def _sinc_overlap(spec, filt, omega_a, rtol):
    """2 * int G(omega_a + nu x) (sin x / x)^2 dx over the positive support.

    |x| <= K pi is integrated period by period. Beyond it sin^2 = (1 - cos 2x)/2:
    the smooth half goes through ordinary adaptive quadrature and the cos 2x
    half through its integration-by-parts boundary terms, which is accurate
    once G varies slowly over a period. Narrow features that land in that
    region are cut out as explicit windows.
    """
    nu = filt.nu
    lo, hi = _positive_support(spec)
    xlo = (lo - omega_a) / nu if np.isfinite(lo) else -math.inf
    xhi = (hi - omega_a) / nu if np.isfinite(hi) else math.inf
    if xhi <= xlo:
        return 0.0, 0.0, 0
    XK = EXPLICIT_PERIODS * math.pi

    def full(x):
        return 2.0 * spec(omega_a + nu * x) * np.sinc(x / math.pi) ** 2

    def to_x(w):
        return (np.asarray(w, dtype=float) - omega_a) / nu

    # explicit windows around features that are narrow on the period scale
    windows = [[-XK, XK]]
    for center, width in spec.features:
        xc, wx = float(to_x(center)), width / nu
        if abs(xc) > XK - 1 and wx < 30:
            half = 200 * wx + 30 * math.pi
            windows.append([math.pi * math.floor((xc - half) / math.pi),
                            math.pi * math.ceil((xc + half) / math.pi)])
    windows = _merge(windows)
    windows = [(max(a, xlo), min(b, xhi)) for a, b in windows if b > xlo and a < xhi]

    bps = to_x(spec.breakpoints)
    hints = to_x(sp.hint_points(spec))
    total = 0.0
    err = 0.0
    evals = 0
    for a, b in windows:
        ka, kb = math.ceil(a / math.pi), math.floor(b / math.pi)
        periods = math.pi * np.arange(ka, kb + 1)
        edges = np.concatenate([[a, b], periods, hints[(hints > a) & (hints < b)]])
        edges = np.unique(edges[(edges >= a) & (edges <= b)])
        res = integrate(full, edges, rtol=rtol)
        total += float(res.value)
        err += res.error
        evals += res.evaluations

    scale = max(abs(total), 1e-300)
    for piece in _subtract((xlo, xhi), windows):
        s_val, s_err, o_val, n = _asymptotic_tail(spec, omega_a, nu, piece, bps, hints,
                                                   rtol, scale)
        total += 2.0 * (s_val - o_val)
        err += 2.0 * s_err
        evals += n
    return total, err, evals


def _asymptotic_tail(spec, omega_a, nu, piece, bps, hints, rtol, scale):
    p, q = piece
    inner = bps[(bps > p) & (bps < q)]
    # the 1/x^2 envelope needs geometrically graded panels away from x = 0
    near = min(abs(p), abs(q))
    far = max(abs(p), abs(q))
    ladder = near * 2.0 ** np.arange(0, 2 + math.log2(far / near)) if np.isfinite(far) else \
        near * 2.0 ** np.arange(0, 8)
    ladder = np.concatenate([ladder, -ladder])
    edges = np.concatenate([[p, q], inner, hints, ladder])
    edges = np.unique(edges[(edges >= p) & (edges <= q)])

    def smooth(x):
        return spec(omega_a + nu * x) / (2.0 * x * x)

    tail_scale = max(abs(p) if np.isfinite(p) else abs(q), 1.0)
    res = integrate(smooth, edges, rtol=rtol, atol=0.25 * rtol * scale, tail_scale=tail_scale)

    def g_and_dg(x):
        w = omega_a + nu * x
        G = float(spec(w))
        dG = float(spec.derivative(w))
        return G / (2 * x * x), nu * dG / (2 * x * x) - G / x ** 3

    def boundary(x):
        g, dg = g_and_dg(x)
        return g * math.sin(2 * x) / 2 + dg * math.cos(2 * x) / 4

    osc = 0.0
    cuts = np.unique(np.concatenate([[p, q], inner]))
    for a, b in zip(cuts[:-1], cuts[1:]):
        if np.isfinite(b):
            osc += boundary(b - 1e-10 * abs(b))
        if np.isfinite(a):
            osc -= boundary(a + 1e-10 * abs(a))
    return float(res.value), res.error, osc, res.evaluations


def overlap_details(spec, filt, omega_a, rtol=None) -> OverlapResult:
    """Overlap rate together with its error estimate and dropped filter mass."""
    rtol = default_rtol() if rtol is None else rtol
    if not np.isfinite(omega_a):
        raise InvalidParameter("omega_a must be finite")
    if isinstance(filt, ContinuousLorentzian):
        rate, err, n = _lorentzian_overlap(spec, filt, omega_a, rtol)
    elif isinstance(filt, ProjectiveSinc):
        rate, err, n = _sinc_overlap(spec, filt, omega_a, rtol)
    else:
        raise Unsupported(f"overlap_rate does not handle filter {type(filt).__name__}")
    dropped = dropped_filter_mass(filt, omega_a)
    if spec.support[0] < 0 and dropped > DROPPED_MASS_REPORT:
        warnings.warn(f"filter mass {dropped:.3g} below omega = 0 dropped from the overlap",
                      FilterMassWarning, stacklevel=3)
    if err > max(10 * rtol * abs(rate), 1e-300):
        raise QuadratureFailure(f"overlap error estimate {err:.3g} exceeds tolerance",
                                value=rate, error=err)
    return OverlapResult(max(rate, 0.0), err, dropped, n)


def overlap_rate(spec, filt, omega_a, rtol=None) -> float:
    """Decay rate under repeated measurement, 2 pi * int_0^inf G F d omega."""
    return overlap_details(spec, filt, omega_a, rtol).rate


def closed_form_powerlaw_rate(A, eta, omega_c, omega_a, nu) -> float:
    """Leading-order rate for ``G = A w^eta`` (cutoff ``omega_c``) under a
    Lorentzian filter of width ``nu``; valid for ``nu << omega_c``."""
    if not (nu > 0 and eta > 0 and omega_c > 0):
        raise InvalidParameter("need nu > 0, eta > 0, omega_c > 0")
    if not omega_a < omega_c:
        raise InvalidParameter("omega_a must lie below the cutoff")
    if nu >= omega_c / 10:
        raise OutOfRegime(f"nu = {nu:g} is not << omega_c = {omega_c:g} (need nu < omega_c/10)")
    if eta < 1:
        chi = math.atan2(nu, -omega_a)  # tan(chi) = -nu/omega_a, 0 < chi < pi
        return (2 * math.pi * A * (omega_a ** 2 + nu ** 2) ** (eta / 2)
                * math.sin(eta * chi) / math.sin(eta * math.pi))
    if eta == 1:
        return A * (nu * math.log(omega_c ** 2 / (omega_a ** 2 + nu ** 2))
                    + omega_a * (math.pi + 2 * math.atan(omega_a / nu)))
    return 2 * math.pi * A * omega_a ** eta + 2 * A / (eta - 1) * nu * omega_c ** (eta - 1)


def tail_prefactor(spec, filter_kind="projective") -> float:
    """Coefficient B of the ``R = B nu^-beta`` law for a tail spectrum.

    For projections this is ``2^beta pi A / (cos(pi beta/2) Gamma(2+beta))``;
    a continuous (Lorentzian) filter gives ``pi A / cos(pi beta / 2)``.
    """
    if not isinstance(spec, sp.TailCutoff):
        raise Unsupported("tail prefactor only exists for tail spectra")
    b = spec.beta
    if filter_kind == "projective":
        return 2 ** b * math.pi / (math.cos(math.pi * b / 2) * gamma_fn(2 + b)) * spec.A
    if filter_kind in ("continuous", "monitor"):
        return math.pi / math.cos(math.pi * b / 2) * spec.A
    raise InvalidParameter(f"unknown filter family {filter_kind!r}")


def qze_asymptote(spec, nu, filter_kind="projective") -> float:
    """Zeno-limit rate: 2C/nu for finite C, B nu^-beta for a slow tail."""
    if isinstance(spec, sp.Flat):
        raise Unsupported("no QZE scaling for a flat spectrum")
    if nu <= 0:
        raise InvalidParameter("nu must be positive")
    if isinstance(spec, sp.TailCutoff):
        return tail_prefactor(spec, filter_kind) * nu ** (-spec.beta)
    return 2 * sp.integrated_coupling(spec) / nu


def hydrogenic_aze_asymptote(alpha, omega_b, nu) -> float:
    """Anti-Zeno rate ``alpha nu [ln(omega_b/nu) + C1]`` for projections."""
    if not nu > 0:
        raise InvalidParameter("nu must be positive")
    if nu >= omega_b / 10:
        raise OutOfRegime(f"nu = {nu:g} is not << omega_b = {omega_b:g}")
    return alpha * nu * (math.log(omega_b / nu) + HYDROGENIC_C1)


def genuine_qze_threshold(spec, omega_a, filter_kind="projective") -> float:
    """Measurement rate above which the Zeno asymptote falls below R_GR."""
    if isinstance(spec, sp.Flat):
        raise Unsupported("no QZE scaling for a flat spectrum")
    g = float(spec(omega_a))
    if g <= 0:
        raise ZeroDensity(f"G(omega_a) = 0 at omega_a = {omega_a:g}")
    if isinstance(spec, sp.TailCutoff):
        B = tail_prefactor(spec, filter_kind)
        return (B / (2 * math.pi * g)) ** (1 / spec.beta)
    return sp.integrated_coupling(spec) / (math.pi * g)


def delta_a_estimate(spec, omega_a) -> float:
    """Frequency interval around omega_a over which G changes appreciably."""
    g_a = float(spec(omega_a))
    if g_a <= 0:
        raise ZeroDensity(f"G(omega_a) = 0 at omega_a = {omega_a:g}")
    if isinstance(spec, sp.PowerLawCutoff):
        if spec.eta <= 1:
            return float(omega_a)
        return omega_a ** spec.eta / spec.omega_c ** (spec.eta - 1)
    if isinstance(spec, sp.Flat):
        return 0.5 * min(omega_a - spec.omega_lo, spec.omega_hi - omega_a)

    lo, hi = spec.support
    bps = np.asarray(spec.breakpoints, dtype=float)
    probe = np.linspace(-1.0, 1.0, 401)

    def deviation(delta):
        w = omega_a + delta * probe
        inner = bps[(bps >= omega_a - delta) & (bps <= omega_a + delta)]
        w = np.concatenate([w, inner])
        w = w[(w >= lo) & (w <= hi)]
        return float(np.max(np.abs(spec(w) - g_a)))

    target = 0.5 * g_a
    d_lo = 1e-12 * max(abs(omega_a), 1e-300)
    if d_lo == 0 or deviation(d_lo) > target:
        return d_lo
    d_hi = d_lo
    limit = 1e12 * max(abs(omega_a), max((w for _, w in spec.features), default=1.0))
    while deviation(d_hi) <= target:
        d_lo, d_hi = d_hi, 2 * d_hi
        if d_hi > limit:
            return math.inf
    for _ in range(60):
        mid = math.sqrt(d_lo * d_hi)
        if deviation(mid) > target:
            d_hi = mid
        else:
            d_lo = mid
        if d_hi / d_lo < 1 + 1e-9:
            break
    return d_hi


@dataclass
class RateCurve:
    omega_a: float
    family: str
    nu: np.ndarray
    R: np.ndarray
    ok: np.ndarray
    labels: list
    R_GR: float
    nu_qze: float | None = None
    nu_1: float | None = None
    delta_a: float | None = None
    thresholds: dict = field(default_factory=lambda: {
        "golden_rule_band": GOLDEN_RULE_BAND,
        "aze_factor": AZE_FACTOR,
        "slope_tol": SLOPE_TOL,
    })

    def summary(self) -> dict:
        return {"R_GR": self.R_GR, "nu_QZE": self.nu_qze, "nu_1": self.nu_1,
                "delta_a": self.delta_a}

    def rows(self):
        for nu, R, lab in zip(self.nu, self.R, self.labels):
            ratio = R / self.R_GR if self.R_GR > 0 else math.inf
            yield float(nu), float(R), float(ratio), lab


def _label(nu, R, slope, R_GR, delta_a):
    r = R / R_GR if R_GR > 0 else math.inf
    near = abs(r - 1) < GOLDEN_RULE_BAND
    if near and delta_a is not None and nu < delta_a:
        return GOLDEN_RULE
    if slope < -SLOPE_TOL:
        return GENUINE_QZE if r < 1 else QZE_SCALING
    if r > AZE_FACTOR:
        return AZE
    if near:
        return GOLDEN_RULE
    return AZE if slope > SLOPE_TOL else QZE_SCALING


def classify_samples(nu, R, R_GR, delta_a):
    """Regime label per sample from the local log-log slope of R(nu)."""
    nu = np.asarray(nu, dtype=float)
    R = np.asarray(R, dtype=float)
    good = np.isfinite(R) & (R > 0)
    slopes = np.zeros_like(R)
    if good.sum() >= 2:
        slopes[good] = np.gradient(np.log(R[good]), np.log(nu[good]))
    labels = []
    for i in range(nu.size):
        if not good[i]:
            labels.append(FAILED if not np.isfinite(R[i]) else _label(nu[i], R[i], 0.0, R_GR, delta_a))
        else:
            labels.append(_label(nu[i], R[i], slopes[i], R_GR, delta_a))
    return labels


def _golden_max(f, a, b, iters=60):
    """Golden-section search for the maximum of a unimodal f on [a, b]."""
    invphi = (math.sqrt(5) - 1) / 2
    c = b - invphi * (b - a)
    d = a + invphi * (b - a)
    fc, fd = f(c), f(d)
    for _ in range(iters):
        if fc > fd:
            b, d, fd = d, c, fc
            c = b - invphi * (b - a)
            fc = f(c)
        else:
            a, c, fc = c, d, fd
            d = a + invphi * (b - a)
            fd = f(d)
        if b - a < 1e-10 * max(abs(a), 1.0):
            break
    return 0.5 * (a + b)


def rate_curve(spec, family, omega_a, nu_grid, workers=None, rtol=None) -> RateCurve:
    """Sample R(nu) for a filter family and annotate the regimes."""
    nu = np.asarray(nu_grid, dtype=float)
    if nu.ndim != 1 or nu.size == 0 or np.any(nu <= 0) or np.any(np.diff(nu) <= 0):
        raise InvalidParameter("nu grid must be positive and strictly increasing")
    make = filter_family(family)

    def one(v):
        try:
            return overlap_rate(spec, make(v), omega_a, rtol)
        except (QuadratureFailure, FloatingPointError):
            return math.nan

    if workers and workers > 1:
        with ThreadPoolExecutor(max_workers=workers) as pool:
            R = np.array(list(pool.map(one, nu)))
    else:
        R = np.array([one(v) for v in nu])
    R_GR = sp.golden_rule_rate(spec, omega_a)

    try:
        delta_a = delta_a_estimate(spec, omega_a)
    except ZenoError:
        delta_a = None
    try:
        nu_qze = genuine_qze_threshold(spec, omega_a, "projective" if family == "projective"
                                       else "continuous")
    except ZenoError:
        nu_qze = None

    nu_1 = None
    if np.all(np.isfinite(R)) and nu.size >= 3:
        i = int(np.argmax(R))
        if 0 < i < nu.size - 1 and R[i] > R[i - 1] and R[i] > R[i + 1]:
            lg = _golden_max(lambda s: one(math.exp(s)), math.log(nu[i - 1]), math.log(nu[i + 1]))
            nu_1 = math.exp(lg)

    labels = classify_samples(nu, R, R_GR, delta_a)
    return RateCurve(omega_a=float(omega_a), family=family, nu=nu, R=R,
                     ok=np.isfinite(R), labels=labels, R_GR=R_GR, nu_qze=nu_qze,
                     nu_1=nu_1, delta_a=delta_a)


def periodic_overlap_rate(G, filt: PeriodicLorentzian, band, rtol=None, omega_a=0.0):
    """2 pi * int_band G F for a band-limited reservoir (used by polarization)."""
    lo, hi = band
    edges = np.linspace(lo, hi, 65)
    res = integrate(lambda w: 2 * math.pi * G(w) * filt(w, omega_a), edges,
                    rtol=default_rtol() if rtol is None else rtol)
    return float(res.value)
