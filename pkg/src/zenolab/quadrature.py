"""Vectorized globally-adaptive Gauss-Kronrod (G7/K15) quadrature.

Integrands take a numpy array of abscissae and return an array of the same
shape (real or complex). All panels of one refinement pass are evaluated in
a single call, which keeps the Python overhead per pass constant.
"""

from __future__ import annotations

import os
from dataclasses import dataclass

import numpy as np

from .errors import QuadratureFailure

DEFAULT_RTOL = 1e-6

_XK = np.array([
    0.991455371120812639206854697526329,
    0.949107912342758524526189684047851,
    0.864864423359769072789712788640926,
    0.741531185599394439863864773280788,
    0.586087235467691130294144845693013,
    0.405845151377397166906606412076961,
    0.207784955007898467600689403773245,
    0.000000000000000000000000000000000,
])
_WK = np.array([
    0.022935322010529224963732008058970,
    0.063092092629978553290700663189204,
    0.104790010322250183839876322541518,
    0.140653259715525918745189590510238,
    0.169004726639267902826583426598550,
    0.190350578064785409913256402421014,
    0.204432940075298892414161999234649,
    0.209482141084727828012999174891714,
])
_WG = np.array([
    0.129484966168869693270611432679082,
    0.279705391489276667901467771423780,
    0.381830050505118944950369775488975,
    0.417959183673469387755102040816327,
])

# full 15-node layout: -x0..-x6, 0, x6..x0
_NODES = np.concatenate([-_XK[:-1], [0.0], _XK[-2::-1]])
_KW = np.concatenate([_WK[:-1], [_WK[-1]], _WK[-2::-1]])
_GW = np.zeros(15)
_GW[[1, 3, 5]] = _WG[:3]
_GW[7] = _WG[3]
_GW[[9, 11, 13]] = _WG[2::-1]


def default_rtol() -> float:
    """Relative tolerance, overridable through ``ZENOLAB_QUAD_TOL``."""
    raw = os.environ.get("ZENOLAB_QUAD_TOL")
    if raw:
        try:
            value = float(raw)
        except ValueError:
            raise ValueError(f"ZENOLAB_QUAD_TOL is not a number: {raw!r}") from None
        if not (0 < value < 1):
            raise ValueError(f"ZENOLAB_QUAD_TOL must lie in (0, 1), got {value}")
        return value
    return DEFAULT_RTOL


@dataclass(frozen=True)
class QuadResult:
    value: complex | float
    error: float
    panels: int
    evaluations: int


def gk15(f, a, b):
    """Kronrod estimate and |K15 - G7| error for each panel ``[a_i, b_i]``."""
    a = np.asarray(a, dtype=float)
    b = np.asarray(b, dtype=float)
    half = 0.5 * (b - a)
    mid = 0.5 * (b + a)
    x = mid[:, None] + half[:, None] * _NODES[None, :]
    y = np.asarray(f(x))
    kron = half * (y @ _KW)
    gauss = half * (y @ _GW)
    return kron, np.abs(kron - gauss)


def _adaptive(f, edges, rtol, atol, max_panels):
    a = np.asarray(edges[:-1], dtype=float)
    b = np.asarray(edges[1:], dtype=float)
    keep = b > a
    a, b = a[keep], b[keep]
    if a.size == 0:
        return QuadResult(0.0, 0.0, 0, 0)
    vals, errs = gk15(f, a, b)
    nevals = 15 * a.size
    frozen_val = 0.0
    frozen_err = 0.0
    while True:
        total = vals.sum() + frozen_val
        err = errs.sum() + frozen_err
        tol = max(atol, rtol * abs(total))
        if err <= tol or a.size == 0:
            return QuadResult(total, float(err), int(a.size), nevals)
        if a.size >= max_panels:
            raise QuadratureFailure(
                f"tolerance {tol:.3g} not reached with {a.size} panels "
                f"(error estimate {err:.3g})", value=total, error=float(err))
        order = np.argsort(errs)[::-1]
        cum = np.cumsum(errs[order])
        k = int(np.searchsorted(cum, 0.5 * (err - frozen_err))) + 1
        pick = np.zeros(a.size, dtype=bool)
        pick[order[:k]] = True
        # panels too narrow to split in floating point are frozen
        tiny = (b - a) <= 64 * np.finfo(float).eps * np.maximum(np.abs(a), np.abs(b))
        stuck = pick & tiny
        if stuck.any():
            frozen_val = frozen_val + vals[stuck].sum()
            frozen_err += float(errs[stuck].sum())
            pick &= ~tiny
            if frozen_err > tol:
                raise QuadratureFailure(
                    "integrand not resolvable at floating-point resolution",
                    value=total, error=err)
            keep = ~stuck
        else:
            keep = np.ones(a.size, dtype=bool)
        sa, sb = a[pick], b[pick]
        m = 0.5 * (sa + sb)
        na = np.concatenate([sa, m])
        nb = np.concatenate([m, sb])
        nv, ne = gk15(f, na, nb)
        nevals += 15 * na.size
        rest = keep & ~pick
        a = np.concatenate([a[rest], na])
        b = np.concatenate([b[rest], nb])
        vals = np.concatenate([vals[rest], nv])
        errs = np.concatenate([errs[rest], ne])


def integrate(f, points, rtol=None, atol=0.0, max_panels=200_000, tail_scale=None):
    """Integrate ``f`` over ``[points[0], points[-1]]`` split at ``points``.

    Either end may be infinite; a semi-infinite piece ``[c, inf)`` is mapped
    to ``[0, 1)`` by ``x = c + s u / (1 - u)`` with ``s = tail_scale``.
    """
    rtol = default_rtol() if rtol is None else rtol
    pts = np.unique(np.asarray(points, dtype=float))
    if pts.size < 2:
        return QuadResult(0.0, 0.0, 0, 0)
    lo_inf = np.isneginf(pts[0])
    hi_inf = np.isposinf(pts[-1])
    finite = pts[np.isfinite(pts)]
    results = []
    if finite.size >= 2:
        results.append(_adaptive(f, finite, rtol, atol, max_panels))
    scale_of = lambda c: tail_scale if tail_scale else max(1.0, abs(c))
    budget = abs(results[0].value) if results else 0.0
    sub_atol = max(atol, 0.5 * rtol * budget)
    if hi_inf:
        c = finite[-1] if finite.size else 0.0
        s = scale_of(c)

        def g_hi(u, c=c, s=s):
            return f(c + s * u / (1.0 - u)) * (s / (1.0 - u) ** 2)

        results.append(_adaptive(g_hi, np.linspace(0.0, 1.0, 9), rtol, sub_atol, max_panels))
    if lo_inf:
        c = finite[0] if finite.size else 0.0
        s = scale_of(c)

        def g_lo(u, c=c, s=s):
            return f(c - s * u / (1.0 - u)) * (s / (1.0 - u) ** 2)

        results.append(_adaptive(g_lo, np.linspace(0.0, 1.0, 9), rtol, sub_atol, max_panels))
    return QuadResult(
        sum(r.value for r in results),
        sum(r.error for r in results),
        sum(r.panels for r in results),
        sum(r.evaluations for r in results),
    )


def split_panels(lo, hi, max_width):
    """Edges of ``[lo, hi]`` cut into panels no wider than ``max_width``."""
    n = max(1, int(np.ceil((hi - lo) / max_width)))
    return np.linspace(lo, hi, n + 1)
