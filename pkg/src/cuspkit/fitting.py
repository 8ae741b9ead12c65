"""Extraction of ``f(0), f'(0), f''(0)/2`` from samples on a small radial grid.

The model is ``f(r) = c0 + c1 r + c2 r^2 + O(r^(2+alpha))``.  A single
least-squares quadratic on ``[r_min, r_max]`` is biased by the remainder
(for analytic data the error in ``c2`` is ``O(r_max)``), so the quadratic is
refitted on sliding windows of a fixed number of points.  On a log-uniform
grid each window is a scaled copy of the others, the bias of every
coefficient is a power series in the window radius ``h``, and a polynomial
extrapolation ``h -> 0`` removes it.  The fitted model stays quadratic; only
the remainder is extrapolated away.  The uncertainty is the change against
the extrapolation one degree lower, which bounds the error of the reported
value from above.

The RMS residuals of the window fits decay like ``h^(2+alpha)``, which gives
the remainder exponent estimate.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .errors import FitError

MAX_CONDITION = 1e12


@dataclass(frozen=True)
class Expansion:
    """Coefficients ``c0, c1, c2`` (leading axis) with their uncertainties."""

    coefficients: np.ndarray
    uncertainties: np.ndarray
    alpha: float | None
    residual: float
    consistent: bool
    condition: float

    @property
    def value(self):
        return self.coefficients[0]

    @property
    def slope(self):
        return self.coefficients[1]

    @property
    def curvature(self):
        """Second derivative at 0, i.e. ``2 c2``."""
        return 2 * self.coefficients[2]


def _lstsq(r, y, w, scale):
    s = r / scale
    A = np.stack([np.ones_like(s), s, s * s], axis=1) * w[:, None]
    coef, *_ = np.linalg.lstsq(A, y * w[:, None], rcond=None)
    res = y - (A / w[:, None]) @ coef
    coef = coef / np.array([1.0, scale, scale * scale])[:, None]
    return coef, res, A


def quadratic_expansion(radii, values, errors=None, window=12, degree=4, noise=None) -> Expansion:
    """Fit ``c0 + c1 r + c2 r^2`` and extrapolate the remainder bias away.

    ``values`` has shape ``(n, ...)``; the trailing axes are fitted
    independently with the same weights.  ``errors`` are one-sigma bars per
    sample (inverse-variance weights); without them the fit is unweighted.
    ``noise`` is the absolute round-off level of the samples (scalar or per
    radius); window residuals below it carry no information on the remainder.
    """
    r = np.asarray(radii, dtype=float)
    y = np.asarray(values, dtype=float)
    tail = y.shape[1:]
    y = y.reshape(len(r), -1)
    n = len(r)
    if n < 4:
        raise FitError(f"need at least 4 radii, got {n}")
    if not np.all(np.isfinite(y)):
        raise FitError("non-finite samples in radial data")

    sig = None
    if errors is not None:
        sig = np.asarray(errors, dtype=float).reshape(n, -1).max(axis=1)
        if not np.any(sig > 0):
            sig = None
    if sig is None:
        w = np.ones(n)
    else:
        floor = sig[sig > 0].min()
        w = 1.0 / np.maximum(sig, floor)
        w = w / w.max()

    coef, res, A = _lstsq(r, y, w, r[-1])
    cond = float(np.linalg.cond(A))
    if not np.isfinite(cond) or cond > MAX_CONDITION:
        raise FitError(f"ill-conditioned radial fit (condition number {cond:.3e})", cond)
    scale_y = max(np.abs(y).max(), 1e-300)
    residual = float(np.sqrt(np.mean(res ** 2)) / scale_y)

    stat = np.zeros_like(coef)
    if sig is not None:
        s = r / r[-1]
        B = np.stack([np.ones_like(s), s, s * s], axis=1) / np.maximum(sig, sig[sig > 0].min())[:, None]
        cov = np.linalg.inv(B.T @ B)
        stat = np.sqrt(np.diag(cov))[:, None] / np.array([1.0, r[-1], r[-1] ** 2])[:, None]
        stat = np.broadcast_to(stat, coef.shape)

    m = min(window, n)
    hs, cs, rs = [], [], []
    for k in range(n - m + 1):
        sl = slice(n - m - k, n - k)
        c, rr, _ = _lstsq(r[sl], y[sl], w[sl], r[sl][-1])
        hs.append(r[sl][-1])
        cs.append(c)
        rs.append(np.sqrt(np.mean(rr ** 2)))
    hs = np.array(hs)
    cs = np.array(cs)
    rs = np.array(rs)

    deg = min(degree, len(hs) - 2)
    if deg < 1:
        best, spread = coef, np.zeros_like(coef)
    else:
        t = hs / hs[0]
        best = np.empty_like(coef)
        spread = np.empty_like(coef)
        for j in range(3):
            hi = np.polynomial.polynomial.polyfit(t, cs[:, j, :], deg)[0]
            lo = np.polynomial.polynomial.polyfit(t, cs[:, j, :], deg - 1)[0]
            best[j] = hi
            spread[j] = np.abs(hi - lo)
    unc = spread + stat

    # residual decay: only windows above the noise/round-off floor are informative
    stat_noise = 0.0 if sig is None else float(np.median(sig))
    noise = np.broadcast_to(0.0 if noise is None else np.asarray(noise, dtype=float), (n,))
    floors = np.array([
        max(50 * np.finfo(float).eps * scale_y, 3 * stat_noise, 3 * noise[n - m - k:n - k].max())
        for k in range(len(rs))
    ])
    floor = floors.max()
    live = rs > floors
    consistent = True
    alpha = None
    if live.sum() >= 3:
        seq = rs[live]
        consistent = bool(np.all(np.diff(seq) <= 1e-3 * seq[:-1] + floor))
        slope = np.polyfit(np.log(hs[live]), np.log(seq), 1)[0]
        if consistent:
            alpha = float(min(slope - 2.0, 1.0))

    shape = (3,) + tail
    return Expansion(
        coefficients=best.reshape(shape),
        uncertainties=unc.reshape(shape),
        alpha=alpha,
        residual=residual,
        consistent=consistent,
        condition=cond,
    )


def linear_limit(radii, values, degree=2):
    """Plain polynomial extrapolation ``f(0)`` with a model-spread error bar."""
    r = np.asarray(radii, dtype=float)
    y = np.asarray(values, dtype=float)
    t = r / r[-1]
    hi = np.polynomial.polynomial.polyfit(t, y, degree)[0]
    lo = np.polynomial.polynomial.polyfit(t, y, degree - 1)[0]
    return hi, np.abs(hi - lo)
