"""Numerical certificates for ``C^2`` versus ``C^{1,1}`` behaviour at a nucleus.

A ``C^{1,1}`` function that is not ``C^2`` has bounded second derivatives whose
limits at the nucleus depend on the direction of approach (terms such as
``x_i x_j / r``).  Both properties are probed with central second differences
at ``t * a`` with step ``t/4``, so the stencil never brackets the nucleus.

All thresholds are relative, which makes every verdict invariant under
multiplication of the handle by a positive constant.
"""

from __future__ import annotations

import itertools
from dataclasses import dataclass, field

import numpy as np

from .core import make_direction
from .errors import DomainError

VERDICTS = ("C2-compatible", "C11-not-C2", "inconclusive")
SEPARATION = 5.0
GROWTH_LIMIT = 1.5
_EPS = np.finfo(float).eps
_ROUNDOFF = 16.0


def approach_directions() -> np.ndarray:
    """The 3 axes, 6 face diagonals and 4 space diagonals."""
    axes = np.eye(3)
    face = [np.array(v, float) / np.sqrt(2) for v in
            [(1, 1, 0), (1, -1, 0), (1, 0, 1), (1, 0, -1), (0, 1, 1), (0, 1, -1)]]
    space = [np.array(v, float) / np.sqrt(3) for v in [(1, 1, 1), (1, 1, -1), (1, -1, 1), (-1, 1, 1)]]
    return np.vstack([axes, face, space])


def scan_directions() -> np.ndarray:
    """The 26 directions to the neighbours of a cube cell."""
    v = np.array([d for d in itertools.product((-1, 0, 1), repeat=3) if any(d)], float)
    return v / np.linalg.norm(v, axis=1, keepdims=True)


def probe_radii(n: int = 8, r_min: float = 1e-3, r_max: float = 1e-2) -> np.ndarray:
    return np.geomspace(r_min, r_max, n)


def _check_radii(radii):
    r = np.asarray(radii, dtype=float)
    if r.ndim != 1 or len(r) < 4 or np.any(r <= 0) or np.any(np.diff(r) <= 0):
        raise DomainError("probe radii must be >= 4 positive increasing values")
    if r[-1] > 1e-2:
        raise DomainError("probe radii must not exceed 1e-2")
    return r


_UNIT = np.eye(3)


def _second_differences(mu, points, steps, pairs):
    """Quotients ``(n_points, n_pairs)`` and their round-off floors.

    Off-diagonal pairs use the four-point cross stencil; diagonal pairs the
    three-point stencil.
    """
    pts = np.asarray(points, float)
    s = np.asarray(steps, float)[:, None]
    offsets, coefs = [], []
    for i, j in pairs:
        if i == j:
            offsets.append([_UNIT[i], 0 * _UNIT[i], -_UNIT[i]])
            coefs.append([1.0, -2.0, 1.0])
        else:
            offsets.append([_UNIT[i] + _UNIT[j], _UNIT[i] - _UNIT[j], -_UNIT[i] + _UNIT[j], -_UNIT[i] - _UNIT[j]])
            coefs.append([0.25, -0.25, -0.25, 0.25])
    q = np.empty((len(pts), len(pairs)))
    floor = np.empty_like(q)
    for k, (off, c) in enumerate(zip(offsets, coefs)):
        off = np.asarray(off)
        stencil = pts[:, None, :] + s[:, :, None] * off[None]
        v = np.asarray(mu(stencil.reshape(-1, 3)), float).reshape(len(pts), len(off))
        q[:, k] = v @ np.asarray(c) / s[:, 0] ** 2
        floor[:, k] = _ROUNDOFF * _EPS * np.abs(v).max(axis=1) / s[:, 0] ** 2
    return q, floor


def _extrapolate(t, d, floor):
    """Degree-2 extrapolation ``t -> 0``: ``(limit, error, settled)``.

    The error is ``|deg2 - deg3|`` plus the round-off level; the sequence
    has settled unless that spread is both above round-off and above 1% of
    the sequence magnitude.
    """
    x = t / t[-1]
    p2 = np.polynomial.polynomial.polyfit(x, d, 2)[0]
    p3 = np.polynomial.polynomial.polyfit(x, d, 3)[0]
    spread = abs(p3 - p2)
    # polynomial extrapolation amplifies round-off by roughly the Lebesgue constant
    noise = 10 * floor.max()
    settled = spread <= noise or spread <= 1e-2 * np.abs(d).max()
    return float(p2), float(spread + noise), bool(settled)


@dataclass(frozen=True)
class DirectionalLimit:
    i: int
    j: int
    approach: tuple
    limit: float
    error: float
    inconclusive: bool

    def key(self) -> str:
        return f"d{self.i + 1}d{self.j + 1}@" + ",".join(f"{a:+.4f}" for a in self.approach)


def _directional(mu, pairs, approach, radii, center):
    a = make_direction(approach)
    t = _check_radii(radii)
    pts = np.asarray(center, float) + t[:, None] * a
    q, floor = _second_differences(mu, pts, t / 4, pairs)
    out = []
    for k, (i, j) in enumerate(pairs):
        lim, err, settled = _extrapolate(t, q[:, k], floor[:, k])
        out.append(DirectionalLimit(i, j, tuple(float(x) for x in a), lim, err, not settled))
    return out


def directional_mixed_partial(mu, i: int, j: int, approach, radii=None, center=(0.0, 0.0, 0.0)):
    """``lim_{t->0}`` of the second difference ``d_i d_j mu`` at ``t * approach``.

    Returns ``(limit, error)``; the error is ``inf`` when the sequence does
    not settle (for instance when it grows like ``1/t``).
    """
    if not (0 <= i < 3 and 0 <= j < 3):
        raise DomainError("indices must be 0, 1 or 2")
    d = _directional(mu, [(i, j)], approach, probe_radii() if radii is None else radii, center)[0]
    return d.limit, (float("inf") if d.inconclusive else d.error)


@dataclass(frozen=True)
class BoundednessScan:
    sup: float
    refined_sup: float
    growth: float
    bounded: bool

    def to_dict(self) -> dict:
        return {"sup": self.sup, "refined_sup": self.refined_sup, "growth": self.growth, "bounded": self.bounded}


def _sup(mu, radii, directions, center):
    pairs = [(i, j) for i in range(3) for j in range(i, 3)]
    pts = (np.asarray(center, float) + radii[:, None, None] * directions[None]).reshape(-1, 3)
    steps = np.repeat(radii / 4, len(directions))
    q, floor = _second_differences(mu, pts, steps, pairs)
    return float(np.maximum(np.abs(q) - floor, 0.0).max())


def boundedness_scan(mu, radii=None, directions=None, center=(0.0, 0.0, 0.0)) -> BoundednessScan:
    """Largest second-difference quotient over the probe set and after halving the radii.

    Quotients within round-off of zero count as zero.  A ratio
    ``refined / sup > 1.5`` flags possible unboundedness.
    """
    r = _check_radii(probe_radii() if radii is None else radii)
    dirs = scan_directions() if directions is None else np.asarray(directions, float)
    if len(r) < 8 or len(dirs) < 26:
        raise DomainError("boundedness scan needs >= 26 directions and >= 8 radii")
    dirs = dirs / np.linalg.norm(dirs, axis=1, keepdims=True)
    s1 = _sup(mu, r, dirs, center)
    s2 = _sup(mu, r / 2, dirs, center)
    growth = 1.0 if s1 == 0 and s2 == 0 else (np.inf if s1 == 0 else s2 / s1)
    return BoundednessScan(s1, s2, float(growth), bool(growth <= GROWTH_LIMIT))


@dataclass(frozen=True)
class RegularityVerdict:
    target: str
    limits: dict
    scan: BoundednessScan
    verdict: str
    evidence: dict = field(default_factory=dict)

    @property
    def sup(self) -> float:
        return self.scan.sup

    def to_dict(self) -> dict:
        return {
            "target": self.target,
            "verdict": self.verdict,
            "boundedness": self.scan.to_dict(),
            "limits": {k: {"limit": v.limit, "error": v.error, "inconclusive": v.inconclusive}
                       for k, v in self.limits.items()},
            "evidence": self.evidence,
        }


def classify(mu, target: str = "mu", radii=None, directions=None, pairs=None,
             center=(0.0, 0.0, 0.0), scan_radii=None, scan_dirs=None) -> RegularityVerdict:
    """Run both probes on ``mu`` and apply the verdict rule.

    ``C11-not-C2`` needs bounded second differences and a pair of approach
    directions whose limits of the same ``d_i d_j`` differ by more than
    ``5 x`` their combined error (and by more than ``1e-6`` of the second
    derivative scale, so extrapolation noise alone never qualifies).
    """
    r = probe_radii() if radii is None else radii
    dirs = approach_directions() if directions is None else np.asarray(directions, float)
    pairs = [(i, j) for i in range(3) for j in range(i, 3)] if pairs is None else list(pairs)
    scan = boundedness_scan(mu, scan_radii if scan_radii is not None else r, scan_dirs, center)

    by_pair = {p: [] for p in pairs}
    limits = {}
    for a in dirs:
        for d in _directional(mu, pairs, a, r, center):
            by_pair[(d.i, d.j)].append(d)
            limits[d.key()] = d

    conclusive = [d for d in limits.values() if not d.inconclusive]
    scale = max([abs(d.limit) for d in conclusive] + [scan.sup, 0.0])
    best = None
    for p, ds in by_pair.items():
        ds = [d for d in ds if not d.inconclusive]
        for a, b in itertools.combinations(ds, 2):
            diff = abs(a.limit - b.limit)
            sigma = np.hypot(a.error, b.error)
            if diff > SEPARATION * sigma and diff > 1e-6 * scale:
                ratio = diff / sigma if sigma > 0 else np.inf
                if best is None or ratio > best[0]:
                    best = (ratio, a, b, diff, sigma)

    evidence = {}
    if best is not None:
        _, a, b, diff, sigma = best
        evidence = {"pair": [a.i + 1, a.j + 1], "approach_a": list(a.approach), "approach_b": list(b.approach),
                    "limit_a": a.limit, "limit_b": b.limit, "difference": diff, "sigma": float(sigma)}
    any_inconclusive = len(conclusive) < len(limits)
    if best is not None:
        verdict = "C11-not-C2" if scan.bounded else "inconclusive"
    elif scan.bounded and not any_inconclusive:
        verdict = "C2-compatible"
    else:
        verdict = "inconclusive"
    return RegularityVerdict(target, limits, scan, verdict, evidence)
