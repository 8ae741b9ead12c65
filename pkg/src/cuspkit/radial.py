"""Radial profiles at a nucleus, cusp expansions and the cusp identity checks.

Along a fixed direction ``w`` the density has the expansion

    rho(r, w) = rho(0) + r phi1(w) + r^2 phi2(w) + O(r^(2+alpha)),

so ``rho'(0, w) = phi1(w)`` and ``rho''(0, w) = 2 phi2(w)``.  Spherical
averages use the integral convention ``rho~(r) = int_{S^2} rho(r w) dw``
(total solid angle ``4 pi``, not the mean).

Every check returns a :class:`CheckResult` whose residual is ``lhs - rhs``;
the pass test compares ``|residual|`` with ``tolerance * scale`` where the
scale is the largest magnitude among the terms entering the identity.
"""

from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np

from .angular import AngularField, SphereRule, _values, degree_power, sphere_rule
from .core import NuclearFrame, RadialGrid, log_grid, make_direction
from .errors import ConfigurationError, FitError, HypothesisError
from .fitting import quadratic_expansion

TOLERANCES = {
    "kato_cusp": 1e-6,
    "first_order_cusp": 1e-6,
    "second_order_cusp": 1e-4,
    "cusp0_first": 1e-6,
    "cusp0_second": 1e-4,
    "marias": 1e-4,
    "averaged_second": 1e-5,
}
RESIDUAL_CEILING = 1e-2


def default_grid(frame: NuclearFrame | None = None, anchor: int = 0) -> RadialGrid:
    return log_grid(1e-4, 5e-2, 24, anchor=anchor, frame=frame)


@dataclass(frozen=True, eq=False)
class RadialProfile:
    """Samples of ``rho(r w)`` (or of ``rho~(r)`` when ``direction`` is None)."""

    direction: np.ndarray | None
    grid: RadialGrid
    values: np.ndarray
    errors: np.ndarray
    charge: float
    center: np.ndarray = field(default_factory=lambda: np.zeros(3))

    def __post_init__(self):
        if not np.all(np.isfinite(self.values)):
            raise FitError("profile contains non-finite values")

    @property
    def radii(self) -> np.ndarray:
        return self.grid.radii

    @property
    def averaged(self) -> bool:
        return self.direction is None

    @property
    def eta(self) -> np.ndarray:
        """``e^{Z r} rho(r, w)`` with the anchor charge."""
        return np.exp(self.charge * self.radii) * self.values

    def scaled(self, c: float) -> "RadialProfile":
        return RadialProfile(self.direction, self.grid, c * self.values, abs(c) * self.errors,
                             self.charge, self.center)


def _anchor(frame: NuclearFrame, nucleus: int, grid: RadialGrid | None):
    if not 0 <= nucleus < len(frame):
        raise ConfigurationError(f"nucleus {nucleus} not in frame")
    grid = default_grid() if grid is None else grid
    RadialGrid(grid.radii, nucleus).check(frame)
    return grid, frame.positions[nucleus], float(frame.charges[nucleus])


def radial_profile(source, frame: NuclearFrame, nucleus: int, direction,
                   grid: RadialGrid | None = None) -> RadialProfile:
    """Sample ``rho`` along ``R_nucleus + r w``.

    ``source`` is a :class:`~cuspkit.density.DensityField` or a vectorized
    handle ``(..., 3) -> (...)``.
    """
    grid, c, Z = _anchor(frame, nucleus, grid)
    w = make_direction(direction)
    v, e = _values(source, c + grid.radii[:, None] * w)
    return RadialProfile(w, grid, np.asarray(v, float), np.asarray(e, float), Z, c)


def averaged_profile(source, frame: NuclearFrame, nucleus: int = 0, rule: SphereRule | None = None,
                     grid: RadialGrid | None = None) -> RadialProfile:
    """Spherical averages ``rho~(r)`` on the grid with propagated errors."""
    grid, c, Z = _anchor(frame, nucleus, grid)
    rule = rule or sphere_rule(17)
    pts = c + grid.radii[:, None, None] * rule.nodes[None]
    v, e = _values(source, pts.reshape(-1, 3))
    v = np.asarray(v, float).reshape(len(grid), len(rule))
    e = np.asarray(e, float).reshape(len(grid), len(rule))
    return RadialProfile(None, grid, v @ rule.weights, np.sqrt((e ** 2) @ rule.weights ** 2), Z, c)


def reference_density(avg: RadialProfile) -> float:
    """Largest spherical mean ``rho~/(4 pi)`` on the grid, a floor for check scales."""
    return float(np.abs(avg.values).max() / (4 * np.pi))


@dataclass(frozen=True)
class CuspExpansion:
    """``rho0 + phi1 r + phi2 r^2`` with uncertainties; ``phi2`` is None when withheld."""

    rho0: float
    phi1: float
    phi2: float | None
    alpha: float | None
    fit_residual: float
    uncertainties: tuple
    consistent: bool = True

    @property
    def second_derivative(self) -> float | None:
        return None if self.phi2 is None else 2 * self.phi2

    def to_dict(self) -> dict:
        return {
            "rho0": self.rho0, "phi1": self.phi1, "phi2": self.phi2, "alpha": self.alpha,
            "fit_residual": self.fit_residual, "uncertainties": list(self.uncertainties),
        }


def _precheck(grid: RadialGrid, r0: float = np.inf):
    r = grid.radii
    if len(r) < 8:
        raise ConfigurationError(f"cusp fit needs >= 8 radii, got {len(r)}")
    if r[-1] / r[0] < 10:
        raise ConfigurationError("cusp fit grid must span at least one decade")
    if r[-1] > 0.1 * min(1.0, r0):
        raise ConfigurationError(f"cusp fit grid must stay below {0.1 * min(1.0, r0):g}")


def fit_cusp_expansion(profile: RadialProfile, residual_ceiling: float = RESIDUAL_CEILING,
                       r0: float = np.inf) -> CuspExpansion:
    """Weighted fit of ``rho0 + phi1 r + phi2 r^2`` with remainder extrapolation.

    ``fit_residual`` is the relative RMS residual of the plain quadratic on
    the full grid.  ``phi2`` is withheld (None) when the window residuals do
    not decay monotonically.
    """
    _precheck(profile.grid, r0)
    err = profile.errors if np.any(profile.errors > 0) else None
    ex = quadratic_expansion(profile.radii, profile.values, errors=err)
    if ex.residual > residual_ceiling:
        raise FitError(f"fit residual {ex.residual:.3e} exceeds ceiling {residual_ceiling:.3e}", ex.condition)
    c, u = ex.coefficients, ex.uncertainties
    return CuspExpansion(
        rho0=float(c[0]), phi1=float(c[1]),
        phi2=float(c[2]) if ex.consistent else None,
        alpha=ex.alpha, fit_residual=ex.residual,
        uncertainties=(float(u[0]), float(u[1]), float(u[2])),
        consistent=ex.consistent,
    )


def differencing_estimates(profile: RadialProfile, points: int = 4) -> tuple:
    """``(rho0, rho'(0), rho''(0))`` from the cubic through the innermost samples.

    Kept as a cross-check only; the fitted expansion is the reported value.
    """
    r = profile.radii[:points]
    p = np.polynomial.polynomial.polyfit(r / r[-1], profile.values[:points], points - 1)
    return float(p[0]), float(p[1] / r[-1]), float(2 * p[2] / r[-1] ** 2)


@dataclass(frozen=True)
class CheckResult:
    identity: str
    lhs: float
    rhs: float
    residual: float
    tolerance: float
    passed: bool
    inconclusive: bool = False
    uncertainty: float = 0.0
    scale: float = 1.0
    direction: tuple | None = None
    note: str = ""

    @property
    def relative(self) -> float:
        return abs(self.residual) / self.scale if self.scale > 0 else abs(self.residual)

    def to_dict(self) -> dict:
        out = {
            "identity": self.identity, "lhs": self.lhs, "rhs": self.rhs,
            "residual": self.residual, "tolerance": self.tolerance, "pass": self.passed,
            "inconclusive": self.inconclusive, "uncertainty": self.uncertainty, "scale": self.scale,
        }
        if self.direction is not None:
            out["direction"] = list(self.direction)
        if self.note:
            out["note"] = self.note
        return out


def _result(name, lhs, rhs, unc, scale, tolerance, profile, note=""):
    tol = TOLERANCES[name] if tolerance is None else float(tolerance)
    res = float(lhs - rhs)
    scale = float(scale)
    bound = tol * scale
    inconclusive = bool(unc > bound) if scale > 0 else bool(unc > 0)
    passed = bool(abs(res) <= bound) and not inconclusive
    if inconclusive and not note:
        note = f"uncertainty {unc:.2e} exceeds tolerance band {bound:.2e}"
    w = None if profile.direction is None else tuple(float(t) for t in profile.direction)
    return CheckResult(name, float(lhs), float(rhs), res, tol, passed, inconclusive, float(unc), scale, w, note)


def _withheld(name, tolerance, profile):
    tol = TOLERANCES[name] if tolerance is None else float(tolerance)
    w = None if profile.direction is None else tuple(float(t) for t in profile.direction)
    return CheckResult(name, float("nan"), float("nan"), float("nan"), tol, False, True, float("nan"), 1.0, w,
                       "second-order coefficient withheld: residual decay not monotone")


def _scale(ex, Z, order, reference=0.0):
    """Natural size of the ``order``-th radial derivative: ``Z^k rho0`` and neighbours.

    ``reference`` is a density magnitude near the nucleus (for instance the
    largest spherical mean on the grid); it keeps the scale meaningful on rays
    where the density vanishes identically.
    """
    terms = [Z ** order * abs(ex.rho0), Z ** (order - 1) * abs(ex.phi1), Z ** order * reference]
    if ex.phi2 is not None:
        terms.append(Z ** (order - 2) * abs(2 * ex.phi2))
    return max(terms)


def check_kato_cusp(avg: RadialProfile, tolerance=None) -> CheckResult:
    """``rho~'(0) + Z rho~(0)``, normalized by ``max(rho~(0), |rho~''(0)|)``."""
    ex = fit_cusp_expansion(avg)
    Z = avg.charge
    curv = abs(2 * ex.phi2) if ex.phi2 is not None else 0.0
    scale = max(abs(ex.rho0), curv)
    unc = ex.uncertainties[1] + Z * ex.uncertainties[0]
    return _result("kato_cusp", ex.phi1, -Z * ex.rho0, unc, scale, tolerance, avg)


def check_first_order_cusp(profile: RadialProfile, grad_eta, tolerance=None, grad_eta_uncertainty=None,
                           reference: float = 0.0) -> CheckResult:
    """Fitted ``phi1(w)`` against ``-Z rho(0) + w . grad eta(0)``."""
    ex = fit_cusp_expansion(profile)
    w = profile.direction
    g = np.asarray(grad_eta, float)
    rhs = -profile.charge * ex.rho0 + float(w @ g)
    unc = ex.uncertainties[1] + profile.charge * ex.uncertainties[0]
    if grad_eta_uncertainty is not None:
        unc += float(np.abs(w) @ np.asarray(grad_eta_uncertainty, float))
    scale = max(abs(ex.phi1), abs(rhs), _scale(ex, profile.charge, 1, reference), float(np.linalg.norm(g)))
    return _result("first_order_cusp", ex.phi1, rhs, unc, scale, tolerance, profile)


def check_second_order_cusp(profile: RadialProfile, C, hessian_chi, grad_eta, tolerance=None,
                            reference: float = 0.0) -> CheckResult:
    """Fitted ``2 phi2(w)`` against ``Z^2 rho(0) + 2 w.[C - Z grad eta(0)] + w.D2chi(0) w``."""
    ex = fit_cusp_expansion(profile)
    if ex.phi2 is None:
        return _withheld("second_order_cusp", tolerance, profile)
    w, Z = profile.direction, profile.charge
    C, H, g = (np.asarray(a, float) for a in (C, hessian_chi, grad_eta))
    rhs = Z * Z * ex.rho0 + 2 * float(w @ (C - Z * g)) + float(w @ H @ w)
    lhs = 2 * ex.phi2
    unc = 2 * ex.uncertainties[2] + Z * Z * ex.uncertainties[0]
    scale = max(abs(lhs), abs(rhs), _scale(ex, Z, 2, reference),
                2 * float(np.linalg.norm(C)), 2 * Z * float(np.linalg.norm(g)), float(np.linalg.norm(H, 2)))
    return _result("second_order_cusp", lhs, rhs, unc, scale, tolerance, profile)


def _require_symmetry(symmetry, identity):
    if symmetry not in ("even", "odd"):
        raise HypothesisError(f"{identity} needs an even or odd symmetry tag, got {symmetry!r}")


def check_cusp0_first(profile: RadialProfile, symmetry: str, tolerance=None, reference: float = 0.0) -> CheckResult:
    """Fixed-direction cusp ``rho'(0, w) = -Z rho(0)`` for symmetric atomic states."""
    _require_symmetry(symmetry, "fixed-direction cusp")
    ex = fit_cusp_expansion(profile)
    rhs = -profile.charge * ex.rho0
    unc = ex.uncertainties[1] + profile.charge * ex.uncertainties[0]
    scale = max(abs(ex.phi1), abs(rhs), _scale(ex, profile.charge, 1, reference))
    return _result("cusp0_first", ex.phi1, rhs, unc, scale, tolerance, profile)


def check_cusp0_second(profile: RadialProfile, hessian_mu, symmetry: str, tolerance=None,
                       reference: float = 0.0) -> CheckResult:
    """``rho''(0, w) = Z^2 rho(0) + w . D2mu(0) w`` for symmetric atomic states."""
    _require_symmetry(symmetry, "fixed-direction second-order cusp")
    ex = fit_cusp_expansion(profile)
    if ex.phi2 is None:
        return _withheld("cusp0_second", tolerance, profile)
    w, Z = profile.direction, profile.charge
    H = np.asarray(hessian_mu, float)
    rhs = Z * Z * ex.rho0 + float(w @ H @ w)
    lhs = 2 * ex.phi2
    unc = 2 * ex.uncertainties[2] + Z * Z * ex.uncertainties[0]
    scale = max(abs(lhs), abs(rhs), _scale(ex, Z, 2, reference), float(np.linalg.norm(H, 2)))
    return _result("cusp0_second", lhs, rhs, unc, scale, tolerance, profile)


def check_marias(profile: RadialProfile, h0: float, l2_limit: float, symmetry: str,
                 tolerance=None, h0_uncertainty: float = 0.0, reference: float = 0.0) -> CheckResult:
    """``rho''(0, w)`` against ``2/3 (Z^2 rho(0) + h(0, w)) + 1/3 lim (L^2 rho)/r^2``."""
    _require_symmetry(symmetry, "the angular second-order identity")
    ex = fit_cusp_expansion(profile)
    if ex.phi2 is None:
        return _withheld("marias", tolerance, profile)
    Z = profile.charge
    lhs = 2 * ex.phi2
    rhs = 2.0 / 3.0 * (Z * Z * ex.rho0 + h0) + l2_limit / 3.0
    unc = 2 * ex.uncertainties[2] + 2.0 / 3.0 * (Z * Z * ex.uncertainties[0] + h0_uncertainty)
    scale = max(abs(lhs), abs(rhs), _scale(ex, Z, 2, reference), abs(h0), abs(l2_limit))
    return _result("marias", lhs, rhs, unc, scale, tolerance, profile)


def check_averaged_second(avg: RadialProfile, h0_avg: float, tolerance=None,
                          h0_uncertainty: float = 0.0) -> CheckResult:
    """``rho~''(0) = 2/3 (Z^2 rho~(0) + h~(0))`` together with ``rho~''(0) >= 0``."""
    ex = fit_cusp_expansion(avg)
    if ex.phi2 is None:
        return _withheld("averaged_second", tolerance, avg)
    Z = avg.charge
    lhs = 2 * ex.phi2
    rhs = 2.0 / 3.0 * (Z * Z * ex.rho0 + h0_avg)
    unc = 2 * ex.uncertainties[2] + 2.0 / 3.0 * (Z * Z * ex.uncertainties[0] + h0_uncertainty)
    scale = max(abs(lhs), abs(rhs), _scale(ex, avg.charge, 2))
    out = _result("averaged_second", lhs, rhs, unc, scale, tolerance, avg)
    if lhs < -max(unc, out.tolerance * scale):
        return CheckResult(out.identity, out.lhs, out.rhs, out.residual, out.tolerance, False, False,
                           out.uncertainty, out.scale, None, f"negative averaged second derivative {lhs:.3e}")
    return out


# --------------------------------------------------------------------------- limits of h

def _h_source(source):
    if hasattr(source, "model"):
        from .density import h_values

        return lambda pts: h_values(source, pts)
    return lambda pts: (np.asarray(source(pts), float), np.zeros(len(pts)))


def h_limit(source, frame: NuclearFrame, nucleus: int, direction, grid: RadialGrid | None = None):
    """``h(0, w) = lim h(R + r w)`` as ``r -> 0`` with its uncertainty.

    ``source`` is a DensityField (``h`` from the engine) or an ``h`` handle.
    """
    grid, c, _ = _anchor(frame, nucleus, grid)
    w = make_direction(direction)
    v, e = _h_source(source)(c + grid.radii[:, None] * w)
    ex = quadratic_expansion(grid.radii, np.asarray(v, float), errors=e if np.any(e > 0) else None)
    return float(ex.coefficients[0]), float(ex.uncertainties[0])


def averaged_h_limit(source, frame: NuclearFrame, nucleus: int = 0, rule: SphereRule | None = None,
                     grid: RadialGrid | None = None):
    """``h~(0) = lim int_{S^2} h(R + r w) dw`` with its uncertainty."""
    grid, c, _ = _anchor(frame, nucleus, grid)
    rule = rule or sphere_rule(17)
    pts = c + grid.radii[:, None, None] * rule.nodes[None]
    v, e = _h_source(source)(pts.reshape(-1, 3))
    v = np.asarray(v, float).reshape(len(grid), len(rule)) @ rule.weights
    e = np.sqrt((np.asarray(e, float).reshape(len(grid), len(rule)) ** 2) @ rule.weights ** 2)
    ex = quadratic_expansion(grid.radii, v, errors=e if np.any(e > 0) else None)
    return float(ex.coefficients[0]), float(ex.uncertainties[0])


@dataclass(frozen=True)
class ExpansionField:
    """``rho0, phi1, phi2`` on every node of a sphere rule."""

    rho0: AngularField
    phi1: AngularField
    phi2: AngularField
    uncertainties: np.ndarray
    consistent: bool


def expansion_field(source, frame: NuclearFrame, nucleus: int = 0, rule: SphereRule | None = None,
                    grid: RadialGrid | None = None) -> ExpansionField:
    """Fit the cusp expansion along all nodes of ``rule`` in one pass."""
    grid, c, _ = _anchor(frame, nucleus, grid)
    _precheck(grid)
    rule = rule or sphere_rule(17)
    pts = c + grid.radii[:, None, None] * rule.nodes[None]
    v, e = _values(source, pts.reshape(-1, 3))
    v = np.asarray(v, float).reshape(len(grid), len(rule))
    e = np.asarray(e, float).reshape(len(grid), len(rule))
    ex = quadratic_expansion(grid.radii, v, errors=e if np.any(e > 0) else None)
    return ExpansionField(
        AngularField(rule, ex.coefficients[0]), AngularField(rule, ex.coefficients[1]),
        AngularField(rule, ex.coefficients[2]), ex.uncertainties, ex.consistent,
    )


def structure_tails(fields: ExpansionField, Z: float, lmax: int = 8) -> dict:
    """Relative harmonic content of ``phi1`` above ``l = 1`` and of ``phi2`` above ``l = 2``.

    Both are normalized by the natural size of the expansion, so states whose
    ``phi1`` vanishes identically (such as 2p) are measured against ``phi2``.
    """
    n0, n1, n2 = (f.norm() for f in (fields.rho0, fields.phi1, fields.phi2))
    p1 = degree_power(fields.phi1.coefficients(lmax))
    p2 = degree_power(fields.phi2.coefficients(lmax))
    s1 = max(n1, Z * n0, 2 * n2 / Z, 1e-300)
    s2 = max(n2, Z * Z * n0, Z * n1, 1e-300)
    return {"phi1": float(np.sqrt(p1[2:].sum()) / s1), "phi2": float(np.sqrt(p2[3:].sum()) / s2)}
