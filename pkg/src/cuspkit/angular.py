"""Sphere quadrature, real spherical harmonics and small-sphere moment fits.

Real spherical harmonics use the orthonormal convention with index
``idx = l*l + l + m`` (``m = -l..l``):

    ======  =====================================
    m > 0   sqrt(2) (-1)^m Re Y_l^m
    m = 0   Y_l^0
    m < 0   sqrt(2) (-1)^m Im Y_l^|m|
    ======  =====================================

so that for ``l = 1`` the order ``m = -1, 0, 1`` corresponds to ``y, z, x``.
All integrals over the sphere use total solid angle ``4 pi`` (integral, not
mean).
"""

from __future__ import annotations

import warnings
from dataclasses import dataclass
from functools import lru_cache

import numpy as np
from scipy.integrate import lebedev_rule
from scipy.special import sph_harm_y

from .core import RadialGrid, log_grid
from .errors import ConfigurationError
from .fitting import quadratic_expansion

SUPPORTED_DEGREES = (5, 11, 17, 23, 29)
DEFAULT_LMAX = 8


def moment_grid() -> RadialGrid:
    """Default radii for small-sphere moment fits."""
    return log_grid(1e-4, 1e-2, 24)


@dataclass(frozen=True, eq=False)
class SphereRule:
    nodes: np.ndarray
    weights: np.ndarray
    degree: int

    def __len__(self):
        return len(self.weights)

    def integrate(self, values):
        """``int_{S^2} f`` for node values of shape ``(n, ...)``."""
        return np.tensordot(self.weights, np.asarray(values, dtype=float), axes=(0, 0))


@lru_cache(maxsize=None)
def sphere_rule(degree: int) -> SphereRule:
    """Lebedev rule exact for polynomials of total degree ``<= degree``."""
    if degree not in SUPPORTED_DEGREES:
        raise ConfigurationError(f"rule degree {degree} not in {SUPPORTED_DEGREES}")
    xyz, w = lebedev_rule(degree)
    nodes = np.ascontiguousarray(xyz.T)
    nodes.setflags(write=False)
    w = np.array(w)
    w.setflags(write=False)
    return SphereRule(nodes, w, degree)


def lm_index(l: int, m: int) -> int:
    return l * l + l + m


def lm_pairs(lmax: int):
    return [(l, m) for l in range(lmax + 1) for m in range(-l, l + 1)]


def real_harmonics(lmax: int, nodes) -> np.ndarray:
    """Matrix ``(n_nodes, (lmax+1)^2)`` of real orthonormal harmonics."""
    nodes = np.asarray(nodes, dtype=float)
    theta = np.arccos(np.clip(nodes[:, 2], -1.0, 1.0))
    phi = np.arctan2(nodes[:, 1], nodes[:, 0])
    out = np.empty((len(nodes), (lmax + 1) ** 2))
    for l in range(lmax + 1):
        out[:, lm_index(l, 0)] = sph_harm_y(l, 0, theta, phi).real
        for m in range(1, l + 1):
            y = sph_harm_y(l, m, theta, phi)
            out[:, lm_index(l, m)] = np.sqrt(2) * (-1) ** m * y.real
            out[:, lm_index(l, -m)] = np.sqrt(2) * (-1) ** m * y.imag
    return out


@lru_cache(maxsize=None)
def _harmonics_on(degree: int, lmax: int):
    Y = real_harmonics(lmax, sphere_rule(degree).nodes)
    Y.setflags(write=False)
    return Y


@dataclass(frozen=True, eq=False)
class AngularField:
    """Values of a function on the nodes of ``rule`` (at radius ``radius``)."""

    rule: SphereRule
    values: np.ndarray
    radius: float = 0.0

    def coefficients(self, lmax: int = DEFAULT_LMAX) -> np.ndarray:
        return harmonic_coefficients(self, lmax)

    def norm(self) -> float:
        return float(np.sqrt(self.rule.integrate(self.values ** 2)))

    def at(self, directions, lmax: int = DEFAULT_LMAX) -> np.ndarray:
        """Band-limited interpolation to arbitrary unit vectors ``(n, 3)``."""
        d = np.atleast_2d(np.asarray(directions, dtype=float))
        d = d / np.linalg.norm(d, axis=1, keepdims=True)
        return real_harmonics(lmax, d) @ self.coefficients(lmax)


def harmonic_coefficients(field: AngularField, lmax: int = DEFAULT_LMAX) -> np.ndarray:
    """Real-harmonic coefficients ``c_lm = int f Y_lm`` up to ``lmax``."""
    if field.rule.degree < 2 * lmax:
        raise ConfigurationError(
            f"rule degree {field.rule.degree} aliases harmonics up to l={lmax} (need >= {2 * lmax})"
        )
    Y = _harmonics_on(field.rule.degree, lmax)
    return (field.rule.weights * np.asarray(field.values, dtype=float)) @ Y


def synthesize(rule: SphereRule, coefficients) -> np.ndarray:
    c = np.asarray(coefficients, dtype=float)
    lmax = int(round(np.sqrt(len(c)))) - 1
    return _harmonics_on(rule.degree, lmax) @ c


def degree_power(coefficients) -> np.ndarray:
    """Sum of squared coefficients per degree ``l``."""
    c = np.asarray(coefficients, dtype=float)
    lmax = int(round(np.sqrt(len(c)))) - 1
    return np.array([np.sum(c[l * l:(l + 1) ** 2] ** 2) for l in range(lmax + 1)])


def apply_L2(field: AngularField, lmax: int = DEFAULT_LMAX) -> AngularField:
    """Angular momentum operator ``L^2`` (eigenvalue ``l(l+1)`` on degree ``l``)."""
    c = harmonic_coefficients(field, lmax)
    ll = np.array([l * (l + 1) for l, _ in lm_pairs(lmax)], dtype=float)
    return AngularField(field.rule, synthesize(field.rule, ll * c), field.radius)


def _values(source, pts):
    if hasattr(source, "model"):
        from .density import evaluate

        return evaluate(source, pts)
    v = np.asarray(source(pts), dtype=float)
    return v, np.zeros_like(v)


def sample_field(source, rule: SphereRule, r: float, center=(0.0, 0.0, 0.0)) -> AngularField:
    pts = np.asarray(center, dtype=float) + r * rule.nodes
    return AngularField(rule, _values(source, pts)[0], r)


def spherical_average(source, rule: SphereRule, r: float, center=(0.0, 0.0, 0.0), with_error=False):
    """``int_{S^2} rho(c + r omega) d omega`` (total weight ``4 pi``)."""
    pts = np.asarray(center, dtype=float) + r * rule.nodes
    v, e = _values(source, pts)
    total = float(rule.integrate(v))
    if with_error:
        return total, float(np.sqrt(np.sum((rule.weights * e) ** 2)))
    return total


def _samples(source, rule, grid, center):
    """Values ``(n_radii, n_nodes)`` on the small spheres of ``grid``."""
    c = np.asarray(center, dtype=float)
    pts = c + grid.radii[:, None, None] * rule.nodes[None]
    v, _ = _values(source, pts.reshape(-1, 3))
    return v.reshape(len(grid), len(rule))


@dataclass(frozen=True)
class MomentFit:
    """An extrapolated small-sphere moment with its uncertainty."""

    value: np.ndarray
    uncertainty: np.ndarray
    inconclusive: bool = False
    note: str = ""


_EPS = np.finfo(float).eps


def _l1_moment(source, rule, grid, center):
    """ℓ=1 moments ``(n_radii, 3)`` and their round-off level."""
    vals = _samples(source, rule, grid, center)
    m = 3.0 / (4 * np.pi) * (vals * rule.weights) @ rule.nodes / grid.radii[:, None]
    noise = 100 * _EPS * np.abs(vals).max(axis=1) / grid.radii
    return m, noise


def fit_gradient_eta(eta, rule: SphereRule | None = None, grid: RadialGrid | None = None,
                     center=(0.0, 0.0, 0.0)) -> MomentFit:
    """``grad eta(0)`` as the ``r -> 0`` limit of ``3/(4 pi r) int eta(r w) w dw``."""
    rule = rule or sphere_rule(11)
    grid = grid or moment_grid()
    if rule.degree < 3:
        raise ConfigurationError("gradient fit needs a rule of degree >= 3")
    m, noise = _l1_moment(eta, rule, grid, center)
    ex = quadratic_expansion(grid.radii, m, noise=noise)
    return MomentFit(ex.coefficients[0], ex.uncertainties[0], not ex.consistent,
                     "" if ex.consistent else "l=1 moments do not settle")


def fit_C_vector(mu, rule: SphereRule | None = None, grid: RadialGrid | None = None,
                 center=(0.0, 0.0, 0.0)) -> MomentFit:
    """The vector ``C`` of the non-smooth term ``r^2 (C . omega)`` of ``mu``.

    With ``m(r) = 3/(4 pi r) int mu(r w) w dw = grad mu(0) + r C + o(r)`` the
    same moment sequence yields ``grad mu(0)`` (constant term) and ``C``
    (linear term); the ``l = 0`` part of ``mu`` drops out of ``m`` exactly.
    """
    rule = rule or sphere_rule(11)
    grid = grid or moment_grid()
    m, noise = _l1_moment(mu, rule, grid, center)
    ex = quadratic_expansion(grid.radii, m, noise=noise)
    return MomentFit(ex.coefficients[1], ex.uncertainties[1], not ex.consistent,
                     "" if ex.consistent else "l=1 moment not converging")


def fit_hessian_chi(chi, grid: RadialGrid | None = None, rule: SphereRule | None = None,
                    center=(0.0, 0.0, 0.0)) -> MomentFit:
    """``D^2 chi(0)`` from the ``l in {0, 2}`` moments of ``chi`` on small spheres.

    ``M(r) = 15/(4 pi) int chi(r w) w_i w_j dw = 5 chi(0) I + r^2 M2 + ...``
    and for the quadratic form ``q(w) = w.A w / 2`` one has
    ``M2 = tr(A)/2 I + A``, hence ``A = M2 - tr(M2)/5 I``.
    """
    rule = rule or sphere_rule(11)
    grid = grid or moment_grid()
    vals = _samples(chi, rule, grid, center)
    outer = rule.nodes[:, :, None] * rule.nodes[:, None, :]
    M = 15.0 / (4 * np.pi) * np.einsum("rn,n,nij->rij", vals, rule.weights, outer)
    ex = quadratic_expansion(grid.radii, M, noise=100 * _EPS * 15 * np.abs(vals).max(axis=1))
    M2 = ex.coefficients[2]
    hess = M2 - np.trace(M2) / 5 * np.eye(3)
    asym = np.abs(hess - hess.T).max()
    if asym > 1e-8:
        warnings.warn(f"Hessian asymmetry {asym:.2e} before symmetrization", stacklevel=2)
    hess = (hess + hess.T) / 2
    unc = ex.uncertainties[2] + np.trace(ex.uncertainties[2]) / 5 * np.eye(3)
    return MomentFit(hess, unc, not ex.consistent, "" if ex.consistent else "l=0,2 moments not converging")


@dataclass(frozen=True)
class L2Limit:
    """Per-node ``lim (L^2 rho)(r, w)/r^2`` and the first-order diagnostic ``lim (L^2 rho)/r``."""

    limit: AngularField
    first_order: AngularField
    uncertainty: np.ndarray
    inconclusive: bool


def l2_limit(source, rule: SphereRule | None = None, grid: RadialGrid | None = None,
             center=(0.0, 0.0, 0.0), lmax: int = DEFAULT_LMAX, rtol: float = 1e-6) -> L2Limit:
    """Extrapolate ``(L^2 rho)(r, w)/r^2`` to ``r = 0`` node by node.

    The limit exists only if ``(L^2 rho)/r -> 0``; otherwise the result is
    flagged inconclusive and ``first_order`` carries the nonzero limit.
    """
    rule = rule or sphere_rule(17)
    grid = grid or log_grid(1e-4, 5e-2, 24)
    vals = _samples(source, rule, grid, center)
    lvals = np.array([apply_L2(AngularField(rule, v, r), lmax).values for v, r in zip(vals, grid.radii)])
    noise = 100 * _EPS * lmax * (lmax + 1) * np.abs(vals).max(axis=1)
    ex = quadratic_expansion(grid.radii, lvals, noise=noise)
    scale = max(np.abs(vals).max(), np.abs(ex.coefficients[2]).max(), 1e-300)
    first = ex.coefficients[1]
    bad = bool(np.abs(first).max() > rtol * scale) or not ex.consistent
    return L2Limit(
        AngularField(rule, ex.coefficients[2]),
        AngularField(rule, first),
        ex.uncertainties[2],
        bad,
    )


@dataclass(frozen=True)
class SmoothParts:
    grad_eta: np.ndarray
    C: np.ndarray
    hessian_chi: np.ndarray
    diagnostics: dict


def smooth_parts(rho, Z: float, rule: SphereRule | None = None, grid: RadialGrid | None = None,
                 center=(0.0, 0.0, 0.0)) -> SmoothParts:
    """``grad eta(0)``, ``C`` and ``D^2 chi(0)`` for ``eta = e^{Z|x-c|} rho`` and
    ``chi = eta - |x-c|^2 (C . omega)``.

    ``rho`` is a vectorized handle.  For molecules ``eta`` uses the anchor
    charge only; the remaining cusp factors are smooth near the anchor.
    """
    c = np.asarray(center, dtype=float)

    def eta(x):
        return np.exp(Z * np.linalg.norm(x - c, axis=-1)) * rho(x)

    g = fit_gradient_eta(eta, rule, grid, c)
    C = fit_C_vector(eta, rule, grid, c)

    def chi(x):
        d = x - c
        return eta(x) - np.linalg.norm(d, axis=-1) * (d @ C.value)

    H = fit_hessian_chi(chi, grid, rule, c)
    diag = {
        "grad_eta_uncertainty": g.uncertainty.tolist(),
        "C_uncertainty": C.uncertainty.tolist(),
        "hessian_uncertainty": H.uncertainty.tolist(),
        "inconclusive": bool(g.inconclusive or C.inconclusive or H.inconclusive),
    }
    return SmoothParts(g.value, C.value, H.value, diag)
