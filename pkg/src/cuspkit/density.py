"""One-electron densities, their gradients and the inhomogeneity ``h_j``.

For electron ``j`` placed at ``x`` the engine integrates over the remaining
``N - 1`` electrons:

    rho_j(x)      = int psi^2
    grad rho_j(x) = 2 int psi grad_j psi
    h_j(x)        = J1 - J2 + J3 - E rho_j(x)
    J1 = sum_i int |grad_i psi|^2
    J2 = sum_{i != j} sum_k int Z_k / |x_i - R_k| psi^2
    J3 = sum_{i != j} int psi^2 / |x - x_i| + sum_{i < l; i, l != j} int psi^2 / |x_i - x_l|

Three schemes are available: ``closed-form`` (one-electron models, or models
carrying a density handle), ``tensor-quadrature`` (N <= 2; Gauss-Laguerre x
Lebedev product grid around the anchor nucleus) and ``monte-carlo``
(importance sampling with exponential proposals centred on the nuclei).
Monte Carlo output is a pure function of ``(seed, samples, point index)``.
"""

from __future__ import annotations

import warnings
from dataclasses import dataclass, field, replace

import numpy as np
from scipy.integrate import lebedev_rule

from .core import WavefunctionModel
from .errors import EvaluationError, SchemeError, SingularPointError

SCHEMES = ("closed-form", "tensor-quadrature", "monte-carlo")
SINGULAR_RADIUS = 1e-12
_CHUNK = 1 << 17


@dataclass(frozen=True)
class DensityField:
    model: WavefunctionModel
    electron: int = 0
    scheme: str = "closed-form"
    samples: int = 100_000
    seed: int = 0
    radial_order: int = 64
    angular_degree: int = 29
    anchor: int = 0
    radial_scale: float | None = None
    proposal_rate: float = 0.5

    def __post_init__(self):
        n = self.model.n_electrons
        if self.scheme not in SCHEMES:
            raise SchemeError(f"unknown scheme {self.scheme!r}")
        if not 0 <= self.electron < n:
            raise SchemeError(f"electron index {self.electron} out of range for N={n}")
        if self.scheme == "tensor-quadrature" and n > 2:
            raise SchemeError("tensor quadrature supports N <= 2 only")
        if self.scheme == "closed-form" and n > 1 and self.model.density is None:
            raise SchemeError("closed-form scheme needs N = 1 or a model density handle")
        if self.scheme == "monte-carlo" and self.samples < 2:
            raise SchemeError("Monte Carlo needs at least two samples")

    @property
    def exact(self) -> bool:
        return self.model.n_electrons == 1 or self.scheme == "closed-form"


@dataclass(frozen=True)
class HFunction:
    J1: float
    J2: float
    J3: float
    energy: float
    rho: float
    errors: dict = field(default_factory=dict)
    warnings: tuple = ()

    @property
    def h(self) -> float:
        return self.J1 - self.J2 + self.J3 - self.energy * self.rho

    @property
    def error(self) -> float:
        e = self.errors
        return float(np.sqrt(sum(e.get(k, 0.0) ** 2 for k in ("J1", "J2", "J3"))
                             + (self.energy * e.get("rho", 0.0)) ** 2))


# --------------------------------------------------------------------------- integrands

def _insert(field: DensityField, x, rest):
    """Configurations ``(S, N, 3)`` with electron ``j`` at ``x``."""
    S = rest.shape[0]
    x = np.broadcast_to(np.asarray(x, dtype=float), (S, 3))
    return np.concatenate([rest[:, : field.electron], x[:, None], rest[:, field.electron:]], axis=1)


def _integrand(field: DensityField, cfg, what):
    m = field.model
    what = (what,) if isinstance(what, str) else what
    psi = np.asarray(m.value(cfg))
    cols = []
    if "rho" in what:
        cols.append((psi * psi)[:, None])
    if "grad" in what:
        g = np.asarray(m.gradient(cfg))[:, field.electron]
        cols.append(2 * psi[:, None] * g)
    if "h" in what:
        grad = np.asarray(m.gradient(cfg))
        p2 = psi * psi
        j1 = np.sum(grad * grad, axis=(1, 2))
        j2 = np.zeros_like(p2)
        j3 = np.zeros_like(p2)
        others = [i for i in range(m.n_electrons) if i != field.electron]
        x = cfg[:, field.electron]
        for a, i in enumerate(others):
            d = np.linalg.norm(cfg[:, i, None, :] - m.frame.positions, axis=-1)
            j2 += (m.frame.charges / d).sum(axis=1) * p2
            j3 += p2 / np.linalg.norm(x - cfg[:, i], axis=1)
            for l in others[a + 1:]:
                j3 += p2 / np.linalg.norm(cfg[:, i] - cfg[:, l], axis=1)
        cols.append(np.stack([j1, j2, j3], axis=1))
    out = np.concatenate(cols, axis=1)
    if not np.all(np.isfinite(out)):
        raise EvaluationError(f"non-finite integrand for model {m.name!r}")
    return out


def _singular_mask(field: DensityField, x, rest):
    """Samples closer than :data:`SINGULAR_RADIUS` to a Coulomb singularity."""
    pos = field.model.frame.positions
    bad = np.zeros(rest.shape[0], dtype=bool)
    for i in range(rest.shape[1]):
        y = rest[:, i]
        bad |= np.linalg.norm(y[:, None] - pos, axis=-1).min(axis=1) < SINGULAR_RADIUS
        bad |= np.linalg.norm(y - x, axis=1) < SINGULAR_RADIUS
        for l in range(i + 1, rest.shape[1]):
            bad |= np.linalg.norm(y - rest[:, l], axis=1) < SINGULAR_RADIUS
    return bad


# --------------------------------------------------------------------------- schemes

def _tensor_nodes(field: DensityField, order, degree):
    t, wt = np.polynomial.laguerre.laggauss(order)
    frame = field.model.frame
    s = field.radial_scale or float(frame.charges[field.anchor])
    r = t / s
    wr = wt * np.exp(t) * r * r / s
    xyz, wa = lebedev_rule(degree)
    pts = frame.positions[field.anchor] + (r[:, None, None] * xyz.T[None]).reshape(-1, 3)
    return pts[:, None, :], (wr[:, None] * wa[None]).reshape(-1)


def _tensor(field, x, what):
    lower = max(5, field.angular_degree - 6)
    results = []
    for order, degree in ((field.radial_order, field.angular_degree),
                          (max(8, (3 * field.radial_order) // 4), lower)):
        rest, w = _tensor_nodes(field, order, degree)
        keep = ~_singular_mask(field, x, rest)
        vals = _integrand(field, _insert(field, x, rest[keep]), what)
        results.append(vals.T @ w[keep])
    return results[0], np.abs(results[0] - results[1])


def _proposal(field: DensityField, rng, size):
    frame = field.model.frame
    n = field.model.n_electrons - 1
    pi = frame.charges / frame.charges.sum()
    lam = field.proposal_rate * frame.charges
    comp = rng.choice(len(pi), p=pi, size=(size, n))
    rad = rng.gamma(3.0, 1.0 / lam[comp])
    u = rng.normal(size=(size, n, 3))
    u /= np.linalg.norm(u, axis=-1, keepdims=True)
    y = frame.positions[comp] + rad[..., None] * u
    d = np.linalg.norm(y[:, :, None, :] - frame.positions, axis=-1)
    q = (pi * lam ** 3 / (8 * np.pi) * np.exp(-lam * d)).sum(axis=-1)
    return y, np.prod(q, axis=1)


def _monte_carlo(field, x, what, index):
    rng = np.random.default_rng(np.random.SeedSequence([field.seed, index]))
    total = None
    total_sq = None
    left = field.samples
    rejected = 0
    while left > 0:
        size = min(_CHUNK, left)
        left -= size
        rest, q = _proposal(field, rng, size)
        bad = _singular_mask(field, x, rest)
        rejected += int(bad.sum())
        c = np.zeros((size, _width(what)))
        if (~bad).any():
            c[~bad] = _integrand(field, _insert(field, x, rest[~bad]), what) / q[~bad, None]
        s1, s2 = c.sum(axis=0), (c * c).sum(axis=0)
        total = s1 if total is None else total + s1
        total_sq = s2 if total_sq is None else total_sq + s2
    S = field.samples
    mean = total / S
    var = np.maximum(total_sq / S - mean * mean, 0.0) * S / (S - 1)
    return mean, np.sqrt(var / S)


def _width(what):
    return {"rho": 1, "grad": 3, "h": 3}[what] if isinstance(what, str) else sum(_width(w) for w in what)


def _integrate(field: DensityField, x, what, index=0):
    x = np.asarray(x, dtype=float).reshape(3)
    if field.model.n_electrons == 1:
        vals = _integrand(field, x[None, None, :], what)[0]
        return vals, np.zeros_like(vals)
    if field.scheme == "closed-form":
        if what != "rho":
            raise SchemeError("closed-form scheme only provides the density for N > 1")
        v = np.atleast_1d(np.asarray(field.model.density(x), dtype=float))
        return v, np.zeros_like(v)
    if field.scheme == "tensor-quadrature":
        return _tensor(field, x, what)
    return _monte_carlo(field, x, what, index)


# --------------------------------------------------------------------------- public operations

def density(field: DensityField, x, index: int = 0):
    """``(rho_j(x), error)``; the error is 0 for closed forms."""
    v, e = _integrate(field, x, "rho", index)
    return float(max(v[0], 0.0)), float(e[0])


def density_gradient(field: DensityField, x, index: int = 0):
    """``(grad rho_j(x), per-component error)``."""
    if field.model.n_electrons == 1:
        _check_off_nucleus(field, x, allow_smooth=True)
    v, e = _integrate(field, x, "grad", index)
    return v, e


def _check_off_nucleus(field, x, allow_smooth=False):
    d = np.linalg.norm(field.model.frame.positions - np.asarray(x, dtype=float), axis=1)
    if np.any(d == 0):
        if allow_smooth:
            try:
                field.model.gradient(np.asarray(x, dtype=float).reshape(1, 1, 3))
                return
            except SingularPointError:
                pass
        raise SingularPointError(f"evaluation at nucleus position {np.asarray(x).tolist()}")


def h_function(field: DensityField, x, index: int = 0, tolerance: float | None = None) -> HFunction:
    """Evaluate ``J1, J2, J3`` and ``h_j`` at ``x`` (not at a nucleus)."""
    _check_off_nucleus(field, x)
    if field.model.n_electrons > 1 and field.scheme == "closed-form":
        raise SchemeError("h requires a quadrature scheme for N > 1")
    v, e = _integrate(field, x, ("rho", "h"), index)
    notes = []
    if tolerance is not None and np.sqrt(np.sum(e[1:] ** 2)) > tolerance:
        notes.append(f"precision: J error {np.sqrt(np.sum(e[1:] ** 2)):.3e} above tolerance {tolerance:.3e}")
    return HFunction(
        J1=float(v[1]), J2=float(v[2]), J3=float(v[3]),
        energy=field.model.energy, rho=float(v[0]),
        errors={"rho": float(e[0]), "J1": float(e[1]), "J2": float(e[2]), "J3": float(e[3])},
        warnings=tuple(notes),
    )


def h_total(field: DensityField, x, index: int = 0) -> tuple:
    """``(h, error)`` with ``h = sum_j h_j``; electrons use independent substreams."""
    n = field.model.n_electrons
    parts = [h_function(replace(field, electron=j), x, index * n + j) for j in range(n)]
    return float(sum(p.h for p in parts)), float(np.sqrt(sum(p.error ** 2 for p in parts)))


def evaluate(field: DensityField, points):
    """Batch densities ``(values, errors)`` for points ``(n, 3)``; MC substream = row index."""
    pts = np.asarray(points, dtype=float).reshape(-1, 3)
    if field.model.n_electrons == 1:
        v = np.asarray(field.model.value(pts[:, None, :]))
        return v * v, np.zeros(len(pts))
    if field.scheme == "closed-form":
        return np.asarray(field.model.density(pts), dtype=float), np.zeros(len(pts))
    out = np.array([density(field, p, i) for i, p in enumerate(pts)])
    return out[:, 0], out[:, 1]


def h_values(field: DensityField, points):
    """Batch ``h_j`` values and errors for points ``(n, 3)``."""
    pts = np.asarray(points, dtype=float).reshape(-1, 3)
    m = field.model
    if m.n_electrons == 1:
        if np.any(np.linalg.norm(pts[:, None] - m.frame.positions, axis=-1) == 0):
            raise SingularPointError("h evaluated at a nucleus")
        c = pts[:, None, :]
        psi = np.asarray(m.value(c))
        g = np.asarray(m.gradient(c))[:, 0]
        return np.sum(g * g, axis=1) - m.energy * psi * psi, np.zeros(len(pts))
    hs = [h_function(field, p, i) for i, p in enumerate(pts)]
    return np.array([h.h for h in hs]), np.array([h.error for h in hs])


def density_handle(field: DensityField):
    """Vectorized ``rho_j`` handle (values only)."""
    def rho(x):
        x = np.asarray(x, dtype=float)
        v, _ = evaluate(field, x.reshape(-1, 3))
        return v.reshape(x.shape[:-1])
    return rho


def pde_residual(field: DensityField, x, step: float = 1e-3, index: int = 0) -> float:
    """``-Delta rho_j - 2 sum_k Z_k/|x - R_k| rho_j + 2 h_j`` at ``x``.

    The Laplacian uses the 7-point stencil at ``step`` and ``step/2`` with one
    Richardson step.  Near a nucleus the step is capped at a sixteenth of the
    nuclear distance; a :class:`UserWarning` reports the step actually used.
    """
    x = np.asarray(x, dtype=float).reshape(3)
    frame = field.model.frame
    d = np.linalg.norm(frame.positions - x, axis=1)
    if np.any(d == 0):
        raise SingularPointError("PDE residual requested at a nucleus")
    h = step
    if h > d.min() / 16:
        h = d.min() / 16
        warnings.warn(f"stencil step reduced to {h:.3e} near a nucleus", stacklevel=2)

    def lap(s):
        pts = [x]
        for a in range(3):
            e = np.zeros(3)
            e[a] = s
            pts += [x + e, x - e]
        if field.model.n_electrons == 1 or field.scheme == "closed-form":
            v, _ = evaluate(field, np.array(pts))
        else:
            v = np.array([density(field, p, index)[0] for p in pts])
        return (v[1:].sum() - 6 * v[0]) / (s * s), v[0]

    l1, rho = lap(h)
    l2, _ = lap(h / 2)
    laplacian = (4 * l2 - l1) / 3
    hf = h_function(field, x, index)
    return float(-laplacian - 2 * np.sum(frame.charges / d) * rho + 2 * hf.h)
