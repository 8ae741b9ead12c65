"""Domain types shared by every module: nuclei, directions, radial grids, models.

Units follow the convention ``H = -Delta + V`` (no factor 1/2 on the kinetic
term).  With this convention the hydrogenic levels are ``-Z**2/4`` (1s) and
``-Z**2/16`` (n = 2), and the density obeys

    -Delta rho_j - 2 sum_k Z_k/|x - R_k| rho_j + 2 h_j = 0.

Every formula in the package uses this convention; lengths are in bohr.
"""

from __future__ import annotations

import json
from dataclasses import dataclass, field
from typing import Callable, Sequence

import numpy as np

from .errors import CuspRangeError, DomainError, GeometryError

#: Largest cusp-factor magnitude accepted before ``exp`` would overflow.
MAX_EXPONENT = 700.0

SYMMETRIES = ("none", "even", "odd")


def _frozen(a):
    a = np.array(a, dtype=float)
    a.setflags(write=False)
    return a


@dataclass(frozen=True)
class NuclearFrame:
    """Fixed nuclei with positions ``R_k`` (bohr) and charges ``Z_k > 0``."""

    positions: np.ndarray
    charges: np.ndarray

    def __post_init__(self):
        pos = np.asarray(self.positions, dtype=float).reshape(-1, 3)
        chg = np.asarray(self.charges, dtype=float).reshape(-1)
        if len(pos) == 0:
            raise GeometryError("a frame needs at least one nucleus")
        if len(pos) != len(chg):
            raise GeometryError("positions and charges differ in length")
        if not (np.all(np.isfinite(pos)) and np.all(np.isfinite(chg))):
            raise DomainError("non-finite nuclear data")
        if np.any(chg <= 0):
            raise DomainError(f"nuclear charges must be positive, got {chg.tolist()}")
        for k in range(len(pos)):
            for m in range(k):
                if np.array_equal(pos[k], pos[m]):
                    raise GeometryError(f"nuclei {m} and {k} share position {pos[k].tolist()}")
        object.__setattr__(self, "positions", _frozen(pos))
        object.__setattr__(self, "charges", _frozen(chg))

    def __len__(self):
        return len(self.charges)

    @property
    def is_atomic(self) -> bool:
        return len(self) == 1

    def r0(self, k: int) -> float:
        """Distance from nucleus ``k`` to the closest other nucleus (inf for atoms)."""
        if len(self) == 1:
            return float("inf")
        d = np.linalg.norm(self.positions - self.positions[k], axis=1)
        return float(np.min(np.delete(d, k)))

    def to_dict(self) -> dict:
        return {
            "nuclei": [
                {"position": p.tolist(), "charge": float(z)}
                for p, z in zip(self.positions, self.charges)
            ]
        }

    def to_json(self) -> str:
        return json.dumps(self.to_dict())

    @classmethod
    def from_dict(cls, doc: dict) -> "NuclearFrame":
        nuclei = doc["nuclei"]
        return make_frame([(n["position"], n["charge"]) for n in nuclei])

    @classmethod
    def from_json(cls, text: str) -> "NuclearFrame":
        return cls.from_dict(json.loads(text))


def make_frame(nuclei: Sequence[tuple]) -> NuclearFrame:
    """Build a validated frame from ``(position, charge)`` pairs.

    A bare scalar position ``0`` is accepted as shorthand for the origin.
    """
    if len(nuclei) == 0:
        raise GeometryError("a frame needs at least one nucleus")
    pos = []
    for p, _ in nuclei:
        p = np.asarray(p, dtype=float)
        pos.append(np.zeros(3) if p.ndim == 0 and p == 0 else p.reshape(3))
    return NuclearFrame(np.array(pos), np.array([z for _, z in nuclei], dtype=float))


def atom(Z: float) -> NuclearFrame:
    return make_frame([(0, Z)])


def make_direction(v) -> np.ndarray:
    """Normalize ``v`` to a unit vector."""
    v = np.asarray(v, dtype=float).reshape(3)
    n = np.linalg.norm(v)
    if not np.isfinite(n) or n == 0:
        raise DomainError(f"cannot normalize {v.tolist()}")
    return v / n


def probe_directions() -> np.ndarray:
    """The 14 default probe directions: the six axes and eight cube diagonals."""
    axes = np.vstack([np.eye(3), -np.eye(3)])
    signs = np.array([[a, b, c] for a in (1, -1) for b in (1, -1) for c in (1, -1)], float)
    return np.vstack([axes, signs / np.sqrt(3.0)])


@dataclass(frozen=True)
class RadialGrid:
    """Strictly increasing positive radii measured from nucleus ``anchor``."""

    radii: np.ndarray
    anchor: int = 0

    def __post_init__(self):
        r = np.asarray(self.radii, dtype=float).reshape(-1)
        if len(r) == 0 or not np.all(np.isfinite(r)):
            raise DomainError("radial grid must be a non-empty finite list")
        if r[0] <= 0:
            raise DomainError("radial grid must stay away from the nucleus (r_min > 0)")
        if np.any(np.diff(r) <= 0):
            raise DomainError("radial grid must be strictly increasing")
        object.__setattr__(self, "radii", _frozen(r))

    def __len__(self):
        return len(self.radii)

    @property
    def r_min(self) -> float:
        return float(self.radii[0])

    @property
    def r_max(self) -> float:
        return float(self.radii[-1])

    def check(self, frame: NuclearFrame) -> "RadialGrid":
        """Raise :class:`GeometryError` unless the grid lies inside ``B(R_anchor, r0)``."""
        if not 0 <= self.anchor < len(frame):
            raise GeometryError(f"anchor nucleus {self.anchor} not in frame")
        r0 = frame.r0(self.anchor)
        if self.r_max >= r0:
            raise GeometryError(f"grid reaches r={self.r_max} but r0={r0}")
        return self

    def scaled(self, factor: float) -> "RadialGrid":
        return RadialGrid(self.radii * factor, self.anchor)


def log_grid(r_min=1e-4, r_max=5e-2, n=24, anchor=0, frame=None) -> RadialGrid:
    """Log-spaced grid; validated against ``frame`` when one is given."""
    if not 0 < r_min < r_max:
        raise DomainError("need 0 < r_min < r_max")
    grid = RadialGrid(np.geomspace(r_min, r_max, n), anchor)
    if frame is not None:
        grid.check(frame)
    return grid


@dataclass(frozen=True)
class WavefunctionModel:
    """An N-electron wavefunction with energy and vectorized handles.

    ``value`` maps configurations of shape ``(..., N, 3)`` to ``(...)``;
    ``gradient`` maps them to ``(..., N, 3)``.  ``density`` is an optional
    closed-form one-electron density ``(..., 3) -> (...)`` for electron 0.
    """

    n_electrons: int
    frame: NuclearFrame
    energy: float
    value: Callable[[np.ndarray], np.ndarray]
    gradient: Callable[[np.ndarray], np.ndarray]
    symmetry: str = "none"
    density: Callable[[np.ndarray], np.ndarray] | None = None
    name: str = "model"
    meta: dict = field(default_factory=dict, compare=False)

    def __post_init__(self):
        if self.n_electrons < 1:
            raise DomainError("need at least one electron")
        if self.symmetry not in SYMMETRIES:
            raise DomainError(f"symmetry must be one of {SYMMETRIES}")

    @property
    def is_symmetric(self) -> bool:
        return self.symmetry in ("even", "odd")


def random_configurations(model: WavefunctionModel, n: int, rng, scale=2.0) -> np.ndarray:
    """Random probe configurations around the nuclei."""
    centers = model.frame.positions[rng.integers(len(model.frame), size=(n, model.n_electrons))]
    return centers + rng.normal(scale=scale, size=(n, model.n_electrons, 3))


def validate_model(model: WavefunctionModel, n_probe=16, seed=0, rtol=1e-6, step=1e-5) -> None:
    """Check gradient/value consistency and the declared inversion symmetry.

    Raises :class:`DomainError` on the first violated invariant.
    """
    rng = np.random.default_rng(seed)
    pts = random_configurations(model, n_probe, rng)
    grad = model.gradient(pts)
    fd = np.empty_like(grad)
    for i in range(model.n_electrons):
        for a in range(3):
            e = np.zeros((model.n_electrons, 3))
            e[i, a] = step
            fd[:, i, a] = (model.value(pts + e) - model.value(pts - e)) / (2 * step)
    scale = np.maximum(np.abs(grad), np.abs(fd)).max(axis=(1, 2)) + 1e-300
    err = np.abs(grad - fd).max(axis=(1, 2)) / scale
    if np.any(err > rtol):
        raise DomainError(f"gradient handle inconsistent with value (max rel err {err.max():.2e})")
    if model.is_symmetric:
        v, w = np.abs(model.value(pts)), np.abs(model.value(-pts))
        if np.any(np.abs(v - w) > 1e-12 * np.maximum(1.0, v)):
            raise DomainError(f"model tagged {model.symmetry} but |psi(x)| != |psi(-x)|")


def cusp_factor(frame: NuclearFrame, x) -> np.ndarray | float:
    """``F(x) = -sum_k Z_k |x - R_k|`` for points of shape ``(..., 3)``."""
    x = np.asarray(x, dtype=float)
    d = np.linalg.norm(x[..., None, :] - frame.positions, axis=-1)
    out = -(d * frame.charges).sum(axis=-1)
    return float(out) if out.ndim == 0 else out


def smooth_part(frame: NuclearFrame, rho: Callable, x) -> np.ndarray | float:
    """``mu(x) = exp(-F(x)) rho(x)``; refuses exponents beyond :data:`MAX_EXPONENT`."""
    f = np.asarray(cusp_factor(frame, x))
    if np.any(np.abs(f) > MAX_EXPONENT):
        raise CuspRangeError(f"|F(x)| = {np.abs(f).max():.1f} exceeds {MAX_EXPONENT}")
    out = np.exp(-f) * np.asarray(rho(np.asarray(x, dtype=float)))
    return float(out) if out.ndim == 0 else out


def smooth_handle(frame: NuclearFrame, rho: Callable) -> Callable:
    """Return ``mu`` as a vectorized handle."""
    return lambda x: smooth_part(frame, rho, x)
