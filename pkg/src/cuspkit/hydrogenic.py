"""Closed-form hydrogenic states used as analytic ground truth.

The states are kept unnormalized, as in the optimality counterexample::

    psi_1s    = exp(-Z r/2)                 E = -Z^2/4
    psi_2s    = (1 - Z r/4) exp(-Z r/4)     E = -Z^2/16
    psi_2p    = x_1 exp(-Z r/4)             E = -Z^2/16
    psi_mixed = psi_2s + psi_2p             E = -Z^2/16

Note on the cross term: a direct computation gives
``exp(Z r) psi_2s psi_2p = x_1 (1 - Z r/4) exp(Z r/2)``; the factor is
``(1 - Z r/4)``, not the constant ``(1 - Z/4)`` that appears in some printed
versions of this example.  Only the directly computed form is used here.
"""

from __future__ import annotations

import re
from dataclasses import dataclass

import numpy as np

from .core import WavefunctionModel, atom
from .errors import DomainError, SingularPointError

KINDS = ("1s", "2s", "2p", "mixed")
SYMMETRY = {"1s": "even", "2s": "even", "2p": "odd", "mixed": "none"}


@dataclass(frozen=True)
class HydrogenicState:
    kind: str
    Z: float = 1.0

    def __post_init__(self):
        if self.kind not in KINDS:
            raise DomainError(f"unknown state {self.kind!r}; expected one of {KINDS}")
        if not self.Z > 0:
            raise DomainError("Z must be positive")

    def __str__(self):
        return f"{self.kind}:Z={self.Z}"


_SPEC = re.compile(r"^\s*(1s|2s|2p|mixed)\s*(?::\s*Z\s*=\s*([0-9.eE+-]+))?\s*$")


def parse_state(text: str) -> HydrogenicState:
    """Parse ``"1s:Z=1.0"``-style strings (``Z`` defaults to 1)."""
    m = _SPEC.match(text)
    if not m:
        raise DomainError(f"cannot parse state specification {text!r}")
    return HydrogenicState(m.group(1), float(m.group(2)) if m.group(2) else 1.0)


def _radius(x):
    x = np.asarray(x, dtype=float)
    return x, np.linalg.norm(x, axis=-1)


def _out(a):
    return float(a) if np.ndim(a) == 0 else a


def eval_psi(state: HydrogenicState, x):
    x, r = _radius(x)
    Z = state.Z
    if state.kind == "1s":
        return _out(np.exp(-Z * r / 2))
    s = (1 - Z * r / 4) * np.exp(-Z * r / 4)
    p = x[..., 0] * np.exp(-Z * r / 4)
    return _out({"2s": s, "2p": p, "mixed": s + p}[state.kind])


def eval_rho(state: HydrogenicState, x):
    """Density ``psi**2``; the mixed state is assembled from its three parts."""
    if state.kind != "mixed":
        return _out(np.asarray(eval_psi(state, x)) ** 2)
    s = np.asarray(eval_psi(HydrogenicState("2s", state.Z), x))
    p = np.asarray(eval_psi(HydrogenicState("2p", state.Z), x))
    return _out(s * s + p * p + 2 * s * p)


def eval_grad_psi(state: HydrogenicState, x) -> np.ndarray:
    """Analytic gradient.

    Only the 2p gradient extends continuously to the nucleus (limit ``e_1``);
    the others raise :class:`SingularPointError` there.
    """
    x, r = _radius(x)
    Z = state.Z
    at_nucleus = r == 0
    if state.kind != "2p" and np.any(at_nucleus):
        raise SingularPointError(f"gradient of {state.kind} undefined at the nucleus")
    safe = np.where(at_nucleus, 1.0, r)
    unit = x / safe[..., None]

    def grad_s():
        b = Z / 4
        return (-b * (2 - b * r) * np.exp(-b * r))[..., None] * unit

    def grad_p():
        b = Z / 4
        e1 = np.zeros(x.shape)
        e1[..., 0] = 1.0
        return np.exp(-b * r)[..., None] * (e1 - b * x[..., :1] * unit)

    if state.kind == "1s":
        return (-(Z / 2) * np.exp(-Z * r / 2))[..., None] * unit
    if state.kind == "2s":
        return grad_s()
    if state.kind == "2p":
        return grad_p()
    return grad_s() + grad_p()


def eval_laplacian_psi(state: HydrogenicState, x):
    """Analytic Laplacian (``x != 0``)."""
    x, r = _radius(x)
    if np.any(r == 0):
        raise SingularPointError("Laplacian evaluated at the nucleus")
    Z = state.Z
    b = Z / 4
    if state.kind == "1s":
        a = Z / 2
        return _out((a * a - 2 * a / r) * np.exp(-a * r))
    s = (b * b * (3 - b * r) - 2 * b * (2 - b * r) / r) * np.exp(-b * r)
    p = x[..., 0] * (b * b - 4 * b / r) * np.exp(-b * r)
    return _out({"2s": s, "2p": p, "mixed": s + p}[state.kind])


def eval_energy(state: HydrogenicState) -> float:
    return -state.Z ** 2 / 4 if state.kind == "1s" else -state.Z ** 2 / 16


def eigen_residual(state: HydrogenicState, x):
    """``(-Delta - Z/r) psi - E psi`` from the analytic formulas."""
    _, r = _radius(x)
    psi = np.asarray(eval_psi(state, x))
    return _out(-np.asarray(eval_laplacian_psi(state, x)) - state.Z / r * psi - eval_energy(state) * psi)


def to_model(state: HydrogenicState, energy: float | None = None) -> WavefunctionModel:
    """Wrap a state as a one-electron :class:`WavefunctionModel` on a single nucleus.

    ``energy`` overrides the exact eigenvalue (used for negative controls).
    """
    return WavefunctionModel(
        n_electrons=1,
        frame=atom(state.Z),
        energy=eval_energy(state) if energy is None else float(energy),
        value=lambda c: np.asarray(eval_psi(state, np.asarray(c)[..., 0, :])),
        gradient=lambda c: eval_grad_psi(state, np.asarray(c)[..., 0, :])[..., None, :],
        symmetry=SYMMETRY[state.kind],
        density=lambda x: np.asarray(eval_rho(state, x)),
        name=str(state),
        meta={"kind": state.kind, "Z": state.Z},
    )
